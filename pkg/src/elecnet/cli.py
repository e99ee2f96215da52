"""Command-line front end.

Every invocation becomes an :class:`ExperimentConfig` that :func:`run`
executes.  Outputs carry a metadata header (tool version, config hash, seed)
plus a separate timestamp line, so result bodies are byte-identical across
repeated runs.  JSON floats use shortest round-trip repr (at most 17
significant digits); CSV floats use 12 significant digits.

Exit codes: 0 ok, 1 computation error, 2 I/O error, 3 configuration error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .errors import ConfigError, ElecnetError, IoError
from .network import ElectricalNetwork, load_network, network_from_dict, network_to_dict

COMMANDS = ("resistance", "trace", "walk", "metric", "gasket", "converge")
OUTPUT_DIR_ENV = "ELECNET_OUTPUT_DIR"


@dataclass
class ExperimentConfig:
    command: str
    inputs: dict = field(default_factory=dict)
    parameters: dict = field(default_factory=dict)
    seed: int = 0
    output: str | None = None
    format: str = "csv"

    def config_hash(self) -> str:
        body = {k: v for k, v in asdict(self).items() if k != "output"}
        blob = json.dumps(body, sort_keys=True, separators=(",", ":"), default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}; expected one of {COMMANDS}")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"unknown output format {self.format!r}")
        for name, path in self.inputs.items():
            if not Path(path).is_file():
                raise IoError(f"{name} file not found: {path}")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        unknown = set(data) - {"command", "inputs", "parameters", "seed", "output", "format"}
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


# -- output --------------------------------------------------------------------


def _fmt_csv(x) -> str:
    if isinstance(x, bool) or x is None:
        return "" if x is None else str(x).lower()
    if isinstance(x, float):
        return format(x, ".12g")
    return str(x)


def _json_clean(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return "inf" if obj > 0 else ("-inf" if obj < 0 else "nan")
    if isinstance(obj, dict):
        return {str(k): _json_clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_clean(v) for v in obj]
    if hasattr(obj, "item") and callable(obj.item):  # numpy scalars
        return _json_clean(obj.item())
    return obj


def _metadata(config: ExperimentConfig) -> dict:
    return {"tool": "elecnet", "version": __version__, "config_hash": config.config_hash(), "seed": config.seed}


def _timestamp() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def render_csv(config: ExperimentConfig, header, rows) -> str:
    buf = io.StringIO()
    meta = _metadata(config)
    buf.write(f"# tool={meta['tool']} version={meta['version']} config_hash={meta['config_hash']} seed={meta['seed']}\n")
    buf.write(f"# timestamp={_timestamp()}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt_csv(v) for v in row])
    return buf.getvalue()


def render_json(config: ExperimentConfig, result: dict) -> str:
    # the timestamp sits on its own line of the indented document
    doc = {"metadata": {**_metadata(config), "timestamp": _timestamp()}, **_json_clean(result)}
    return json.dumps(doc, indent=1, ensure_ascii=False) + "\n"


def read_csv_body(path) -> list[list[str]]:
    """Rows of a CSV written by this tool, header included, metadata lines skipped."""
    with open(path, newline="") as fh:
        return [row for row in csv.reader(line for line in fh if not line.startswith("#"))]


def read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise IoError(f"{path}: invalid JSON ({exc})") from None


def _output_path(config: ExperimentConfig) -> Path:
    base = Path(os.environ.get(OUTPUT_DIR_ENV, "."))
    out = Path(config.output) if config.output else Path(f"{config.command}.{config.format}")
    return out if out.is_absolute() else base / out


# -- helpers -------------------------------------------------------------------


def _vertex(net: ElectricalNetwork, name):
    """Look a CLI-supplied name up among vertex ids (which may be ints in JSON)."""
    if name in net._index:
        return name
    by_str = {str(v): v for v in net.vertices}
    if str(name) not in by_str:
        from .errors import UnknownVertex

        raise UnknownVertex(f"unknown vertex {name!r}")
    return by_str[str(name)]


def _vertices(net, names):
    return [_vertex(net, v) for v in names]


def _param(config, key, default=None, required=False):
    if key in config.parameters and config.parameters[key] is not None:
        return config.parameters[key]
    if required:
        raise ConfigError(f"{config.command}: missing parameter {key!r}")
    return default


def _number(config, key, default=None, required=False, kind=float):
    v = _param(config, key, default, required)
    if v is None:
        return None
    try:
        return kind(v)
    except (TypeError, ValueError):
        raise ConfigError(f"{config.command}: parameter {key!r} must be {kind.__name__}, got {v!r}") from None


def _numbers(config, key, default=None, kind=float):
    v = _param(config, key, default)
    if v is None:
        return None
    if isinstance(v, str):
        v = [t for t in v.split(",") if t.strip()]
    try:
        return [kind(t) for t in v]
    except (TypeError, ValueError):
        raise ConfigError(f"{config.command}: parameter {key!r} must be a list of {kind.__name__}") from None


def _load_space(path):
    from .metric import FiniteMetricMeasureSpace, space_from_network

    data = read_json(path)
    if "d" in data:
        try:
            return FiniteMetricMeasureSpace.from_dict(data)
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"{path}: invalid space ({exc})") from None
    return space_from_network(network_from_dict(data))


# -- commands ------------------------------------------------------------------


def _cmd_resistance(config):
    from .resistance import effective_resistance, resistance_between_sets, resistance_matrix

    net = load_network(config.inputs["net"])
    pairs = _param(config, "pairs")
    sets = _param(config, "sets")
    if sets is not None:
        A, B = (_vertices(net, s) for s in sets)
        val = resistance_between_sets(net, A, B)
        return ["A", "B", "R"], [[" ".join(map(str, A)), " ".join(map(str, B)), val]], {
            "A": A, "B": B, "R": val}
    if pairs:
        rows = [[x, y, effective_resistance(net, _vertex(net, x), _vertex(net, y))] for x, y in pairs]
        return ["x", "y", "R"], rows, {"pairs": rows}
    R = resistance_matrix(net)
    n = len(net)
    rows = [[net.vertices[i], net.vertices[j], float(R.R[i, j])] for i in range(n) for j in range(i + 1, n)]
    return ["x", "y", "R"], rows, {"points": list(R.points), "R": R.R.tolist()}


def _cmd_trace(config):
    from .trace import ball_trace, trace_network

    net = load_network(config.inputs["net"])
    method = _param(config, "method", "schur")
    ball = _number(config, "ball")
    subset = _param(config, "subset")
    if (ball is None) == (subset is None):
        raise ConfigError("trace: give exactly one of subset or ball")
    res = ball_trace(net, ball, method) if ball is not None else trace_network(net, _vertices(net, subset), method)
    red = res.reduced
    rows = [[u, v, w] for u, v, w in red.edges()]
    result = {
        "method": method,
        "network": network_to_dict(red),
        "defect": {str(v): float(d) for v, d in zip(red.vertices, res.defect)},
        "crossing": res.crossing,
    }
    return ["x", "y", "conductance"], rows, result


def load_trace_output(path):
    """Reduced network and defects from a ``trace`` JSON output."""
    data = read_json(path)
    net = network_from_dict(data["network"])
    return net, {_vertex(net, k): v for k, v in data["defect"].items()}


def _cmd_walk(config):
    from .walk import (exit_time_report, local_time_modulus_report, simulate, trace_path,
                       verify_trace_coupling)

    net = load_network(config.inputs["net"])
    report = _param(config, "report")
    samples = _number(config, "samples", 1, kind=int)
    seed = config.seed
    if samples < 1:
        raise ConfigError("walk: samples must be positive")
    if report == "exit":
        r = _number(config, "radius", required=True)
        t = _number(config, "t", required=True)
        deltas = _numbers(config, "deltas") or []
        lams = _numbers(config, "lambdas") or []
        if not deltas or not lams:
            raise ConfigError("walk exit report needs deltas and lambdas")
        rows = []
        for lam in lams:
            for delta in deltas:
                rep = exit_time_report(net, r, delta, lam, t, samples, seed)
                rows.append([r, delta, lam, t, rep.estimate, rep.bound, rep.stderr, rep.ok])
        header = ["radius", "delta", "lambda", "t", "empirical", "bound", "stderr", "ok"]
        return header, rows, {"rows": [dict(zip(header, row)) for row in rows]}
    if report == "coupling":
        subset = _param(config, "trace_subset", required=True)
        steps = _number(config, "coupling_steps", 1, kind=int)
        rep = verify_trace_coupling(net, _vertices(net, subset), steps, samples, seed)
        rows = [[v, int(o), float(e), rep.chi2, rep.p_value] for v, o, e in zip(rep.subset, rep.observed, rep.expected)]
        header = ["vertex", "observed", "expected", "chi2", "p_value"]
        return header, rows, {"steps": steps, "chi2": rep.chi2, "dof": rep.dof, "p_value": rep.p_value,
                              "rows": [dict(zip(header, row)) for row in rows]}
    if report == "modulus":
        T = _number(config, "T", 1.0)
        alpha = _number(config, "alpha", 0.25)
        rep = local_time_modulus_report(net, T, alpha, samples, seed)
        rows = []
        for e in rep.entries:
            se = math.sqrt(e.frequency * (1 - e.frequency) / samples)
            rows.append([e.form, e.level, e.lam, e.frequency, None, se, rep.slopes[(e.form, e.level)]])
        header = ["form", "level", "lambda", "empirical", "bound", "stderr", "slope"]
        return header, rows, {"r_diam": rep.r_diam, "m_total": rep.m_total, "horizon": rep.horizon,
                              "slopes": {f"{f}:{N}": s for (f, N), s in rep.slopes.items()},
                              "entropy_sums": rep.entropy_sums,
                              "rows": [dict(zip(header, row)) for row in rows]}
    if report is not None:
        raise ConfigError(f"walk: unknown report {report!r}")
    kind = _param(config, "kind", "discrete")
    steps = _number(config, "steps", kind=int)
    horizon = _number(config, "horizon")
    if (steps is None) == (horizon is None):
        raise ConfigError("walk: give exactly one of steps or horizon")
    start = _vertex(net, _param(config, "start", net.root))
    subset = _param(config, "trace_subset")
    rows = []
    for s in range(samples):
        path = simulate(net, start, kind, steps=steps, horizon=horizon, seed=seed, sample=s)
        if subset is not None:
            path = trace_path(path, net, _vertices(net, subset))
        for k, (x, t) in enumerate(zip(path.vertices(net), path.times)):
            rows.append([s, k, float(t), x])
    header = ["sample", "k", "time", "vertex"]
    return header, rows, {"rows": [dict(zip(header, row)) for row in rows]}


def _cmd_metric(config):
    from .metric import covering_number, entropy_tail, ghp_distance_bounds, prohorov_distance

    space = _load_space(config.inputs["space"])
    result, rows = {"n_points": len(space)}, []
    eps = _number(config, "cover")
    if eps is not None:
        rep = covering_number(space, eps, _param(config, "cover_mode", "auto"))
        result["cover"] = {"epsilon": rep.epsilon, "count": rep.count, "centers": list(rep.centers), "mode": rep.mode}
        rows.append(["cover", eps, rep.count])
    ent = _numbers(config, "entropy")
    if ent is not None:
        if len(ent) != 2:
            raise ConfigError("metric: entropy takes ALPHA,M")
        alpha, m = ent[0], int(ent[1])
        scale = _number(config, "scale", 1.0)
        val = entropy_tail(space, alpha, m, scale)
        result["entropy_tail"] = {"alpha": alpha, "m": m, "scale": scale, "value": val}
        rows.append(["entropy_tail", f"{alpha}:{m}", val])
    if "prohorov" in config.inputs:
        other = _load_space(config.inputs["prohorov"])
        if other.points != space.points:
            raise ConfigError("metric: prohorov needs two measures on the same point list")
        val = prohorov_distance(space.d, space.mass, other.mass)
        result["prohorov"] = val
        rows.append(["prohorov", "", val])
    if "ghp" in config.inputs:
        b = ghp_distance_bounds(space, _load_space(config.inputs["ghp"]))
        result["ghp"] = {"lower": b.lower, "upper": b.upper, "exhaustive": b.exhaustive}
        rows.append(["ghp_lower", "", b.lower])
        rows.append(["ghp_upper", "", b.upper])
    return ["quantity", "parameter", "value"], rows, result


def _gasket_spec(config, n=None):
    from .gasket import GasketSpec

    mode = str(_param(config, "mode", "det"))
    lo = hi = 1.0
    if mode.startswith("rand"):
        try:
            lo, hi = (float(t) for t in mode.split(":", 1)[1].split(","))
        except (IndexError, ValueError):
            raise ConfigError(f"gasket: mode must be det or rand:LO,HI, got {mode!r}") from None
        mode = "random"
    elif mode in ("det", "deterministic"):
        mode = "deterministic"
    else:
        raise ConfigError(f"gasket: mode must be det or rand:LO,HI, got {mode!r}")
    level = _number(config, "level", 0, kind=int) if n is None else n
    try:
        return GasketSpec(level, _number(config, "window", 0, kind=int), mode, lo, hi, config.seed)
    except ValueError as exc:
        raise ConfigError(f"gasket: {exc}") from None


def _cmd_gasket(config):
    from .gasket import build_gasket, convergence_report

    spec = _gasket_spec(config)
    conv = _numbers(config, "convergence", kind=int)
    if conv is not None:
        if len(conv) < 3:
            raise ConfigError("gasket: convergence takes m,N0,n1[,n2,...]")
        m, N0, ns = conv[0], conv[1], conv[2:]
        rows = [[r.n, r.deviation, r.spread, r.dispersion] for r in convergence_report(ns, m, N0, spec)]
        header = ["n", "sup_deviation", "seed_spread", "seed_dispersion"]
        return header, rows, {"m": m, "N0": N0, "rows": [dict(zip(header, row)) for row in rows]}
    net = build_gasket(spec)
    rows = [[u, v, w] for u, v, w in net.edges()]
    result = network_to_dict(net)
    result["scaling"] = {"a_n": spec.a_n, "b_n": spec.b_n, "c0": 1.0, "mode": spec.mode, "lo": spec.lo,
                         "hi": spec.hi}
    return ["x", "y", "conductance"], rows, result


def _cmd_converge(config):
    from .gasket import build_gasket
    from .metric import FiniteMetricMeasureSpace, entropy_tail, restrict
    from .resistance import resistance_between_sets, resistance_matrix

    levels = _numbers(config, "levels", [0, 1, 2], kind=int)
    radii = _numbers(config, "radii", [0.5, 1.0])
    alpha = _number(config, "alpha", 0.25)
    rows = []
    for n in levels:
        spec = _gasket_spec(config, n)
        net = build_gasket(spec)
        space = FiniteMetricMeasureSpace(net.vertices, resistance_matrix(net).R, net.root, net.measure / spec.b_n)
        for r in radii:
            ball = restrict(space, r)
            comp = [v for v in net.vertices if v not in set(ball.points)]
            R_out = resistance_between_sets(net, [net.root], comp) if comp else math.inf
            rows.append([n, r, len(ball), R_out, entropy_tail(ball, alpha, 0), ball.total_mass])
    header = ["n", "radius", "n_points", "R_root_to_complement", "entropy_tail", "mass"]
    return header, rows, {"alpha": alpha, "rows": [dict(zip(header, row)) for row in rows]}


_DISPATCH = {
    "resistance": _cmd_resistance,
    "trace": _cmd_trace,
    "walk": _cmd_walk,
    "metric": _cmd_metric,
    "gasket": _cmd_gasket,
    "converge": _cmd_converge,
}


def run(config: ExperimentConfig) -> int:
    """Execute a configuration and write its output; returns the exit status."""
    try:
        config.validate()
        header, rows, result = _DISPATCH[config.command](config)
        text = render_csv(config, header, rows) if config.format == "csv" else render_json(config, result)
        path = _output_path(config)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text)
        except OSError as exc:
            raise IoError(f"cannot write {path}: {exc.strerror}") from None
        return 0
    except ElecnetError as exc:
        print(f"error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return exc.exit_code


# -- argument parsing ----------------------------------------------------------


def _split(s):
    return [t for t in s.split(",") if t != ""]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="elecnet", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"elecnet {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, fmt="csv"):
        sp.add_argument("--out", help="output file (relative paths go under $ELECNET_OUTPUT_DIR)")
        sp.add_argument("--format", choices=("csv", "json"), default=None,
                        help=f"output format (default: from --out suffix, else {fmt})")
        sp.add_argument("--seed", type=int, default=0)
        sp.set_defaults(default_format=fmt)

    s = sub.add_parser("resistance", help="effective resistances")
    s.add_argument("--net", required=True)
    s.add_argument("--all", action="store_true", help="all pairwise resistances (default)")
    s.add_argument("--pair", nargs=2, action="append", metavar=("X", "Y"))
    s.add_argument("--sets", nargs=2, metavar=("A", "B"), help="comma-separated vertex sets")
    common(s)

    s = sub.add_parser("trace", help="trace onto a subset or resistance ball")
    s.add_argument("--net", required=True)
    s.add_argument("--subset", type=_split)
    s.add_argument("--ball", type=float)
    s.add_argument("--method", choices=("schur", "hitting"), default="schur")
    common(s, "json")

    s = sub.add_parser("walk", help="random walks and Monte Carlo reports")
    s.add_argument("--net", required=True)
    s.add_argument("--kind", choices=("discrete", "csrw"), default="discrete")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--steps", type=int)
    g.add_argument("--horizon", type=float)
    s.add_argument("--samples", type=int, default=1)
    s.add_argument("--start")
    s.add_argument("--trace-subset", type=_split)
    s.add_argument("--report", choices=("modulus", "exit", "coupling"))
    s.add_argument("--T", type=float, default=1.0)
    s.add_argument("--alpha", type=float, default=0.25)
    s.add_argument("--radius", type=float)
    s.add_argument("--t", type=float)
    s.add_argument("--deltas", type=_split)
    s.add_argument("--lambdas", type=_split)
    s.add_argument("--coupling-steps", type=int, default=1)
    common(s)

    s = sub.add_parser("metric", help="covering numbers, entropy tails, Prohorov and GHP")
    s.add_argument("--space", required=True, help="space JSON (points, d, root, mass) or network JSON")
    s.add_argument("--cover", type=float)
    s.add_argument("--cover-mode", choices=("exact", "greedy", "auto"), default="auto")
    s.add_argument("--entropy", type=_split, help="ALPHA,M")
    s.add_argument("--scale", type=float, default=1.0)
    s.add_argument("--prohorov")
    s.add_argument("--ghp")
    common(s, "json")

    s = sub.add_parser("gasket", help="gasket networks and convergence reports")
    s.add_argument("--level", type=int, default=0)
    s.add_argument("--window", type=int, default=0)
    s.add_argument("--mode", default="det", help="det or rand:LO,HI")
    s.add_argument("--report", dest="convergence", type=_split, metavar="m,N0,n1,...",
                   help="convergence report instead of the network")
    common(s, "json")

    s = sub.add_parser("converge", help="per-radius diagnostics over a sequence of gasket builds")
    s.add_argument("--levels", type=_split, default=["0", "1", "2"])
    s.add_argument("--window", type=int, default=0)
    s.add_argument("--mode", default="det")
    s.add_argument("--radii", type=_split, default=["0.5", "1.0"])
    s.add_argument("--alpha", type=float, default=0.25)
    common(s)

    s = sub.add_parser("run-config", help="run an ExperimentConfig JSON file")
    s.add_argument("config")
    return p


def config_from_args(ns: argparse.Namespace) -> ExperimentConfig:
    if ns.command == "run-config":
        return ExperimentConfig.from_dict(read_json(ns.config))
    fmt = ns.format or (Path(ns.out).suffix.lstrip(".") if ns.out and Path(ns.out).suffix in (".csv", ".json")
                        else ns.default_format)
    skip = {"command", "out", "format", "seed", "default_format", "net", "space", "prohorov", "ghp"}
    params = {k: v for k, v in vars(ns).items() if k not in skip and v is not None and v is not False}
    inputs = {k: getattr(ns, k) for k in ("net", "space", "prohorov", "ghp") if getattr(ns, k, None)}
    if ns.command == "resistance":
        params.pop("all", None)
        if "pair" in params:
            params["pairs"] = params.pop("pair")
        if "sets" in params:
            params["sets"] = [_split(s) for s in params["sets"]]
    return ExperimentConfig(ns.command, inputs, params, ns.seed, ns.out, fmt)


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        config = config_from_args(ns)
    except ElecnetError as exc:
        print(f"error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return exc.exit_code
    return run(config)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
