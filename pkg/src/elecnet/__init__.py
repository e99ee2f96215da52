"""Electrical networks as resistance metric spaces: resistances, traces,
random walks with local times, metric tooling and gasket approximations."""
from ._accel import backend, set_backend, use_backend
from .errors import *  # noqa: F401,F403
from .network import (
    ElectricalNetwork,
    associated_measure,
    build_network,
    dirichlet_energy,
    load_network,
    network_from_dict,
    network_to_dict,
    save_network,
    transition_matrix,
)
from .resistance import (
    FUSED_VERTEX,
    ResistanceMatrix,
    conductances_from_resistance,
    effective_resistance,
    fuse_complement,
    fused_metric_error_report,
    resistance_between_sets,
    resistance_matrix,
)
from .trace import TraceResult, ball_trace, crossing_conductance, harmonic_extension, resistance_ball, trace_network

__version__ = "0.1.0"
