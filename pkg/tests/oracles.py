"""Independent reference computations used only by the tests.

Each oracle takes a different route from the library code: pseudo-inverses
instead of grounded factorisations, enumeration instead of search.
"""
import itertools

import numpy as np


def laplacian(C):
    C = np.asarray(C, dtype=float)
    return np.diag(C.sum(axis=1)) - C


def resistance_pinv(C):
    """R(x, y) = L+(x,x) + L+(y,y) - 2 L+(x,y)."""
    Lp = np.linalg.pinv(laplacian(C))
    d = np.diag(Lp)
    return d[:, None] + d[None, :] - 2 * Lp


def kron_reduction(C, keep):
    """Schur complement via explicit inverse of the eliminated block."""
    L = laplacian(C)
    keep = list(keep)
    drop = [i for i in range(len(C)) if i not in keep]
    if not drop:
        red = L[np.ix_(keep, keep)]
    else:
        red = L[np.ix_(keep, keep)] - L[np.ix_(keep, drop)] @ np.linalg.inv(L[np.ix_(drop, drop)]) @ L[np.ix_(drop, keep)]
    out = -red
    np.fill_diagonal(out, 0)
    return out


def return_probabilities_absorbing(C, B):
    """P_x(Y(T_B^+) = y) from the fundamental matrix of the chain killed on B."""
    C = np.asarray(C, dtype=float)
    P = C / C.sum(axis=1)[:, None]
    B = list(B)
    U = [i for i in range(len(C)) if i not in B]
    if not U:
        return P[np.ix_(B, B)]
    Nf = np.linalg.inv(np.eye(len(U)) - P[np.ix_(U, U)])
    return P[np.ix_(B, B)] + P[np.ix_(B, U)] @ Nf @ P[np.ix_(U, B)]


def min_cover_bruteforce(D, eps):
    """Smallest k such that some k closed eps-balls cover every point (D compared with slack)."""
    n = len(D)
    balls = [set(np.flatnonzero(D[c] <= eps * (1 + 1e-12))) for c in range(n)]
    for k in range(1, n + 1):
        for combo in itertools.combinations(range(n), k):
            if set().union(*(balls[c] for c in combo)) == set(range(n)):
                return k
    return n


def prohorov_bruteforce(D, mu, nu):
    """Prohorov distance by checking every subset at every candidate epsilon.

    Candidates are the pairwise distances together with every value
    ``mu(A) - nu(A^eps)`` that a subset produces; the smallest feasible one
    is the answer because feasibility is monotone in epsilon.
    """
    D = np.asarray(D)
    n = len(mu)
    subsets = [s for k in range(1, n + 1) for s in itertools.combinations(range(n), k)]

    def nbhd(A, eps):
        return [j for j in range(n) if any(D[i, j] <= eps for i in A)]

    def gap(eps):
        worst = 0.0
        for A in subsets:
            N = nbhd(A, eps)
            worst = max(worst, sum(mu[i] for i in A) - sum(nu[j] for j in N),
                        sum(nu[i] for i in A) - sum(mu[j] for j in N))
        return worst

    cands = set(np.unique(D).tolist()) | {0.0}
    for eps in sorted(np.unique(D).tolist()):
        cands.add(gap(eps))
    feasible = [e for e in sorted(cands) if e >= 0 and gap(e) <= e + 1e-15]
    return min(feasible)
