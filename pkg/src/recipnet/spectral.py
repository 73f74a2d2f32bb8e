"""Per-group branching matrices, eigenstructure and ray slopes.

Each group m carries a 2x2 nonnegative mean matrix

    A_m = [[alpha,            alpha * rho_row[m]],
           [gamma * rho_col[m],            gamma]]

whose dominant eigenvalue lambda_m governs the exponential growth rate of
the group's in/out-degree pair and whose positive left eigenvector v(m)
gives the direction the pair aligns with. The ray slope
a(m) = v2(m)/v1(m) predicts out-degree ~ a(m) * in-degree for extreme
group-m nodes.

Conventions: v(m) is the left eigenvector (v^T A = lambda v^T) and u(m)
the right one (A u = lambda u), normalized so u.1 = 1 then u.v = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import GroupRates, ModelParams, group_rates

TIE_TOL = 1e-9


@dataclass(frozen=True)
class GroupSpectral:
    """Spectral summary of one group's branching matrix.

    For degenerate groups (rho_row[m] == 0 or rho_col[m] == 0 so A_m is
    reducible) only the eigenvalues are reported: u, v and the slope a are
    None and ``degenerate`` is True. Such groups simulate fine but are
    excluded from ray and hidden-regular-variation predictions.
    """

    group: int
    A: np.ndarray
    lam: float
    lam_prime: float
    D0: float
    u: np.ndarray | None
    v: np.ndarray | None
    a: float | None
    degenerate: bool


@dataclass(frozen=True)
class GroupOrder:
    """Permutation sorting groups by descending lambda.

    ``order[j]`` is the 0-based group index with the (j+1)-th largest
    eigenvalue. ``non_distinct`` flags eigenvalue ties closer than
    ``tie_tol`` (the ray-separation results assume strict ordering).
    """

    order: np.ndarray
    non_distinct: bool
    tie_tol: float


def spectral(params: ModelParams, rates: GroupRates, m: int) -> GroupSpectral:
    """Closed-form eigenstructure of A_m for group m (0-based)."""
    alpha, gamma = params.alpha, params.gamma
    rr = float(rates.rho_row[m])
    rc = float(rates.rho_col[m])

    A = np.array([[alpha, alpha * rr], [gamma * rc, gamma]])
    A.setflags(write=False)
    D0 = (alpha - gamma) ** 2 + 4.0 * alpha * gamma * rr * rc
    root = math.sqrt(D0)
    lam = 0.5 * (1.0 + root)
    lam_prime = 0.5 * (1.0 - root)

    if rr == 0.0 or rc == 0.0 or alpha <= 0.0 or gamma <= 0.0:
        # reducible A_m: eigenvectors are not strictly positive
        return GroupSpectral(
            group=m, A=A, lam=lam, lam_prime=lam_prime, D0=D0,
            u=None, v=None, a=None, degenerate=True,
        )

    # Left eigenvector ratio: a = (lam - alpha) / (gamma * rc), the
    # general-slope form (gamma - alpha + sqrt(D0)) / (2 gamma rc).
    a = (gamma - alpha + root) / (2.0 * gamma * rc)
    # Right eigenvector ratio, written with the conjugate to stay positive
    # for any alpha: w = (gamma - alpha + sqrt(D0)) / (2 alpha rr).
    w = (gamma - alpha + root) / (2.0 * alpha * rr)
    u = np.array([1.0, w])
    u = u / u.sum()                      # u . 1 = 1
    v = np.array([1.0, a])
    v = v / float(u @ v)                 # u . v = 1
    u.setflags(write=False)
    v.setflags(write=False)
    return GroupSpectral(
        group=m, A=A, lam=lam, lam_prime=lam_prime, D0=D0,
        u=u, v=v, a=a, degenerate=False,
    )


def all_spectra(params: ModelParams, rates: GroupRates | None = None) -> list[GroupSpectral]:
    if rates is None:
        rates = group_rates(params)
    return [spectral(params, rates, m) for m in range(params.K)]


def order_groups(spectra: list[GroupSpectral], tie_tol: float = TIE_TOL) -> GroupOrder:
    """Sort groups by descending lambda; flag near-ties.

    The sort is stable, so tied groups keep their original relative order.
    """
    lams = np.array([s.lam for s in spectra])
    order = np.argsort(-lams, kind="stable")
    sorted_lams = lams[order]
    non_distinct = bool(np.any(np.abs(np.diff(sorted_lams)) < tie_tol)) if len(spectra) > 1 else False
    order.setflags(write=False)
    return GroupOrder(order=order, non_distinct=non_distinct, tie_tol=tie_tol)
