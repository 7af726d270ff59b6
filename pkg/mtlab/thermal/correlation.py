"""Operator correlations Cor(X:Y) and correlation-length fits."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from mtlab.conf import setting
from mtlab.exceptions import DomainError
from mtlab.hilbert import linalg
from mtlab.hilbert.geometry import SiteSet, sites_distance
from mtlab.hilbert.operators import (
    DensityMatrix, GlobalOperator, embed, partial_trace, reduce_operator,
)
from mtlab.thermal.gibbs import gibbs_state
from mtlab.thermal.hamiltonians import Hamiltonian


logger = logging.getLogger(__name__)

ASCENT_TOL = 1e-10
ASCENT_MAX_ITER = 200
FIT_FLOOR = 1e-13
FLAT_SLOPE = -1e-6


@dataclass(frozen=True)
class CorrelationReport:
    """Lower and certified upper estimates of Cor(X:Y)."""
    cor_lower: float
    cor_upper: float
    restarts: int


def connected_part(rho: DensityMatrix, x: SiteSet, y: SiteSet) -> GlobalOperator:
    """Δ = ρ_XY − ρ_X ⊗ ρ_Y on X ∪ Y."""
    if not x.isdisjoint(y):
        raise DomainError("X and Y must be disjoint")
    xy = x | y
    joint = partial_trace(rho, xy)
    product = DensityMatrix.product(partial_trace(rho, x), partial_trace(rho, y))
    return GlobalOperator(xy, joint.matrix - product.matrix, hermitian=True)


def _best_response(delta: GlobalOperator, fixed: GlobalOperator, free: SiteSet) -> tuple[np.ndarray, float]:
    # Tr_{fixed}[(fixed ⊗ 1) Δ] is Hermitian; its sign attains the trace norm
    partial = reduce_operator(embed(fixed, delta.support) @ delta, free).matrix
    partial = linalg.hermitize(partial)
    return linalg.sign_h(partial), linalg.trace_norm(partial)


def correlation(
    rho: DensityMatrix,
    x: SiteSet,
    y: SiteSet,
    restarts: int | None = None,
    seed: int = 0,
) -> CorrelationReport:
    """max over ‖M‖, ‖N‖ ≤ 1 of |Tr[(M ⊗ N)Δ]| by alternating ascent.

    Each restart draws a random Hermitian N, then alternates the exact best
    responses M = sign(Tr_Y[(1 ⊗ N)Δ]) and N = sign(Tr_X[(M ⊗ 1)Δ]) until
    the value changes by less than 1e-10. The trace norm ‖Δ‖₁ is the
    certified upper bound.
    """
    if restarts is None:
        restarts = setting('MTLAB_CORRELATION_RESTARTS')
    if restarts < 1:
        raise DomainError("correlation needs at least one restart")
    delta = connected_part(rho, x, y)
    upper = linalg.trace_norm(delta.matrix)
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(restarts):
        n_op = GlobalOperator(y, linalg.random_hermitian(y.dim, rng), hermitian=True)
        value = -1.0
        for _ in range(ASCENT_MAX_ITER):
            m, _ = _best_response(delta, n_op, x)
            m_op = GlobalOperator(x, m, hermitian=True)
            n, new_value = _best_response(delta, m_op, y)
            n_op = GlobalOperator(y, n, hermitian=True)
            if abs(new_value - value) < ASCENT_TOL:
                value = new_value
                break
            value = new_value
        best = max(best, value)
    return CorrelationReport(min(best, upper), upper, restarts)


@dataclass(frozen=True)
class CorrelationFit:
    """ln Cor ≈ ln prefactor − distance/ξ.

    ``degenerate`` is set when every correlation is below the fit floor;
    ξ is then reported as 0.
    """
    xi: float
    prefactor: float
    rsq: float
    distances: tuple[int, ...]
    values: tuple[float, ...]
    degenerate: bool = False


def fit_decay(distances: Sequence[int], values: Sequence[float]) -> CorrelationFit:
    if len(set(distances)) < 3:
        raise DomainError("a correlation-length fit needs at least 3 distances")
    d = np.asarray(distances, dtype=float)
    c = np.asarray(values, dtype=float)
    usable = c > FIT_FLOOR
    if usable.sum() < 2:
        return CorrelationFit(0.0, 0.0, 0.0, tuple(distances), tuple(values), degenerate=True)
    slope, intercept = np.polyfit(d[usable], np.log(c[usable]), 1)
    predicted = slope * d[usable] + intercept
    logs = np.log(c[usable])
    ss_res = float(np.sum((logs - predicted) ** 2))
    ss_tot = float(np.sum((logs - logs.mean()) ** 2))
    rsq = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    xi = math.inf if slope >= FLAT_SLOPE else -1.0 / slope
    return CorrelationFit(xi, math.exp(intercept), rsq, tuple(distances), tuple(values))


def correlation_length_fit(
    h: Hamiltonian,
    beta: float,
    pairs: Sequence[tuple[SiteSet, SiteSet]],
) -> CorrelationFit:
    """Fit ξ from the trace-norm bound ‖Δ‖₁ of each (X, Y) pair."""
    rho = gibbs_state(h, beta).state
    distances, values = [], []
    for x, y in pairs:
        distances.append(sites_distance(x, y))
        values.append(linalg.trace_norm(connected_part(rho, x, y).matrix))
    fit = fit_decay(distances, values)
    logger.debug("correlation length fit: xi=%g rsq=%g", fit.xi, fit.rsq)
    return fit
