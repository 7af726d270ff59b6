"""Constants of the locality and recovery bounds.

The Lieb-Robinson constants c′ and v are not fixed by the analysis; they
are either supplied or fitted to measured truncation errors. Every derived
quantity is recomputed from the fields.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import optimize

from mtlab.exceptions import DomainError


logger = logging.getLogger(__name__)

ONE_MINUS_INV_E = 1.0 - math.exp(-1.0)
# Truncation errors at or below this are rounding, not signal
FIT_FLOOR = 1e-13


@dataclass(frozen=True)
class BoundConstants:
    beta: float
    J: float
    c_prime: float
    v: float
    xi: float | None = None

    def __post_init__(self) -> None:
        if self.beta < 0 or self.J < 0:
            raise DomainError("beta and J must be non-negative")
        if self.c_prime <= 0:
            raise DomainError("c' must be positive")
        if self.v < 0:
            raise DomainError("the Lieb-Robinson velocity must be non-negative")
        if self.xi is not None and self.xi <= 0:
            raise DomainError("the correlation length must be positive")

    @property
    def q1(self) -> float:
        return self.c_prime / (1 + self.c_prime * self.v * self.beta / math.pi)

    @property
    def K(self) -> float:
        bj = self.beta * self.J
        return 0.5 * self.c_prime * bj * math.exp(0.5 * (1 + self.c_prime) * bj)

    @property
    def _o_norm(self) -> float:
        """e^{βJ/2} + K, the bound on ‖O_B‖ and ‖Õ_B‖."""
        return math.exp(0.5 * self.beta * self.J) + self.K

    @property
    def C1(self) -> float:
        return 4 * self.K * self._o_norm ** 3

    @property
    def C2(self) -> float:
        return 2 * self.C1 / ONE_MINUS_INV_E

    @property
    def l0(self) -> int:
        """Smallest l with C1·e^{−q1·l} ≤ e^{−1}."""
        if self.C1 <= 0:
            return 0
        return max(0, math.ceil((math.log(self.C1) + 1) / self.q1))

    @property
    def p_lower_bound(self) -> float:
        """Lower bound on the success probability of a normalized recovery."""
        return ONE_MINUS_INV_E / self._o_norm ** 4

    @property
    def p_rate(self) -> float:
        """|ln(1 − p)| at the lower bound on p."""
        return -math.log1p(-self.p_lower_bound)

    @property
    def q_prime(self) -> float:
        rates = [self.q1, self.p_rate]
        if self.xi is not None:
            rates.append(1 / self.xi)
        return min(rates)

    @property
    def q(self) -> float:
        """Rate in e^{−q√d(A,C)} for the d(A,C) = 3l² − l layout."""
        return self.q_prime / math.sqrt(3)

    def predicted_err(self, l: int) -> float:
        """K·e^{−q1·l}: the error of localizing the flow to l sites around V."""
        return self.K * math.exp(-self.q1 * l)

    def lemma1_bound(self, l: int) -> float:
        return self.C1 * math.exp(-self.q1 * l)

    def lemma2_bound(self, l: int) -> float:
        return self.C2 * math.exp(-self.q1 * l)

    def theorem4_bound(self, l: int, p: float | None = None) -> float:
        """C2·e^{−q1·l} + 2(1 − p)^l + l·e^{−l/ξ}.

        ``p`` defaults to the lower bound on the success probability; the
        correlation term is dropped when ξ is unknown.
        """
        p = self.p_lower_bound if p is None else p
        if not 0 < p <= 1:
            raise DomainError("success probability must lie in (0, 1]")
        total = self.lemma2_bound(l) + 2 * (1 - p) ** l
        if self.xi is not None:
            total += l * math.exp(-l / self.xi)
        return total

    def cmi_bound(self, distance: int) -> float:
        """2(d + 2q^{−2}(1 + q·d^{−1/2}))·e^{−q√d} on I(A:C|B) at d(A,C) = d."""
        if distance <= 0:
            raise DomainError("distance must be positive")
        q = self.q
        root = math.sqrt(distance)
        return 2 * (distance + 2 / q ** 2 * (1 + q / root)) * math.exp(-q * root)

    def to_json(self) -> dict:
        return {
            'beta': self.beta,
            'J': self.J,
            'c_prime': self.c_prime,
            'v': self.v,
            'xi': self.xi,
            'q1': self.q1,
            'K': self.K,
            'C1': self.C1,
            'C2': self.C2,
            'l0': self.l0,
            'p_lower_bound': self.p_lower_bound,
            'q': self.q,
        }

    @classmethod
    def fit(
        cls,
        beta: float,
        J: float,
        ls: Sequence[int],
        errors: Sequence[float],
        xi: float | None = None,
    ) -> BoundConstants:
        """Least squares on ln(err) against l.

        The intercept fixes c′ through ln K(c′) and the slope fixes v
        through q1. Errors at the rounding floor are ignored.
        """
        if beta <= 0 or J <= 0:
            raise DomainError("fitting needs beta > 0 and J > 0")
        points = [(l, e) for l, e in zip(ls, errors) if e > FIT_FLOOR]
        if len({l for l, _ in points}) < 2:
            raise DomainError("fitting needs errors above the floor at two distinct l")
        x = np.array([l for l, _ in points], dtype=float)
        y = np.log([e for _, e in points])
        slope, intercept = np.polyfit(x, y, 1)
        q1 = -float(slope)
        if q1 <= 0:
            raise DomainError(f"measured errors do not decay in l (slope {slope:.3e})")

        bj = beta * J

        def log_k(c: float) -> float:
            return math.log(0.5 * c * bj) + 0.5 * (1 + c) * bj - float(intercept)

        lo, hi = 1e-12, 1.0
        while log_k(lo) > 0:
            lo *= 1e-3
        while log_k(hi) < 0:
            hi *= 2
        c_prime = optimize.brentq(log_k, lo, hi)

        v = (c_prime / q1 - 1) * math.pi / (c_prime * beta)
        if v < 0:
            logger.info("fitted decay rate %.3g exceeds c'=%.3g; using v=0", q1, c_prime)
            v = 0.0
        return cls(beta, J, c_prime, v, xi)
