"""Closed-form convergence theory for RLOBPCG, usable as test oracles."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import HypothesisError


@dataclass(frozen=True)
class RateParameters:
    """Rate ``q`` and prefactor ``C`` for distortion ``eta`` and relative squared gap.

    ``C`` is None when ``eta < gap / (2 + gap)`` fails (equality counts as a
    failure); ``q`` is still reported.
    """

    eta: float
    gap: float
    gamma: float
    q: float
    C: Optional[float]

    @property
    def hypothesis_holds(self):
        return self.C is not None


def relative_gap(sigma_n, sigma_nm1):
    return (sigma_nm1 ** 2 - sigma_n ** 2) / sigma_n ** 2


def predicted_rate(eta, gap):
    if not 0.0 <= eta < 1.0:
        raise ValueError(f"eta must lie in [0, 1), got {eta}")
    if not gap > 0.0:
        raise ValueError(f"gap must be positive, got {gap}")
    q = eta + (1.0 - eta) / (1.0 + gap)
    holds = eta < gap / (2.0 + gap)
    C = 2.0 * eta / ((1.0 - eta) * gap - 2.0 * eta) if holds else None
    # the preconditioned steepest-descent parameter is bounded by eta
    return RateParameters(eta=eta, gap=gap, gamma=eta, q=q, C=C)


def gamma_from_spectrum(lams):
    """``inf_t ||I - t diag(lams)||`` for positive ``lams``: (max - min) / (max + min)."""
    lams = np.asarray(lams, dtype=float).ravel()
    if lams.size == 0:
        raise ValueError("empty spectrum")
    if np.any(lams <= 0):
        raise ValueError("spectrum must be positive")
    hi, lo = lams.max(), lams.min()
    return float((hi - lo) / (hi + lo))


def angle_bounds(Av_norm_sq, sigma_n, sigma_nm1, rtol=1e-12):
    """Upper bounds on ``|sin|`` and ``|tan|`` of the angle to the minimum singular vector.

    Requires ``sigma_n <= ||A v|| < sigma_nm1`` (a relative slack of ``rtol`` is
    allowed on the lower end for roundoff).
    """
    s2, s12 = sigma_n ** 2, sigma_nm1 ** 2
    if not (s2 * (1 - rtol) <= Av_norm_sq < s12):
        raise HypothesisError(
            f"need sigma_n^2 <= ||Av||^2 < sigma_(n-1)^2; got {Av_norm_sq!r} vs [{s2!r}, {s12!r})"
        )
    excess = max(Av_norm_sq - s2, 0.0)
    sin_b = math.sqrt(excess / (s12 - s2))
    tan_b = math.sqrt(excess / (s12 - Av_norm_sq))
    return sin_b, tan_b


def iteration_estimate(eta, gap, eps):
    """Smallest ``k`` with ``2 q**(2k) <= eps``.

    ``eta=None`` selects ``min(gap / 3, 1 / 6)``, the distortion a sketch of
    the recommended size is designed for; an explicit ``eta`` must satisfy
    ``eta < gap / (2 + gap)``.
    """
    if not 0.0 < eps <= 24.0:
        raise ValueError(f"eps must lie in (0, 24], got {eps}")
    if eta is None:
        eta = min(gap / 3.0, 1.0 / 6.0)
    rate = predicted_rate(eta, gap)
    if not rate.hypothesis_holds:
        raise HypothesisError(f"eta={eta} violates eta < gap/(2+gap) for gap={gap}")
    if 2.0 <= eps:
        return 0
    k = math.ceil(math.log(2.0 / eps) / (2.0 * math.log(1.0 / rate.q)))
    # guard against rounding in the logarithms
    while k > 0 and 2.0 * rate.q ** (2 * (k - 1)) <= eps:
        k -= 1
    while 2.0 * rate.q ** (2 * k) > eps:
        k += 1
    return k


def ratio(Av_norm_sq, sigma_n, sigma_nm1):
    """``(||Av||^2 - sigma_n^2) / (sigma_(n-1)^2 - ||Av||^2)``, the quantity that contracts by q^2."""
    return (Av_norm_sq - sigma_n ** 2) / (sigma_nm1 ** 2 - Av_norm_sq)
