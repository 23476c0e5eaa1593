"""Randomized preconditioner built from the SVD of a sketch ``S @ A``."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import UNIT_ROUNDOFF, dense_svd, check_finite
from .errors import DimensionError


@dataclass(frozen=True, eq=False)
class Preconditioner:
    """``P = Vtilde @ diag(1 / sigma_tilde)``, kept in factored form."""

    Vtilde: np.ndarray
    sigma_tilde: np.ndarray
    floored: int = 0
    warnings: tuple = field(default=())

    @property
    def n(self):
        return self.Vtilde.shape[0]

    @property
    def sigma_max_estimate(self):
        """Estimate of ``||A||``, used by the stopping rule."""
        return float(self.sigma_tilde[0])

    def apply(self, r):
        """``P @ (P.T @ r)`` for a vector or a block of columns."""
        r = np.asarray(r, dtype=np.float64)
        if r.shape[0] != self.n:
            raise DimensionError(f"expected leading dimension {self.n}, got {r.shape}")
        inv2 = self.sigma_tilde ** -2
        t = self.Vtilde.T @ r
        t = t * (inv2 if r.ndim == 1 else inv2[:, None])
        return self.Vtilde @ t

    def matrix(self):
        """Explicit ``P``; for tests and diagnostics."""
        return self.Vtilde / self.sigma_tilde


def build_preconditioner(SA):
    """SVD the sketch and floor tiny singular values before inversion.

    Values below ``sqrt(n) * u * sigma_1`` are raised to that floor so a
    numerically rank-deficient ``A`` (the nullspace case) stays usable; the
    event is reported in ``warnings`` rather than raised.
    """
    SA = check_finite(np.asarray(SA, dtype=np.float64), "sketch")
    if SA.ndim != 2 or SA.shape[0] < SA.shape[1]:
        raise DimensionError(f"sketch must have at least as many rows as columns, got {SA.shape}")
    n = SA.shape[1]
    res = dense_svd(SA)
    s = res.s.copy()
    notes = []
    if s[0] == 0.0:
        s[:] = 1.0
        notes.append("sketch is identically zero; using identity scaling")
        return Preconditioner(res.V, s, n, tuple(notes))
    floor = np.sqrt(n) * UNIT_ROUNDOFF * s[0]
    low = s < floor
    if low.any():
        s[low] = floor
        notes.append(f"{int(low.sum())} sketch singular value(s) floored to {floor:.3e}")
    return Preconditioner(res.V, s, int(low.sum()), tuple(notes))


def precond_apply(P, r):
    return P.apply(r)


def sketch_and_solve_init(P, b=1):
    """The ``b`` smallest right singular vectors of the sketch."""
    if not 1 <= b <= P.n:
        raise DimensionError(f"block size must lie in [1, {P.n}], got {b}")
    return P.Vtilde[:, P.n - b:].copy()
