"""AAA and AAA-Lawson rational approximation on top of the real nullspace solvers.

Complex arithmetic stays in this module. Each minimum-singular-vector problem
is handed to the real core as its realification ``[[Re, -Im], [Im, Re]]``,
whose singular values are those of the complex matrix, each repeated twice.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import LinearOperator, dense_svd
from .errors import DimensionError
from .solver import SolverOptions, rlobpcg_block

WEIGHT_FLOOR = 1e-300


@dataclass(frozen=True, eq=False)
class BarycentricRational:
    """``r(z) = sum(w f / (z - z_j)) / sum(w / (z - z_j))`` of type (n-1, n-1)."""

    support: np.ndarray
    weights: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        for name in ("support", "weights", "values"):
            object.__setattr__(self, name, np.atleast_1d(np.asarray(getattr(self, name), dtype=complex)))
        if not (self.support.shape == self.weights.shape == self.values.shape):
            raise DimensionError("support, weights and values must have equal length")
        if not np.any(self.weights != 0):
            raise ValueError("weights are all zero")

    @property
    def degree(self):
        return self.support.size - 1

    def __call__(self, z):
        return eval_barycentric(self, z)


def eval_barycentric(r, z):
    z = np.asarray(z, dtype=complex)
    zz = np.atleast_1d(z).ravel()
    if not np.all(np.isfinite(zz)):
        raise ValueError("evaluation points must be finite")
    D = zz[:, None] - r.support[None, :]
    hit = D == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        C = 1.0 / D
        out = (C @ (r.weights * r.values)) / (C @ r.weights)
    active = r.weights != 0
    if np.count_nonzero(active) == 1:
        out[:] = r.values[active][0]  # degree 0: avoid rounding in w f / w
    rows, cols = np.nonzero(hit & active[None, :])
    out[rows] = r.values[cols]
    return out.reshape(z.shape) if z.ndim else out[0]


def realify(M):
    """Real ``2m x 2n`` block form of a complex ``m x n`` matrix."""
    M = np.asarray(M, dtype=complex)
    re, im = M.real, M.imag
    return np.block([[re, -im], [im, re]])


class RealifiedOperator(LinearOperator):
    """Dense real operator ``[[Re, -Im], [Im, Re]]`` standing in for a complex matrix.

    Its singular values are those of ``M``, each with doubled multiplicity.
    """

    def __init__(self, M):
        self.complex_shape = np.shape(M)
        base = LinearOperator.from_dense(realify(M))
        super().__init__(base.kind, base.shape, base.data)

    def complex_matvec(self, x):
        x = np.asarray(x, dtype=complex)
        y = self.matvec(np.concatenate([x.real, x.imag]))
        m = self.complex_shape[0]
        return y[:m] + 1j * y[m:]


def unrealify(x):
    """Complex n-vector from a real 2n-vector, phase-normalised so its largest entry is real positive."""
    n = x.size // 2
    w = x[:n] + 1j * x[n:]
    k = np.argmax(np.abs(w))
    w = w * (np.abs(w[k]) / w[k])
    w[k] = abs(w[k])
    return w


def _null_vector(M, backend="dense_svd", opts=None):
    """Minimum right singular vector of a complex matrix via a real solver."""
    M = np.asarray(M, dtype=complex)
    if M.shape[0] < M.shape[1]:
        M = np.vstack([M, np.zeros((M.shape[1] - M.shape[0], M.shape[1]))])
    R = RealifiedOperator(M)
    if backend == "dense_svd" or R.shape[1] < 6:
        # trial space of the block solver needs 3b = 6 columns
        x = dense_svd(R.todense()).V[:, -1]
    elif backend == "rlobpcg":
        opts = opts or SolverOptions(tol=1e-15, stagnation=False)
        opts = SolverOptions(**{**opts.__dict__, "block_size": 2})
        x = rlobpcg_block(R, opts).V[:, 0]
    else:
        raise ValueError(f"unknown backend {backend!r}")
    return unrealify(x)


def aaa_fit(Z, F, max_degree=10, tol=1e-13):
    """Greedy AAA fit of ``F`` sampled at distinct points ``Z``.

    Support points are added where the current error is largest; weights are
    the minimum right singular vector of the Loewner matrix. Stops once the
    error falls to ``tol * max|F|`` or the degree reaches ``max_degree``.
    """
    Z = np.asarray(Z, dtype=complex).ravel()
    F = np.asarray(F, dtype=complex).ravel()
    if Z.shape != F.shape:
        raise DimensionError("Z and F must have the same length")
    if Z.size < max_degree + 1:
        raise DimensionError(f"need at least {max_degree + 1} samples")
    if np.unique(Z).size != Z.size:
        raise ValueError("sample points must be distinct")
    fmax = np.max(np.abs(F))
    free = np.ones(Z.size, dtype=bool)
    R = np.full(Z.size, np.mean(F))
    idx = []
    r = None
    for _ in range(max_degree + 1):
        err = np.abs(F - R)
        err[~free] = -1.0
        j = int(np.argmax(err))
        idx.append(j)
        free[j] = False
        zj, fj = Z[idx], F[idx]
        C = 1.0 / (Z[free, None] - zj[None, :])
        L = (F[free, None] - fj[None, :]) * C
        if L.shape[0] == 0:
            raise DimensionError("Loewner matrix is empty")
        w = _null_vector(L)
        r = BarycentricRational(zj, w, fj)
        R = F.copy()
        R[free] = (C @ (w * fj)) / (C @ w)
        if np.max(np.abs(F - R)) <= tol * fmax:
            break
    return r


@dataclass
class LawsonState:
    """Snapshot after one Lawson step (``weights`` cover the non-support samples)."""

    Z: np.ndarray
    F: np.ndarray
    weights: np.ndarray
    max_error: float
    best_error: float
    iteration: int


def lawson_refine(r, Z, F, steps=20, backend="dense_svd", opts=None,
                  callback: Optional[Callable[[LawsonState], None]] = None):
    """Refine ``r`` towards minimax by iteratively reweighted nullspace solves.

    Support points and values stay fixed; each step recomputes the barycentric
    weights as the minimum right singular vector of the row-weighted Loewner
    matrix, then multiplies the sample weights by the new error magnitudes.
    Returns the approximant with the smallest max error seen (including ``r``).
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    Z = np.asarray(Z, dtype=complex).ravel()
    F = np.asarray(F, dtype=complex).ravel()
    zj, fj = r.support, r.values
    pos = {complex(z): k for k, z in enumerate(Z)}
    try:
        sup_idx = np.array([pos[complex(z)] for z in zj])
    except KeyError:
        raise ValueError("support points of r must be among the samples") from None
    free = np.ones(Z.size, dtype=bool)
    free[sup_idx] = False
    Zf, Ff = Z[free], F[free]
    C = 1.0 / (Zf[:, None] - zj[None, :])
    L = (Ff[:, None] - fj[None, :]) * C

    best = r
    best_err = float(np.max(np.abs(Ff - eval_barycentric(r, Zf)))) if Zf.size else 0.0
    wt = np.full(Zf.size, 1.0 / Zf.size)
    for step in range(steps):
        try:
            w = _null_vector(np.sqrt(wt)[:, None] * L, backend, opts)
        except Exception as exc:
            raise type(exc)(f"Lawson step {step + 1}: {exc}") from exc
        cand = BarycentricRational(zj, w, fj)
        e = np.abs(Ff - (C @ (w * fj)) / (C @ w))
        err = float(np.max(e))
        if err < best_err:
            best, best_err = cand, err
        wt = np.maximum(wt * e, WEIGHT_FLOOR)
        wt /= wt.sum()
        if callback is not None:
            callback(LawsonState(Z, F, wt.copy(), err, best_err, step + 1))
    return best


def max_error(r, Z, F):
    return float(np.max(np.abs(np.asarray(F) - eval_barycentric(r, Z))))


def twin_circles(points_per_circle=1000, center=1.03):
    """Uniform samples on the unit circles centred at ``±center``."""
    t = 2 * np.pi * np.arange(points_per_circle) / points_per_circle
    c = np.exp(1j * t)
    return np.concatenate([center + c, -center + c])


def sign_re(z):
    """``z * sign(Re z)``."""
    return z * np.sign(np.real(z))
