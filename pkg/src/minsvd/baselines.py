"""Reference solvers: LOBPCG with other preconditioners, and Golub-Kahan Lanczos."""

from __future__ import annotations

import enum
import time

import numpy as np

from .core import aslinearoperator, dense_svd, orthonormal_residual
from .errors import DimensionError
from .precond import sketch_and_solve_init
from .solver import (
    ConvergenceRecord, IterationRow, SolveResult, SolverOptions, _as_truth,
    _truth_metrics, lobpcg_single_core, prepare_preconditioner,
)


class PrecondKind(enum.Enum):
    NONE = "none"
    DIAGONAL = "diagonal"
    RANDOMIZED = "randomized"


def diagonal_scaling(A):
    """Inverse column norms of ``A``; zero columns get scale 1."""
    norms = aslinearoperator(A).column_norms()
    out = np.ones_like(norms)
    nz = norms > 0
    out[nz] = 1.0 / norms[nz]
    return out


def lobpcg_generic(A, kind, opts=None, truth=None):
    """LOBPCG on ``A.T @ A`` with the chosen preconditioner.

    Every kind starts from the sketch-and-solve vector and uses the sketch's
    norm estimate in the stopping rule, so runs differ only in the search
    direction. ``RANDOMIZED`` is exactly :func:`rlobpcg_single`.
    """
    A = aslinearoperator(A)
    m, n = A.shape
    if n < 2 or m < n:
        raise DimensionError(f"need m >= n >= 2, got shape {A.shape}")
    kind = PrecondKind(kind)
    opts = opts or SolverOptions()
    t0 = time.perf_counter()
    P, info = prepare_preconditioner(A, opts)
    v0 = sketch_and_solve_init(P, 1)[:, 0]
    if kind is PrecondKind.RANDOMIZED:
        apply, method = P.apply, "rlobpcg"
    elif kind is PrecondKind.DIAGONAL:
        d2 = diagonal_scaling(A) ** 2
        apply, method = (lambda r: d2 * r), "lobpcg_diag"
    else:
        apply, method = (lambda r: r.copy()), "lobpcg_none"
    return lobpcg_single_core(A, apply, v0, P.sigma_max_estimate, opts, truth,
                              method=method, info=info, t_start=t0)


def lanczos_gk(A, iters, v0, truth=None):
    """Golub-Kahan bidiagonalisation with full reorthogonalisation.

    After ``k`` steps ``A @ P_k = U_k @ B_k`` with ``B_k`` upper bidiagonal, and
    the smallest singular value of ``B_k`` is the smallest Ritz value of
    ``A.T @ A`` on the Krylov space. Returns ``(sigma, v, record)``; the record
    status is ``"breakdown"`` if an invariant subspace was found early.
    """
    A = aslinearoperator(A)
    m, n = A.shape
    if not 1 <= iters <= n:
        raise DimensionError(f"iters must lie in [1, {n}]")
    truth = _as_truth(truth)
    t0 = time.perf_counter()
    rec = ConvergenceRecord(method="lanczos")
    Pk = np.zeros((n, iters + 1))
    Uk = np.zeros((m, iters))
    alpha = np.zeros(iters)
    beta = np.zeros(iters)
    p = np.asarray(v0, dtype=np.float64)
    Pk[:, 0] = p / np.linalg.norm(p)
    nA = nAt = 0
    sigma, v = np.inf, Pk[:, 0].copy()
    rec.status = "max_iter"
    for k in range(iters):
        u = A.matvec(Pk[:, k])
        nA += 1
        if k:
            u -= beta[k - 1] * Uk[:, k - 1]
        for _ in range(2):
            u -= Uk[:, :k] @ (Uk[:, :k].T @ u)
        alpha[k] = np.linalg.norm(u)
        if alpha[k] > 0:
            Uk[:, k] = u / alpha[k]
        pn = A.rmatvec(Uk[:, k]) - alpha[k] * Pk[:, k]
        nAt += 1
        for _ in range(2):
            pn -= Pk[:, : k + 1] @ (Pk[:, : k + 1].T @ pn)
        beta[k] = np.linalg.norm(pn)

        B = np.diag(alpha[: k + 1]) + np.diag(beta[:k], 1)
        res = dense_svd(B, want_u=True)
        sigma = float(res.s[-1])
        v = Pk[:, : k + 1] @ res.V[:, -1]
        resid = beta[k] * sigma * abs(res.U[-1, -1])
        err, ang = _truth_metrics(truth, sigma, v)
        rec.append(IterationRow(k + 1, nA, nAt, 1e3 * (time.perf_counter() - t0),
                                sigma, float(resid), err, ang, (sigma,)))
        scale = max(alpha[: k + 1].max(), 1.0)
        if alpha[k] <= n * np.finfo(float).eps * scale or beta[k] <= n * np.finfo(float).eps * scale:
            rec.status = "breakdown"
            break
        Pk[:, k + 1] = pn / beta[k]
    used = rec.iterations
    rec.info["basis_orthogonality"] = max(orthonormal_residual(Pk[:, :used]),
                                          orthonormal_residual(Uk[:, :used][:, alpha[:used] > 0]))
    return SolveResult(v, sigma, rec)
