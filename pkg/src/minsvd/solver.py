"""RLOBPCG: LOBPCG on ``A.T @ A`` with a sketch-based preconditioner.

The single-vector and block solvers keep the trial basis orthonormal with
CGS2 and cache ``A`` times every basis vector, so each iteration costs one
product with ``A`` per block column plus one with ``A.T`` for the residual.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import time
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .core import EPS, UNIT_ROUNDOFF, aslinearoperator, dense_svd
from .errors import DimensionError, NonFiniteError
from .precond import build_preconditioner, sketch_and_solve_init
from .sketch import build_sparsestack, round_up_sketch_dim, sketch_apply

CSV_COLUMNS = (
    "iter", "matvecs_A", "matvecs_At", "wall_ms", "theta",
    "resid_norm", "singval_relerr", "sin_angle",
)


def default_tol(n):
    return 2.0 * np.sqrt(n) * EPS


@dataclass(frozen=True)
class SolverOptions:
    """Knobs shared by RLOBPCG and the LOBPCG baselines.

    ``tol`` and ``max_iter`` left as None resolve to ``2 sqrt(n) eps`` and to
    200 (single vector) or 100 (block). ``verify_every > 0`` re-multiplies the
    cached ``A v`` every that many iterations and records the drift; those
    audit products are counted apart from the solver's own.
    """

    tol: Optional[float] = None
    max_iter: Optional[int] = None
    check_every: int = 5
    stagnation_factor: float = 1.1
    stagnation: bool = True
    block_size: int = 1
    seed: int = 0
    sketch_dim: Optional[int] = None
    zeta: int = 4
    verify_every: int = 0

    def resolved(self, n, block=False):
        tol = default_tol(n) if self.tol is None else float(self.tol)
        if not 0.0 <= tol < 1.0:
            raise ValueError(f"tol must lie in [0, 1), got {tol}")
        max_iter = self.max_iter if self.max_iter is not None else (100 if block else 200)
        if max_iter < 0 or self.check_every < 1:
            raise ValueError("max_iter must be >= 0 and check_every >= 1")
        return dataclasses.replace(self, tol=tol, max_iter=int(max_iter))


class Truth(NamedTuple):
    sigma_min: float
    v_min: np.ndarray


@dataclass(frozen=True)
class IterationRow:
    iter: int
    matvecs_A: int
    matvecs_At: int
    wall_ms: float
    theta: float
    resid_norm: float
    singval_relerr: Optional[float]
    sin_angle: Optional[float]
    ritz: tuple = ()


@dataclass
class ConvergenceRecord:
    """Append-only per-iteration telemetry.

    Row ``k`` describes iterate ``k``; row 0 is the initial vector. For block
    runs ``theta`` is the smallest Ritz value, ``resid_norm`` the largest
    column residual, and ``ritz`` holds every target Ritz value (ascending).
    """

    method: str = "rlobpcg"
    rows: list = field(default_factory=list)
    status: str = "running"
    info: dict = field(default_factory=dict)
    audit_matvecs: int = 0
    cache_drift: list = field(default_factory=list)

    def append(self, row):
        self.rows.append(row)

    @property
    def iterations(self):
        return self.rows[-1].iter if self.rows else 0

    @property
    def converged(self):
        return self.status == "converged"

    @property
    def matvecs_A(self):
        return self.rows[-1].matvecs_A if self.rows else 0

    @property
    def matvecs_At(self):
        return self.rows[-1].matvecs_At if self.rows else 0

    def column(self, name):
        return np.array([getattr(r, name) for r in self.rows], dtype=float)

    @property
    def theta(self):
        return self.column("theta")

    @property
    def resid(self):
        return self.column("resid_norm")

    @property
    def stag_theta(self):
        return np.array([max(r.ritz) if r.ritz else r.theta for r in self.rows])

    def to_csv(self, dest=None, timing=False, header_lines=()):
        """Write the record as CSV; returns the text when ``dest`` is None.

        ``wall_ms`` is left blank unless ``timing`` is set, which keeps
        repeated runs byte-identical.
        """
        buf = io.StringIO()
        for line in header_lines:
            buf.write(f"# {line}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in self.rows:
            writer.writerow([
                r.iter, r.matvecs_A, r.matvecs_At,
                _fmt(r.wall_ms) if timing else "",
                _fmt(r.theta), _fmt(r.resid_norm),
                _fmt(r.singval_relerr), _fmt(r.sin_angle),
            ])
        text = buf.getvalue()
        if dest is None:
            return text
        with open(dest, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        return text


def _fmt(x):
    return "" if x is None else repr(float(x))


class SolveResult(NamedTuple):
    v: np.ndarray
    sigma: float
    record: ConvergenceRecord


class BlockResult(NamedTuple):
    V: np.ndarray
    sigma: np.ndarray
    record: ConvergenceRecord


# ---------------------------------------------------------------------------
# building blocks
# ---------------------------------------------------------------------------

def cgs2(basis, W):
    """Orthonormalise ``W`` against ``basis`` and within itself (CGS2).

    Two block projections against ``basis`` are followed by column-by-column
    Gram-Schmidt with reorthogonalisation inside ``W``. Returns ``(Q, bad)``
    where ``bad[j]`` flags a column whose remainder fell below
    ``nrows * u * ||W[:, j]||``; flagged columns of ``Q`` are zero.
    """
    W = np.array(W, dtype=np.float64, ndmin=2)
    if W.ndim != 2:
        raise DimensionError("W must be a matrix")
    nrows, k = W.shape
    norms0 = np.linalg.norm(W, axis=0)
    if basis is not None and basis.shape[1]:
        if basis.shape[0] != nrows:
            raise DimensionError("basis and W have different row counts")
        for _ in range(2):
            W -= basis @ (basis.T @ W)
    Q = np.zeros_like(W)
    bad = np.zeros(k, dtype=bool)
    accepted = []
    for j in range(k):
        w = W[:, j]
        if accepted:
            Qa = Q[:, accepted]
            for _ in range(2):
                w = w - Qa @ (Qa.T @ w)
        nrm = np.linalg.norm(w)
        if nrm <= nrows * UNIT_ROUNDOFF * norms0[j] or nrm == 0.0:
            bad[j] = True
            continue
        Q[:, j] = w / nrm
        accepted.append(j)
    return Q, bad


def _fill_degenerate(Q, bad, basis, rng):
    """Replace flagged columns with random unit vectors orthogonal to the rest."""
    for j in np.flatnonzero(bad):
        others = [basis] if basis is not None and basis.shape[1] else []
        keep = ~bad
        keep[j] = False
        others.append(Q[:, keep])
        B = np.hstack(others)
        while True:
            z, zbad = cgs2(B, rng.standard_normal((Q.shape[0], 1)))
            if not zbad[0]:
                break
        Q[:, j] = z[:, 0]
        bad[j] = False
    return Q


def min_energy_ritz(A_T, T):
    """Rayleigh-Ritz for ``A.T @ A`` on ``range(T)`` through an SVD of ``A @ T``.

    Returns ``(C, Theta)`` with ``Theta`` descending; the minimiser of
    ``||A z||`` over unit ``z`` in ``range(T)`` is ``T @ C[:, -1]`` with value
    ``Theta[-1]``.
    """
    A_T = np.asarray(A_T, dtype=np.float64)
    if A_T.ndim != 2 or A_T.shape[1] == 0:
        raise DimensionError("trial space is empty")
    if T is not None and np.shape(T)[1] != A_T.shape[1]:
        raise DimensionError("A_T and T have different column counts")
    res = dense_svd(A_T)
    return res.V, res.s


def check_convergence(record, sigma1_est, opts, i):
    """Stopping predicate, evaluated after iteration ``i`` produced iterate ``i + 1``.

    Stops when ``||r_{i+1}|| <= sigma1_est**2 * tol`` and, unless stagnation
    checks are disabled, both stagnation clauses hold. The clauses look back to
    iterate ``i - 9`` and are false until ``i >= 10``. ``opts`` must be resolved.
    """
    r = record.resid
    th = record.stag_theta
    if not r[i + 1] <= sigma1_est ** 2 * opts.tol:
        return False
    if not opts.stagnation:
        return True
    if i < 10:
        return False
    f = opts.stagnation_factor
    stag1 = f * r[i + 1] >= r[i - 4]
    with np.errstate(divide="ignore", invalid="ignore"):
        stag2 = f * (th[i - 4] - th[i + 1]) / th[i] >= (th[i - 9] - th[i - 4]) / th[i - 4]
    return bool(stag1 and stag2)


def prepare_preconditioner(A, opts):
    """Sketch ``A`` and build the preconditioner; skip the sketch when ``m <= d``."""
    m, n = A.shape
    d = opts.sketch_dim if opts.sketch_dim is not None else 4 * n
    d = round_up_sketch_dim(d, opts.zeta)
    info = {"sketch_dim": d, "zeta": opts.zeta, "sketched": d < m}
    if d < m:
        S = build_sparsestack(d, m, opts.zeta, opts.seed)
        SA = sketch_apply(S, A)
    else:
        SA = A.todense()
    P = build_preconditioner(SA)
    info["precond_warnings"] = list(P.warnings)
    return P, info


def _truth_metrics(truth, theta, v):
    if truth is None:
        return None, None
    relerr = abs(theta - truth.sigma_min) / truth.sigma_min if truth.sigma_min else abs(theta)
    c = float(np.dot(v, truth.v_min))
    return relerr, float(np.sqrt(min(max(1.0 - c * c, 0.0), 1.0)))


def _as_truth(truth):
    if truth is None or isinstance(truth, Truth):
        return truth
    if hasattr(truth, "truth"):
        return truth.truth
    sigma, v = truth
    return Truth(float(sigma), np.asarray(v, dtype=float))


def _normalize(x):
    return x / np.linalg.norm(x)


# ---------------------------------------------------------------------------
# single vector
# ---------------------------------------------------------------------------

def lobpcg_single_core(A, apply_prec, v0, sigma1_est, opts, truth=None,
                       method="rlobpcg", info=None, t_start=None):
    """The iteration shared by RLOBPCG and the baselines."""
    A = aslinearoperator(A)
    m, n = A.shape
    opts = opts.resolved(n)
    truth = _as_truth(truth)
    t_start = time.perf_counter() if t_start is None else t_start
    rng = np.random.default_rng([opts.seed, 1])
    rec = ConvergenceRecord(method=method, info=dict(info or {}))
    rec.info.update(sigma1_est=float(sigma1_est), tol=opts.tol)

    def log(k, theta, rnorm, v, nA, nAt):
        err, ang = _truth_metrics(truth, theta, v)
        rec.append(IterationRow(k, nA, nAt, 1e3 * (time.perf_counter() - t_start),
                                float(theta), float(rnorm), err, ang, (float(theta),)))

    v = _normalize(np.asarray(v0, dtype=np.float64))
    Av = A.matvec(v)
    theta = np.linalg.norm(Av)
    r = A.rmatvec(Av) - theta ** 2 * v
    nA = nAt = 1
    log(0, theta, np.linalg.norm(r), v, nA, nAt)
    x = Ax = None

    for i in range(opts.max_iter):
        w = apply_prec(r)
        basis = v[:, None] if x is None else np.column_stack([v, x])
        W, bad = cgs2(basis, w[:, None])
        if bad[0]:
            W = _fill_degenerate(W, bad, basis, rng)
        w = W[:, 0]
        T = np.column_stack([basis, w])
        Aw = A.matvec(w)
        nA += 1
        AT = np.column_stack([Av, Aw] if x is None else [Av, Ax, Aw])
        C, Theta = min_energy_ritz(AT, T)
        k = T.shape[1]
        v_new = T @ C[:, -1]
        theta_new = Theta[-1]
        Av_new = AT @ C[:, -1]
        r_new = A.rmatvec(Av_new) - theta_new ** 2 * v_new
        nAt += 1
        rnorm = np.linalg.norm(r_new)
        if not (np.isfinite(theta_new) and np.isfinite(rnorm)):
            rec.status = "failed"
            raise NonFiniteError(f"non-finite iterate at iteration {i + 1} (theta={theta_new}, |r|={rnorm})")
        log(i + 1, theta_new, rnorm, v_new, nA, nAt)
        if opts.verify_every and (i + 1) % opts.verify_every == 0:
            rec.audit_matvecs += 1
            rec.cache_drift.append((i + 1, float(np.linalg.norm(A.matvec(v_new) - Av_new))))

        if i % opts.check_every == 0 and check_convergence(rec, sigma1_est, opts, i):
            rec.status = "converged"
            return SolveResult(v_new, float(theta_new), rec)

        q = C[0, : k - 1]
        qn = np.linalg.norm(q)
        if qn > 0.0:
            q = q / qn
            x = T @ (C[:, : k - 1] @ q)
            Ax = AT @ (C[:, : k - 1] @ q)
        else:
            x = Ax = None
        v, Av, r, theta = v_new, Av_new, r_new, theta_new

    rec.status = "max_iter"
    return SolveResult(v, float(theta), rec)


def rlobpcg_single(A, opts=None, truth=None):
    """Smallest singular triplet of a tall ``A`` by single-vector RLOBPCG.

    Returns ``(v, sigma, record)``; ``record.status`` is ``"converged"`` or
    ``"max_iter"`` (in which case the last iterate is returned).
    """
    A = aslinearoperator(A)
    m, n = A.shape
    if n < 2 or m < n:
        raise DimensionError(f"need m >= n >= 2, got shape {A.shape}")
    opts = opts or SolverOptions()
    t0 = time.perf_counter()
    P, info = prepare_preconditioner(A, opts)
    v0 = sketch_and_solve_init(P, 1)[:, 0]
    return lobpcg_single_core(A, P.apply, v0, P.sigma_max_estimate, opts, truth,
                              method="rlobpcg", info=info, t_start=t0)


# ---------------------------------------------------------------------------
# block
# ---------------------------------------------------------------------------

def rlobpcg_block(A, opts=None, truth=None):
    """The ``b = opts.block_size`` smallest singular triplets by block RLOBPCG.

    Returns ``(V, sigma, record)`` with ``sigma`` ascending and the columns of
    ``V`` in matching order. Convergence requires every column residual to
    meet the tolerance; stagnation checks use the largest column residual and
    the largest target Ritz value.
    """
    A = aslinearoperator(A)
    m, n = A.shape
    opts = opts or SolverOptions()
    b = int(opts.block_size)
    if b < 1 or 3 * b > n:
        raise DimensionError(f"block size {b} needs 3b <= n = {n}")
    if m < n:
        raise DimensionError(f"need m >= n, got shape {A.shape}")
    t0 = time.perf_counter()
    P, info = prepare_preconditioner(A, opts)
    opts = opts.resolved(n, block=True)
    truth = _as_truth(truth)
    rng = np.random.default_rng([opts.seed, 1])
    rec = ConvergenceRecord(method=f"rlobpcg_block{b}", info=info)
    sigma1 = P.sigma_max_estimate
    rec.info.update(sigma1_est=float(sigma1), tol=opts.tol)

    def log(k, targets, R, V, nA, nAt):
        asc = targets[::-1]
        rnorm = float(np.max(np.linalg.norm(R, axis=0)))
        err, ang = _truth_metrics(truth, asc[0], V[:, -1])
        rec.append(IterationRow(k, nA, nAt, 1e3 * (time.perf_counter() - t0),
                                float(asc[0]), rnorm, err, ang, tuple(float(t) for t in asc)))

    V = sketch_and_solve_init(P, b)
    AV = A.matmat(V)
    nA = b
    C, Theta = min_energy_ritz(AV, V)
    V = V @ C
    AV = AV @ C
    targets = Theta
    R = A.rmatmat(AV) - V * targets ** 2
    nAt = b
    log(0, targets, R, V, nA, nAt)
    X = AX = None

    for i in range(opts.max_iter):
        W = P.apply(R)
        basis = V if X is None else np.hstack([V, X])
        W, bad = cgs2(basis, W)
        if bad.any():
            W = _fill_degenerate(W, bad, basis, rng)
        T = np.hstack([basis, W])
        AW = A.matmat(W)
        nA += b
        AT = np.hstack([AV, AW] if X is None else [AV, AX, AW])
        C, Theta = min_energy_ritz(AT, T)
        k = T.shape[1]
        V_new = T @ C[:, k - b:]
        AV_new = AT @ C[:, k - b:]
        targets = Theta[k - b:]
        R = A.rmatmat(AV_new) - V_new * targets ** 2
        nAt += b
        if not (np.all(np.isfinite(targets)) and np.all(np.isfinite(R))):
            rec.status = "failed"
            raise NonFiniteError(f"non-finite iterate at iteration {i + 1}")
        log(i + 1, targets, R, V_new, nA, nAt)
        if opts.verify_every and (i + 1) % opts.verify_every == 0:
            rec.audit_matvecs += b
            rec.cache_drift.append((i + 1, float(np.linalg.norm(A.matmat(V_new) - AV_new))))

        if i % opts.check_every == 0 and check_convergence(rec, sigma1, opts, i):
            rec.status = "converged"
            return BlockResult(V_new[:, ::-1], targets[::-1].copy(), rec)

        Q, qbad = cgs2(None, C[:b, : k - b].T)
        Q = Q[:, ~qbad]
        if Q.shape[1]:
            X = T @ (C[:, : k - b] @ Q)
            AX = AT @ (C[:, : k - b] @ Q)
        else:
            X = AX = None
        V, AV = V_new, AV_new

    rec.status = "max_iter"
    return BlockResult(V[:, ::-1], targets[::-1].copy(), rec)


# ---------------------------------------------------------------------------
# single-step comparisons
# ---------------------------------------------------------------------------

def _search_direction(A, P, v):
    Av = A.matvec(v)
    r = A.rmatvec(Av) - np.dot(Av, Av) * v
    apply = P.apply if hasattr(P, "apply") else P
    return Av, apply(r)


def psd_step(A, P, v):
    """One preconditioned steepest-descent step: argmin of ``||A z||`` on span{v, w}."""
    A = aslinearoperator(A)
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (A.shape[1],):
        raise DimensionError("v has the wrong length")
    v = _normalize(v)
    Av, w = _search_direction(A, P, v)
    W, bad = cgs2(v[:, None], w[:, None])
    if bad[0]:
        return v
    T = np.column_stack([v, W[:, 0]])
    AT = np.column_stack([Av, A.matvec(W[:, 0])])
    C, _ = min_energy_ritz(AT, T)
    return T @ C[:, -1]


def lobpcg_step(A, P, v_old, v):
    """One LOBPCG step: argmin of ``||A z||`` on span{v_old, v, w}."""
    A = aslinearoperator(A)
    v = _normalize(np.asarray(v, dtype=np.float64))
    Av, w = _search_direction(A, P, v)
    B, bad = cgs2(None, np.column_stack([v, v_old, w]))
    T = B[:, ~bad]
    AT = A.matmat(T)
    C, _ = min_energy_ritz(AT, T)
    return T @ C[:, -1]
