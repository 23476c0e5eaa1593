"""Operator abstraction and the dense SVD kernel.

Everything here works in real double precision. A :class:`LinearOperator`
wraps one of three backings:

* ``dense``    -- a 2-D ndarray,
* ``csr``      -- a canonical ``scipy.sparse.csr_matrix``,
* ``composed`` -- a factored ``U @ diag(s) @ V.T`` that is never materialised.

Dense and CSR products are delegated to BLAS and scipy's sparse kernels. For a
fixed thread count both reduce in a fixed order, so repeated products are
bit-identical; the ``MINSVD_THREADS`` variable read by the CLI pins that count.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .errors import ConvergenceError, DimensionError, NonFiniteError

EPS = np.finfo(np.float64).eps
UNIT_ROUNDOFF = EPS / 2


def check_finite(x, what="input"):
    """Raise :class:`NonFiniteError` if ``x`` holds a NaN or Inf."""
    if not np.all(np.isfinite(x)):
        raise NonFiniteError(f"{what} contains NaN or Inf")
    return x


class LinearOperator:
    """A real m-by-n matrix exposing products with itself and its transpose."""

    def __init__(self, kind, shape, data):
        self.kind = kind
        self.shape = (int(shape[0]), int(shape[1]))
        self._data = data

    # -- constructors -----------------------------------------------------

    @classmethod
    def from_dense(cls, M):
        M = np.array(M, dtype=np.float64, order="C")
        if M.ndim != 2 or M.shape[0] < 1 or M.shape[1] < 1:
            raise DimensionError(f"expected a non-empty 2-D array, got shape {M.shape}")
        check_finite(M, "matrix")
        M.setflags(write=False)
        return cls("dense", M.shape, M)

    @classmethod
    def from_csr(cls, indptr, indices, data, shape):
        """Build from raw CSR arrays, enforcing the canonical layout."""
        indptr = np.asarray(indptr, dtype=np.int64)
        indices = np.asarray(indices, dtype=np.int64)
        data = np.asarray(data, dtype=np.float64)
        m, n = shape
        if indptr.shape != (m + 1,) or indptr[0] != 0:
            raise DimensionError("row offsets must have length m + 1 and start at 0")
        if np.any(np.diff(indptr) < 0):
            raise DimensionError("row offsets must be nondecreasing")
        if indptr[-1] != data.size or indices.size != data.size:
            raise DimensionError("nnz does not match the number of stored values")
        if indices.size and (indices.min() < 0 or indices.max() >= n):
            raise DimensionError("column index out of range")
        for i in range(m):
            row = indices[indptr[i]:indptr[i + 1]]
            if row.size > 1 and np.any(np.diff(row) <= 0):
                raise DimensionError(f"column indices in row {i} are not strictly increasing")
        check_finite(data, "matrix values")
        mat = sp.csr_matrix((data, indices, indptr), shape=(m, n))
        return cls("csr", (m, n), mat)

    @classmethod
    def from_sparse(cls, S):
        S = sp.csr_matrix(S, dtype=np.float64, copy=True)
        S.sum_duplicates()
        S.sort_indices()
        check_finite(S.data, "matrix values")
        return cls("csr", S.shape, S)

    @classmethod
    def composed(cls, U, s, V):
        """Represent ``U @ diag(s) @ V.T`` without forming it."""
        U = np.asarray(U, dtype=np.float64)
        s = np.asarray(s, dtype=np.float64)
        V = np.asarray(V, dtype=np.float64)
        if U.shape[1] != s.size or V.shape[1] != s.size:
            raise DimensionError("factor shapes do not agree")
        for a in (U, s, V):
            check_finite(a, "factor")
        return cls("composed", (U.shape[0], V.shape[0]), (U, s, V))

    # -- properties -------------------------------------------------------

    @property
    def nnz(self):
        if self.kind == "csr":
            return int(self._data.nnz)
        return self.shape[0] * self.shape[1]

    @property
    def data(self):
        return self._data

    def __repr__(self):
        return f"LinearOperator(kind={self.kind!r}, shape={self.shape}, nnz={self.nnz})"

    # -- products ---------------------------------------------------------

    def matvec(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.shape[1],):
            raise DimensionError(f"matvec expects a vector of length {self.shape[1]}, got {x.shape}")
        check_finite(x, "vector")
        return self._mul(x)

    def rmatvec(self, y):
        y = np.asarray(y, dtype=np.float64)
        if y.shape != (self.shape[0],):
            raise DimensionError(f"rmatvec expects a vector of length {self.shape[0]}, got {y.shape}")
        check_finite(y, "vector")
        return self._rmul(y)

    def matmat(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[0] != self.shape[1]:
            raise DimensionError(f"matmat expects {self.shape[1]} rows, got {X.shape}")
        check_finite(X, "block")
        return self._mul(X)

    def rmatmat(self, Y):
        Y = np.asarray(Y, dtype=np.float64)
        if Y.ndim != 2 or Y.shape[0] != self.shape[0]:
            raise DimensionError(f"rmatmat expects {self.shape[0]} rows, got {Y.shape}")
        check_finite(Y, "block")
        return self._rmul(Y)

    def _mul(self, x):
        if self.kind == "composed":
            U, s, V = self._data
            t = V.T @ x
            t = t * (s if x.ndim == 1 else s[:, None])
            return U @ t
        return np.asarray(self._data @ x)

    def _rmul(self, y):
        if self.kind == "composed":
            U, s, V = self._data
            t = U.T @ y
            t = t * (s if y.ndim == 1 else s[:, None])
            return V @ t
        return np.asarray(self._data.T @ y)

    def left_multiply(self, M):
        """Return the dense product ``M @ A`` for a (sparse or dense) ``M``."""
        if M.shape[1] != self.shape[0]:
            raise DimensionError(f"left factor has {M.shape[1]} columns, operator has {self.shape[0]} rows")
        if self.kind == "composed":
            U, s, V = self._data
            return np.asarray(((M @ U) * s) @ V.T)
        out = M @ self._data
        if sp.issparse(out):
            out = out.toarray()
        return np.asarray(out, dtype=np.float64)

    def column_norms(self):
        if self.kind == "dense":
            return np.linalg.norm(self._data, axis=0)
        if self.kind == "csr":
            return np.sqrt(np.asarray(self._data.multiply(self._data).sum(axis=0)).ravel())
        _, s, V = self._data
        return np.linalg.norm(V * s, axis=1)

    def todense(self):
        if self.kind == "dense":
            return np.array(self._data)
        if self.kind == "csr":
            return self._data.toarray()
        U, s, V = self._data
        return (U * s) @ V.T


def aslinearoperator(A):
    """Coerce an ndarray, scipy sparse matrix, or LinearOperator."""
    if isinstance(A, LinearOperator):
        return A
    if sp.issparse(A):
        return LinearOperator.from_sparse(A)
    return LinearOperator.from_dense(A)


def matvec(A, x):
    return aslinearoperator(A).matvec(x)


def adjoint_matvec(A, y):
    return aslinearoperator(A).rmatvec(y)


# ---------------------------------------------------------------------------
# dense SVD: Householder triangularisation + one-sided Jacobi
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SvdResult:
    """Economy SVD ``M = U @ diag(s) @ V.T`` with ``s`` descending.

    ``U`` is None unless it was requested.
    """

    U: np.ndarray | None
    s: np.ndarray
    V: np.ndarray


@lru_cache(maxsize=64)
def _round_robin(n):
    """Tournament ordering: n - 1 rounds of disjoint column pairs (n even)."""
    players = list(range(n))
    rounds = []
    for _ in range(n - 1):
        half = n // 2
        p = np.array(players[:half])
        q = np.array(players[half:][::-1])
        rounds.append((p, q))
        players = [players[0], players[-1]] + players[1:-1]
    return tuple(rounds)


def _one_sided_jacobi(G, max_sweeps):
    """Orthogonalise the columns of G in place; return the accumulated V.

    Each round rotates n/2 disjoint column pairs at once, so a sweep is n - 1
    vectorised updates rather than n(n - 1)/2 scalar ones.
    """
    m, n = G.shape
    V = np.eye(n)
    if n == 1:
        return V
    pad = n % 2
    if pad:
        G_work = np.zeros((m, n + 1))
        G_work[:, :n] = G
        V_work = np.eye(n + 1)
    else:
        G_work, V_work = G, V
    tol = EPS * max(n, 1)
    rounds = _round_robin(n + pad)
    for _ in range(max_sweeps):
        rotated = False
        for p, q in rounds:
            gp = G_work[:, p]
            gq = G_work[:, q]
            alpha = np.einsum("ij,ij->j", gp, gp)
            beta = np.einsum("ij,ij->j", gq, gq)
            gamma = np.einsum("ij,ij->j", gp, gq)
            active = np.abs(gamma) > tol * np.sqrt(alpha * beta)
            if not active.any():
                continue
            rotated = True
            p, q = p[active], q[active]
            gp, gq = gp[:, active], gq[:, active]
            alpha, beta, gamma = alpha[active], beta[active], gamma[active]
            zeta = (beta - alpha) / (2.0 * gamma)
            t = np.where(zeta >= 0, 1.0, -1.0) / (np.abs(zeta) + np.hypot(1.0, zeta))
            c = 1.0 / np.hypot(1.0, t)
            s = c * t
            G_work[:, p] = c * gp - s * gq
            G_work[:, q] = s * gp + c * gq
            vp = V_work[:, p]
            vq = V_work[:, q]
            V_work[:, p] = c * vp - s * vq
            V_work[:, q] = s * vp + c * vq
        if not rotated:
            if pad:
                G[:] = G_work[:, :n]
                return V_work[:n, :n]
            return V_work
    raise ConvergenceError(
        f"one-sided Jacobi did not converge in {max_sweeps} sweeps (n={n})"
    )


def _complete_columns(U, good):
    """Replace columns of U not flagged ``good`` by an orthonormal completion."""
    m, k = U.shape
    basis = U[:, good]
    fill = []
    for j in range(m):
        if len(fill) == np.count_nonzero(~good):
            break
        e = np.zeros(m)
        e[j] = 1.0
        cols = np.column_stack([basis] + fill) if (basis.shape[1] or fill) else np.zeros((m, 0))
        for _ in range(2):
            e = e - cols @ (cols.T @ e)
        nrm = np.linalg.norm(e)
        if nrm > 0.5:
            fill.append((e / nrm)[:, None])
    U = U.copy()
    U[:, ~good] = np.hstack(fill)
    return U


def dense_svd(M, want_u=False, max_sweeps=60):
    """Singular value decomposition of a small or tall dense matrix.

    Tall inputs are first reduced to an n-by-n triangular factor with a
    Householder QR, and the factor is diagonalised by one-sided (Hestenes)
    Jacobi rotations, which keeps high relative accuracy in tiny singular
    values. Wide inputs are handled through the transpose, in which case
    ``V`` has ``min(m, n)`` columns.

    Each column of ``V`` is signed so that its largest-magnitude entry is
    positive; ties among equal singular values keep sweep order.
    """
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] < 1 or M.shape[1] < 1:
        raise DimensionError(f"expected a non-empty 2-D array, got shape {M.shape}")
    check_finite(M, "matrix")
    m, n = M.shape
    if m < n:
        res = dense_svd(M.T, want_u=True, max_sweeps=max_sweeps)
        U, V = res.V, res.U
        # re-apply the sign convention to the new V
        idx = np.argmax(np.abs(V), axis=0)
        sgn = np.where(V[idx, np.arange(V.shape[1])] < 0, -1.0, 1.0)
        return SvdResult(U * sgn if want_u else None, res.s, V * sgn)

    if m > n:
        Q, G = np.linalg.qr(M)
    else:
        Q, G = None, M.copy()
    G = np.array(G, order="F")
    V = _one_sided_jacobi(G, max_sweeps)
    s = np.linalg.norm(G, axis=0)
    order = np.argsort(-s, kind="stable")
    s = s[order]
    V = V[:, order]
    G = G[:, order]

    idx = np.argmax(np.abs(V), axis=0)
    sgn = np.where(V[idx, np.arange(n)] < 0, -1.0, 1.0)
    V = V * sgn

    U = None
    if want_u:
        good = s > 0
        Ur = np.zeros_like(G)
        Ur[:, good] = G[:, good] / s[good]
        Ur = Ur * sgn
        if not good.all():
            Ur = _complete_columns(Ur, good)
        U = Ur if Q is None else Q @ Ur
    return SvdResult(U, s, V)


def orthonormal_residual(Q):
    """``max |Q^T Q - I|``, the usual orthonormality defect."""
    Q = np.asarray(Q)
    return float(np.max(np.abs(Q.T @ Q - np.eye(Q.shape[1])))) if Q.size else 0.0
