"""SparseStack subspace embeddings.

A SparseStack ``S`` (d x m) splits every column into ``zeta`` contiguous blocks
of ``d / zeta`` rows and places one ``±zeta**-0.5`` entry in each block. The
position and sign of entry ``k`` of column ``j`` are drawn from a splitmix64
hash of ``(seed, j * zeta + k)``, so any subset of columns can be regenerated
independently and the result does not depend on how work is split.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .core import EPS, aslinearoperator, dense_svd
from .errors import DimensionError

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_HEADER = struct.Struct("<4sQQQQ")
_MAGIC = b"SSTK"


def _splitmix64(x):
    with np.errstate(over="ignore"):
        z = x + _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        return z ^ (z >> np.uint64(31))


def _column_entries(seed, cols, zeta, block):
    """Row offsets within each block and signs for the given columns."""
    key = _splitmix64(np.array([seed], dtype=np.uint64))
    ctr = np.asarray(cols, dtype=np.uint64)[:, None] * np.uint64(zeta) + np.arange(zeta, dtype=np.uint64)
    with np.errstate(over="ignore"):
        h = _splitmix64(key + _splitmix64(ctr))
    # Lemire's multiply-shift maps the high 32 bits onto [0, block)
    pos = ((h >> np.uint64(32)) * np.uint64(block)) >> np.uint64(32)
    signs = np.where(h & np.uint64(1), 1.0, -1.0)
    return pos.astype(np.int64), signs


def round_up_sketch_dim(d, zeta):
    """Smallest multiple of ``zeta`` that is at least ``d``."""
    return -(-int(d) // int(zeta)) * int(zeta)


@dataclass(frozen=True, eq=False)
class SparseStackEmbedding:
    d: int
    m: int
    zeta: int
    seed: int
    rows: np.ndarray   # (m, zeta) absolute row index of each nonzero
    signs: np.ndarray  # (m, zeta) entries in {-1, +1}

    @property
    def scale(self):
        return self.zeta ** -0.5

    @property
    def block_size(self):
        return self.d // self.zeta

    def tosparse(self):
        cols = np.repeat(np.arange(self.m), self.zeta)
        vals = (self.signs * self.scale).ravel()
        return sp.csc_matrix((vals, (self.rows.ravel(), cols)), shape=(self.d, self.m)).tocsr()

    def todense(self):
        return self.tosparse().toarray()

    def to_bytes(self):
        """Compact header; the structure is regenerated from the seed."""
        return _HEADER.pack(_MAGIC, self.d, self.m, self.zeta, self.seed)

    @classmethod
    def from_bytes(cls, blob):
        magic, d, m, zeta, seed = _HEADER.unpack(blob[: _HEADER.size])
        if magic != _MAGIC:
            raise ValueError("not a SparseStack header")
        return build_sparsestack(d, m, zeta, seed)

    @classmethod
    def identity(cls, m):
        """The trivial embedding S = I_m (d = m, zeta = 1)."""
        rows = np.arange(m, dtype=np.int64)[:, None]
        return cls(m, m, 1, 0, rows, np.ones((m, 1)))


def build_sparsestack(d, m, zeta=4, seed=0):
    """Draw a ``d x m`` SparseStack with ``zeta`` nonzeros per column."""
    d, m, zeta, seed = int(d), int(m), int(zeta), int(seed)
    if m < 1:
        raise DimensionError("m must be positive")
    if not 1 <= zeta <= d:
        raise DimensionError(f"need 1 <= zeta <= d, got zeta={zeta}, d={d}")
    if d % zeta:
        raise DimensionError(
            f"d={d} is not divisible by zeta={zeta}; "
            f"use round_up_sketch_dim(d, zeta) = {round_up_sketch_dim(d, zeta)}"
        )
    if not 0 <= seed < 2**64:
        raise ValueError("seed must fit in an unsigned 64-bit integer")
    block = d // zeta
    pos, signs = _column_entries(seed, np.arange(m), zeta, block)
    rows = pos + block * np.arange(zeta)[None, :]
    return SparseStackEmbedding(d, m, zeta, seed, rows, signs)


def sketch_apply(S, A):
    """Dense ``S @ A``; costs O(zeta * nnz(A)) for CSR input."""
    A = aslinearoperator(A)
    if S.m != A.shape[0]:
        raise DimensionError(f"embedding expects {S.m} rows, operator has {A.shape[0]}")
    return A.left_multiply(S.tosparse())


@dataclass(frozen=True)
class DistortionReport:
    """Exact distortion of an embedding on ``range(A)``.

    ``eta`` is ``max(1 - smin**2, smax**2 - 1)`` for the singular values of
    ``S @ Q``; it is at least 1 when S is not an embedding at its own scale.
    ``eta_scaled`` is the smallest distortion reachable by rescaling S (the
    solver output is invariant to that scale), attained by ``scale * S``.
    """

    eta: float
    sigma_min_sq: float
    sigma_max_sq: float
    eta_scaled: float
    scale: float

    @property
    def is_embedding(self):
        return self.eta < 1.0


def empirical_distortion(S, A):
    """Measure the distortion of ``S`` on ``range(A)`` by a dense SVD.

    Test-scale only: ``A`` is densified.
    """
    A = aslinearoperator(A)
    if S.m != A.shape[0]:
        raise DimensionError(f"embedding expects {S.m} rows, operator has {A.shape[0]}")
    m, n = A.shape
    res = dense_svd(A.todense(), want_u=True)
    if res.s[-1] <= max(m, n) * EPS * res.s[0]:
        raise DimensionError("operator is numerically rank deficient")
    SQ = S.tosparse() @ res.U
    sv = dense_svd(np.asarray(SQ)).s
    lo, hi = float(sv[-1] ** 2), float(sv[0] ** 2)
    eta = max(1.0 - lo, hi - 1.0)
    eta_scaled = (hi - lo) / (hi + lo)
    scale = float(np.sqrt(2.0 / (hi + lo)))
    return DistortionReport(eta, lo, hi, eta_scaled, scale)
