"""Synthetic tall matrices with prescribed spectra and known minimum singular vectors."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import LinearOperator, UNIT_ROUNDOFF, dense_svd
from .errors import DimensionError
from .solver import Truth

KINDS = ("easy", "hard", "gap_controlled", "cond_controlled", "clustered", "explicit")

# above this many entries synth() returns a factored operator
DENSE_LIMIT = 20_000_000


@dataclass(frozen=True)
class SpectrumSpec:
    """Recipe for a singular value profile.

    kind            profile
    --------------  ----------------------------------------------------------
    easy            1 -> 0.1 geometric for the first n - 1, then 1e-7
    hard            1 -> 1e-10 geometric
    gap_controlled  1 -> 1e-9 geometric for n - 2, sigma_n = 1e-10, sigma_(n-1)
                    chosen so the relative squared gap equals ``gap``
    cond_controlled 1e-8 -> 1e-10 geometric for sigma_2..sigma_n,
                    sigma_1 = kappa * 1e-10
    clustered       exp(-log(1e10) * ((i - 1) / (n - 1)) ** a)
    explicit        ``values`` as given
    """

    kind: str
    n: int
    gap: Optional[float] = None
    kappa: Optional[float] = None
    a: float = 1.0 / 256.0
    values: Optional[tuple] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown spectrum kind {self.kind!r}; choose from {KINDS}")


def spectrum(spec):
    n = spec.n
    if spec.kind == "explicit":
        s = np.asarray(spec.values, dtype=float)
        if s.ndim != 1 or s.size < 1:
            raise ValueError("explicit spectrum must be a non-empty 1-D sequence")
    elif n < 2:
        raise ValueError("n must be at least 2")
    elif spec.kind == "easy":
        s = np.append(np.geomspace(1.0, 0.1, n - 1), 1e-7)
    elif spec.kind == "hard":
        s = np.geomspace(1.0, 1e-10, n)
    elif spec.kind == "gap_controlled":
        if spec.gap is None or spec.gap <= 0:
            raise ValueError("gap_controlled needs a positive gap")
        if n < 3:
            raise ValueError("gap_controlled needs n >= 3")
        sn = 1e-10
        snm1 = sn * np.sqrt(1.0 + spec.gap)
        head = np.geomspace(1.0, 1e-9, n - 2)
        if snm1 > head[-1]:
            raise ValueError(f"gap {spec.gap} puts sigma_(n-1) above sigma_(n-2) = {head[-1]:g}")
        s = np.concatenate([head, [snm1, sn]])
    elif spec.kind == "cond_controlled":
        if spec.kappa is None:
            raise ValueError("cond_controlled needs kappa")
        tail = np.geomspace(1e-8, 1e-10, n - 1)
        s1 = spec.kappa * tail[-1]
        if s1 < tail[0]:
            raise ValueError(f"kappa {spec.kappa:g} puts sigma_1 below sigma_2 = {tail[0]:g}")
        s = np.append(s1, tail)
    else:  # clustered
        i = np.arange(1, n + 1)
        s = np.exp(-np.log(1e10) * ((i - 1) / (n - 1)) ** spec.a)
    if np.any(s <= 0) or np.any(np.diff(s) > 0):
        raise ValueError("spectrum must be positive and nonincreasing")
    return s


def haar_orthonormal(m, n, seed):
    """m x n matrix with Haar-distributed orthonormal columns."""
    if m < n or n < 1:
        raise DimensionError(f"need m >= n >= 1, got {m} x {n}")
    rng = np.random.default_rng(seed)
    Q, R = np.linalg.qr(rng.standard_normal((m, n)))
    d = np.sign(np.diag(R))
    d[d == 0] = 1.0
    return Q * d


def coherent_orthonormal(n, seed):
    """orth(diag(randn(n, 1)) + 1e-4 randn(n)): close to a signed permutation."""
    rng = np.random.default_rng(seed)
    M = np.diag(rng.standard_normal(n)) + 1e-4 * rng.standard_normal((n, n))
    return dense_svd(M, want_u=True).U


@dataclass(frozen=True, eq=False)
class SyntheticProblem:
    A: LinearOperator
    sigma: np.ndarray
    v_min: np.ndarray
    V: np.ndarray
    u_seed: int
    v_seed: int
    spec: SpectrumSpec
    m: int
    seed: int
    coherent: bool

    @property
    def truth(self):
        return Truth(float(self.sigma[-1]), self.v_min)

    @property
    def gap(self):
        s = self.sigma
        return float((s[-2] ** 2 - s[-1] ** 2) / s[-1] ** 2)

    @property
    def gap_abs(self):
        s = self.sigma
        return float((s[-2] - s[-1]) / s[0])

    @property
    def kappa(self):
        return float(self.sigma[0] / self.sigma[-1])

    def singval_floor(self):
        """``u * kappa``: the relative singular value error of a backward stable method."""
        return UNIT_ROUNDOFF * self.kappa

    def angle_floor(self):
        """``u / gap_abs``: the expected singular vector error of a backward stable method."""
        return UNIT_ROUNDOFF / self.gap_abs


def synth(spec, m, seed=0, coherent=False, materialize=None):
    """Build ``A = U diag(sigma) V.T`` with Haar ``U`` and Haar or coherent ``V``.

    ``materialize=None`` forms ``A`` densely when it has at most
    ``DENSE_LIMIT`` entries and keeps it factored otherwise.
    """
    s = spectrum(spec)
    n = s.size
    if m < n:
        raise DimensionError(f"need m >= n, got m={m}, n={n}")
    u_seed, v_seed = (int(x) for x in np.random.SeedSequence(seed).generate_state(2, dtype=np.uint64))
    U = haar_orthonormal(m, n, u_seed)
    V = coherent_orthonormal(n, v_seed) if coherent else haar_orthonormal(n, n, v_seed)
    if materialize is None:
        materialize = m * n <= DENSE_LIMIT
    A = LinearOperator.from_dense((U * s) @ V.T) if materialize else LinearOperator.composed(U, s, V)
    return SyntheticProblem(A, s, V[:, -1].copy(), V, u_seed, v_seed, spec, m, seed, coherent)


PRESETS = {
    "easy-small": (SpectrumSpec("easy", 100), 2000, True),
    "hard-small": (SpectrumSpec("hard", 100), 2000, False),
    "gap": (SpectrumSpec("gap_controlled", 100, gap=0.1), 10_000, False),
    "cond": (SpectrumSpec("cond_controlled", 100, kappa=1e10), 10_000, False),
    "clustered": (SpectrumSpec("clustered", 200), 5000, False),
}


def preset(name, m=None, n=None, seed=0, **overrides):
    """Problem from a named preset, optionally resized."""
    try:
        spec, m0, coherent = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    fields = {k: v for k, v in overrides.items() if v is not None}
    if n is not None:
        fields["n"] = n
    if fields:
        spec = SpectrumSpec(**{**spec.__dict__, **fields})
    return synth(spec, m or m0, seed=seed, coherent=coherent)
