"""Symmetric matrix utilities: definiteness, determinants, block interpolation.

Everything here works on real symmetric matrices of desk-scale dimension
(N up to a few dozen). Determinants of positive definite matrices go
through Cholesky log-determinants; general symmetric determinants go
through the eigendecomposition. Positive definiteness is decided by a
scale-aware pivot threshold so that matrices differing only by overall
scale classify identically.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import (
    DimensionTooLarge,
    InvalidIndexSet,
    NotPositiveDefinite,
    ShapeMismatch,
)

# Relative pivot threshold for positive definiteness (scaled by trace/dim).
PD_PIVOT_RTOL = 1e-12
# Relative eigenvalue floor for positive semidefiniteness (scaled by spectral radius).
PSD_EIG_RTOL = 1e-10
# Relative symmetry defect allowed on input matrices.
SYMMETRY_RTOL = 1e-12
# Relative gap below which a Fischer pair counts as an equality case.
FISCHER_EQUALITY_RTOL = 1e-9

# Subset enumeration in minor_expansion walks 2^N principal minors.
MINOR_EXPANSION_MAX_DIM = 12


def _as_array(m) -> np.ndarray:
    if isinstance(m, SymMatrix):
        return m.a
    return np.asarray(m, dtype=float)


def symmetrize(m) -> np.ndarray:
    """Return the symmetric part of a square matrix, rejecting gross asymmetry."""
    a = _as_array(m)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeMismatch(f"expected a square matrix, got shape {a.shape}")
    scale = max(np.abs(a).max(), 1.0)
    if np.abs(a - a.T).max() > SYMMETRY_RTOL * scale * a.shape[0]:
        raise ShapeMismatch("matrix is not symmetric within tolerance")
    return 0.5 * (a + a.T)


def is_pd(m) -> bool:
    """Positive definite: Cholesky succeeds and every pivot clears 1e-12 * trace/dim."""
    a = symmetrize(m)
    n = a.shape[0]
    tr = np.trace(a)
    if tr <= 0:
        return False
    try:
        chol = np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        return False
    # LDL^T pivots are the squared Cholesky diagonal entries.
    return bool(np.min(np.diag(chol)) ** 2 > PD_PIVOT_RTOL * tr / n)


def is_psd(m) -> bool:
    """Positive semidefinite: eigenvalues above -1e-10 times the spectral radius."""
    a = symmetrize(m)
    w = np.linalg.eigvalsh(a)
    radius = max(np.abs(w).max(), 0.0)
    return bool(w.min() >= -PSD_EIG_RTOL * radius)


def logdet_pd(m) -> float:
    """Log-determinant of a positive definite matrix via Cholesky."""
    a = symmetrize(m)
    try:
        chol = np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite("logdet_pd requires a positive definite matrix")
    return float(2.0 * np.sum(np.log(np.diag(chol))))


def det_sym(m) -> float:
    """Determinant of a symmetric matrix via its eigenvalues."""
    a = symmetrize(m)
    if a.shape[0] == 0:
        return 1.0
    return float(np.prod(np.linalg.eigvalsh(a)))


def sqrt_psd(m) -> np.ndarray:
    """Symmetric square root of a PSD matrix; tiny negative eigenvalues clamp to zero."""
    a = symmetrize(m)
    if not is_psd(a):
        raise NotPositiveDefinite("matrix square root requires a PSD matrix")
    w, v = np.linalg.eigh(a)
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T


def spd_inverse(m) -> np.ndarray:
    """Inverse of a positive definite matrix through its Cholesky factor."""
    a = symmetrize(m)
    if not is_pd(a):
        raise NotPositiveDefinite("inverse requires a positive definite matrix")
    chol = np.linalg.cholesky(a)
    identity = np.eye(a.shape[0])
    # Two triangular solves beat forming the explicit inverse of a.
    y = np.linalg.solve(chol, identity)
    return symmetrize(np.linalg.solve(chol.T, y))


@dataclass(frozen=True)
class SymMatrix:
    """Immutable symmetric matrix with cached definiteness classification."""

    a: np.ndarray

    def __post_init__(self):
        sym = symmetrize(self.a)
        sym.setflags(write=False)
        object.__setattr__(self, "a", sym)

    @property
    def dim(self) -> int:
        return self.a.shape[0]

    @cached_property
    def pd(self) -> bool:
        return is_pd(self.a)

    @cached_property
    def psd(self) -> bool:
        return is_psd(self.a)

    def to_json(self) -> str:
        return json.dumps({"dim": self.dim, "rows": self.a.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "SymMatrix":
        doc = json.loads(text)
        rows = np.asarray(doc["rows"], dtype=float)
        if rows.shape != (doc["dim"], doc["dim"]):
            raise ShapeMismatch("rows do not match the declared dimension")
        return cls(rows)


@dataclass(frozen=True)
class BlockStructure:
    """Coordinate split of R^N into m blocks with positive exponents.

    sizes[i] is the dimension of block i; c[i] its exponent. Blocks are
    contiguous and ordered, so block i occupies offsets[i]:offsets[i+1].
    """

    sizes: tuple[int, ...]
    c: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "sizes", tuple(int(n) for n in self.sizes))
        object.__setattr__(self, "c", tuple(float(x) for x in self.c))
        if len(self.sizes) != len(self.c) or not self.sizes:
            raise ShapeMismatch("sizes and c must be equal-length and nonempty")
        if any(n < 1 for n in self.sizes):
            raise ShapeMismatch("block sizes must be positive integers")
        if any(x <= 0 for x in self.c):
            raise ShapeMismatch("exponents must be strictly positive")

    @property
    def m(self) -> int:
        return len(self.sizes)

    @property
    def total_dim(self) -> int:
        return sum(self.sizes)

    @property
    def offsets(self) -> tuple[int, ...]:
        out = [0]
        for n in self.sizes:
            out.append(out[-1] + n)
        return tuple(out)

    def slices(self) -> list[slice]:
        off = self.offsets
        return [slice(off[i], off[i + 1]) for i in range(self.m)]

    def direct_sum(self, mats, weights=None) -> np.ndarray:
        """Assemble the block-diagonal matrix oplus_i w_i * mats[i]."""
        if len(mats) != self.m:
            raise ShapeMismatch(f"expected {self.m} blocks, got {len(mats)}")
        w = self.c if weights == "c" else ([1.0] * self.m if weights is None else weights)
        out = np.zeros((self.total_dim, self.total_dim))
        for sl, mat, wi in zip(self.slices(), mats, w):
            block = _as_array(mat)
            if block.shape != (sl.stop - sl.start, sl.stop - sl.start):
                raise ShapeMismatch("block size does not match the structure")
            out[sl, sl] = wi * block
        return out

    def split_blocks(self, m) -> list[np.ndarray]:
        a = _as_array(m)
        if a.shape != (self.total_dim, self.total_dim):
            raise ShapeMismatch("matrix does not match the block structure")
        return [a[sl, sl].copy() for sl in self.slices()]

    def is_block_diagonal(self, m, rtol: float = 1e-12) -> bool:
        a = _as_array(m)
        if a.shape != (self.total_dim, self.total_dim):
            return False
        mask = np.zeros_like(a, dtype=bool)
        for sl in self.slices():
            mask[sl, sl] = True
        off = np.abs(a[~mask])
        scale = max(np.abs(a).max(), 1.0)
        return bool(off.size == 0 or off.max() <= rtol * scale)


@dataclass(frozen=True)
class CovarianceBlocks:
    """A positive definite covariance split into two diagonal blocks.

    sigma is the full N x N covariance; n1 the size of the first block.
    """

    sigma: np.ndarray
    n1: int
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        a = symmetrize(self.sigma)
        if not (1 <= self.n1 < a.shape[0]):
            raise ShapeMismatch("split must leave both blocks nonempty")
        if not is_pd(a):
            raise NotPositiveDefinite("covariance must be positive definite")
        a.setflags(write=False)
        object.__setattr__(self, "sigma", a)

    @property
    def dim(self) -> int:
        return self.sigma.shape[0]

    @property
    def n2(self) -> int:
        return self.dim - self.n1

    @property
    def s11(self) -> np.ndarray:
        return self.sigma[: self.n1, : self.n1]

    @property
    def s22(self) -> np.ndarray:
        return self.sigma[self.n1 :, self.n1 :]

    @property
    def s12(self) -> np.ndarray:
        return self.sigma[: self.n1, self.n1 :]


def interpolate(cb: CovarianceBlocks, s: float) -> np.ndarray:
    """Covariance with the off-diagonal block scaled by s.

    s=0 decouples the blocks, s=1 returns the original covariance. Stays
    positive definite for s in [0, 1] because it is a convex combination
    of the s=0 and s=1 endpoints.
    """
    out = np.array(cb.sigma)
    out[: cb.n1, cb.n1 :] *= s
    out[cb.n1 :, : cb.n1] *= s
    return out


def fischer_gap(m, split: int) -> tuple[float, float]:
    """Determinant of a PD matrix against the product of its two diagonal blocks.

    Returns (det_full, det_product). det_full <= det_product always holds,
    with equality exactly when the off-diagonal block vanishes; numerically
    a relative gap below FISCHER_EQUALITY_RTOL counts as equality.
    """
    a = symmetrize(m)
    if not (1 <= split < a.shape[0]):
        raise ShapeMismatch("split must leave both blocks nonempty")
    if not is_pd(a):
        raise NotPositiveDefinite("the determinant comparison needs a PD matrix")
    det_full = float(np.exp(logdet_pd(a)))
    det_product = float(
        np.exp(logdet_pd(a[:split, :split]) + logdet_pd(a[split:, split:]))
    )
    return det_full, det_product


def fischer_is_equality(det_full: float, det_product: float) -> bool:
    """Classify a fischer_gap pair as an equality case (relative gap below 1e-9)."""
    return abs(det_product - det_full) <= FISCHER_EQUALITY_RTOL * det_product


def det_interp_curve(cb: CovarianceBlocks, a, s_grid) -> np.ndarray:
    """det(Id + A * Sigma^(s)) sampled along s_grid.

    A must be PSD and block-diagonal for cb's split; the curve is then
    non-increasing in s on [0, 1].
    """
    amat = symmetrize(a)
    bs = BlockStructure((cb.n1, cb.n2), (1.0, 1.0))
    if not bs.is_block_diagonal(amat):
        raise ShapeMismatch("A must be block-diagonal for the covariance split")
    if not is_psd(amat):
        raise NotPositiveDefinite("A must be positive semidefinite")
    eye = np.eye(cb.dim)
    return np.array(
        [det_sym_general(eye + amat @ interpolate(cb, float(s))) for s in s_grid]
    )


def det_sym_general(m) -> float:
    """Determinant of a general (possibly nonsymmetric) square matrix."""
    return float(np.linalg.det(np.asarray(m, dtype=float)))


def minor_expansion(a_diag, sigma_s) -> float:
    """det(Id + A Sigma) for diagonal A, summed over principal minors.

    Evaluates 1 + sum over nonempty index sets J of prod(a_J) * det(Sigma_J).
    Enumerates 2^N subsets, so N is capped at MINOR_EXPANSION_MAX_DIM.
    """
    a = np.asarray(a_diag, dtype=float)
    if a.ndim == 2:
        if np.abs(a - np.diag(np.diag(a))).max() > 1e-12 * max(np.abs(a).max(), 1.0):
            raise ShapeMismatch("minor expansion needs a diagonal A")
        a = np.diag(a)
    sig = symmetrize(sigma_s)
    n = sig.shape[0]
    if a.shape != (n,):
        raise ShapeMismatch("diagonal length does not match the matrix dimension")
    if n > MINOR_EXPANSION_MAX_DIM:
        raise DimensionTooLarge(f"subset enumeration is capped at N = {MINOR_EXPANSION_MAX_DIM}")
    total = 1.0
    for k in range(1, n + 1):
        for subset in itertools.combinations(range(n), k):
            idx = list(subset)
            total += np.prod(a[idx]) * det_sym_general(sig[np.ix_(idx, idx)])
    return float(total)


def minor_factorization(cb: CovarianceBlocks, index_set, s: float) -> tuple[float, float]:
    """Split a principal minor of Sigma^(s) across the two blocks.

    For J with parts J1 (first block) and J2 (second block), returns

        lhs = det(Sigma^(s)_J)
        rhs = det(Sigma_J1) * det(Sigma_J2) * det(Id - s^2 M)

    where M = Sigma_J1^{-1/2} Sigma_J1J2 Sigma_J2^{-1} Sigma_J2J1 Sigma_J1^{-1/2}.
    M is verified to satisfy 0 <= M <= Id spectrally; lhs and rhs agree to
    rounding, which is what makes the interpolation curve monotone.
    """
    idx = sorted(int(i) for i in index_set)
    if not idx:
        raise InvalidIndexSet("index set must be nonempty")
    if len(set(idx)) != len(idx):
        raise InvalidIndexSet("index set contains duplicates")
    if idx[0] < 0 or idx[-1] >= cb.dim:
        raise InvalidIndexSet("index out of range")

    j1 = [i for i in idx if i < cb.n1]
    j2 = [i for i in idx if i >= cb.n1]
    sig_s = interpolate(cb, s)
    lhs = det_sym_general(sig_s[np.ix_(idx, idx)])

    d1 = det_sym(cb.sigma[np.ix_(j1, j1)]) if j1 else 1.0
    d2 = det_sym(cb.sigma[np.ix_(j2, j2)]) if j2 else 1.0
    if not j1 or not j2:
        return lhs, float(d1 * d2)

    s11 = cb.sigma[np.ix_(j1, j1)]
    s22 = cb.sigma[np.ix_(j2, j2)]
    s12 = cb.sigma[np.ix_(j1, j2)]
    root_inv = spd_inverse(sqrt_psd(s11))
    mid = root_inv @ s12 @ spd_inverse(s22) @ s12.T @ root_inv
    w = np.linalg.eigvalsh(symmetrize(mid))
    if w.min() < -1e-10 or w.max() > 1.0 + 1e-10:
        raise NotPositiveDefinite("cross-block operator escaped [0, Id]")
    rhs = d1 * d2 * float(np.prod(1.0 - s**2 * np.clip(w, 0.0, 1.0)))
    return lhs, rhs
