"""Even functions sampled on symmetric grids, and the doubling convolution flow.

Grids are cell-centered: x_j = -L + (j + 1/2) h with h = 2L/n, built by
mirroring the positive half so that reversing the value array is exactly
the map x -> -x. No sample sits at 0 or at +-L. Mass and moments use the
midpoint rule h^d * sum, which on these grids matches trapezoid
bookkeeping up to boundary terms below the decay-containment budget.

Membership tests ("is f more log-concave than the Gaussian with parameter
A") are midpoint-concavity scans of log f + <Ax, x>/2 over grid pairs
whose midpoint is again a grid point, with the convention that log 0 is
-inf: a -inf midpoint between finite endpoints is a violation, while a
-inf endpoint can never create one. Convexity mode additionally requires
strict positivity everywhere.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import interpolate as sp_interpolate
from scipy import signal

from .errors import (
    AliasingDetected,
    DimensionTooLarge,
    GridTooSmall,
    MassZero,
    ShapeMismatch,
)
from .linalg import is_pd, symmetrize

SQRT2 = math.sqrt(2.0)

# Relative ceiling for boundary samples: above this, decay is not contained.
DECAY_RTOL = 1e-12
# Relative mass allowed to fall outside the representable window during convolution.
LEAK_RTOL = 1e-9
# Midpoint test slack, scaled by the spread of finite log values.
MEMBERSHIP_SLACK = 1e-8

DEFAULT_POINTS = {1: 1024, 2: 256}
# Half-width per unit standard deviation when sampling a Gaussian.
WINDOW_SIGMAS = 12.0

# 2-d membership scans enumerate every midpoint-aligned pair only up to this
# many points per axis; larger grids fall back to a bounded offset family
# (all short offsets plus a deterministic stride sample of long ones).
EXHAUSTIVE_2D_LIMIT = 64
SHORT_OFFSET_2D = 16


def _cell_centered_axis(halfwidth: float, n: int) -> np.ndarray:
    h = 2.0 * halfwidth / n
    pos = (np.arange(n // 2) + 0.5) * h
    return np.concatenate([-pos[::-1], pos])


@dataclass(frozen=True)
class GriddedFunction:
    """Nonnegative even function sampled on a symmetric cell-centered grid."""

    dim: int
    halfwidth: float
    n: int
    values: np.ndarray

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ShapeMismatch("only dimensions 1 and 2 are gridded")
        if self.n < 16 or self.n & (self.n - 1):
            raise ShapeMismatch("points per axis must be a power of two, at least 16")
        v = np.asarray(self.values, dtype=float)
        want = (self.n,) if self.dim == 1 else (self.n, self.n)
        if v.shape != want:
            raise ShapeMismatch(f"values must have shape {want}")
        if v.min() < 0.0:
            raise ShapeMismatch("values must be nonnegative")
        flipped = v[::-1] if self.dim == 1 else v[::-1, ::-1]
        if not np.array_equal(v, flipped):
            raise ShapeMismatch("values must be exactly even under index reversal")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def h(self) -> float:
        return 2.0 * self.halfwidth / self.n

    @cached_property
    def axis(self) -> np.ndarray:
        ax = _cell_centered_axis(self.halfwidth, self.n)
        ax.setflags(write=False)
        return ax

    def mass(self) -> float:
        return float(self.values.sum() * self.h**self.dim)

    def covariance(self) -> np.ndarray:
        m = self.mass()
        if m <= 0.0:
            raise MassZero("covariance needs positive mass")
        w = self.values * (self.h**self.dim / m)
        if self.dim == 1:
            return np.array([[float(np.sum(self.axis**2 * w))]])
        xx = np.sum(self.axis[:, None] ** 2 * w)
        yy = np.sum(self.axis[None, :] ** 2 * w)
        xy = np.sum(self.axis[:, None] * self.axis[None, :] * w)
        return np.array([[xx, xy], [xy, yy]])

    def normalized(self) -> "GriddedFunction":
        m = self.mass()
        if m <= 0.0:
            raise MassZero("cannot normalize zero mass")
        return GriddedFunction(self.dim, self.halfwidth, self.n, self.values / m)

    def boundary_max(self) -> float:
        if self.dim == 1:
            return float(max(self.values[0], self.values[-1]))
        edge = np.concatenate(
            [self.values[0], self.values[-1], self.values[:, 0], self.values[:, -1]]
        )
        return float(edge.max())

    def decay_contained(self) -> bool:
        peak = float(self.values.max())
        return peak == 0.0 or self.boundary_max() < DECAY_RTOL * peak

    def same_grid(self, other: "GriddedFunction") -> bool:
        return (
            self.dim == other.dim
            and self.n == other.n
            and math.isclose(self.halfwidth, other.halfwidth, rel_tol=1e-12)
        )

    def to_json(self) -> str:
        return json.dumps(
            {
                "dim": self.dim,
                "halfwidth": self.halfwidth,
                "n": self.n,
                "values": self.values.tolist(),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "GriddedFunction":
        doc = json.loads(text)
        return cls(
            int(doc["dim"]),
            float(doc["halfwidth"]),
            int(doc["n"]),
            np.asarray(doc["values"], dtype=float),
        )


def _as_param_matrix(a, dim: int) -> np.ndarray:
    mat = np.asarray(a, dtype=float)
    if mat.ndim == 0:
        mat = mat.reshape(1, 1)
    if mat.shape != (dim, dim):
        raise ShapeMismatch("Gaussian parameter does not match the function dimension")
    return symmetrize(mat)


def sample_gaussian(a, halfwidth: float | None = None, points: int | None = None) -> GriddedFunction:
    """Sample g_A(x) = exp(-<Ax, x>/2); A must be PD so the window can hold it.

    The default window is 12 standard deviations of the widest principal
    direction. Raises GridTooSmall when g_A at the window edge along some
    axis exceeds 1e-12, since downstream convolution then leaks.
    """
    mat = np.asarray(a, dtype=float)
    dim = 1 if mat.ndim == 0 or mat.shape == (1, 1) else mat.shape[0]
    mat = _as_param_matrix(mat, dim)
    if not is_pd(mat):
        raise GridTooSmall("a Gaussian sample needs a PD parameter to fit a window")
    if halfwidth is None:
        halfwidth = WINDOW_SIGMAS / math.sqrt(float(np.linalg.eigvalsh(mat).min()))
    n = DEFAULT_POINTS[dim] if points is None else int(points)
    for j in range(dim):
        edge = math.exp(-0.5 * mat[j, j] * halfwidth**2)
        if edge > 1e-12:
            raise GridTooSmall("window too narrow for this Gaussian along an axis")
    ax = _cell_centered_axis(halfwidth, n)
    if dim == 1:
        vals = np.exp(-0.5 * mat[0, 0] * ax**2)
    else:
        q = (
            mat[0, 0] * ax[:, None] ** 2
            + 2.0 * mat[0, 1] * ax[:, None] * ax[None, :]
            + mat[1, 1] * ax[None, :] ** 2
        )
        vals = np.exp(-0.5 * q)
    return GriddedFunction(dim, halfwidth, n, _evenize(vals))


def _evenize(v: np.ndarray) -> np.ndarray:
    if v.ndim == 1:
        return 0.5 * (v + v[::-1])
    return 0.5 * (v + v[::-1, ::-1])


def _box_profile(ax: np.ndarray, h: float, a: float) -> np.ndarray:
    inside = np.abs(ax) + 0.5 * h <= a
    outside = np.abs(ax) - 0.5 * h >= a
    # Cells straddling the edge get midpoint coverage weight 1/2.
    return np.where(inside, 1.0, np.where(outside, 0.0, 0.5))


def sample_box(halfwidths, halfwidth: float | None = None, points: int | None = None) -> GriddedFunction:
    """Indicator of the centered box with the given per-axis halfwidths.

    The default window is 8 times the largest halfwidth, which puts the box
    edges exactly on cell boundaries for power-of-two grids, so the sampled
    mass is exact.
    """
    hw = np.atleast_1d(np.asarray(halfwidths, dtype=float))
    dim = hw.size
    if dim not in (1, 2):
        raise ShapeMismatch("boxes are gridded in dimensions 1 and 2")
    if np.any(hw <= 0):
        raise ShapeMismatch("box halfwidths must be positive")
    if halfwidth is None:
        halfwidth = 8.0 * float(hw.max())
    n = DEFAULT_POINTS[dim] if points is None else int(points)
    if halfwidth <= float(hw.max()):
        raise GridTooSmall("window must contain the box")
    ax = _cell_centered_axis(halfwidth, n)
    h = 2.0 * halfwidth / n
    if dim == 1:
        vals = _box_profile(ax, h, float(hw[0]))
    else:
        vals = np.outer(_box_profile(ax, h, float(hw[0])), _box_profile(ax, h, float(hw[1])))
    return GriddedFunction(dim, halfwidth, n, vals)


def sample_box_complement(halfwidths, halfwidth: float | None = None, points: int | None = None) -> GriddedFunction:
    """Indicator of the complement of a centered box, truncated to the window.

    Not integrable on its own; meaningful once multiplied by a Gaussian
    weight (scale_by_gaussian), which restores contained decay.
    """
    box = sample_box(halfwidths, halfwidth, points)
    return GriddedFunction(box.dim, box.halfwidth, box.n, 1.0 - box.values)


def sample_polytope_1d(normals, halfwidth: float | None = None, points: int | None = None) -> GriddedFunction:
    """Indicator of the symmetric 1-d polytope |a_j x| <= 1, an interval."""
    arr = np.atleast_1d(np.asarray(normals, dtype=float)).ravel()
    if arr.size == 0 or np.all(arr == 0.0):
        raise ShapeMismatch("at least one nonzero normal is required")
    return sample_box([1.0 / np.abs(arr).max()], halfwidth, points)


def scale_by_gaussian(f: GriddedFunction, a) -> GriddedFunction:
    """Pointwise product of f with the Gaussian sample g_a on f's grid."""
    mat = _as_param_matrix(a, f.dim)
    ax = f.axis
    if f.dim == 1:
        weight = np.exp(-0.5 * mat[0, 0] * ax**2)
    else:
        q = (
            mat[0, 0] * ax[:, None] ** 2
            + 2.0 * mat[0, 1] * ax[:, None] * ax[None, :]
            + mat[1, 1] * ax[None, :] ** 2
        )
        weight = np.exp(-0.5 * q)
    return GriddedFunction(f.dim, f.halfwidth, f.n, _evenize(f.values * weight))


@dataclass(frozen=True)
class Witness:
    """A midpoint triple violating the scanned inequality."""

    x: tuple
    midpoint: tuple
    y: tuple
    defect: float


@dataclass(frozen=True)
class MembershipResult:
    holds: bool
    witness: Witness | None

    def __bool__(self) -> bool:
        return self.holds


def _log_with_inf(v: np.ndarray) -> np.ndarray:
    out = np.full(v.shape, -np.inf)
    pos = v > 0.0
    out[pos] = np.log(v[pos])
    return out


def _slack_for(phi: np.ndarray) -> float:
    finite = phi[np.isfinite(phi)]
    scale = max(1.0, float(np.abs(finite).max())) if finite.size else 1.0
    return MEMBERSHIP_SLACK * scale


def _scan_1d(
    phi: np.ndarray, ax: np.ndarray, convex: bool, extra_slack: float = 0.0
) -> MembershipResult:
    n = phi.size
    slack = _slack_for(phi) + extra_slack
    for d in range(1, (n - 1) // 2 + 1):
        left = phi[: n - 2 * d]
        mid = phi[d : n - d]
        right = phi[2 * d :]
        avg = 0.5 * (left + right)
        # phi is never +inf, so avg is finite or -inf and inf-inf cannot occur.
        if convex:
            bad = (mid > avg + slack) & np.isfinite(avg)
        else:
            bad = (mid < avg - slack) & np.isfinite(left) & np.isfinite(right)
        if bad.any():
            i = int(np.argmax(bad))
            defect = float(abs(mid[i] - avg[i])) if np.isfinite(mid[i]) else math.inf
            return MembershipResult(
                False,
                Witness((float(ax[i]),), (float(ax[i + d]),), (float(ax[i + 2 * d]),), defect),
            )
    return MembershipResult(True, None)


def _offsets_2d(n: int):
    if n <= EXHAUSTIVE_2D_LIMIT:
        half = (n - 1) // 2
        for e1 in range(0, half + 1):
            lo = 1 if e1 == 0 else -half
            for e2 in range(lo, half + 1):
                if e1 == 0 and e2 <= 0:
                    continue
                yield e1, e2
        return
    half = (n - 1) // 2
    stride = max(1, (half - SHORT_OFFSET_2D) // 12)
    longs = list(range(SHORT_OFFSET_2D + 1, half + 1, stride))
    shorts = list(range(0, SHORT_OFFSET_2D + 1))
    e1s = shorts + longs
    for e1 in e1s:
        for e2 in set([*shorts, *longs, *[-e for e in shorts], *[-e for e in longs]]):
            if e1 == 0 and e2 <= 0:
                continue
            if e1 < 0:
                continue
            yield e1, e2


def _scan_2d(phi: np.ndarray, ax: np.ndarray, convex: bool) -> MembershipResult:
    n = phi.shape[0]
    slack = _slack_for(phi)
    for e1, e2 in _offsets_2d(n):
        a1, a2 = abs(e1), abs(e2)
        if 2 * a1 >= n or 2 * a2 >= n:
            continue
        if e2 >= 0:
            left = phi[: n - 2 * a1, : n - 2 * a2]
            mid = phi[a1 : n - a1, a2 : n - a2]
            right = phi[2 * a1 :, 2 * a2 :]
            c0, c1 = 0, 0
        else:
            left = phi[: n - 2 * a1, 2 * a2 :]
            mid = phi[a1 : n - a1, a2 : n - a2]
            right = phi[2 * a1 :, : n - 2 * a2]
            c0, c1 = 0, 2 * a2
        avg = 0.5 * (left + right)
        if convex:
            bad = (mid > avg + slack) & np.isfinite(avg)
        else:
            bad = (mid < avg - slack) & np.isfinite(left) & np.isfinite(right)
        if bad.any():
            i, j = np.unravel_index(int(np.argmax(bad)), bad.shape)
            p_lo = (float(ax[i + c0]), float(ax[j + c1]))
            p_mid = (float(ax[i + a1]), float(ax[j + c1 + (a2 if e2 >= 0 else -a2)]))
            p_hi = (float(ax[i + 2 * a1]), float(ax[j + c1 + (2 * a2 if e2 >= 0 else -2 * a2)]))
            mid_val = mid[i, j]
            defect = float(abs(mid_val - avg[i, j])) if np.isfinite(mid_val) else math.inf
            return MembershipResult(False, Witness(p_lo, p_mid, p_hi, defect))
    return MembershipResult(True, None)


def _shifted_log(f: GriddedFunction, a) -> np.ndarray:
    mat = _as_param_matrix(a, f.dim)
    ax = f.axis
    phi = _log_with_inf(f.values)
    if f.dim == 1:
        return phi + 0.5 * mat[0, 0] * ax**2
    q = (
        mat[0, 0] * ax[:, None] ** 2
        + 2.0 * mat[0, 1] * ax[:, None] * ax[None, :]
        + mat[1, 1] * ax[None, :] ** 2
    )
    return phi + 0.5 * q


def is_more_logconcave_than(f: GriddedFunction, a) -> MembershipResult:
    """Midpoint test: is log f + <ax, x>/2 concave over the grid?

    Scans every grid pair whose midpoint is a grid point (1-d exhaustively;
    2-d exhaustively up to 64 points per axis, then a bounded offset family).
    A zero of f between two positive samples refutes concavity; zeros at the
    ends never do.
    """
    phi = _shifted_log(f, a)
    if f.dim == 1:
        return _scan_1d(phi, f.axis, convex=False)
    return _scan_2d(phi, f.axis, convex=False)


def is_more_logconvex_than(f: GriddedFunction, a) -> MembershipResult:
    """Midpoint test for convexity of log f + <ax, x>/2; needs positivity."""
    if float(f.values.min()) <= 0.0:
        flat = np.argmin(f.values)
        idx = np.unravel_index(int(flat), f.values.shape)
        pt = tuple(float(f.axis[k]) for k in idx)
        return MembershipResult(False, Witness(pt, pt, pt, math.inf))
    phi = _shifted_log(f, a)
    if f.dim == 1:
        return _scan_1d(phi, f.axis, convex=True)
    return _scan_2d(phi, f.axis, convex=True)


def _full_convolution(f: GriddedFunction, g: GriddedFunction):
    """Linear convolution samples of f*g on the doubled grid."""
    if not f.same_grid(g):
        raise ShapeMismatch("convolution needs both functions on one grid")
    conv = signal.fftconvolve(f.values, g.values, mode="full") * f.h**f.dim
    conv = np.clip(conv, 0.0, None)
    k = np.arange(2 * f.n - 1)
    z = -2.0 * f.halfwidth + (k + 1) * f.h
    return z, conv


def _leak_fraction(z: np.ndarray, conv: np.ndarray, keep_halfwidth: float) -> float:
    if conv.ndim == 1:
        inside = np.abs(z) <= keep_halfwidth
        total = conv.sum()
        return 0.0 if total == 0.0 else float(conv[~inside].sum() / total)
    inside = np.abs(z) <= keep_halfwidth
    mask = np.outer(inside, inside)
    total = conv.sum()
    return 0.0 if total == 0.0 else float(conv[~mask].sum() / total)


def conv_step(f: GriddedFunction) -> GriddedFunction:
    """One doubling step: 2^{d/2} (f * f)(sqrt(2) x), back on f's grid.

    Mass squares and covariance is preserved up to quadrature error: at
    default resolution that error is near machine precision for smooth
    inputs and a few 1e-6 relative for indicator edges (the cubic respray
    rings at kinks; anything less than cubic drifts covariance far more).
    Mass escaping past sqrt(2) L, beyond 1e-9 of the convolution, raises
    AliasingDetected, since the window cannot represent the result.
    """
    if not f.decay_contained():
        raise AliasingDetected("boundary values too large to convolve safely")
    z, conv = _full_convolution(f, f)
    if _leak_fraction(z, conv, SQRT2 * f.halfwidth) > LEAK_RTOL:
        raise AliasingDetected("convolution mass leaked past the window")
    target = SQRT2 * f.axis
    if f.dim == 1:
        spline = sp_interpolate.CubicSpline(z, conv)
        out = SQRT2 * spline(target)
    else:
        spline = sp_interpolate.RectBivariateSpline(z, z, conv, kx=3, ky=3)
        out = 2.0 * spline(target, target)
    out = np.clip(out, 0.0, None)
    # Zero the FFT roundoff floor (~1e-16 of the peak): it is not data, and
    # downstream weighted integrals would amplify it. Mass moves < 1e-14.
    if out.size:
        out[out < 1e-15 * out.max()] = 0.0
    return GriddedFunction(f.dim, f.halfwidth, f.n, _evenize(out))


# Relative floor applied to convolve_pair output: FFT roundoff is absolute
# (~1e-16 of the peak), so samples below this are noise, and taking their log
# would fill the tail with spurious jitter during membership scans.
TAIL_FLOOR_RTOL = 1e-8


def convolve_pair(f: GriddedFunction, g: GriddedFunction) -> GriddedFunction:
    """Plain convolution f*g resampled on the common grid (no rescaling).

    Intended for class-membership checks of the convolution, so values below
    1e-8 of the peak are zeroed: below that, FFT roundoff dominates and log
    values are meaningless. Mass is therefore exact only to ~1e-7 relative.
    """
    z, conv = _full_convolution(f, g)
    if _leak_fraction(z, conv, f.halfwidth) > LEAK_RTOL:
        raise AliasingDetected("convolution mass leaked past the window")
    if f.dim == 1:
        out = sp_interpolate.CubicSpline(z, conv)(f.axis)
    else:
        out = sp_interpolate.RectBivariateSpline(z, z, conv, kx=3, ky=3)(f.axis, f.axis)
    out = np.clip(out, 0.0, None)
    out[out < TAIL_FLOOR_RTOL * out.max()] = 0.0
    return GriddedFunction(f.dim, f.halfwidth, f.n, _evenize(out))


def gaussian_match(f: GriddedFunction) -> GriddedFunction:
    """Unit-mass Gaussian on f's grid with f's covariance."""
    cov = f.covariance()
    if f.dim == 1:
        a = np.array([[1.0 / cov[0, 0]]])
    else:
        a = np.linalg.inv(cov)
    ax = f.axis
    if f.dim == 1:
        vals = np.exp(-0.5 * a[0, 0] * ax**2)
    else:
        q = (
            a[0, 0] * ax[:, None] ** 2
            + 2.0 * a[0, 1] * ax[:, None] * ax[None, :]
            + a[1, 1] * ax[None, :] ** 2
        )
        vals = np.exp(-0.5 * q)
    g = GriddedFunction(f.dim, f.halfwidth, f.n, _evenize(vals))
    return g.normalized()


def l1_distance(f: GriddedFunction, g: GriddedFunction) -> float:
    if not f.same_grid(g):
        raise ShapeMismatch("L1 distance needs a common grid")
    return float(np.abs(f.values - g.values).sum() * f.h**f.dim)


@dataclass(frozen=True)
class FlowState:
    """Snapshot of the renormalized doubling flow."""

    current: tuple[GriddedFunction, ...]
    iteration: int
    covariances: tuple[tuple[np.ndarray, ...], ...]
    l1_to_gaussian: tuple[tuple[float, ...], ...]
    bl_values: tuple[float, ...]


def clt_flow(fs, iters: int, bl_fn=None) -> FlowState:
    """Iterate conv_step with unit-mass renormalization on a tuple of functions.

    Records per-iteration covariances and L1 distances to the moment-matched
    Gaussian (iteration 0 is the normalized input). bl_fn, when given, is
    called with the current tuple after every recording and its values are
    collected; use it to track a functional along the flow.
    """
    current = tuple(f.normalized() for f in fs)
    covs = [tuple(f.covariance() for f in current)]
    dists = [tuple(l1_distance(f, gaussian_match(f)) for f in current)]
    bl_values = [] if bl_fn is None else [float(bl_fn(current))]
    for _ in range(iters):
        current = tuple(conv_step(f).normalized() for f in current)
        covs.append(tuple(f.covariance() for f in current))
        dists.append(tuple(l1_distance(f, gaussian_match(f)) for f in current))
        if bl_fn is not None:
            bl_values.append(float(bl_fn(current)))
    return FlowState(current, iters, tuple(covs), tuple(dists), tuple(bl_values))


def _log_linear_eval(f: GriddedFunction, points: np.ndarray) -> np.ndarray:
    """log f at arbitrary points by linear interpolation of log values.

    Linear interpolation preserves midpoint concavity and convexity of the
    sampled sequence exactly, unlike splines, which ring at kinks. Outside
    the grid, or past a zero sample, the value is -inf.
    """
    if f.dim != 1:
        raise DimensionTooLarge("log-linear evaluation is one-dimensional")
    phi = _log_with_inf(f.values)
    ax = f.axis
    out = np.full(points.shape, -np.inf)
    inside = (points >= ax[0]) & (points <= ax[-1])
    idx = np.clip(np.searchsorted(ax, points[inside]) - 1, 0, f.n - 2)
    x0 = ax[idx]
    t = (points[inside] - x0) / f.h
    left = phi[idx]
    right = phi[idx + 1]
    vals = np.where(
        t <= 0.0, left, np.where(t >= 1.0, right, left * (1.0 - t) + right * t)
    )
    out[inside] = vals
    return out


def product_split_check(
    f1: GriddedFunction,
    f2: GriddedFunction,
    a1,
    a2,
    x: float,
    mode: str = "logconcave",
) -> MembershipResult:
    """Membership test for y -> f1((x+y)/sqrt2) * f2((x-y)/sqrt2).

    Checks the product slice against the averaged Gaussian parameter
    (a1+a2)/2, in log-concave or log-convex mode. One-dimensional only:
    the slice is sampled on f1's grid through log-linear evaluation, which
    is free of ringing, but scallops each log between nodes by up to an
    eighth of its largest second difference; the scan slack is widened by
    that budget so equality cases (Gaussian against its own parameter) are
    not refuted by interpolation error. Genuine violations grow with the
    square of the witness separation and clear the budget at a few cells.
    """
    if f1.dim != 1 or f2.dim != 1:
        raise DimensionTooLarge("the split test is one-dimensional")
    if mode not in ("logconcave", "logconvex"):
        raise ShapeMismatch("mode must be 'logconcave' or 'logconvex'")
    y = f1.axis
    phi = _log_linear_eval(f1, (x + y) / SQRT2) + _log_linear_eval(f2, (x - y) / SQRT2)
    a_avg = 0.5 * (float(np.asarray(a1).reshape(())) + float(np.asarray(a2).reshape(())))
    phi = phi + 0.5 * a_avg * y**2
    if mode == "logconvex" and not np.all(np.isfinite(phi)):
        j = int(np.argmin(np.isfinite(phi)))
        pt = (float(y[j]),)
        return MembershipResult(False, Witness(pt, pt, pt, math.inf))
    budget = _interp_budget(f1) + _interp_budget(f2)
    return _scan_1d(phi, y, convex=(mode == "logconvex"), extra_slack=budget)


def _interp_budget(f: GriddedFunction) -> float:
    """Worst-case log-linear interpolation error: |phi''| h^2 / 8 via Δ²."""
    phi = _log_with_inf(f.values)
    with np.errstate(invalid="ignore"):
        d2 = phi[:-2] - 2.0 * phi[1:-1] + phi[2:]
    finite = np.isfinite(d2)
    return float(np.abs(d2[finite]).max() / 8.0) if finite.any() else 0.0
