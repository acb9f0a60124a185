"""Closed-form Gaussian ratios and their constrained infima.

The central quantity is the ratio of a correlated Gaussian integral over
centered Gaussian inputs g_B(x) = exp(-<Bx, x>/2) against the product of
their marginal integrals. Whenever the problem's base weights normalize
to probability measures (Qbar and every Q_i positive definite) the ratio
is reported in probability form, so that the decoupled point B_i = Q_i
gives exactly 1; otherwise the raw integral ratio is returned. All the
inequality checks built on top are invariant under that normalization.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .errors import (
    ConstraintViolated,
    InfeasibleBounds,
    NotPositiveDefinite,
    ShapeMismatch,
)
from .linalg import (
    BlockStructure,
    CovarianceBlocks,
    is_pd,
    is_psd,
    logdet_pd,
    spd_inverse,
    sqrt_psd,
    symmetrize,
)

LOG_2PI = math.log(2.0 * math.pi)

CONVERGED = "converged"
MAX_ITERATIONS = "max_iterations"
DIVERGENT = "divergent"

# Below this ratio, with the argmin still growing, the infimum is declared divergent.
DIVERGENCE_VALUE = 1e-8


@dataclass(frozen=True)
class BLProblem:
    """Quadratic coupling Q, block weights Q_i, and exponents c_i.

    Exactly one of q / qbar is authoritative at construction; the other is
    derived through qbar = q + oplus_i c_i q_i. Each q_i must be PSD.
    """

    blocks: BlockStructure
    qi: tuple[np.ndarray, ...]
    q: np.ndarray
    qbar: np.ndarray

    @classmethod
    def from_q(cls, blocks: BlockStructure, q, qi) -> "BLProblem":
        qmat = symmetrize(q)
        qis = cls._check_qi(blocks, qi)
        qbar = qmat + blocks.direct_sum(qis, weights="c")
        return cls(blocks, qis, qmat, symmetrize(qbar))

    @classmethod
    def from_qbar(cls, blocks: BlockStructure, qbar, qi) -> "BLProblem":
        qbmat = symmetrize(qbar)
        qis = cls._check_qi(blocks, qi)
        q = qbmat - blocks.direct_sum(qis, weights="c")
        return cls(blocks, qis, symmetrize(q), qbmat)

    @classmethod
    def gci_instance(cls, cb: CovarianceBlocks) -> "BLProblem":
        """Two-block unit-exponent problem from a covariance: Qbar and Q_i are
        the inverses of the joint and marginal covariances."""
        blocks = BlockStructure((cb.n1, cb.n2), (1.0, 1.0))
        qi = (spd_inverse(cb.s11), spd_inverse(cb.s22))
        return cls.from_qbar(blocks, spd_inverse(cb.sigma), qi)

    @staticmethod
    def _check_qi(blocks: BlockStructure, qi) -> tuple[np.ndarray, ...]:
        mats = tuple(symmetrize(m) for m in qi)
        if len(mats) != blocks.m:
            raise ShapeMismatch("one weight matrix per block is required")
        for mat, size in zip(mats, blocks.sizes):
            if mat.shape != (size, size):
                raise ShapeMismatch("weight matrix size does not match its block")
            if not is_psd(mat):
                raise NotPositiveDefinite("block weights must be PSD")
        return mats

    @property
    def normalizable(self) -> bool:
        return is_pd(self.qbar) and all(is_pd(m) for m in self.qi)

    def log_norm_const(self) -> float:
        """Log of the probability normalization, 0 when base weights diverge."""
        if not self.normalizable:
            return 0.0
        cn = sum(ci * ni for ci, ni in zip(self.blocks.c, self.blocks.sizes))
        out = 0.5 * (cn - self.blocks.total_dim) * LOG_2PI
        out += 0.5 * logdet_pd(self.qbar)
        out -= sum(
            0.5 * ci * logdet_pd(m) for ci, m in zip(self.blocks.c, self.qi)
        )
        return out

    def to_json(self) -> str:
        return json.dumps(
            {
                "sizes": list(self.blocks.sizes),
                "c": list(self.blocks.c),
                "q": self.q.tolist(),
                "qi": [m.tolist() for m in self.qi],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "BLProblem":
        doc = json.loads(text)
        blocks = BlockStructure(tuple(doc["sizes"]), tuple(doc["c"]))
        qi = [np.asarray(m, dtype=float) for m in doc["qi"]]
        if "q" in doc and "qbar" in doc:
            raise ShapeMismatch("exactly one of q and qbar may be given")
        if "q" in doc:
            return cls.from_q(blocks, np.asarray(doc["q"], dtype=float), qi)
        if "qbar" in doc:
            return cls.from_qbar(blocks, np.asarray(doc["qbar"], dtype=float), qi)
        raise ShapeMismatch("one of q and qbar is required")


@dataclass(frozen=True)
class GaussianTuple:
    """One Gaussian parameter per block, in one of two conventions.

    Convention "A": shifted parameters, feasible when A_i is PSD and
    A_i + Q_i is PD. Convention "B": absolute parameters, feasible when
    B_i is PD and B_i - Q_i is PSD.
    """

    mats: tuple[np.ndarray, ...]
    convention: str = "A"

    def __post_init__(self):
        if self.convention not in ("A", "B"):
            raise ShapeMismatch("convention must be 'A' or 'B'")
        object.__setattr__(self, "mats", tuple(symmetrize(m) for m in self.mats))

    def b_mats(self, p: BLProblem) -> list[np.ndarray]:
        """Absolute parameters B_i for problem p."""
        if len(self.mats) != p.blocks.m:
            raise ShapeMismatch("tuple length does not match the block count")
        if self.convention == "B":
            return list(self.mats)
        return [a + q for a, q in zip(self.mats, p.qi)]

    def validate(self, p: BLProblem) -> None:
        bs = self.b_mats(p)
        if self.convention == "A":
            for a in self.mats:
                if not is_psd(a):
                    raise ConstraintViolated("A parameters must be PSD")
            for b in bs:
                if not is_pd(b):
                    raise ConstraintViolated("A_i + Q_i must be PD")
        else:
            for b, q in zip(bs, p.qi):
                if not is_pd(b):
                    raise ConstraintViolated("B parameters must be PD")
                if not is_psd(b - q):
                    raise ConstraintViolated("B_i - Q_i must be PSD")


def _log_ratio_from_b(p: BLProblem, b_mats) -> float:
    """Log of the Gaussian ratio given absolute block parameters.

    Returns +inf when the coupled quadratic form is not PD (the joint
    integral diverges). Requires each B_i PD for the marginals to exist.
    """
    cn = sum(ci * ni for ci, ni in zip(p.blocks.c, p.blocks.sizes))
    total = 0.5 * (p.blocks.total_dim - cn) * LOG_2PI
    for ci, b in zip(p.blocks.c, b_mats):
        if not is_pd(b):
            return math.inf
        total += 0.5 * ci * logdet_pd(b)
    coupled = p.q + p.blocks.direct_sum(b_mats, weights="c")
    if not is_pd(coupled):
        return math.inf
    total -= 0.5 * logdet_pd(coupled)
    return total + p.log_norm_const()


def gaussian_ratio(p: BLProblem, g: GaussianTuple, validate: bool = True) -> float:
    """Ratio of the coupled Gaussian integral to the product of marginals.

    In probability form when the problem normalizes (see module docstring),
    so the GCI decoupled point returns exactly 1. Returns +inf when the
    coupled quadratic form fails to be PD.
    """
    if validate:
        g.validate(p)
    return float(np.exp(_log_ratio_from_b(p, g.b_mats(p))))


def ratio_via_sqrt_form(cb: CovarianceBlocks, a_mats) -> float:
    """Same ratio on a covariance instance, via symmetric square roots.

    Evaluates sqrt(prod det(Id + sqrt(A_i) S_i sqrt(A_i)) / det(Id + sqrt(A) S sqrt(A)))
    with A the block-diagonal sum. Agrees with gaussian_ratio on the matching
    problem to rounding; the two routes share no determinant identities.
    """
    a1, a2 = (symmetrize(m) for m in a_mats)
    for a in (a1, a2):
        if not is_psd(a):
            raise ConstraintViolated("A parameters must be PSD")
    blocks = BlockStructure((cb.n1, cb.n2), (1.0, 1.0))
    roots = [sqrt_psd(a1), sqrt_psd(a2)]
    logs = 0.0
    for root, marg in zip(roots, (cb.s11, cb.s22)):
        logs += logdet_pd(np.eye(root.shape[0]) + root @ marg @ root)
    big_root = blocks.direct_sum(roots)
    logs -= logdet_pd(np.eye(cb.dim) + big_root @ cb.sigma @ big_root)
    return float(np.exp(0.5 * logs))


@dataclass(frozen=True)
class TracePoint:
    iteration: int
    value: float
    grad_norm: float
    argmin_norm: float


@dataclass(frozen=True)
class OptimizationResult:
    value: float
    argmin: GaussianTuple
    trace: tuple[TracePoint, ...]
    status: str


def _psd_part(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(symmetrize(m))
    return (v * np.clip(w, 0.0, None)) @ v.T


def _project_interval(c, lower, upper):
    """Clamp a symmetric matrix into [lower, upper] by eigenvalue projection.

    Exact for commuting bounds (all 1-d blocks in particular); otherwise a
    feasible-direction heuristic applied after every optimizer step.
    """
    x = symmetrize(c)
    if lower is not None:
        x = lower + _psd_part(x - lower)
    if upper is not None:
        x = upper - _psd_part(upper - x)
    return x


def _tri_indices(n):
    return np.tril_indices(n)


def _vec_to_mats(theta, sizes, to_matrix):
    mats, pos = [], 0
    for n in sizes:
        k = n * (n + 1) // 2
        mats.append(to_matrix(theta[pos : pos + k], n))
        pos += k
    return mats


def _theta_dim(sizes):
    return sum(n * (n + 1) // 2 for n in sizes)


def _lower_tri(vals, n):
    mat = np.zeros((n, n))
    mat[_tri_indices(n)] = vals
    return mat


def _sym_from_vec(vals, n):
    mat = np.zeros((n, n))
    mat[_tri_indices(n)] = vals
    return symmetrize(mat + np.tril(mat, -1).T)


def infimum_gaussian(
    p: BLProblem,
    bounds=None,
    restarts: int = 4,
    tol: float = 1e-9,
    max_iter: int = 500,
) -> OptimizationResult:
    """Numerically minimize the Gaussian ratio over the admissible tuples.

    Parameters
    ----------
    p : BLProblem
    bounds : optional (lower, upper) pair of per-block matrix lists.
        When given, the search runs over B tuples with lower_i <= B_i <= upper_i
        (either side may be None). Without bounds the search runs over the
        problem's own class, parameterized as A_i = L_i L_i^T with A_i PSD.
    restarts : number of random starts added to the canonical zero and
        identity starts. All starts are deterministic.
    tol : relative function tolerance passed to the quasi-Newton loop.

    Returns
    -------
    OptimizationResult with the best value found, its argmin tuple, a
    per-iteration trace, and a status string: "converged",
    "max_iterations", or "divergent" (ratio collapsed below 1e-8 with the
    argmin still growing, so the infimum is a limit and not attained).
    """
    sizes = p.blocks.sizes
    ndim = _theta_dim(sizes)

    if bounds is not None:
        lower, upper = bounds
        lower = None if lower is None else [symmetrize(m) for m in lower]
        upper = None if upper is None else [symmetrize(m) for m in upper]
        if lower is not None and upper is not None:
            for lo, up in zip(lower, upper):
                if not is_psd(up - lo):
                    raise InfeasibleBounds("upper bound is not above the lower bound")

        def theta_to_b(theta):
            mats = _vec_to_mats(theta, sizes, _sym_from_vec)
            return [
                _project_interval(
                    m,
                    None if lower is None else lower[i],
                    None if upper is None else upper[i],
                )
                for i, m in enumerate(mats)
            ]

        def start_points(rng):
            pts = [np.zeros(ndim)]
            if lower is not None:
                pts.append(np.concatenate([m[_tri_indices(m.shape[0])] for m in lower]))
            if upper is not None:
                pts.append(np.concatenate([m[_tri_indices(m.shape[0])] for m in upper]))
            if lower is not None and upper is not None:
                mid = [0.5 * (lo + up) for lo, up in zip(lower, upper)]
                pts.append(np.concatenate([m[_tri_indices(m.shape[0])] for m in mid]))
            for _ in range(restarts):
                pts.append(rng.standard_normal(ndim))
            return pts

        def argmin_tuple(theta):
            return GaussianTuple(tuple(theta_to_b(theta)), convention="B")

    else:

        def theta_to_b(theta):
            ls = _vec_to_mats(theta, sizes, _lower_tri)
            return [l @ l.T + q for l, q in zip(ls, p.qi)]

        def start_points(rng):
            pts = [np.zeros(ndim)]
            eye = np.concatenate(
                [np.eye(n)[_tri_indices(n)] for n in sizes]
            )
            pts.append(eye)
            for _ in range(restarts):
                pts.append(0.5 * rng.standard_normal(ndim))
            return pts

        def argmin_tuple(theta):
            ls = _vec_to_mats(theta, sizes, _lower_tri)
            return GaussianTuple(tuple(l @ l.T for l in ls), convention="A")

    big = 1e9

    def objective(theta):
        val = _log_ratio_from_b(p, theta_to_b(theta))
        return big if math.isinf(val) else val

    def b_norm(theta):
        return float(np.sqrt(sum(np.sum(b * b) for b in theta_to_b(theta))))

    rng = np.random.default_rng(1234)
    best = None
    for x0 in start_points(rng):
        trace = []
        counter = {"it": -1}

        def record(xk):
            counter["it"] += 1
            val = objective(xk)
            eps = 1e-6 * (1.0 + np.abs(xk))
            grad = optimize.approx_fprime(xk, objective, eps)
            trace.append(
                TracePoint(counter["it"], float(np.exp(min(val, 700.0))), float(np.linalg.norm(grad)), b_norm(xk))
            )

        record(np.asarray(x0, dtype=float))
        res = optimize.minimize(
            objective,
            x0,
            method="L-BFGS-B",
            callback=record,
            options={"ftol": tol, "gtol": 1e-8, "maxiter": max_iter, "eps": 1e-6},
        )
        run_val = objective(res.x)
        if best is None or run_val < best["val"]:
            best = {"val": run_val, "x": res.x, "trace": trace, "res": res}

    value = float(np.exp(min(best["val"], 700.0)))
    status = CONVERGED if best["res"].success else MAX_ITERATIONS
    trace = best["trace"]
    if value < DIVERGENCE_VALUE:
        norms = [t.argmin_norm for t in trace[-5:]]
        if len(norms) >= 2 and norms[-1] >= norms[0]:
            status = DIVERGENT
    return OptimizationResult(value, argmin_tuple(best["x"]), tuple(trace), status)
