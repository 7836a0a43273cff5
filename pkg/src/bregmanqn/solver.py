"""Quasi-Newton driver: line searches, the iteration loop, and
affine-transformation tooling for invariance experiments."""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import (
    CurvatureViolation,
    InvalidParameter,
    LineSearchFail,
    SingularTransform,
)
from .pdlinalg import PDMatrix
from .potentials import log_potential
from .updates import SecantPair, UpdateFamily
from .sparse import is_chordal, sparse_update

__all__ = [
    "Objective",
    "LineSearchParams",
    "SolverConfig",
    "IterationRecord",
    "SolverTrace",
    "InvarianceReport",
    "check_gradient",
    "wolfe_line_search",
    "minimize",
    "transform_problem",
    "invariance_check",
]

CURVATURE_SKIP_RTOL = 1e-12


@dataclass
class Objective:
    """Smooth function with its gradient.

    minimizer, when known analytically, is carried for tests and result
    reporting only; nothing in the solver reads it.
    """

    n: int
    value: callable
    gradient: callable
    minimizer: np.ndarray | None = None
    name: str = ""

    def __post_init__(self):
        if self.n < 1:
            raise InvalidParameter("objective dimension must be at least 1")
        if self.minimizer is not None:
            self.minimizer = np.asarray(self.minimizer, dtype=float)


def check_gradient(obj, x, h=1e-6):
    """Max relative deviation between the gradient and central differences."""
    x = np.asarray(x, dtype=float)
    g = obj.gradient(x)
    fd = np.empty_like(g)
    for i in range(obj.n):
        e = np.zeros(obj.n)
        e[i] = h
        fd[i] = (obj.value(x + e) - obj.value(x - e)) / (2.0 * h)
    scale = np.abs(g) + np.abs(fd) + 1.0
    return float(np.abs(g - fd).max() / scale.max())


@dataclass
class LineSearchParams:
    """Wolfe constants; method "exact" minimizes along the ray instead."""

    c1: float = 1e-4
    c2: float = 0.9
    alpha_init: float = 1.0
    max_trials: int = 60
    method: str = "wolfe"

    def __post_init__(self):
        if not (0.0 < self.c1 < self.c2 < 1.0):
            raise InvalidParameter("need 0 < c1 < c2 < 1")
        if self.alpha_init <= 0.0:
            raise InvalidParameter("alpha_init must be positive")
        if self.max_trials < 1:
            raise InvalidParameter("max_trials must be at least 1")
        if self.method not in ("wolfe", "exact"):
            raise InvalidParameter(f"unknown line search method {self.method!r}")


@dataclass
class SolverConfig:
    family: UpdateFamily | str
    line_search: LineSearchParams = field(default_factory=LineSearchParams)
    grad_tol: float = 1e-8
    max_iter: int = 200
    skip_policy: str = "skip"
    sparsity: tuple | None = None  # (pattern, algorithm, T)

    def __post_init__(self):
        # a bare string uses the same grammar as the CLI --family flag
        if isinstance(self.family, str):
            self.family = UpdateFamily.from_string(self.family)
        if self.grad_tol <= 0.0:
            raise InvalidParameter("grad_tol must be positive")
        if self.max_iter < 1:
            raise InvalidParameter("max_iter must be at least 1")
        if self.skip_policy not in ("skip", "error"):
            raise InvalidParameter(f"unknown skip policy {self.skip_policy!r}")
        if self.sparsity is not None:
            if self.family.kind not in ("bfgs", "vbfgs"):
                raise InvalidParameter(
                    "sparse updates maintain B directly; use a bfgs or vbfgs family"
                )
            pattern, algorithm, T = self.sparsity
            if algorithm not in (1, 2):
                raise InvalidParameter("sparsity algorithm must be 1 or 2")
            if T < 1:
                raise InvalidParameter("sparsity T must be at least 1")


@dataclass
class IterationRecord:
    k: int
    x: np.ndarray
    f: float
    grad_norm: float
    alpha: float | None
    det_b: float
    sty: float | None
    skipped: bool
    b: np.ndarray | None = None


@dataclass
class SolverTrace:
    records: list
    status: str  # Converged | MaxIter | LineSearchFail

    @property
    def final(self):
        return self.records[-1]

    @property
    def iterations(self):
        return len(self.records) - 1

    def grad_norms(self):
        return np.array([r.grad_norm for r in self.records])

    def fs(self):
        return np.array([r.f for r in self.records])


def wolfe_line_search(obj, x, d, params):
    """Step length satisfying the (weak) Wolfe conditions.

    Bisection with doubling: an Armijo failure caps the bracket from
    above, a curvature failure raises it from below.  Deterministic, so
    two runs related by a linear change of variables take identical
    branches until float noise separates them.
    """
    x = np.asarray(x, dtype=float)
    d = np.asarray(d, dtype=float)
    f0 = float(obj.value(x))
    g0d = float(obj.gradient(x) @ d)
    if not np.isfinite(g0d) or g0d >= 0.0:
        raise LineSearchFail("search direction is not a descent direction")

    lo, hi = 0.0, np.inf
    t = float(params.alpha_init)
    for _ in range(params.max_trials):
        ft = float(obj.value(x + t * d))
        if not np.isfinite(ft) or ft > f0 + params.c1 * t * g0d:
            hi = t
            t = 0.5 * (lo + hi)
            continue
        gtd = float(obj.gradient(x + t * d) @ d)
        if gtd < params.c2 * g0d:
            lo = t
            t = 2.0 * t if np.isinf(hi) else 0.5 * (lo + hi)
            continue
        return t
    raise LineSearchFail(f"no Wolfe step within {params.max_trials} trials")


def _exact_line_search(obj, x, d, params):
    """Minimize f along x + alpha*d by solving dphi(alpha) = 0."""
    x = np.asarray(x, dtype=float)
    d = np.asarray(d, dtype=float)

    def dphi(a):
        return float(obj.gradient(x + a * d) @ d)

    d0 = dphi(0.0)
    if not np.isfinite(d0) or d0 >= 0.0:
        raise LineSearchFail("search direction is not a descent direction")
    hi = float(params.alpha_init)
    dhi = dphi(hi)
    trials = 0
    while dhi < 0.0:
        hi *= 2.0
        dhi = dphi(hi)
        trials += 1
        if trials >= params.max_trials or not np.isfinite(dhi):
            raise LineSearchFail("could not bracket a minimum along the ray")
    if dhi == 0.0:
        return hi
    return float(brentq(dphi, 0.0, hi, xtol=1e-14, rtol=8.9e-16, maxiter=200))


def _take_step(obj, x, d, params):
    if params.method == "exact":
        return _exact_line_search(obj, x, d, params)
    return wolfe_line_search(obj, x, d, params)


def _safe_exp_det(family, state):
    with np.errstate(over="ignore"):
        return float(family.det_b(state))


def minimize(obj, x0, B0=None, config=None, record_b=False):
    """Quasi-Newton iteration x_{k+1} = x_k - alpha_k B_k^{-1} grad f(x_k).

    Stops when the gradient norm reaches config.grad_tol or the budget
    runs out; a failed line search ends the run with its partial trace.
    record_b stores each B_k densely (n^2 per iterate) for invariance
    comparisons.
    """
    if config is None:
        config = SolverConfig(UpdateFamily("bfgs"))
    x = np.asarray(x0, dtype=float).copy()
    if x.shape != (obj.n,):
        raise InvalidParameter(f"x0 shape {x.shape} does not match n={obj.n}")
    if B0 is None:
        B0 = PDMatrix.identity(obj.n)
    family = config.family

    sparse_cfg = None
    if config.sparsity is not None:
        pattern, algorithm, T = config.sparsity
        tree = is_chordal(pattern)
        pot = family.potential if family.potential is not None else log_potential()
        sparse_cfg = (pattern, tree, pot, algorithm, T)

    state = family.initial_state(B0)
    g = np.asarray(obj.gradient(x), dtype=float)
    gn = float(np.linalg.norm(g))
    records = [
        IterationRecord(
            k=0,
            x=x.copy(),
            f=float(obj.value(x)),
            grad_norm=gn,
            alpha=None,
            det_b=_safe_exp_det(family, state),
            sty=None,
            skipped=False,
            b=family.b_matrix(state).copy() if record_b else None,
        )
    ]
    status = None
    for k in range(config.max_iter):
        if gn <= config.grad_tol:
            status = "Converged"
            break
        d = family.direction(state, g)
        try:
            alpha = _take_step(obj, x, d, config.line_search)
        except LineSearchFail:
            status = "LineSearchFail"
            break
        x_new = x + alpha * d
        g_new = np.asarray(obj.gradient(x_new), dtype=float)
        s = x_new - x
        y = g_new - g
        sty = float(s @ y)
        skipped = False
        scale = float(np.linalg.norm(s) * np.linalg.norm(y))
        if sty <= CURVATURE_SKIP_RTOL * scale:
            if config.skip_policy == "error":
                raise CurvatureViolation(
                    f"s'y = {sty:.3e} at iteration {k} with skip_policy='error'"
                )
            skipped = True
        else:
            pair = SecantPair(s, y)
            if sparse_cfg is not None:
                pattern, tree, pot, algorithm, T = sparse_cfg
                state = sparse_update(
                    state, pair, pattern, tree, pot, algorithm, T
                ).b_out
            else:
                state = family.apply(state, pair)
        x, g, gn = x_new, g_new, float(np.linalg.norm(g_new))
        records.append(
            IterationRecord(
                k=k + 1,
                x=x.copy(),
                f=float(obj.value(x)),
                grad_norm=gn,
                alpha=float(alpha),
                det_b=_safe_exp_det(family, state),
                sty=sty,
                skipped=skipped,
                b=family.b_matrix(state).copy() if record_b else None,
            )
        )
    if status is None:
        status = "Converged" if gn <= config.grad_tol else "MaxIter"
    return SolverTrace(records=records, status=status)


def transform_problem(obj, T):
    """Change of variables x~ = T x: returns f~(x~) = f(T^{-1} x~).

    The gradient transforms as (T')^{-1} grad f(T^{-1} x~), so a run on
    the transformed problem mirrors the original in the new coordinates.
    """
    T = np.asarray(T, dtype=float)
    if T.shape != (obj.n, obj.n):
        raise InvalidParameter(f"transform shape {T.shape} does not match n={obj.n}")
    cond = np.linalg.cond(T)
    if not np.isfinite(cond) or cond >= 1e12:
        raise SingularTransform(f"transform condition number {cond:.3e} too large")

    def value(xt):
        return obj.value(np.linalg.solve(T, np.asarray(xt, dtype=float)))

    def gradient(xt):
        gx = obj.gradient(np.linalg.solve(T, np.asarray(xt, dtype=float)))
        return np.linalg.solve(T.T, gx)

    minimizer = None if obj.minimizer is None else T @ obj.minimizer
    name = f"{obj.name}~" if obj.name else ""
    return Objective(obj.n, value, gradient, minimizer=minimizer, name=name)


@dataclass
class InvarianceReport:
    """Deviation between a run and its image under x -> Tx.

    x_dev is max_k ||x~_k - T x_k|| / (1 + ||x_k||); b_dev is
    max_k ||T' B~_k T - B_k||_F / (1 + ||B_k||_F); both over the first
    k_used + 1 iterates.
    """

    x_dev: float
    b_dev: float
    k_used: int
    tol: float

    @property
    def invariant(self):
        return self.x_dev <= self.tol and self.b_dev <= self.tol


def invariance_check(obj, x0, B0, T, config, k_max=20, tol=1e-6):
    """Run the solver on a problem and on its affine image, compare.

    The transformed run starts at T x0 with B0 mapped through the
    congruence (T')^{-1} B0 T^{-1}; deviations beyond tol mean the update
    family is not invariant under this T.
    """
    T = np.asarray(T, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    if B0 is None:
        B0 = PDMatrix.identity(obj.n)
    obj_t = transform_problem(obj, T)
    b0t = np.linalg.solve(T.T, np.linalg.solve(T.T, B0.matrix.T).T)
    B0_t = PDMatrix.from_matrix(0.5 * (b0t + b0t.T))

    trace = minimize(obj, x0, B0, config, record_b=True)
    trace_t = minimize(obj_t, T @ x0, B0_t, config, record_b=True)

    k_used = min(len(trace.records), len(trace_t.records), k_max + 1) - 1
    x_dev = 0.0
    b_dev = 0.0
    for k in range(k_used + 1):
        r, rt = trace.records[k], trace_t.records[k]
        x_dev = max(
            x_dev,
            float(np.linalg.norm(rt.x - T @ r.x) / (1.0 + np.linalg.norm(r.x))),
        )
        pulled = T.T @ rt.b @ T
        b_dev = max(
            b_dev,
            float(
                np.linalg.norm(pulled - r.b, "fro")
                / (1.0 + np.linalg.norm(r.b, "fro"))
            ),
        )
    return InvarianceReport(x_dev=x_dev, b_dev=b_dev, k_used=k_used, tol=tol)
