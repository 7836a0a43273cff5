"""Quasi-Newton update rules on the PD cone.

The classical BFGS and DFP formulas are the KL projections of the current
approximation onto the secant slice {B : Bs = y}.  Replacing KL with the
Bregman divergence of a determinant potential V yields a one-parameter
perturbation of BFGS:

    B+ = r * BFGS(B) + (1 - r) * y y'/(s'y),      r = nu(det B+) / nu(det B),

where det B+ is pinned by the scalar scaling equation

    z = C * nu(z)^(n-1),        C = det(BFGS(B)) / nu(det B)^(n-1),

whose left-over log-form zeta(z) = log z - (n-1) log nu(z) is strictly
increasing for admissible potentials.  The dual rule (v_dfp) applies the
same machinery to the inverse approximation with the secant roles swapped.

All updates work on Cholesky factors: BFGS(B) is a rank-one update with
y/sqrt(s'y) followed by a rank-one downdate with Bs/sqrt(s'Bs) (that order
keeps every intermediate PD), and the weighted combination rescales the
factor and applies one more rank-one correction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._roots import newton_bisect_log
from .errors import CurvatureViolation, InvalidParameter, OracleNoConvergence
from .geometry import SecantManifold, theta_coordinate, trace_inner, v_bregman_divergence
from .pdlinalg import CholeskyFactor, PDMatrix, cholesky_factorize, rank_one_update
from .potentials import Potential, from_string as potential_from_string

CURVATURE_RTOL = 1e-12


class SecantPair:
    """Step/gradient-difference pair with positive curvature s'y."""

    __slots__ = ("s", "y", "curvature")

    def __init__(self, s, y):
        s = np.asarray(s, dtype=float)
        y = np.asarray(y, dtype=float)
        if s.ndim != 1 or s.shape != y.shape:
            raise InvalidParameter("s and y must be same-length vectors")
        sty = float(s @ y)
        if not sty > 0.0:
            raise CurvatureViolation(f"curvature s'y = {sty:.3e} must be positive")
        self.s = s.copy()
        self.y = y.copy()
        self.curvature = sty

    @property
    def n(self) -> int:
        return self.s.shape[0]

    def swapped(self) -> "SecantPair":
        """The pair with s and y exchanged (same curvature)."""
        return SecantPair(self.y, self.s)

    def __repr__(self):
        return f"SecantPair(n={self.n}, curvature={self.curvature:.6g})"


def _bfgs_factor(B: PDMatrix, pair: SecantPair):
    """Cholesky factor of BFGS(B) plus the reusable inner products."""
    Bs = B.matvec(pair.s)
    sBs = float(pair.s @ Bs)
    up = rank_one_update(B.factor, pair.y / np.sqrt(pair.curvature), +1)
    down = rank_one_update(up, Bs / np.sqrt(sBs), -1)
    return down, Bs, sBs


def _combine_toward_secant(factor: CholeskyFactor, ratio: float, pair: SecantPair) -> CholeskyFactor:
    """Factor of ratio * F F' + (1 - ratio) * y y'/(s'y), for ratio > 0.

    The combination is PD for every positive ratio because F F' already
    maps s to y, so the subtracted rank-one piece never exhausts the cone.
    """
    if ratio == 1.0:
        return factor
    scaled = CholeskyFactor(np.sqrt(ratio) * factor.L)
    coeff = 1.0 - ratio
    v = pair.y * np.sqrt(abs(coeff) / pair.curvature)
    return rank_one_update(scaled, v, +1 if coeff > 0.0 else -1)


def bfgs_update(B: PDMatrix, pair: SecantPair) -> PDMatrix:
    """BFGS: B - Bss'B/(s'Bs) + yy'/(s'y), computed on the factor."""
    factor, _, _ = _bfgs_factor(B, pair)
    return PDMatrix(factor)


def dfp_update(B: PDMatrix, pair: SecantPair) -> PDMatrix:
    """DFP: (I - ys'/(s'y)) B (I - sy'/(s'y)) + yy'/(s'y).

    Dense sandwich plus one fresh factorization; inverse-dual to BFGS, i.e.
    dfp_update(B; s, y)^{-1} = bfgs_update(B^{-1}; y, s).
    """
    s, y, sty = pair.s, pair.y, pair.curvature
    M = np.eye(pair.n) - np.outer(y, s) / sty
    A = M @ B.matrix @ M.T + np.outer(y, y) / sty
    return PDMatrix.from_matrix(A)


def solve_scaling_equation(
    C: float,
    pot: Potential,
    n: int,
    z_prev: float | None = None,
    use_closed_form: bool | None = None,
) -> float:
    """Unique positive root of z = C * nu(z)^(n-1).

    Newton on log z with a bisection safeguard (initial bracket
    [1e-12, 1e12], expanded if the root lies outside), stopping when
    |C nu(z)^(n-1) - z| <= 1e-12 * max(z, 1).  Power potentials take the
    closed form z = C^(1/(1-(n-1)*gamma)) unless use_closed_form=False.
    z_prev (e.g. the previous determinant) seeds the Newton start.
    """
    C = float(C)
    if not C > 0.0 or not np.isfinite(C):
        raise InvalidParameter(f"C must be a positive real, got {C!r}")
    if n < 1:
        raise InvalidParameter(f"dimension must be >= 1, got {n}")
    pot.require_admissible(n)
    log_c = np.log(C)

    if use_closed_form is None:
        use_closed_form = pot.closed_form_scaling
    if use_closed_form:
        if not pot.closed_form_scaling:
            raise InvalidParameter(f"{pot.label()} has no closed-form scaling solution")
        gamma = pot.params["gamma"]
        return float(np.exp(log_c / (1.0 - (n - 1) * gamma)))

    def g(ld):
        # zeta(z) - log C, strictly increasing in ld.
        return ld - (n - 1) * pot.log_nu_ld(ld) - log_c

    def dg(ld):
        return 1.0 - (n - 1) * pot.beta_ld(ld)

    def converged(ld):
        z = np.exp(ld)
        rhs = np.exp(log_c + (n - 1) * pot.log_nu_ld(ld))
        return abs(rhs - z) <= 1e-12 * max(z, 1.0)

    if z_prev is not None and z_prev > 0.0:
        ld0 = log_c + (n - 1) * pot.log_nu_ld(np.log(z_prev))
    else:
        ld0 = log_c
    lo, hi = np.log(1e-12), np.log(1e12)
    ld_star = newton_bisect_log(g, dg, ld0, lo, hi, increasing=True, converged=converged)
    return float(np.exp(ld_star))


def _solve_scaling_ld(log_c: float, pot: Potential, n: int, ld_prev: float) -> float:
    """log-space twin of solve_scaling_equation used inside the updates."""
    if pot.closed_form_scaling:
        gamma = pot.params["gamma"]
        return log_c / (1.0 - (n - 1) * gamma)

    def g(ld):
        return ld - (n - 1) * pot.log_nu_ld(ld) - log_c

    def dg(ld):
        return 1.0 - (n - 1) * pot.beta_ld(ld)

    def converged(ld):
        z = np.exp(ld)
        rhs = np.exp(log_c + (n - 1) * pot.log_nu_ld(ld))
        return abs(rhs - z) <= 1e-13 * max(z, 1.0)

    ld0 = log_c + (n - 1) * pot.log_nu_ld(ld_prev)
    lo, hi = np.log(1e-12), np.log(1e12)
    return newton_bisect_log(g, dg, ld0, lo, hi, increasing=True, converged=converged)


def v_bfgs_update(B: PDMatrix, pair: SecantPair, pot: Potential) -> PDMatrix:
    """Potential-weighted BFGS update.

    Solves min D_V(X, B) over {X : Xs = y}; the minimizer mixes BFGS(B)
    with the rank-one secant point, weighted by the nu-ratio at the new and
    old determinants.  With the log potential the ratio is exactly one and
    the result coincides with bfgs_update bit-for-bit.
    """
    n = pair.n
    pot.require_admissible(n)
    factor, _, _ = _bfgs_factor(B, pair)
    log_nu_b = pot.log_nu_ld(B.logdet)
    log_c = factor.log_det() - (n - 1) * log_nu_b
    ld_star = _solve_scaling_ld(log_c, pot, n, B.logdet)
    ratio = float(np.exp(pot.log_nu_ld(ld_star) - log_nu_b))
    return PDMatrix(_combine_toward_secant(factor, ratio, pair))


def v_dfp_update(H: PDMatrix, pair: SecantPair, pot: Potential) -> PDMatrix:
    """Potential-weighted DFP update of the inverse approximation H.

    The DFP side minimizes the divergence between inverses: given the
    current inverse H, the new B solves min D_V(B^{-1}, H) over {B: Bs=y}.
    Substituting K = B^{-1} turns this into min D_V(K, H) over {K: Ky=s} --
    the weighted-BFGS problem with the secant roles swapped -- so the same
    scalar solve runs on the determinant of the inverse, and the returned
    matrix is H+ = K = B+^{-1}.  With the log potential this is the
    classical DFP step expressed on the inverse, bfgs_update(H; y, s).
    """
    return v_bfgs_update(H, pair.swapped(), pot)


def self_scaling_update(B: PDMatrix, pair: SecantPair, theta: float) -> PDMatrix:
    """theta * BFGS(B) + (1 - theta) * y y'/(s'y) for a user-chosen theta > 0.

    theta = 1 reproduces bfgs_update exactly.  The popular adaptive choice
    theta = s'y / s'Bs sits at the boundary of the family: no strictly
    convex potential generates it, and it is known to over-scale on
    well-conditioned problems, so treat it as a baseline rather than a
    default.
    """
    theta = float(theta)
    if not theta > 0.0 or not np.isfinite(theta):
        raise InvalidParameter(f"theta must be a positive real, got {theta!r}")
    factor, _, _ = _bfgs_factor(B, pair)
    return PDMatrix(_combine_toward_secant(factor, theta, pair))


def minimize_divergence_affine(
    B: PDMatrix,
    base: np.ndarray,
    basis: list,
    u0: np.ndarray,
    pot: Potential,
    grad_tol: float = 1e-9,
    max_iter: int = 500,
) -> PDMatrix:
    """Minimize D_V(X, B) over X = base + sum_m u_m E_m inside the PD cone.

    Damped Newton on the coefficients with the analytic gradient
    <theta_V(X) - theta_V(B), E_m> and a finite-difference Hessian.  The
    start u0 must give a PD matrix.  Shared engine for the oracle
    implementations; cost is quadratic in len(basis).
    """
    pot.require_admissible(B.n)
    dim = len(basis)
    theta_b = theta_coordinate(B, pot).matrix

    def assemble(u):
        X = base.copy()
        for um, Em in zip(u, basis):
            X += um * Em
        return X

    def fval(u):
        X = assemble(u)
        try:
            Xpd = PDMatrix.from_matrix(X)
        except Exception:
            return None, np.inf
        return Xpd, v_bregman_divergence(Xpd, B, pot)

    def grad(u):
        Xpd, f = fval(u)
        if Xpd is None:
            raise OracleNoConvergence("iterate left the PD cone")
        gap = theta_coordinate(Xpd, pot).matrix - theta_b
        return np.array([trace_inner(gap, Em) for Em in basis]), f

    u = np.asarray(u0, dtype=float).copy()
    if dim == 0:
        Xpd, _ = fval(u)
        if Xpd is None:
            raise OracleNoConvergence("constraint set has no PD point")
        return Xpd

    for _ in range(max_iter):
        g, f = grad(u)
        gnorm = float(np.linalg.norm(g))
        if gnorm <= grad_tol:
            Xpd, _ = fval(u)
            return Xpd
        h = 1e-6 * (1.0 + float(np.linalg.norm(u)))
        H = np.empty((dim, dim))
        for i in range(dim):
            e = np.zeros(dim)
            e[i] = h
            gp, _ = grad(u + e)
            gm, _ = grad(u - e)
            H[i] = (gp - gm) / (2.0 * h)
        H = 0.5 * (H + H.T)
        try:
            step = np.linalg.solve(H + 1e-12 * np.eye(dim), -g)
        except np.linalg.LinAlgError:
            step = -g
        if g @ step >= 0.0:  # not a descent direction; fall back
            step = -g
        predicted = -(g @ step)
        if predicted <= 1e-12 * (1.0 + abs(f)):
            # Endgame: decreases are below float resolution of f, so Armijo
            # cannot certify progress; take the damped Newton step on PD
            # feasibility alone and let the gradient check decide.
            t = 1.0
            while t > 1e-14 and fval(u + t * step)[0] is None:
                t *= 0.5
            if t <= 1e-14:
                raise OracleNoConvergence("endgame step left the PD cone")
            u = u + t * step
            continue
        t = 1.0
        accepted = False
        while t > 1e-14:
            _, f_new = fval(u + t * step)
            if f_new < f + 1e-4 * t * (g @ step):
                u = u + t * step
                accepted = True
                break
            t *= 0.5
        if not accepted:
            g, _ = grad(u)
            if float(np.linalg.norm(g)) <= grad_tol:
                Xpd, _ = fval(u)
                return Xpd
            raise OracleNoConvergence("line search stalled before reaching tolerance")
    raise OracleNoConvergence(f"no convergence within {max_iter} iterations")


def variational_oracle(
    B: PDMatrix,
    pair: SecantPair,
    pot: Potential,
    grad_tol: float = 1e-9,
    max_iter: int = 500,
) -> PDMatrix:
    """Direct numerical minimizer of D_V(X, B) over {X : Xs = y}, n <= 4.

    Independent of the closed-form update: parameterizes the secant slice
    as yy'/(s'y) + span{E_m} with a Frobenius-orthonormal tangent basis and
    hands the coefficients to the damped Newton engine.  Reference
    implementation for tests.
    """
    n = pair.n
    if n > 4:
        raise ValueError("variational oracle is restricted to n <= 4")
    manifold = SecantManifold(pair.s, pair.y)
    basis = manifold.tangent_basis()
    base = manifold.particular_point()
    # Start from the BFGS point, which already lies on the slice.
    start_gap = bfgs_update(B, pair).matrix - base
    u0 = np.array([trace_inner(start_gap, Em) for Em in basis])
    return minimize_divergence_affine(B, base, basis, u0, pot, grad_tol, max_iter)


@dataclass
class UpdateFamily:
    """Named update rule, optionally carrying a potential.

    kind is one of "bfgs", "dfp", "vbfgs", "vdfp", "selfscale".  The
    selfscale rule recomputes theta = s'y / s'Bs at every step.  vdfp
    maintains the inverse approximation internally; the solver-facing
    methods hide which side is stored.
    """

    kind: str
    potential: Potential | None = None

    KINDS = ("bfgs", "dfp", "vbfgs", "vdfp", "selfscale")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise InvalidParameter(f"unknown update family {self.kind!r}")
        if self.kind in ("vbfgs", "vdfp"):
            if self.potential is None:
                raise InvalidParameter(f"{self.kind} requires a potential")
        elif self.potential is not None:
            raise InvalidParameter(f"{self.kind} takes no potential")

    @classmethod
    def from_string(cls, spec: str) -> "UpdateFamily":
        """Parse CLI family syntax, e.g. "bfgs" or "vbfgs:power:gamma=0.2"."""
        spec = spec.strip().lower()
        head, _, rest = spec.partition(":")
        if head in ("vbfgs", "vdfp"):
            if not rest:
                raise InvalidParameter(f"{head} needs a potential, e.g. {head}:log")
            return cls(head, potential_from_string(rest))
        if rest:
            raise InvalidParameter(f"family {head!r} takes no parameters")
        return cls(head)

    def label(self) -> str:
        if self.potential is not None:
            return f"{self.kind}:{self.potential.label()}"
        return self.kind

    # --- solver-facing state protocol ------------------------------------
    # State is a PDMatrix: the approximation B itself, except for vdfp
    # where the inverse H = B^{-1} is carried.

    def initial_state(self, B0: PDMatrix) -> PDMatrix:
        if self.potential is not None:
            self.potential.require_admissible(B0.n)
        if self.kind == "vdfp":
            return PDMatrix.from_matrix(B0.inv())
        return B0

    def direction(self, state: PDMatrix, gradient) -> np.ndarray:
        if self.kind == "vdfp":
            return -state.matvec(gradient)
        return -state.solve(gradient)

    def apply(self, state: PDMatrix, pair: SecantPair) -> PDMatrix:
        if self.kind == "bfgs":
            return bfgs_update(state, pair)
        if self.kind == "dfp":
            return dfp_update(state, pair)
        if self.kind == "vbfgs":
            return v_bfgs_update(state, pair, self.potential)
        if self.kind == "vdfp":
            return v_dfp_update(state, pair, self.potential)
        Bs = state.matvec(pair.s)
        theta = pair.curvature / float(pair.s @ Bs)
        return self_scaling_update(state, pair, theta)

    def det_b(self, state: PDMatrix) -> float:
        if self.kind == "vdfp":
            return float(np.exp(-state.logdet))
        return state.det()

    def b_matrix(self, state: PDMatrix) -> np.ndarray:
        if self.kind == "vdfp":
            return state.inv()
        return state.matrix
