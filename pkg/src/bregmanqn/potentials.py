"""Scalar potentials of the determinant.

A potential is a strictly convex, strictly decreasing function V on the
positive reals, applied to det(P) to produce a seed function V(det P) on the
PD cone.  Two derived quantities drive everything downstream:

    nu(z)   = -z * V'(z)            (positive weight)
    beta(z) = z * nu'(z) / nu(z)    (log-derivative of nu)

Admissibility for dimension n requires beta(z) < 1/n everywhere and
z / nu(z)^(n-1) -> 0 as z -> 0+.  Both are checked on fixed grids by
``validate`` and the per-dimension verdict is cached on the potential.

Builtins evaluate V, nu and beta from the log-determinant directly, so
large determinants never overflow.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InvalidParameter, PotentialNotAdmissible

BETA_GRID = np.logspace(-8.0, 8.0, 256)
LIMIT_GRID = np.logspace(-12.0, 0.0, 256)


@dataclass
class PotentialReport:
    """Outcome of the admissibility grid checks for one dimension."""

    dimension: int
    beta_bound_ok: bool
    limit_ok: bool
    decreasing_ok: bool
    convex_ok: bool
    beta_max: float
    grid: np.ndarray = field(repr=False)

    @property
    def admissible(self) -> bool:
        return (
            self.beta_bound_ok
            and self.limit_ok
            and self.decreasing_ok
            and self.convex_ok
        )


class Potential:
    """Potential V with derivatives and log-determinant evaluators.

    ``kind`` is one of "log", "power", "bounded", "custom".  The log-space
    methods take ld = log z.  ``closed_form_scaling`` marks potentials whose
    scaling equation has a closed-form solution (the power family).
    """

    def __init__(
        self,
        kind: str,
        params: dict,
        value,
        derivative,
        second_derivative,
        nu,
        beta,
        value_ld,
        log_nu_ld,
        beta_ld,
        closed_form_scaling: bool = False,
    ):
        self.kind = kind
        self.params = dict(params)
        self.value = value
        self.derivative = derivative
        self.second_derivative = second_derivative
        self.nu = nu
        self.beta = beta
        self.value_ld = value_ld
        self.log_nu_ld = log_nu_ld
        self.beta_ld = beta_ld
        self.closed_form_scaling = closed_form_scaling
        self._reports: dict[int, PotentialReport] = {}

    def nu_ld(self, ld: float) -> float:
        return float(np.exp(self.log_nu_ld(ld)))

    def label(self) -> str:
        if self.kind == "power":
            return f"power:gamma={self.params['gamma']!r}"
        if self.kind == "bounded":
            return f"bounded:c={self.params['c']!r}"
        return self.kind

    def __repr__(self):
        return f"Potential({self.label()})"

    def validate(self, n: int) -> PotentialReport:
        return validate(self, n)

    def require_admissible(self, n: int) -> None:
        """Validate for dimension n (cached); raise if inadmissible."""
        report = self._reports.get(n)
        if report is None:
            report = validate(self, n)
        if not report.admissible:
            raise PotentialNotAdmissible(
                f"potential {self.label()} is not admissible for n={n}: "
                f"beta_bound_ok={report.beta_bound_ok}, limit_ok={report.limit_ok}, "
                f"decreasing_ok={report.decreasing_ok}, convex_ok={report.convex_ok}"
            )


def _check_z(z: float) -> float:
    z = float(z)
    if not z > 0.0 or not np.isfinite(z):
        raise DomainError(f"potential argument must be a positive real, got {z!r}")
    return z


def log_potential() -> Potential:
    """V(z) = -log z; nu == 1, beta == 0.  The KL seed."""
    return Potential(
        kind="log",
        params={},
        value=lambda z: -np.log(z),
        derivative=lambda z: -1.0 / z,
        second_derivative=lambda z: 1.0 / z**2,
        nu=lambda z: 1.0,
        beta=lambda z: 0.0,
        value_ld=lambda ld: -ld,
        log_nu_ld=lambda ld: 0.0,
        beta_ld=lambda ld: 0.0,
    )


def power_potential(gamma: float) -> Potential:
    """V(z) = (1 - z^gamma)/gamma; nu = z^gamma, beta == gamma.

    gamma = 0 is the log potential's limit and is rejected: use "log".
    Admissibility additionally needs gamma < 1/n, checked by validate.
    """
    gamma = float(gamma)
    if gamma == 0.0:
        raise InvalidParameter("gamma=0 is the logarithmic limit; use the log potential")
    if not np.isfinite(gamma) or gamma >= 1.0:
        raise InvalidParameter(f"power potential needs gamma < 1, got {gamma}")
    return Potential(
        kind="power",
        params={"gamma": gamma},
        value=lambda z: (1.0 - z**gamma) / gamma,
        derivative=lambda z: -(z ** (gamma - 1.0)),
        second_derivative=lambda z: (1.0 - gamma) * z ** (gamma - 2.0),
        nu=lambda z: z**gamma,
        beta=lambda z: gamma,
        value_ld=lambda ld: (1.0 - np.exp(gamma * ld)) / gamma,
        log_nu_ld=lambda ld: gamma * ld,
        beta_ld=lambda ld: gamma,
        closed_form_scaling=True,
    )


def bounded_potential(c: float) -> Potential:
    """V(z) = c log(cz + 1) - log z for 0 <= c < 1.

    nu(z) = 1 - c + c/(cz + 1) stays inside [1 - c, 1], and beta <= 0, so
    the potential is admissible in every dimension.  c = 0 coincides with
    the log potential.
    """
    c = float(c)
    if not (0.0 <= c < 1.0) or not np.isfinite(c):
        raise InvalidParameter(f"bounded potential needs 0 <= c < 1, got {c}")

    def value(z):
        return c * np.log(c * z + 1.0) - np.log(z)

    def derivative(z):
        return c * c / (c * z + 1.0) - 1.0 / z

    def second_derivative(z):
        return 1.0 / z**2 - c**3 / (c * z + 1.0) ** 2

    def nu(z):
        return 1.0 - c + c / (c * z + 1.0)

    def beta(z):
        return -(c * c * z) / ((c * z + 1.0) * (c * (1.0 - c) * z + 1.0))

    if c == 0.0:
        value_ld = lambda ld: -ld
        log_nu_ld = lambda ld: 0.0
        beta_ld = lambda ld: 0.0
    else:
        log_c = np.log(c)
        # log(c*(1-c)) is finite because 0 < c < 1 here.
        log_c1c = np.log(c * (1.0 - c))

        def value_ld(ld):
            return c * np.logaddexp(log_c + ld, 0.0) - ld

        def log_nu_ld(ld):
            t1 = np.logaddexp(log_c + ld, 0.0)  # log(cz + 1)
            return float(np.log(1.0 - c + c * np.exp(-t1)))

        def beta_ld(ld):
            t1 = np.logaddexp(log_c + ld, 0.0)
            t2 = np.logaddexp(log_c1c + ld, 0.0)  # log(c(1-c)z + 1)
            return float(-np.exp(2.0 * log_c + ld - t1 - t2))

    return Potential(
        kind="bounded",
        params={"c": c},
        value=value,
        derivative=derivative,
        second_derivative=second_derivative,
        nu=nu,
        beta=beta,
        value_ld=value_ld,
        log_nu_ld=log_nu_ld,
        beta_ld=beta_ld,
    )


def custom_potential(value, derivative, second_derivative, name: str = "custom") -> Potential:
    """Wrap user callables V, V', V''.

    nu and beta are derived:  nu = -z V'(z),  beta = 1 + z V''(z) / V'(z).
    Log-space evaluators exponentiate, so extremely large determinants can
    overflow for custom potentials; the builtins do not have this caveat.
    """

    def nu(z):
        return -z * derivative(z)

    def beta(z):
        return 1.0 + z * second_derivative(z) / derivative(z)

    return Potential(
        kind="custom",
        params={"name": name},
        value=value,
        derivative=derivative,
        second_derivative=second_derivative,
        nu=nu,
        beta=beta,
        value_ld=lambda ld: value(np.exp(ld)),
        log_nu_ld=lambda ld: float(np.log(nu(np.exp(ld)))),
        beta_ld=lambda ld: beta(np.exp(ld)),
    )


def make_builtin(kind: str, **params) -> Potential:
    """Construct one of the builtin potentials by name."""
    kind = kind.lower()
    if kind == "log":
        if params:
            raise InvalidParameter("log potential takes no parameters")
        return log_potential()
    if kind == "power":
        if set(params) != {"gamma"}:
            raise InvalidParameter("power potential takes exactly gamma=<float>")
        return power_potential(params["gamma"])
    if kind == "bounded":
        if set(params) != {"c"}:
            raise InvalidParameter("bounded potential takes exactly c=<float>")
        return bounded_potential(params["c"])
    raise InvalidParameter(f"unknown potential kind {kind!r}")


def from_string(spec: str) -> Potential:
    """Parse CLI potential syntax: log | power:gamma=<g> | bounded:c=<c>."""
    spec = spec.strip().lower()
    if spec == "log":
        return log_potential()
    head, _, rest = spec.partition(":")
    kv = {}
    if rest:
        for item in rest.split(","):
            key, eq, val = item.partition("=")
            if not eq:
                raise InvalidParameter(f"malformed potential parameter {item!r}")
            try:
                kv[key.strip()] = float(val)
            except ValueError as exc:
                raise InvalidParameter(f"non-numeric potential parameter {item!r}") from exc
    return make_builtin(head, **kv)


def evaluate(pot: Potential, z: float) -> dict:
    """Pointwise {V, Vprime, nu, beta} at z > 0."""
    z = _check_z(z)
    return {
        "V": float(pot.value(z)),
        "Vprime": float(pot.derivative(z)),
        "nu": float(pot.nu(z)),
        "beta": float(pot.beta(z)),
    }


def validate(pot: Potential, n: int) -> PotentialReport:
    """Grid admissibility checks for dimension n; result cached on pot.

    beta < 1/n is probed on BETA_GRID; the vanishing of z / nu(z)^(n-1)
    near zero is probed on LIMIT_GRID via monotone growth plus the bound
    w(z_min) <= w(1) * z_min^(1/n) that admissibility implies.
    """
    if n < 1:
        raise InvalidParameter(f"dimension must be >= 1, got {n}")
    cached = pot._reports.get(n)
    if cached is not None:
        return cached

    beta_vals = np.array([pot.beta(z) for z in BETA_GRID], dtype=float)
    vprime = np.array([pot.derivative(z) for z in BETA_GRID], dtype=float)
    vsecond = np.array([pot.second_derivative(z) for z in BETA_GRID], dtype=float)

    beta_max = float(np.max(beta_vals))
    beta_bound_ok = bool(np.all(beta_vals < 1.0 / n))
    decreasing_ok = bool(np.all(vprime < 0.0))
    convex_ok = bool(np.all(vsecond > 0.0))

    lds = np.log(LIMIT_GRID)
    lw = np.array([ld - (n - 1) * pot.log_nu_ld(ld) for ld in lds], dtype=float)
    monotone = bool(np.all(np.diff(lw) > 0.0))
    # Admissibility forces w(z) <= w(1) * z^(1/n); allow float slack.
    small_enough = bool(lw[0] <= lw[-1] + lds[0] / n + 1e-9)
    limit_ok = monotone and small_enough

    report = PotentialReport(
        dimension=n,
        beta_bound_ok=beta_bound_ok,
        limit_ok=limit_ok,
        decreasing_ok=decreasing_ok,
        convex_ok=convex_ok,
        beta_max=beta_max,
        grid=BETA_GRID.copy(),
    )
    pot._reports[n] = report
    return report
