"""Driver loop: line searches, convergence, invariance, skip policy."""

import numpy as np
import pytest

from bregmanqn import (
    CurvatureViolation,
    InvalidParameter,
    LineSearchFail,
    LineSearchParams,
    Objective,
    PDMatrix,
    SingularTransform,
    SolverConfig,
    UpdateFamily,
    banded_pattern,
    check_gradient,
    get_problem,
    invariance_check,
    minimize,
    transform_problem,
    wolfe_line_search,
)


def quadratic_objective(A, name="quad"):
    A = np.asarray(A, dtype=float)

    def value(x):
        return 0.5 * float(x @ (A @ x))

    def gradient(x):
        return A @ x

    return Objective(A.shape[0], value, gradient,
                     minimizer=np.zeros(A.shape[0]), name=name)


# -------------------------------------------------------------- line search


def test_wolfe_accepts_unit_step_on_simple_quadratic():
    obj = quadratic_objective(np.eye(1))
    alpha = wolfe_line_search(obj, np.array([1.0]), np.array([-1.0]),
                              LineSearchParams())
    assert alpha == 1.0


def test_wolfe_conditions_hold_on_quartic():
    obj = Objective(1, lambda x: float(x[0] ** 4),
                    lambda x: np.array([4.0 * x[0] ** 3]))
    x = np.array([1.0])
    d = np.array([-1.0])
    p = LineSearchParams()
    alpha = wolfe_line_search(obj, x, d, p)
    f0, g0d = obj.value(x), float(obj.gradient(x) @ d)
    xa = x + alpha * d
    assert obj.value(xa) <= f0 + p.c1 * alpha * g0d
    assert float(obj.gradient(xa) @ d) >= p.c2 * g0d


def test_wolfe_rejects_ascent_direction():
    obj = quadratic_objective(np.eye(2))
    x = np.array([1.0, 0.0])
    with pytest.raises(LineSearchFail):
        wolfe_line_search(obj, x, obj.gradient(x), LineSearchParams())


def test_line_search_params_validation():
    for kwargs in (
        dict(c1=0.5, c2=0.1),
        dict(c1=0.0),
        dict(c2=1.0),
        dict(alpha_init=0.0),
        dict(max_trials=0),
        dict(method="golden"),
    ):
        with pytest.raises(InvalidParameter):
            LineSearchParams(**kwargs)


def test_solver_config_validation():
    fam = UpdateFamily("bfgs")
    with pytest.raises(InvalidParameter):
        SolverConfig(fam, grad_tol=0.0)
    with pytest.raises(InvalidParameter):
        SolverConfig(fam, max_iter=0)
    with pytest.raises(InvalidParameter):
        SolverConfig(fam, skip_policy="maybe")
    pat = banded_pattern(4, 1)
    with pytest.raises(InvalidParameter):
        SolverConfig(UpdateFamily("dfp"), sparsity=(pat, 2, 5))
    with pytest.raises(InvalidParameter):
        SolverConfig(fam, sparsity=(pat, 3, 5))
    with pytest.raises(InvalidParameter):
        SolverConfig(fam, sparsity=(pat, 2, 0))


def test_solver_config_accepts_family_string():
    cfg = SolverConfig("vbfgs:power:gamma=0.1")
    assert isinstance(cfg.family, UpdateFamily)
    assert cfg.family.kind == "vbfgs"
    with pytest.raises(InvalidParameter):
        SolverConfig("frobnicate")


# -------------------------------------------------------------- convergence


def test_exact_line_search_terminates_on_quadratics():
    # BFGS with exact searches solves an n-dimensional quadratic in at
    # most n steps, modulo the stopping check
    rng = np.random.default_rng(3)
    for n in (2, 5, 8):
        q = rng.standard_normal((n, n))
        A = q @ q.T + np.eye(n)
        obj = quadratic_objective(A)
        cfg = SolverConfig(
            UpdateFamily("bfgs"),
            line_search=LineSearchParams(method="exact"),
            grad_tol=1e-8,
        )
        trace = minimize(obj, rng.standard_normal(n), config=cfg)
        assert trace.status == "Converged"
        assert trace.iterations <= n + 2


ROSENBROCK_FAMILIES = (
    "bfgs",
    "dfp",
    "vbfgs:log",
    "vdfp:log",
    "vbfgs:power:gamma=0.25",
    "vbfgs:bounded:c=0.5",
    "selfscale",
)


def test_rosenbrock_all_families():
    spec = get_problem("rosenbrock")
    for fam in ROSENBROCK_FAMILIES:
        cfg = SolverConfig(UpdateFamily.from_string(fam), grad_tol=1e-6)
        trace = minimize(spec.objective, spec.start, config=cfg)
        assert trace.status == "Converged", fam
        assert trace.iterations <= 200
        assert np.abs(trace.final.x - spec.objective.minimizer).max() < 1e-5


def test_vbfgs_log_reproduces_bfgs_iterates():
    spec = get_problem("rosenbrock")
    cfg_a = SolverConfig(UpdateFamily.from_string("bfgs"), grad_tol=1e-8)
    cfg_b = SolverConfig(UpdateFamily.from_string("vbfgs:log"), grad_tol=1e-8)
    ta = minimize(spec.objective, spec.start, config=cfg_a, record_b=True)
    tb = minimize(spec.objective, spec.start, config=cfg_b, record_b=True)
    assert len(ta.records) == len(tb.records)
    for ra, rb in zip(ta.records, tb.records):
        assert np.abs(ra.x - rb.x).max() <= 1e-12 * (1 + np.abs(ra.x).max())
        assert np.abs(ra.b - rb.b).max() <= 1e-12 * (1 + np.abs(ra.b).max())


def test_max_iter_status():
    spec = get_problem("rosenbrock")
    cfg = SolverConfig(UpdateFamily("bfgs"), max_iter=3)
    trace = minimize(spec.objective, spec.start, config=cfg)
    assert trace.status == "MaxIter"
    assert len(trace.records) == 4


def test_objective_values_never_increase():
    spec = get_problem("quadratic:100:6", seed=5)
    trace = minimize(spec.objective, spec.start,
                     config=SolverConfig(UpdateFamily("bfgs")))
    assert np.all(np.diff(trace.fs()) <= 0.0)
    assert trace.grad_norms()[-1] <= 1e-8


def test_minimize_validates_start_shape():
    spec = get_problem("rosenbrock")
    with pytest.raises(InvalidParameter):
        minimize(spec.objective, np.zeros(3))


def test_record_b_toggle():
    spec = get_problem("rosenbrock")
    cfg = SolverConfig(UpdateFamily("bfgs"), max_iter=5)
    plain = minimize(spec.objective, spec.start, config=cfg)
    heavy = minimize(spec.objective, spec.start, config=cfg, record_b=True)
    assert plain.records[0].b is None
    assert heavy.records[0].b is not None
    assert heavy.records[0].b.shape == (2, 2)


# -------------------------------------------------------------- skip policy


def skip_trigger_objective():
    # Doctored gradient: honest at the start, then reports a huge
    # component orthogonal to the step.  A Wolfe-accepted step on a
    # consistent gradient always has s'y well above the skip threshold,
    # so the branch needs an inconsistent oracle to fire deterministically.
    def value(x):
        return 0.5 * float(x @ x)

    def gradient(x):
        g = np.array([x[0], 0.0])
        if abs(x[0] + 1.0) > 1e-9:
            g[1] = 1e15
        return g

    return Objective(2, value, gradient)


def test_skip_policy_skip_keeps_b():
    obj = skip_trigger_objective()
    cfg = SolverConfig(UpdateFamily("bfgs"), max_iter=1)
    trace = minimize(obj, np.array([-1.0, 0.0]), config=cfg)
    rec = trace.records[1]
    assert rec.skipped
    assert rec.det_b == 1.0  # update suppressed, B still the identity


def test_skip_policy_error_raises():
    obj = skip_trigger_objective()
    cfg = SolverConfig(UpdateFamily("bfgs"), max_iter=1, skip_policy="error")
    with pytest.raises(CurvatureViolation):
        minimize(obj, np.array([-1.0, 0.0]), config=cfg)


# ------------------------------------------------------------- sparse chain


def test_sparse_solver_path_stays_on_pattern():
    spec = get_problem("broyden-tridiagonal:6")
    pattern = spec.pattern
    cfg = SolverConfig(
        UpdateFamily.from_string("vbfgs:log"),
        grad_tol=1e-6,
        sparsity=(pattern, 2, 3),
    )
    trace = minimize(spec.objective, spec.start, config=cfg, record_b=True)
    assert trace.status == "Converged"
    for rec in trace.records:
        assert pattern.off_pattern_magnitude(rec.b) <= 1e-12


# -------------------------------------------------------------- invariance


def test_gradient_check_on_catalog():
    for name in ("rosenbrock", "quadratic:50:5", "extended-powell:8",
                 "broyden-tridiagonal:6"):
        spec = get_problem(name, seed=2)
        rng = np.random.default_rng(7)
        for _ in range(3):
            x = spec.start + 0.1 * rng.standard_normal(spec.n)
            assert check_gradient(spec.objective, x) < 1e-6


def test_gradient_check_flags_wrong_gradient():
    obj = Objective(2, lambda x: float(x @ x),
                    lambda x: 1.5 * x)  # true gradient is 2x
    assert check_gradient(obj, np.array([1.0, 2.0])) > 1e-2


def test_transform_problem_chain_rule():
    rng = np.random.default_rng(4)
    spec = get_problem("quadratic:10:4", seed=1)
    T = rng.standard_normal((4, 4)) + 4 * np.eye(4)
    obj_t = transform_problem(spec.objective, T)
    for _ in range(5):
        x = rng.standard_normal(4)
        xt = T @ x
        assert obj_t.value(xt) == pytest.approx(spec.objective.value(x), rel=1e-10)
        expected = np.linalg.solve(T.T, spec.objective.gradient(x))
        assert np.abs(obj_t.gradient(xt) - expected).max() < 1e-10 * (
            1 + np.abs(expected).max()
        )
    assert np.allclose(obj_t.minimizer, T @ spec.objective.minimizer)
    assert check_gradient(obj_t, rng.standard_normal(4)) < 1e-6


def test_transform_problem_rejects_singular():
    spec = get_problem("quadratic:10:3", seed=1)
    T = np.zeros((3, 3))
    T[0, 0] = 1.0
    with pytest.raises(SingularTransform):
        transform_problem(spec.objective, T)
    with pytest.raises(InvalidParameter):
        transform_problem(spec.objective, np.eye(2))


def seeded_transform(n, seed, det_target):
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((n, n)) + 3 * np.eye(n)
    d = np.linalg.det(M)
    if d < 0:
        M[0] = -M[0]
        d = -d
    return M * (det_target / d) ** (1.0 / n)


def test_invariance_under_unimodular_transforms():
    # every family in the catalog commutes with det-1 changes of variables
    spec = get_problem("quadratic:20:3", seed=3)
    for fam in ("bfgs", "vbfgs:log", "vbfgs:power:gamma=0.2",
                "vbfgs:bounded:c=0.5"):
        cfg = SolverConfig(UpdateFamily.from_string(fam), grad_tol=1e-8)
        for seed in (0, 1, 2):
            T = seeded_transform(3, seed, 1.0)
            rep = invariance_check(spec.objective, spec.start, None, T, cfg)
            assert rep.invariant, (fam, seed, rep.x_dev, rep.b_dev)


def test_invariance_under_scaling_transforms():
    # power potentials survive det != 1, the bounded potential does not
    spec = get_problem("quadratic:20:3", seed=3)
    T = seeded_transform(3, 1, 2.0)
    inv_cfg = SolverConfig(UpdateFamily.from_string("vbfgs:power:gamma=0.2"),
                           grad_tol=1e-8)
    rep = invariance_check(spec.objective, spec.start, None, T, inv_cfg)
    assert rep.invariant

    var_cfg = SolverConfig(UpdateFamily.from_string("vbfgs:bounded:c=0.5"),
                           grad_tol=1e-8)
    rep = invariance_check(spec.objective, spec.start, None, T, var_cfg)
    assert not rep.invariant
    assert rep.x_dev > 1e-4
