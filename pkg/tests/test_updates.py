"""Update formulas: secant feasibility, duality, scaling equation, optimality."""

import numpy as np
import pytest

from bregmanqn import (
    CurvatureViolation,
    InvalidParameter,
    PDMatrix,
    SecantPair,
    UpdateFamily,
    bfgs_update,
    bounded_potential,
    cholesky_factorize,
    dfp_update,
    log_potential,
    power_potential,
    self_scaling_update,
    solve_scaling_equation,
    v_bfgs_update,
    v_bregman_divergence,
    v_dfp_update,
    variational_oracle,
)

POTS = (log_potential(), power_potential(0.1), power_potential(-0.8),
        bounded_potential(0.4))


def random_case(rng, n, scale=1.0):
    a = rng.standard_normal((n, n))
    b = PDMatrix.from_matrix(scale * (a @ a.T) + n * np.eye(n))
    s = rng.standard_normal(n)
    y = rng.standard_normal(n)
    if s @ y <= 0:
        y = y - 2 * (s @ y) / (s @ s) * s
    return b, SecantPair(s, y)


def test_secant_pair_validation():
    with pytest.raises(CurvatureViolation):
        SecantPair(np.array([1.0, 0.0]), np.array([-1.0, 0.0]))
    with pytest.raises(InvalidParameter):
        SecantPair(np.array([1.0]), np.array([1.0, 2.0]))
    p = SecantPair(np.array([1.0, 2.0]), np.array([3.0, 1.0]))
    assert p.curvature == pytest.approx(5.0)
    sw = p.swapped()
    assert np.array_equal(sw.s, p.y) and np.array_equal(sw.y, p.s)


def test_bfgs_secant_and_pd():
    rng = np.random.default_rng(0)
    for _ in range(200):
        n = int(rng.integers(2, 11))
        b, pair = random_case(rng, n)
        bp = bfgs_update(b, pair)
        assert np.abs(bp.matrix @ pair.s - pair.y).max() <= 1e-10 * (
            1 + np.abs(pair.y).max()
        )
        cholesky_factorize(bp.matrix)


def test_dfp_secant_and_pd():
    rng = np.random.default_rng(1)
    for _ in range(200):
        n = int(rng.integers(2, 11))
        b, pair = random_case(rng, n)
        bp = dfp_update(b, pair)
        assert np.abs(bp.matrix @ pair.s - pair.y).max() <= 1e-10 * (
            1 + np.abs(pair.y).max()
        )
        cholesky_factorize(bp.matrix)


def test_bfgs_dfp_duality():
    # inverse of the BFGS update of B is the DFP update of B^{-1} on (y, s)
    rng = np.random.default_rng(2)
    for _ in range(60):
        n = int(rng.integers(2, 9))
        b, pair = random_case(rng, n)
        lhs = np.linalg.inv(bfgs_update(b, pair).matrix)
        binv = PDMatrix.from_matrix(np.linalg.inv(b.matrix))
        rhs = dfp_update(binv, pair.swapped()).matrix
        assert np.abs(lhs - rhs).max() < 1e-9 * np.abs(rhs).max()


def test_v_bfgs_log_collapse():
    rng = np.random.default_rng(3)
    pot = log_potential()
    for _ in range(300):
        n = int(rng.integers(2, 11))
        b, pair = random_case(rng, n)
        ref = bfgs_update(b, pair).matrix
        out = v_bfgs_update(b, pair, pot).matrix
        assert np.abs(out - ref).max() <= 1e-12 * np.abs(ref).max()


def test_v_bfgs_secant_and_pd_all_potentials():
    rng = np.random.default_rng(4)
    for pot in POTS:
        for _ in range(100):
            n = int(rng.integers(2, 9))
            b, pair = random_case(rng, n, scale=float(rng.uniform(0.3, 3.0)))
            bp = v_bfgs_update(b, pair, pot)
            assert np.abs(bp.matrix @ pair.s - pair.y).max() <= 1e-10 * (
                1 + np.abs(pair.y).max()
            )
            cholesky_factorize(bp.matrix)


def test_v_bfgs_structure_theorem():
    # output = r * BFGS + (1-r) * yy'/s'y with r = nu(det B')/nu(det B) > 0;
    # r can exceed 1 when nu is decreasing, PD still holds
    rng = np.random.default_rng(5)
    for pot in POTS:
        for _ in range(40):
            n = int(rng.integers(2, 7))
            b, pair = random_case(rng, n)
            bp = v_bfgs_update(b, pair, pot)
            bfgs = bfgs_update(b, pair).matrix
            rank1 = np.outer(pair.y, pair.y) / pair.curvature
            r = pot.nu_ld(bp.logdet) / pot.nu_ld(b.logdet)
            assert r > 0.0
            recon = r * bfgs + (1 - r) * rank1
            assert np.abs(bp.matrix - recon).max() < 1e-9 * np.abs(bp.matrix).max()


def test_v_dfp_log_collapse():
    # with the log potential the inverse-space update is the BFGS formula
    # applied to H on the swapped pair
    rng = np.random.default_rng(6)
    pot = log_potential()
    for _ in range(50):
        n = int(rng.integers(2, 8))
        b, pair = random_case(rng, n)
        h = PDMatrix.from_matrix(np.linalg.inv(b.matrix))
        hp = v_dfp_update(h, pair, pot)
        ref = bfgs_update(h, pair.swapped())
        assert np.abs(hp.matrix - ref.matrix).max() < 1e-11 * np.abs(
            ref.matrix
        ).max()


def test_v_dfp_secant_all_potentials():
    rng = np.random.default_rng(7)
    for pot in POTS:
        for _ in range(100):
            n = int(rng.integers(2, 9))
            b, pair = random_case(rng, n)
            h = PDMatrix.from_matrix(np.linalg.inv(b.matrix))
            hp = v_dfp_update(h, pair, pot)
            # inverse-space secant: H' y = s
            assert np.abs(hp.matrix @ pair.y - pair.s).max() <= 1e-10 * (
                1 + np.abs(pair.s).max()
            )
            cholesky_factorize(hp.matrix)


def test_self_scaling_theta_one_is_bfgs():
    rng = np.random.default_rng(8)
    b, pair = random_case(rng, 5)
    out = self_scaling_update(b, pair, 1.0)
    ref = bfgs_update(b, pair)
    assert np.abs(out.matrix - ref.matrix).max() < 1e-12 * np.abs(ref.matrix).max()


def test_self_scaling_secant_and_pd():
    rng = np.random.default_rng(9)
    for _ in range(100):
        n = int(rng.integers(2, 9))
        b, pair = random_case(rng, n)
        theta = float(rng.uniform(0.05, 1.0))
        out = self_scaling_update(b, pair, theta)
        assert np.abs(out.matrix @ pair.s - pair.y).max() <= 1e-10 * (
            1 + np.abs(pair.y).max()
        )
        cholesky_factorize(out.matrix)


def test_scaling_equation_residual_and_power_closed_form():
    for pot in POTS:
        for n in (2, 4, 8):
            for logc in np.linspace(-13.8, 13.8, 13):
                c = float(np.exp(logc))
                z = solve_scaling_equation(c, pot, n)
                resid = abs(c * pot.nu(z) ** (n - 1) - z)
                assert resid <= 1e-12 * max(z, 1.0)
    g = 0.1
    pot = power_potential(g)
    for n in (2, 5, 9):
        for logc in np.linspace(-10, 10, 9):
            c = float(np.exp(logc))
            z = solve_scaling_equation(c, pot, n)
            closed = c ** (1.0 / (1.0 - (n - 1) * g))
            assert z == pytest.approx(closed, rel=1e-12)


def test_variational_oracle_agrees_with_update():
    rng = np.random.default_rng(10)
    for pot in (log_potential(), power_potential(0.2), bounded_potential(0.5)):
        for _ in range(6):
            n = int(rng.integers(2, 4))
            b, pair = random_case(rng, n)
            bp = v_bfgs_update(b, pair, pot)
            opt = variational_oracle(b, pair, pot)
            dev = np.abs(opt.matrix - bp.matrix).max() / np.abs(bp.matrix).max()
            assert dev < 5e-7


def test_update_strictly_decreases_divergence_on_manifold():
    # any other feasible point is strictly farther from B than the update
    rng = np.random.default_rng(11)
    for pot in POTS:
        n = 3
        b, pair = random_case(rng, n)
        bp = v_bfgs_update(b, pair, pot)
        d_opt = v_bregman_divergence(bp, b, pot)
        from bregmanqn import SecantManifold

        man = SecantManifold(pair.s, pair.y)
        basis = man.tangent_basis()
        for _ in range(20):
            w = 0.3 * rng.standard_normal(len(basis))
            cand = bp.matrix + sum(wi * e for wi, e in zip(w, basis))
            try:
                c = PDMatrix.from_matrix(cand)
            except Exception:
                continue
            assert v_bregman_divergence(c, b, pot) >= d_opt - 1e-10


def test_family_from_string():
    fam = UpdateFamily.from_string("vbfgs:power:gamma=0.2")
    assert fam.kind == "vbfgs"
    assert fam.potential.label() == "power:gamma=0.2"
    assert UpdateFamily.from_string("bfgs").potential is None
    assert UpdateFamily.from_string("selfscale").kind == "selfscale"
    for bad in ("", "bfgs:log", "vbfgs", "vbfgs:nope", "what"):
        with pytest.raises(InvalidParameter):
            UpdateFamily.from_string(bad)


def test_family_labels():
    assert UpdateFamily.from_string("bfgs").label() == "bfgs"
    assert (
        UpdateFamily.from_string("vdfp:bounded:c=0.3").label() == "vdfp:bounded:c=0.3"
    )
