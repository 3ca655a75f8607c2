import numpy as np
import pytest

from contact_algebroid import (
    ContactLagrangianSystem, RegularityError, State, energy, herglotz_field, lie_algebra, parse_field, reeb_coeffs,
    regularity, tangent_bundle, verify_lagrangian_section,
)
from contact_algebroid.scenarios import CATALOG, scenario

from conftest import random_state
from oracles import euler_poincare_herglotz, herglotz_standard

LAGRANGIAN_SCENARIOS = [k for k, v in CATALOG.items() if v["system"]["side"] == "lagrangian"]


def lsys(text, n=1, m=None, model=None, **params):
    m = n if m is None else m
    model = model or tangent_bundle(n)
    return ContactLagrangianSystem(model, parse_field(text, model.n, model.m, "lagrangian", params))


def st(q, y, s=0.0):
    return State(q, y, s, "lagrangian")


def test_energy_examples():
    assert energy(lsys("0.5*y1^2"), st([0.0], [2.0], 3.0)) == 2.0
    degenerate = lsys("y1")
    for y in (-1.0, 0.5, 7.0):
        assert energy(degenerate, st([0.2], [y], 1.0)) == 0.0
    assert energy(lsys("0.5*y1^2 - lam*s", lam=0.5), st([0.0], [2.0], 1.0)) == 2.5


def test_regularity_examples():
    r = regularity(lsys("0.5*(y1^2 + y2^2)", 2), st([0, 0], [0.3, 0.4]))
    assert r.det == 1.0 and r.is_regular
    r = regularity(lsys("y1"), st([0.0], [1.0]))
    assert r.det == 0.0 and not r.is_regular
    r = regularity(lsys("0.5*y1^2 + 0.5*eps*y2^2", 2, eps=1e-14), st([0, 0], [1.0, 1.0]))
    assert r.det == pytest.approx(1e-14) and not r.is_regular


def test_singular_lagrangian_raises():
    with pytest.raises(RegularityError):
        herglotz_field(lsys("y1*q1"), st([1.0], [1.0]))


def test_reeb_examples():
    vs, v, _ = reeb_coeffs(lsys("0.5*y1^2 - q1^2"), st([0.3], [1.0], 2.0))
    assert vs == 1.0
    np.testing.assert_array_equal(v, [0.0])
    _, v, _ = reeb_coeffs(lsys("0.5*y1^2 + y1*s"), st([0.0], [0.7], 0.4))
    np.testing.assert_array_equal(v, [-1.0])


@pytest.mark.parametrize("name", LAGRANGIAN_SCENARIOS)
def test_reeb_contractions(name, rng):
    sc = scenario(name)
    sys = sc.system
    for _ in range(10):
        state = random_state(rng, sc.model.n, sc.model.m, "lagrangian")
        vs, v, _ = sys.reeb_coeffs(state)
        r = np.concatenate([np.zeros(sc.model.m), v, [vs]])
        cf = sys.coframe(state)
        assert abs(cf.contract_eta(r) - 1.0) < 1e-12
        assert np.abs(cf.contract_d_eta(r)).max() < 1e-12


def test_damped_oscillator_point():
    f = herglotz_field(lsys("0.5*y1^2 - lam*s", lam=0.5), st([0.0], [2.0], 0.0))
    assert (f.dq[0], f.dw[0], f.ds) == (2.0, -1.0, 2.0)
    # dense solve of W ydot = L_q + L_y L_s - L_qy y - L L_sy
    w, rhs = np.array([[1.0]]), np.array([0.0 + 2.0 * -0.5 - 0.0 - 0.0])
    np.testing.assert_array_equal(np.linalg.solve(w, rhs), f.dw)


def test_conservative_euler_lagrange(rng):
    sys = lsys("0.5*(y1^2 + y2^2) - (q1^2*q2 + cos(q2))", 2)
    for _ in range(10):
        state = random_state(rng, 2, 2, "lagrangian")
        q1, q2 = state.q
        grad_v = np.array([2 * q1 * q2, q1**2 - np.sin(q2)])
        np.testing.assert_allclose(sys.herglotz_field(state).dw, -grad_v, atol=1e-14)


def test_euler_poincare_herglotz_equations(rng):
    sys = lsys("0.5*(I1*y1^2 + I2*y2^2 + I3*y3^2) + kappa*s", model=lie_algebra("so3"), I1=1.0, I2=2.0, I3=3.0, kappa=0.3)
    for _ in range(20):
        state = random_state(rng, 0, 3, "lagrangian")
        f = sys.herglotz_field(state)
        ydot, ds = euler_poincare_herglotz(sys.L, state)
        np.testing.assert_allclose(f.dw, ydot, atol=1e-13)
        assert f.ds == pytest.approx(ds, abs=1e-15)


def test_standard_herglotz_nonlinear(rng):
    sc = scenario("tb2_nonlinear_lagrangian")
    for _ in range(20):
        state = random_state(rng, 2, 2, "lagrangian")
        f = sc.system(state)
        dq, ydot, ds = herglotz_standard(sc.field, state)
        np.testing.assert_allclose(f.dw, ydot, atol=1e-12)
        np.testing.assert_array_equal(f.dq, dq)
        assert f.ds == ds


@pytest.mark.parametrize("name", LAGRANGIAN_SCENARIOS)
def test_section_self_consistency(name, rng):
    sc = scenario(name)
    for _ in range(50):
        state = random_state(rng, sc.model.n, sc.model.m, "lagrangian")
        assert verify_lagrangian_section(sc.system, state).max < 1e-9


def test_free_particle_residual_exact(rng):
    sys = lsys("0.5*y1^2")
    for _ in range(5):
        assert sys.verify(random_state(rng, 1, 1, "lagrangian")).max == 0.0


@pytest.mark.parametrize("name", LAGRANGIAN_SCENARIOS)
def test_perturbed_acceleration_detected(name, rng):
    sc = scenario(name)
    m = sc.model.m
    state = random_state(rng, sc.model.n, m, "lagrangian")
    g = sc.system.section(state)
    g[m] += 0.1
    assert np.abs(sc.system.verify(state, g).r2).max() > 0.01


def test_ds_equals_lagrangian(rng):
    sc = scenario("so3_euler_poincare_herglotz")
    for _ in range(20):
        state = random_state(rng, 0, 3, "lagrangian")
        assert sc.system(state).ds == sc.field(state.q, state.w, state.s)


def test_arity_mismatch_rejected():
    with pytest.raises(ValueError):
        ContactLagrangianSystem(tangent_bundle(2), parse_field("0.5*y1^2", 1, 1, "lagrangian"))
