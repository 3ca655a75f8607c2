import numpy as np
import pytest

from contact_algebroid import (
    ContactHamiltonianSystem, State, StateDerivative, adaptive_integrate, integrate, parse_field, rk4_step,
    tangent_bundle,
)
from contact_algebroid.scenarios import scenario


def zero_field(state):
    return StateDerivative(np.zeros_like(state.q), np.zeros_like(state.w), 0.0)


def free_particle():
    return ContactHamiltonianSystem(tangent_bundle(1), parse_field("0.5*p1^2", 1, 1, "hamiltonian"))


def test_zero_field_constant():
    s0 = State([0.3, -1.0], [2.0], 0.5, "hamiltonian")
    traj = integrate(zero_field, s0, 1.0, 0.1)
    for st in traj.states:
        np.testing.assert_array_equal(st.pack(), s0.pack())
    assert len(traj.times) == 11 and traj.times[-1] == 1.0


def test_free_particle_exact():
    traj = integrate(free_particle().hamilton_field, State([0.0], [1.0], 0.0, "hamiltonian"), 2.0, 0.01)
    t = traj.times
    x = traj.array()
    np.testing.assert_allclose(x[:, 0], t, atol=1e-13)
    np.testing.assert_array_equal(x[:, 1], 1.0)
    np.testing.assert_allclose(x[:, 2], t / 2, atol=1e-13)


def test_sample_times_are_exact_multiples():
    traj = integrate(zero_field, State([0.0], [0.0], 0.0, "hamiltonian"), 1.0, 0.1, sample_every=3)
    np.testing.assert_array_equal(traj.times, [0.0, 0.30000000000000004, 0.6000000000000001, 0.9, 1.0])


def test_last_step_shortened():
    traj = integrate(free_particle().hamilton_field, State([0.0], [1.0], 0.0, "hamiltonian"), 0.25, 0.1)
    assert traj.times[-1] == 0.25 and traj.steps == 3
    assert traj.final.q[0] == pytest.approx(0.25, abs=1e-15)


def test_fourth_order_on_so3():
    sc = scenario("so3_euler_poincare_herglotz")
    ref = integrate(sc.system, sc.state0, 2.0, 1e-3).final.pack()
    errs = [np.abs(integrate(sc.system, sc.state0, 2.0, h).final.pack() - ref).max() for h in (0.1, 0.05, 0.025)]
    for a, b in zip(errs, errs[1:]):
        assert 12.0 <= a / b <= 20.0, errs


def test_diagnostics_recorded():
    sys = free_particle()
    traj = integrate(sys.hamilton_field, State([0.0], [2.0], 0.0, "hamiltonian"), 1.0, 0.1, {"H": sys.value})
    np.testing.assert_array_equal(traj.diagnostics["H"], 2.0)


def test_blow_up_reported():
    # dp/dt = p^2 from p = 1 blows up at t = 1
    def blow(st):
        with np.errstate(over="ignore", invalid="ignore"):
            return StateDerivative(np.zeros(1), st.w**2, 0.0)

    traj = integrate(blow, State([0.0], [1.0], 0.0, "hamiltonian"), 2.0, 1e-3)
    assert traj.failed and 0.95 < traj.failure_time < 1.05
    assert traj.times[-1] == traj.failure_time
    assert np.isfinite(traj.array()).all()


def test_domain_error_reported():
    sys = ContactHamiltonianSystem(tangent_bundle(1), parse_field("0.5*p1^2 + log(q1)", 1, 1, "hamiltonian"))
    traj = integrate(sys.hamilton_field, State([0.2], [-1.0], 0.0, "hamiltonian"), 2.0, 1e-2)
    assert traj.failed and "DomainError" in traj.message


def test_adaptive_matches_fixed():
    sc = scenario("tb_damped_oscillator_hamiltonian")
    fixed = integrate(sc.system, sc.state0, 5.0, 1e-4, sample_every=50000).final.pack()
    adaptive = adaptive_integrate(sc.system, sc.state0, 5.0, 1e-12)
    assert not adaptive.failed and adaptive.times[-1] == 5.0
    assert np.abs(adaptive.final.pack() - fixed).max() < 1e-8


def test_adaptive_uses_fewer_steps():
    sc = scenario("tb_damped_oscillator_hamiltonian")
    ref = integrate(sc.system, sc.state0, 5.0, 1e-3).final.pack()
    adaptive = adaptive_integrate(sc.system, sc.state0, 5.0, 1e-9)
    err_a = np.abs(adaptive.final.pack() - ref).max()
    # smallest fixed step count reaching the same final error
    for steps in (50, 100, 200, 400, 800, 1600):
        err_f = np.abs(integrate(sc.system, sc.state0, 5.0, 5.0 / steps).final.pack() - ref).max()
        if err_f <= err_a:
            break
    # each adaptive step costs three RK4 steps
    assert 3 * (adaptive.steps + adaptive.rejected) < 3 * steps
    assert adaptive.steps < steps


def test_trivial_field_one_step():
    traj = adaptive_integrate(zero_field, State([1.0], [1.0], 0.0, "hamiltonian"), 10.0, 1e-10)
    assert traj.steps == 1 and traj.rejected == 0
    np.testing.assert_array_equal(traj.times, [0.0, 10.0])


def test_rk4_step_on_linear_ode():
    x = rk4_step(lambda v: -v, np.array([1.0]), 0.1)
    h = 0.1
    assert x[0] == pytest.approx(1 - h + h**2 / 2 - h**3 / 6 + h**4 / 24, abs=2e-16)


def test_invalid_arguments():
    s0 = State([0.0], [0.0], 0.0, "hamiltonian")
    with pytest.raises(ValueError):
        integrate(zero_field, s0, 1.0, 0.0)
    with pytest.raises(ValueError):
        adaptive_integrate(zero_field, s0, 1.0, -1.0)
