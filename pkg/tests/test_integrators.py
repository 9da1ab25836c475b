import numpy as np
import pytest

from jmgtlab.errors import ConfigError, ConvergenceError
from jmgtlab.integrators import (FixedPointSettings, SemiDiscreteSystem, State, TimeGrid,
                                 fixed_point_solve, initialize_state, march, newmark2_step,
                                 newmark3_step)
from jmgtlab.models import (WATER, ForcingSpec, InitialData, MediumParams, ModelKind,
                            derive_coefficients, project_initial_data)
from jmgtlab.oracles import galerkin_mode, manufactured_case
from jmgtlab.splines import assemble, build_basis

L = 0.2


@pytest.fixture(scope="module")
def ops():
    return assemble(build_basis(2, 40, (0.0, L)))


@pytest.fixture(scope="module")
def full_ops():
    return assemble(build_basis(2, 249, (0.0, L)))


def linear_system(ops, kind, tau=0.0, medium=WATER, forcing=ForcingSpec()):
    return SemiDiscreteSystem(ops, derive_coefficients(medium, kind, tau, nonlinear=False), forcing)


@pytest.mark.parametrize("kind,tau", [(ModelKind.KUZNETSOV, 0.0), (ModelKind.JMGT_KUZNETSOV, 1e-7)])
def test_zero_state_stays_zero(ops, kind, tau):
    system = SemiDiscreteSystem(ops, derive_coefficients(WATER, kind, tau))
    z = np.zeros(system.n)
    s = initialize_state(system, z, z, z)
    traj = march(system, s, TimeGrid(1e-7, 20))
    for arr in (traj.psi, traj.psi_t, traj.psi_tt):
        assert not arr.any()
    assert (traj.iterations == 1).all()


def _manufactured_run(ops, kind, tau, case, n_steps, final_time=2e-5):
    co = derive_coefficients(WATER, kind, tau, nonlinear=False)
    mc = manufactured_case(case, co, L, amplitude=1e9)
    system = SemiDiscreteSystem(ops, co, ForcingSpec(mc.forcing), third_order=kind.third_order)
    # start from the spatial Galerkin solution's own data: the projection of x -> sin
    data = InitialData(lambda x: mc.psi(x, 0.0), lambda x: mc.psi_t(x, 0.0),
                       lambda x: mc.psi_tt(x, 0.0))
    s0 = initialize_state(system, *project_initial_data(ops.basis, data))
    return march(system, s0, TimeGrid.from_final_time(final_time, n_steps), stride=n_steps)


@pytest.mark.parametrize("kind,tau,case", [(ModelKind.WESTERVELT, 0.0, "sine-t2"),
                                           (ModelKind.JMGT_WESTERVELT, 1e-7, "sine-t3")])
def test_polynomial_in_time_is_integrated_exactly(ops, kind, tau, case):
    # the semidiscrete solution of a sin(x) p(t) problem is v p(t) with a fixed
    # vector v when p has degree 2 (3) and the Newmark relations are exact for it:
    # the final state must not depend on the step count
    a = _manufactured_run(ops, kind, tau, case, 10).final.psi
    b = _manufactured_run(ops, kind, tau, case, 37).final.psi
    assert np.linalg.norm(a - b) <= 1e-10 * np.linalg.norm(a)


def test_single_undamped_mode_conserves_modal_energy(ops):
    medium = MediumParams(c=1500.0, delta=0.0, rho0=1000.0, B_over_A=5.0)
    system = linear_system(ops, ModelKind.WESTERVELT, medium=medium)
    lam, v = galerkin_mode(ops, 2)
    s = initialize_state(system, v, 0.3 * 1500.0 * np.sqrt(lam) * v)
    M = ops.M_free

    def modal_energy(st):
        a = M.matvec(v) @ st.psi
        da = M.matvec(v) @ st.psi_t
        return 0.5 * (da ** 2 + 1500.0 ** 2 * lam * a ** 2)

    e0 = modal_energy(s)
    for _ in range(50):
        s, info = newmark2_step(system, s, 2e-7)
        assert info.iterations == 1
    assert modal_energy(s) == pytest.approx(e0, rel=1e-12)


def test_max_iter_zero_raises(ops):
    system = linear_system(ops, ModelKind.WESTERVELT)
    z = np.zeros(system.n)
    s = initialize_state(system, z, z)
    with pytest.raises(ConvergenceError):
        newmark2_step(system, s, 1e-7, fp=FixedPointSettings(max_iter=0))


def test_fixed_point_reports_last_increment():
    with pytest.raises(ConvergenceError) as info:
        fixed_point_solve(lambda x: x + 1.0, np.zeros(3), FixedPointSettings(max_iter=4), t=2.0)
    assert info.value.iterations == 4
    x, it = fixed_point_solve(lambda x: 0.5 * x + 1.0, np.zeros(2), FixedPointSettings())
    np.testing.assert_allclose(x, 2.0, rtol=1e-7)
    assert 20 < it < 40


def test_wrong_integrator_for_model(ops):
    sys2 = linear_system(ops, ModelKind.WESTERVELT)
    sys3 = linear_system(ops, ModelKind.JMGT_WESTERVELT, 1e-7)
    z = np.zeros(sys2.n)
    with pytest.raises(ConfigError):
        newmark3_step(sys2, State(0.0, z, z, z, z), 1e-7)
    with pytest.raises(ConfigError):
        newmark2_step(sys3, State(0.0, z, z, z, z), 1e-7)


@pytest.mark.parametrize("kind,tau", [(ModelKind.WESTERVELT, 0.0), (ModelKind.JMGT_KUZNETSOV, 1e-7)])
def test_linearity(full_ops, kind, tau):
    system = linear_system(full_ops, kind, tau)
    data = project_initial_data(full_ops.basis, InitialData.gaussian_pressure(8e4))
    grid = TimeGrid(45e-6 / 800, 60)
    t1 = march(system, initialize_state(system, *data), grid)
    t2 = march(system, initialize_state(system, *(2.0 * d for d in data)), grid)
    np.testing.assert_allclose(t2.psi, 2.0 * t1.psi, rtol=1e-13, atol=1e-13 * np.abs(t1.psi).max())
    np.testing.assert_allclose(t2.psi_t, 2.0 * t1.psi_t, rtol=1e-13,
                               atol=1e-13 * np.abs(t1.psi_t).max())


def test_nonlinear_run_is_bit_deterministic(full_ops):
    system = SemiDiscreteSystem(full_ops, derive_coefficients(WATER, ModelKind.JMGT_KUZNETSOV, 1e-7))
    data = project_initial_data(full_ops.basis, InitialData.gaussian_pressure(1.2e5))
    grid = TimeGrid(45e-6 / 800, 40)
    a = march(system, initialize_state(system, *data), grid)
    b = march(system, initialize_state(system, *data), grid)
    assert a.psi.tobytes() == b.psi.tobytes() and a.psi_ttt.tobytes() == b.psi_ttt.tobytes()
    assert (a.iterations > 1).all()


def test_kinematic_relations_after_nonlinear_steps(full_ops):
    dt = 45e-6 / 800
    system = SemiDiscreteSystem(full_ops, derive_coefficients(WATER, ModelKind.JMGT_WESTERVELT, 1e-7))
    data = project_initial_data(full_ops.basis, InitialData.gaussian_pressure(1.2e5))
    s = initialize_state(system, *data)
    for _ in range(10):
        n, _ = newmark3_step(system, s, dt)
        jerk = 0.5 * (s.psi_ttt + n.psi_ttt)
        np.testing.assert_allclose(n.psi_tt, s.psi_tt + dt * jerk, rtol=1e-12,
                                   atol=1e-12 * np.abs(n.psi_tt).max())
        np.testing.assert_allclose(
            n.psi_t, s.psi_t + dt * s.psi_tt + dt * dt / 2 * (0.5 * s.psi_ttt + 0.5 * n.psi_ttt),
            rtol=1e-12, atol=1e-12 * np.abs(n.psi_t).max())
        s = n


def test_jmgt_initial_jerk(full_ops):
    co = derive_coefficients(WATER, ModelKind.JMGT_WESTERVELT, 1e-7)
    system = SemiDiscreteSystem(full_ops, co)
    psi0, psi1, psi2 = project_initial_data(full_ops.basis, InitialData.gaussian_pressure(8e4))
    s = initialize_state(system, psi0, psi1, psi2)
    # tau M j = -b K psi1 when psi0 = psi2 = 0
    expected = np.linalg.solve(co.tau * full_ops.M_free.to_dense(),
                               -co.b * full_ops.K_free.matvec(psi1))
    np.testing.assert_allclose(s.psi_ttt, expected, rtol=1e-9, atol=1e-9 * np.abs(expected).max())
    assert not s.psi_tt.any()


def test_westervelt_initial_acceleration_of_a_sine(full_ops):
    medium = MediumParams(c=1500.0, delta=0.0, rho0=1000.0, B_over_A=5.0)
    system = linear_system(full_ops, ModelKind.WESTERVELT, medium=medium)
    kx = np.pi / L
    psi0 = project_initial_data(full_ops.basis, InitialData(psi0=lambda x: np.sin(kx * x)))[0]
    s = initialize_state(system, psi0, np.zeros_like(psi0))
    np.testing.assert_allclose(s.psi_tt, -(1500.0 * kx) ** 2 * psi0, rtol=1e-5,
                               atol=1e-6 * (1500.0 * kx) ** 2)


def test_affine_system_factors_once(ops):
    system = linear_system(ops, ModelKind.JMGT_WESTERVELT, 1e-7)
    lam, v = galerkin_mode(ops, 1)
    s = initialize_state(system, v, 0 * v, -2.25e6 * lam * v)
    march(system, s, TimeGrid(1e-7, 30))
    assert len(system._cache) == 1


def test_trajectory_stride(ops):
    system = linear_system(ops, ModelKind.WESTERVELT)
    lam, v = galerkin_mode(ops, 1)
    s = initialize_state(system, v, 0 * v)
    full = march(system, s, TimeGrid(1e-7, 12))
    thin = march(system, s, TimeGrid(1e-7, 12), stride=4)
    assert thin.n_snapshots == 4
    np.testing.assert_array_equal(thin.psi, full.psi[::4])
    with pytest.raises(ConfigError):
        march(system, s, TimeGrid(1e-7, 12), stride=5)
