import numpy as np
import pytest

from qnslab import (
    EulerReference,
    EulerSolverError,
    ScalarField,
    divergence,
    euler_residual,
    euler_solve,
    norm,
    pressure_recover,
    taylor_green,
    vector_field,
)


def test_taylor_green_divergence_free(grid64):
    tg = taylor_green(grid64)
    assert np.abs(divergence(tg.v).values).max() < 1e-12


def test_taylor_green_residual(grid64):
    assert euler_residual(taylor_green(grid64)) < 1e-10


def test_taylor_green_kinetic_norm(grid64):
    tg = taylor_green(grid64)
    assert norm(tg.v, 2, 0) ** 2 == pytest.approx(2 * np.pi ** 2, rel=1e-12)


def test_pressure_recover_matches_steady_pressure(grid64):
    tg = taylor_green(grid64)
    pi = pressure_recover(tg.v)
    assert np.abs(pi.values - tg.pi.values).max() < 1e-10
    assert abs(pi.mean()) < 1e-14


def test_pressure_recover_trivial_fields(grid64):
    zero = vector_field(grid64, np.zeros_like(grid64.x), np.zeros_like(grid64.x))
    assert np.abs(pressure_recover(zero).values).max() == 0.0
    rigid = vector_field(grid64, np.full_like(grid64.x, 0.7), np.full_like(grid64.x, -1.2))
    assert np.abs(pressure_recover(rigid).values).max() < 1e-11


def test_euler_residual_zero_state(grid64):
    zero = vector_field(grid64, np.zeros_like(grid64.x), np.zeros_like(grid64.x))
    ref = EulerReference(v=zero, pi=ScalarField(grid64, np.zeros_like(grid64.x)), steady=True)
    assert euler_residual(ref) == 0.0


def test_euler_solve_zero_stays_zero(grid64):
    zero = vector_field(grid64, np.zeros_like(grid64.x), np.zeros_like(grid64.x))
    traj = euler_solve(zero, t_end=0.05, dt=0.01)
    assert np.abs(traj[-1].v.x.values).max() == 0.0


def test_euler_solve_taylor_green_short_stationarity(grid64):
    tg = taylor_green(grid64)
    traj = euler_solve(tg.v, t_end=0.2, dt=2e-3, record_every=100)
    drift = norm(
        vector_field(
            grid64,
            traj[-1].v.x.values - tg.v.x.values,
            traj[-1].v.y.values - tg.v.y.values,
        ),
        2,
        0,
    )
    assert drift < 1e-8


def test_euler_solve_conserves_energy_and_enstrophy(grid64, rng):
    from qnslab import curl, helmholtz_project, random_band_limited

    w = vector_field(
        grid64,
        random_band_limited(grid64, 4, rng, 1.0).values,
        random_band_limited(grid64, 4, rng, 1.0).values,
    )
    v0, _ = helmholtz_project(w)
    traj = euler_solve(v0, t_end=0.3, dt=2e-3, record_every=50)
    e0 = 0.5 * norm(v0, 2, 0) ** 2
    z0 = 0.5 * norm(curl(v0), 2, 0) ** 2
    for ref in traj[1:]:
        e = 0.5 * norm(ref.v, 2, 0) ** 2
        z = 0.5 * norm(curl(ref.v), 2, 0) ** 2
        assert abs(e - e0) / e0 < 1e-8
        assert abs(z - z0) / z0 < 1e-8
        assert norm(divergence(ref.v), 2, 0) < 1e-10 * norm(ref.v, 2, 0)


def test_euler_solve_rejects_cfl_violation(grid64):
    tg = taylor_green(grid64)
    with pytest.raises(EulerSolverError, match="CFL"):
        euler_solve(tg.v, t_end=1.0, dt=0.2)


def test_euler_solve_rejects_divergent_initial_velocity(grid64):
    w = vector_field(grid64, np.cos(grid64.x), np.zeros_like(grid64.x))
    with pytest.raises(EulerSolverError, match="solenoidal"):
        euler_solve(w, t_end=0.1, dt=1e-3)


def test_euler_solve_rejects_above_cutoff_content(grid64):
    k = 64 // 2 - 2
    w = vector_field(grid64, np.sin(k * grid64.y), np.zeros_like(grid64.x))
    assert np.abs(divergence(w).values).max() < 1e-10
    with pytest.raises(EulerSolverError, match="cutoff"):
        euler_solve(w, t_end=0.1, dt=1e-4)


def test_euler_residual_of_solver_output(grid64, rng):
    from qnslab import helmholtz_project, random_band_limited

    w = vector_field(
        grid64,
        random_band_limited(grid64, 3, rng, 1.0).values,
        random_band_limited(grid64, 3, rng, 1.0).values,
    )
    v0, _ = helmholtz_project(w)
    traj = euler_solve(v0, t_end=0.1, dt=1e-3, record_every=100)
    assert euler_residual(traj[-1], dt_probe=1e-4) < 1e-6
