import numpy as np
import pytest

from vortexlab import operators as ops
from vortexlab.fields import GaugeTransform, Tangent, gauge_apply, inner_cod, inner_eps, norm_eps
from vortexlab.grids import TorusGrid
from vortexlab.sampling import (
    random_cotriple,
    random_periodic_scalar,
    random_section_field,
    random_state,
    random_tangent,
    vacuum_state,
)


def test_residual_vacuum(model2, grid16_d0):
    state = vacuum_state(model2, grid16_d0, 0.4)
    r = ops.residual(state)
    assert np.max(np.abs(r.del_bar)) == 0.0
    assert np.max(np.abs(r.curv)) == 0.0
    assert ops.energy_eps(state) == 0.0
    assert ops.topological_energy(state) == 0.0


def test_residual_zero_section(model2, grid16_d0):
    # u = 0: del_bar = 0 and curv = eps^-2 mu(0) = +eps^-2 r/2 (flipped-sign
    # moment map; see decisions ledger).
    eps = 0.5
    state = vacuum_state(model2, grid16_d0, eps)
    state.u[:] = 0.0
    r = ops.residual(state)
    assert np.max(np.abs(r.del_bar)) == 0.0
    assert np.allclose(r.curv, 0.5 * model2.level / eps**2)
    # only the mu term contributes: E = (r^2/8 eps^2) Vol
    vol = grid16_d0.L_s * grid16_d0.L_t
    assert ops.energy_eps(state) == pytest.approx(model2.level**2 / (8 * eps**2) * vol)


def test_residual_gauge_covariance_constant(state2):
    g = GaugeTransform(np.full((state2.grid.N_s, state2.grid.N_t), 0.77))
    new = gauge_apply(g, state2)
    r1, r2 = ops.residual(state2), ops.residual(new)
    w = state2.model.weights[:, None, None]
    assert np.max(np.abs(r2.del_bar - np.exp(-1j * w * 0.77) * r1.del_bar)) < 1e-12
    assert np.max(np.abs(r2.curv - r1.curv)) < 1e-12
    assert ops.residual_norm(new) == pytest.approx(ops.residual_norm(state2), rel=1e-12)


def test_bogomolny_identity_random(model2, grid16_d1, rng):
    for _ in range(5):
        s = random_state(model2, grid16_d1, rng.uniform(0.1, 1.0), rng)
        assert ops.energy_eps(s) - ops.topological_energy(s) == pytest.approx(
            ops.bogomolny_functional(s), rel=1e-12
        )


def test_topological_energy_gauge_invariant_constant(state2):
    g = GaugeTransform(np.full((state2.grid.N_s, state2.grid.N_t), 2.1))
    assert ops.topological_energy(gauge_apply(g, state2)) == pytest.approx(
        ops.topological_energy(state2), abs=1e-10
    )


def test_linearize_zero(state2, model2):
    z = Tangent.zeros(model2, state2.grid)
    out = ops.linearize_apply(state2, z)
    assert np.max(np.abs(out.xi)) == 0.0
    assert np.max(np.abs(out.phi)) == 0.0


def test_exact_adjointness(state2, model2, rng):
    for eps in (1.0, 0.1, 0.01):
        s = state2.with_eps(eps)
        for _ in range(15):
            z = random_tangent(model2, s.grid, rng)
            zp = random_cotriple(model2, s.grid, rng)
            a = inner_cod(s, ops.linearize_apply(s, z), zp)
            b = inner_eps(s, z, ops.adjoint_apply(s, zp))
            scale = norm_eps(s, z, 0, 2) * norm_eps(s, zp, 0, 2)
            assert abs(a - b) <= 1e-10 * scale


def test_fd_consistency(state2, model2, rng):
    t = 1e-5
    for _ in range(5):
        z = random_tangent(model2, state2.grid, rng)
        fd = (ops.F_eps(state2, t * z) - ops.F_eps(state2, (-t) * z)) * (1.0 / (2 * t))
        Dz = ops.linearize_apply(state2, z)
        diff = fd - Dz
        rel = np.sqrt(inner_cod(state2, diff, diff) / inner_cod(state2, Dz, Dz))
        assert rel <= 1e-6


def test_pure_gauge_first_row_small_on_solutions(model1, rng):
    # D (pure gauge) has first component of the size of the dbar residual
    from vortexlab.solvers import descend, newton_solve, theta_vortex_seed

    grid = TorusGrid(L_s=2 * np.pi, L_t=2 * np.pi, N_s=16, N_t=16, degree=1)
    seed = theta_vortex_seed(model1, grid, 0.3)
    st, _ = descend(seed, steps=40)
    sol, _ = newton_solve(st, tol=1e-10)
    from vortexlab.gauge import gauge_direction

    eta = random_periodic_scalar(grid, rng)
    out = ops.linearize_apply(sol, gauge_direction(sol, eta))
    scale = np.max(np.abs(ops.L_u(sol, eta))) / sol.grid.h_s
    assert np.max(np.abs(out.xi)) <= 0.1 * scale  # discretization-level remainder


def test_delta_eps_block_exact(state2, model2, rng):
    g = state2.grid
    phi = random_periodic_scalar(g, rng)
    psi = random_periodic_scalar(g, rng)
    z = Tangent(np.zeros_like(state2.u), phi, psi)
    out = ops.adjoint_apply(state2, ops.linearize_apply(state2, z))
    lsl = ops.lstar_l_field(state2)
    lap = lambda f: -(g.ds_scalar(g.ds_scalar(f)) + g.dt_scalar(g.dt_scalar(f))) / g.lam**2
    ref_phi = lap(phi) + lsl * phi / state2.eps**2
    ref_psi = lap(psi) + lsl * psi / state2.eps**2
    scale = max(np.max(np.abs(ref_phi)), np.max(np.abs(ref_psi)))
    assert np.max(np.abs(out.phi - ref_phi)) <= 1e-12 * scale
    assert np.max(np.abs(out.psi - ref_psi)) <= 1e-12 * scale


def test_harmonic_projection(state2, model2, rng):
    eta = random_periodic_scalar(state2.grid, rng)
    xi = random_section_field(model2, state2.grid, rng)
    assert np.max(np.abs(ops.harmonic_projection(state2, ops.L_u(state2, eta)))) < 1e-12
    assert np.max(np.abs(ops.harmonic_projection(state2, 1j * ops.L_u(state2, eta)))) < 1e-12
    p1 = ops.harmonic_projection(state2, xi)
    p2 = ops.harmonic_projection(state2, p1)
    assert np.max(np.abs(p1 - p2)) < 1e-12 * np.max(np.abs(xi))


def test_harmonic_projection_singular_reports_location(model2, grid16_d0):
    state = vacuum_state(model2, grid16_d0, 0.3)
    state.u[:, 3, 5] = 0.0
    with pytest.raises(ValueError, match=r"\(3, 5\)"):
        ops.harmonic_projection(state, state.u.copy())


def test_quotient_diagnostics_constant(model2, grid16_d0):
    state = vacuum_state(model2, grid16_d0, 0.3)
    q = ops.quotient_diagnostics(state)
    assert q["dbar_fs"] == pytest.approx(0.0, abs=1e-14)
    assert q["dist_mu0"] == pytest.approx(0.0, abs=1e-14)


def test_quotient_diagnostics_holomorphic_lift(model2):
    from vortexlab.elliptic import holomorphic_seed_torus

    errs = []
    for N in (16, 32):
        grid = TorusGrid(L_s=2 * np.pi, L_t=2 * np.pi, N_s=N, N_t=N, degree=2)
        seed = holomorphic_seed_torus(model2, grid, 0.3)
        q = ops.quotient_diagnostics(seed)
        assert q["dist_mu0"] < 1e-12
        errs.append(q["dbar_fs"])
    assert errs[0] / errs[1] > 3.0  # O(h^2) decay of the discrete dbar energy


def test_quotient_diagnostics_errors(model1, grid16_d0, model2):
    state1 = vacuum_state(model1, grid16_d0, 0.3)
    with pytest.raises(ValueError):
        ops.quotient_diagnostics(state1)
    state = vacuum_state(model2, grid16_d0, 0.3)
    state.u[:, 0, 0] = 0.0
    with pytest.raises(ValueError):
        ops.quotient_diagnostics(state)
