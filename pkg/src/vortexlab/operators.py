"""Vortex residual, energies, augmented linearization, and exact adjoint.

Local form of the equations on the flat twisted torus (J = i, lambda const):

    del_bar_k = v_{s,k} + i v_{t,k},        v_s = d_s u + i w Phi u,
    curv      = lambda^-2 kappa + eps^-2 mu(u),   kappa = d_s Psi - d_t Phi.

The augmented linearization at (u, A) is

    D_eps (xi, alpha) = ( D xi + L_u phi + i L_u psi,
                          lambda^-2 (d_s phi + d_t psi) + eps^-2 Lstar xi,
                          lambda^-2 (d_s psi - d_t phi) + eps^-2 dmu xi ),

with D xi = cov_ds xi + i cov_dt xi (flat Kaehler: the Hermitian and
Levi-Civita gauged connections coincide and all Nijenhuis/dJ terms vanish).
Its adjoint is computed against inner_eps on tangents and inner_cod on
triples.  Because the central differences are exactly skew and the zeroth
order terms transpose pointwise, the discrete adjoint coincides with the
continuum formula

    D_eps^* (xi', phi', psi') = ( lambda^-2 (-cov_ds xi' + i cov_dt xi')
                                      + L_u phi' + i L_u psi',
                                  eps^-2 Lstar xi' - d_s phi' + d_t psi',
                                  eps^-2 dmu xi' - d_s psi' - d_t phi' ),

and <D_eps z, z'> = <z, D_eps^* z'> holds to machine precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import geometry
from .fields import CoTriple, FieldState, Tangent, inner_cod
from .grids import plaquette_curvature

__all__ = [
    "Residual",
    "residual",
    "residual_cotriple",
    "F_eps",
    "energy_eps",
    "topological_energy",
    "bogomolny_functional",
    "linearize_apply",
    "adjoint_apply",
    "normal_apply",
    "harmonic_projection",
    "quotient_diagnostics",
    "residual_norm",
]


def _w(state: FieldState) -> np.ndarray:
    return state.model.weights[:, None, None]


def cov_ds(state: FieldState, f: np.ndarray) -> np.ndarray:
    """Gauged s-derivative for section-like fields (twisted rolls + i w Phi)."""
    return state.grid.ds_u(f, state.model.weights) + 1j * _w(state) * state.Phi * f


def cov_dt(state: FieldState, f: np.ndarray) -> np.ndarray:
    return state.grid.dt_u(f) + 1j * _w(state) * state.Psi * f


def cov_laplace(state: FieldState, f: np.ndarray) -> np.ndarray:
    """Connection Laplacian nabla* nabla, composed from the first-order stencils."""
    lam2 = state.grid.lam**2
    return -(cov_ds(state, cov_ds(state, f)) + cov_dt(state, cov_dt(state, f))) / lam2


def L_u(state: FieldState, eta: np.ndarray) -> np.ndarray:
    """Infinitesimal action along u: (i w_k eta u_k)_k."""
    return 1j * _w(state) * eta * state.u


def Lstar(state: FieldState, xi: np.ndarray) -> np.ndarray:
    return np.sum(_w(state) * np.imag(np.conj(state.u) * xi), axis=0)


def dmu(state: FieldState, xi: np.ndarray) -> np.ndarray:
    return -np.sum(_w(state) * np.real(np.conj(state.u) * xi), axis=0)


def mu_field(state: FieldState) -> np.ndarray:
    return geometry.moment_map(state.model, state.u)


def lstar_l_field(state: FieldState) -> np.ndarray:
    return np.sum(_w(state) ** 2 * np.abs(state.u) ** 2, axis=0)


@dataclass
class Residual:
    """del_bar (section-valued) and curv (gauge-scalar) residual fields."""

    del_bar: np.ndarray
    curv: np.ndarray


def velocity(state: FieldState) -> tuple[np.ndarray, np.ndarray]:
    v_s = cov_ds(state, state.u)
    v_t = cov_dt(state, state.u)
    return v_s, v_t


def residual(state: FieldState) -> Residual:
    v_s, v_t = velocity(state)
    kappa = plaquette_curvature(state.grid, state.Phi, state.Psi)
    curv = kappa / state.grid.lam**2 + mu_field(state) / state.eps**2
    return Residual(v_s + 1j * v_t, curv)


def residual_cotriple(state: FieldState) -> CoTriple:
    """The nonlinear residual as a codomain triple (slice row vanishes at base)."""
    r = residual(state)
    return CoTriple(r.del_bar, np.zeros_like(r.curv), r.curv)


def residual_norm(state: FieldState) -> float:
    """Codomain (0,2,eps)-norm of the residual triple."""
    F = residual_cotriple(state)
    return float(np.sqrt(inner_cod(state, F, F)))


def F_eps(base: FieldState, zeta: Tangent) -> CoTriple:
    """Full nonlinear map at exp(base, zeta), anchored at base.

    Components: transported del_bar, the linear slice row
    eps^-2 Lstar_{u0} xi - d^* alpha, and the curvature row.  Its derivative
    at zeta = 0 is linearize_apply at the base.
    """
    from .fields import exp_update

    new = exp_update(base, zeta)
    r = residual(new)
    g = base.grid
    slice_row = Lstar(base, zeta.xi) / base.eps**2 + (
        g.ds_scalar(zeta.phi) + g.dt_scalar(zeta.psi)
    ) / g.lam**2
    return CoTriple(r.del_bar, slice_row, r.curv)


def energy_eps(state: FieldState) -> float:
    """E_eps = 1/2 int (|d_A u|^2 + eps^2 |F_A|^2 + eps^-2 |mu|^2) dvol."""
    g, eps = state.grid, state.eps
    v_s, v_t = velocity(state)
    kappa = plaquette_curvature(g, state.Phi, state.Psi)
    mu = mu_field(state)
    dens = (
        np.sum(np.abs(v_s) ** 2 + np.abs(v_t) ** 2, axis=0)
        + eps**2 * kappa**2 / g.lam**2
        + mu**2 * g.lam**2 / eps**2
    )
    return float(0.5 * np.sum(dens) * g.area_weight)


def topological_energy(state: FieldState) -> float:
    """Bulk form int (omega(v_s, v_t) - mu kappa) ds dt; homotopy invariant."""
    g = state.grid
    v_s, v_t = velocity(state)
    omega = np.sum(np.imag(np.conj(v_s) * v_t), axis=0)
    kappa = plaquette_curvature(g, state.Phi, state.Psi)
    return float(np.sum(omega - mu_field(state) * kappa) * g.area_weight)


def bogomolny_functional(state: FieldState) -> float:
    """B_eps = 1/2 int |del_bar|^2 + eps^2/2 int curv^2 lambda^2; equals E_eps - E_top."""
    g = state.grid
    r = residual(state)
    a = 0.5 * np.sum(np.abs(r.del_bar) ** 2)
    b = 0.5 * state.eps**2 * np.sum(r.curv**2) * g.lam**2
    return float((a + b) * g.area_weight)


def linearize_apply(state: FieldState, zeta: Tangent) -> CoTriple:
    """Augmented vertical differential D_eps at the state."""
    g, eps = state.grid, state.eps
    xi, phi, psi = zeta.xi, zeta.phi, zeta.psi
    row1 = cov_ds(state, xi) + 1j * cov_dt(state, xi) + L_u(state, phi) + 1j * L_u(state, psi)
    row2 = (g.ds_scalar(phi) + g.dt_scalar(psi)) / g.lam**2 + Lstar(state, xi) / eps**2
    row3 = (g.ds_scalar(psi) - g.dt_scalar(phi)) / g.lam**2 + dmu(state, xi) / eps**2
    return CoTriple(row1, row2, row3)


def adjoint_apply(state: FieldState, zp: CoTriple) -> Tangent:
    """Exact discrete adjoint of linearize_apply (see module docstring)."""
    g, eps = state.grid, state.eps
    xi_p, phi_p, psi_p = zp.xi, zp.phi, zp.psi
    out_xi = (
        (-cov_ds(state, xi_p) + 1j * cov_dt(state, xi_p)) / g.lam**2
        + L_u(state, phi_p)
        + 1j * L_u(state, psi_p)
    )
    out_phi = Lstar(state, xi_p) / eps**2 - g.ds_scalar(phi_p) + g.dt_scalar(psi_p)
    out_psi = dmu(state, xi_p) / eps**2 - g.ds_scalar(psi_p) - g.dt_scalar(phi_p)
    return Tangent(out_xi, out_phi, out_psi)


def normal_apply(state: FieldState, zp: CoTriple) -> CoTriple:
    """Codomain normal operator D_eps D_eps^*."""
    return linearize_apply(state, adjoint_apply(state, zp))


def harmonic_projection(state: FieldState, xi: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Pointwise projection onto the complement of L_u(g) and J L_u(g).

    pi xi = xi - L (Lstar xi)/(Lstar L) + J L (Lstar J xi)/(Lstar L).
    Raises for vertices where Lstar L degenerates (u too close to a fixed point).
    """
    T = lstar_l_field(state)
    bad = T < tol
    if np.any(bad):
        i, j = np.argwhere(bad)[0]
        raise ValueError(f"harmonic projection singular at vertex ({i}, {j}): |Lstar L| = {T[i, j]:.3e}")
    a = Lstar(state, xi) / T
    b = Lstar(state, 1j * xi) / T
    return xi - L_u(state, a) + 1j * L_u(state, b)


def quotient_diagnostics(state: FieldState) -> dict:
    """Fubini-Study dbar-energy of the projected map plus sup |mu|.

    Requires n >= 2 and unit weights (quotient CP^{n-1}); u must not vanish.
    """
    model, g = state.model, state.grid
    if model.n < 2:
        raise ValueError("quotient diagnostics need n >= 2")
    if np.any(model.weights != 1):
        raise ValueError("quotient diagnostics are restricted to unit weights")
    norm2 = np.sum(np.abs(state.u) ** 2, axis=0)
    if np.min(norm2) <= 0:
        raise ValueError("u vanishes; projection to the quotient undefined")
    dbar = 0.5 * (g.ds_u(state.u, model.weights) + 1j * state.grid.dt_u(state.u))
    proj = dbar - state.u * (np.sum(np.conj(state.u) * dbar, axis=0) / norm2)
    dens = 4.0 * model.level * np.sum(np.abs(proj) ** 2, axis=0) / norm2
    return {
        "dbar_fs": float(np.sum(dens) * g.area_weight),
        "dist_mu0": float(np.max(np.abs(mu_field(state)))),
    }
