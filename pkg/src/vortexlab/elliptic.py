"""Theta-type sections of twisted bundles and the Weierstrass function.

Sections of the degree-d twisted bundle in our trivialization are entire
functions F(z), z = s + i t, with

    F(z + i L_t) = F(z),
    F(z + L_s)   = exp((2 pi d / L_t) z + c0) F(z),   c0 real,

so Fourier expansion in exp((2 pi / L_t) k z) gives d independent families
k = j (mod d) with Gaussian coefficients; the phase of the multiplier is
exp(i 2 pi d t / L_t), exactly the grid twist, and the modulus drops out of
any pointwise normalization.

The Weierstrass function for the rectangular lattice Z L_s + i Z L_t is
summed over lattice rows,

    wp(z) = (pi/L_s)^2 [ -1/3 + sum_n csc^2(pi (z - i n L_t)/L_s)
                              - sum_{n != 0} csc^2(pi i n L_t / L_s) ],

each row being the exact closed form of the m-sum; the row terms decay like
exp(-2 pi |n| L_t / L_s).  Invariants g2, g3 come from the Eisenstein
q-series.
"""

from __future__ import annotations

import numpy as np

from .fields import FieldState
from .geometry import MomentModel
from .grids import TorusGrid

__all__ = [
    "theta_section",
    "theta_section_values",
    "wp",
    "wp_prime",
    "invariants_g2_g3",
    "holomorphic_seed_torus",
]


def theta_section_values(z: np.ndarray, L_s: float, L_t: float, degree: int, j: int) -> np.ndarray:
    """Evaluate the j-th basis section of the degree-d twisted bundle at z."""
    if degree < 1:
        raise ValueError("theta sections need degree >= 1")
    if not 0 <= j < degree:
        raise ValueError(f"branch index j must lie in [0, {degree}), got {j}")
    z = np.asarray(z, dtype=complex)
    gam = 2.0 * np.pi * L_s / L_t
    c0 = gam * degree / 2.0
    # coefficients log c_{j+dm} = -(gam d / 2) m^2 + (c0 - gam j - gam d / 2) m
    beta = c0 - gam * j - gam * degree / 2.0
    m_star = beta / (gam * degree)
    half_width = int(np.ceil(np.sqrt(2.0 * 700.0 / (gam * degree)))) + 2
    m = np.arange(int(np.floor(m_star)) - half_width, int(np.ceil(m_star)) + half_width + 1)
    logc = -(gam * degree / 2.0) * m**2 + beta * m
    k = j + degree * m
    out = np.zeros(z.shape, dtype=complex)
    for mi in range(len(m)):
        out += np.exp(logc[mi] + (2.0 * np.pi / L_t) * k[mi] * z)
    return out


def theta_section(grid: TorusGrid, j: int = 0, degree: int | None = None) -> np.ndarray:
    """Basis section evaluated on the grid vertices; twist-exact by construction."""
    d = grid.degree if degree is None else degree
    S, T = grid.mesh()
    return theta_section_values(S + 1j * T, grid.L_s, grid.L_t, d, j)


def _csc2(x: np.ndarray) -> np.ndarray:
    return 1.0 / np.sin(x) ** 2


def wp(z: np.ndarray, L_s: float, L_t: float, n_rows: int = 14) -> np.ndarray:
    """Weierstrass wp for the lattice Z L_s + i Z L_t (poles at lattice points)."""
    z = np.asarray(z, dtype=complex)
    a = np.pi / L_s
    rows = sum(_csc2(a * (z - 1j * n * L_t)) for n in range(-n_rows, n_rows + 1))
    const = 2.0 * sum(_csc2(a * 1j * n * L_t) for n in range(1, n_rows + 1))
    return a**2 * (-1.0 / 3.0 + rows - const)


def wp_prime(z: np.ndarray, L_s: float, L_t: float, n_rows: int = 14) -> np.ndarray:
    """Derivative of wp, by differentiating the row sums."""
    z = np.asarray(z, dtype=complex)
    a = np.pi / L_s
    out = np.zeros(z.shape, dtype=complex)
    for n in range(-n_rows, n_rows + 1):
        x = a * (z - 1j * n * L_t)
        out += -2.0 * a * np.cos(x) / np.sin(x) ** 3
    return a**2 * out


def invariants_g2_g3(L_s: float, L_t: float, terms: int = 64) -> tuple[float, float]:
    """g2, g3 from the Eisenstein series E4, E6 at tau = i L_t / L_s."""
    qbar = np.exp(-2.0 * np.pi * L_t / L_s)
    n = np.arange(1, terms + 1)
    sigma3 = np.array([sum(d**3 for d in range(1, k + 1) if k % d == 0) for k in n], dtype=float)
    sigma5 = np.array([sum(d**5 for d in range(1, k + 1) if k % d == 0) for k in n], dtype=float)
    E4 = 1.0 + 240.0 * np.sum(sigma3 * qbar**n)
    E6 = 1.0 - 504.0 * np.sum(sigma5 * qbar**n)
    g2 = (2.0 * np.pi / L_s) ** 4 * E4 / 12.0
    g3 = (2.0 * np.pi / L_s) ** 6 * E6 / 216.0
    return float(g2), float(g3)


def wp_ode_residual(z: np.ndarray, L_s: float, L_t: float) -> np.ndarray:
    """Relative residual of (wp')^2 - (4 wp^3 - g2 wp - g3) at the points z."""
    p = wp(z, L_s, L_t)
    dp = wp_prime(z, L_s, L_t)
    g2, g3 = invariants_g2_g3(L_s, L_t)
    lhs = dp**2
    rhs = 4.0 * p**3 - g2 * p - g3
    scale = np.maximum(np.abs(lhs), np.abs(rhs)) + 1e-30
    return np.abs(lhs - rhs) / scale


def holomorphic_seed_torus(model: MomentModel, grid: TorusGrid, eps: float) -> FieldState:
    """Zero-scale seed from the degree-2 Weierstrass map z -> [wp(z) : 1].

    Lifts the map to the moment level set as u0 = sqrt(r) (h1, h2)/|(h1, h2)|
    with h2 the section with double zero at the lattice point and h1 = wp h2
    expanded in the twisted theta basis, then sets the pullback connection
    A0 = -(Lstar L)^{-1} Lstar du0 with the grid stencils.
    """
    if model.n != 2 or np.any(model.weights != 1):
        raise ValueError("the Weierstrass seed requires n = 2 with unit weights")
    if grid.degree != 2:
        raise ValueError(f"the Weierstrass seed lives on a degree-2 grid, got degree {grid.degree}")
    L_s, L_t = grid.L_s, grid.L_t
    S, T = grid.mesh()
    zg = S + 1j * T

    F0 = theta_section_values(zg, L_s, L_t, 2, 0)
    F1 = theta_section_values(zg, L_s, L_t, 2, 1)
    F0_0 = theta_section_values(np.array(0.0 + 0.0j), L_s, L_t, 2, 0)
    F1_0 = theta_section_values(np.array(0.0 + 0.0j), L_s, L_t, 2, 1)
    h2 = F1_0 * F0 - F0_0 * F1  # even section with double zero at z = 0

    # expand h1 = wp * h2 in the basis; two generic sample points fix the
    # coefficients, a third checks the expansion.
    zs = np.array([0.31 * L_s + 0.21j * L_t, 0.57 * L_s + 0.69j * L_t, 0.13 * L_s + 0.44j * L_t])
    Fs0 = theta_section_values(zs, L_s, L_t, 2, 0)
    Fs1 = theta_section_values(zs, L_s, L_t, 2, 1)
    ws = wp(zs, L_s, L_t)
    h2s = F1_0 * Fs0 - F0_0 * Fs1
    rhs = ws * h2s
    mat = np.array([[Fs0[0], Fs1[0]], [Fs0[1], Fs1[1]]])
    lam_nu = np.linalg.solve(mat, rhs[:2])
    check = abs(lam_nu[0] * Fs0[2] + lam_nu[1] * Fs1[2] - rhs[2]) / (abs(rhs[2]) + 1e-300)
    if check > 1e-8:
        raise ArithmeticError(f"theta expansion of wp*h2 failed consistency check: {check:.2e}")
    h1 = lam_nu[0] * F0 + lam_nu[1] * F1

    norm = np.sqrt(np.abs(h1) ** 2 + np.abs(h2) ** 2)
    u0 = np.sqrt(model.level) * np.stack([h1, h2]) / norm

    lsl = np.sum(model.weights[:, None, None] ** 2 * np.abs(u0) ** 2, axis=0)
    du_s = grid.ds_u(u0, model.weights)
    du_t = grid.dt_u(u0)
    w = model.weights[:, None, None]
    Phi0 = -np.sum(w * np.imag(np.conj(u0) * du_s), axis=0) / lsl
    Psi0 = -np.sum(w * np.imag(np.conj(u0) * du_t), axis=0) / lsl
    return FieldState(model, grid, u0, Phi0, Psi0, eps)
