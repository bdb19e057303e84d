"""Random twist-compatible fields for property tests and the check suite.

Periodic scalars are low-order trigonometric polynomials (smooth enough for
second-order stencil statements to be clean); section-like fields multiply a
fixed twisted theta carrier per component so the seam rule is exact.
"""

from __future__ import annotations

import numpy as np

from .elliptic import theta_section_values
from .fields import CoTriple, FieldState, Tangent
from .geometry import MomentModel
from .grids import TorusGrid, constant_curvature_connection

__all__ = [
    "random_periodic_scalar",
    "random_section_field",
    "random_tangent",
    "random_cotriple",
    "random_state",
    "vacuum_state",
]


def random_periodic_scalar(grid: TorusGrid, rng: np.random.Generator, kmax: int = 3, amp: float = 1.0) -> np.ndarray:
    S, T = grid.mesh()
    out = np.zeros((grid.N_s, grid.N_t))
    for ks in range(-kmax, kmax + 1):
        for kt in range(-kmax, kmax + 1):
            a, b = rng.standard_normal(2) / (1 + ks * ks + kt * kt)
            arg = 2 * np.pi * (ks * S / grid.L_s + kt * T / grid.L_t)
            out += a * np.cos(arg) + b * np.sin(arg)
    return amp * out / max(1.0, np.max(np.abs(out)))


def _complex_periodic(grid: TorusGrid, rng: np.random.Generator, kmax: int = 3) -> np.ndarray:
    return random_periodic_scalar(grid, rng, kmax) + 1j * random_periodic_scalar(grid, rng, kmax)


def twist_carrier(grid: TorusGrid, weight: int, shift: complex = 0.0) -> np.ndarray:
    """Smooth field obeying the seam rule for a weight-`weight` component.

    A nonzero `shift` translates the carrier's zeros while keeping the seam
    rule exact (the translation's constant seam phase is cancelled by a
    compensating e^{i beta s} factor).
    """
    d = weight * grid.degree
    if d == 0:
        return np.ones((grid.N_s, grid.N_t), dtype=complex)
    S, T = grid.mesh()
    z = S + 1j * T
    F = theta_section_values(z - shift, grid.L_s, grid.L_t, d, 0)
    if shift != 0.0:
        beta = 2.0 * np.pi * d * np.imag(shift) / (grid.L_s * grid.L_t)
        F = F * np.exp(1j * beta * S)
    return F / np.max(np.abs(F))


def random_section_field(model: MomentModel, grid: TorusGrid, rng: np.random.Generator) -> np.ndarray:
    """Random smooth field twisted like u; component zeros are decoupled."""
    comps = []
    for k, wk in enumerate(model.weights):
        shift = k * (0.37 * grid.L_s + 0.61j * grid.L_t)
        carrier = twist_carrier(grid, int(wk), shift)
        comps.append(carrier * (1.0 + 0.45 * _complex_periodic(grid, rng)))
    return np.stack(comps)


def random_tangent(model: MomentModel, grid: TorusGrid, rng: np.random.Generator, amp: float = 1.0) -> Tangent:
    return Tangent(
        amp * random_section_field(model, grid, rng),
        amp * random_periodic_scalar(grid, rng),
        amp * random_periodic_scalar(grid, rng),
    )


def random_cotriple(model: MomentModel, grid: TorusGrid, rng: np.random.Generator, amp: float = 1.0) -> CoTriple:
    return CoTriple(
        amp * random_section_field(model, grid, rng),
        amp * random_periodic_scalar(grid, rng),
        amp * random_periodic_scalar(grid, rng),
    )


def random_state(model: MomentModel, grid: TorusGrid, eps: float, rng: np.random.Generator) -> FieldState:
    """Twist-compatible state near the moment level set, away from u = 0."""
    u = random_section_field(model, grid, rng)
    norm = np.sqrt(np.sum(model.weights[:, None, None] * np.abs(u) ** 2, axis=0))
    u = np.sqrt(model.level) * u / np.maximum(norm, 0.2 * np.max(norm))
    Phi, Psi = constant_curvature_connection(grid)
    Phi = Phi + 0.3 * random_periodic_scalar(grid, rng)
    Psi = Psi + 0.3 * random_periodic_scalar(grid, rng)
    return FieldState(model, grid, u, Phi, Psi, eps)


def vacuum_state(model: MomentModel, grid: TorusGrid, eps: float) -> FieldState:
    """Constant state on the moment level set with A = 0 (degree-0 grids)."""
    if grid.degree != 0:
        raise ValueError("vacuum state requires a degree-0 grid")
    u = np.zeros((model.n, grid.N_s, grid.N_t), dtype=complex)
    u[0] = np.sqrt(model.level / model.weights[0])
    zero = np.zeros((grid.N_s, grid.N_t))
    return FieldState(model, grid, u, zero.copy(), zero.copy(), eps)
