"""Configurations (u, A, eps), tangent data, gauge action, and eps-norms.

Tangent pairs zeta = (xi, alpha) carry the eps-weighted inner product

    <zeta1, zeta2>_eps = int <xi1, xi2> dvol + eps^2 int (phi1 phi2 + psi1 psi2) ds dt,

(the lambda factors of the one-form metric cancel against the volume form),
and codomain triples zeta' = (xi', phi', psi') carry twice the standard
product on the (0,1)-part plus eps^2-weighted scalars,

    <z1', z2'>_cod = int Re(conj(X1) X2) ds dt + eps^2 int (phi' phi' + psi' psi') dvol,

where X is the stored field ("twice the ds-coefficient" of the (0,1)-form).
The (k,p,eps)-norms combine the eps-weighted blocks in quadrature so that
norm(zeta, 0, 2)^2 equals <zeta, zeta>_eps exactly.
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass

import numpy as np

from .geometry import MomentModel
from .grids import TorusGrid

__all__ = [
    "FieldState",
    "Tangent",
    "CoTriple",
    "GaugeTransform",
    "gauge_apply",
    "gauge_apply_tangent",
    "exp_update",
    "inner_eps",
    "inner_cod",
    "norm_eps",
    "save_snapshot",
    "load_snapshot",
]

SNAPSHOT_MAGIC = b"VORTX1"


@dataclass
class FieldState:
    """A pair (u, A) in the twisted trivialization together with the scale eps."""

    model: MomentModel
    grid: TorusGrid
    u: np.ndarray      # complex, (n, N_s, N_t)
    Phi: np.ndarray    # real, (N_s, N_t)
    Psi: np.ndarray    # real, (N_s, N_t)
    eps: float

    def __post_init__(self):
        n, g = self.model.n, self.grid
        self.u = np.ascontiguousarray(self.u, dtype=complex)
        self.Phi = np.ascontiguousarray(self.Phi, dtype=float)
        self.Psi = np.ascontiguousarray(self.Psi, dtype=float)
        if self.u.shape != (n, g.N_s, g.N_t):
            raise ValueError(f"u has shape {self.u.shape}, expected {(n, g.N_s, g.N_t)}")
        if self.Phi.shape != (g.N_s, g.N_t) or self.Psi.shape != (g.N_s, g.N_t):
            raise ValueError("gauge fields must have shape (N_s, N_t)")
        if not self.eps > 0:
            raise ValueError("eps must be positive")

    def copy(self) -> "FieldState":
        return FieldState(self.model, self.grid, self.u.copy(), self.Phi.copy(), self.Psi.copy(), self.eps)

    def with_eps(self, eps: float) -> "FieldState":
        return FieldState(self.model, self.grid, self.u.copy(), self.Phi.copy(), self.Psi.copy(), eps)


@dataclass
class Tangent:
    """zeta = (xi, alpha): xi twisted like u; alpha = phi ds + psi dt periodic."""

    xi: np.ndarray
    phi: np.ndarray
    psi: np.ndarray

    def copy(self) -> "Tangent":
        return Tangent(self.xi.copy(), self.phi.copy(), self.psi.copy())

    def __add__(self, other: "Tangent") -> "Tangent":
        return Tangent(self.xi + other.xi, self.phi + other.phi, self.psi + other.psi)

    def __sub__(self, other: "Tangent") -> "Tangent":
        return Tangent(self.xi - other.xi, self.phi - other.phi, self.psi - other.psi)

    def __mul__(self, c: float) -> "Tangent":
        return Tangent(c * self.xi, c * self.phi, c * self.psi)

    __rmul__ = __mul__

    @staticmethod
    def zeros(model: MomentModel, grid: TorusGrid) -> "Tangent":
        return Tangent(
            np.zeros((model.n, grid.N_s, grid.N_t), dtype=complex),
            np.zeros((grid.N_s, grid.N_t)),
            np.zeros((grid.N_s, grid.N_t)),
        )


@dataclass
class CoTriple:
    """zeta' = (xi', phi', psi'); xi' stores twice the ds-coefficient."""

    xi: np.ndarray
    phi: np.ndarray
    psi: np.ndarray

    def copy(self) -> "CoTriple":
        return CoTriple(self.xi.copy(), self.phi.copy(), self.psi.copy())

    def __add__(self, other: "CoTriple") -> "CoTriple":
        return CoTriple(self.xi + other.xi, self.phi + other.phi, self.psi + other.psi)

    def __sub__(self, other: "CoTriple") -> "CoTriple":
        return CoTriple(self.xi - other.xi, self.phi - other.phi, self.psi - other.psi)

    def __mul__(self, c: float) -> "CoTriple":
        return CoTriple(c * self.xi, c * self.phi, c * self.psi)

    __rmul__ = __mul__

    @staticmethod
    def zeros(model: MomentModel, grid: TorusGrid) -> "CoTriple":
        return CoTriple(
            np.zeros((model.n, grid.N_s, grid.N_t), dtype=complex),
            np.zeros((grid.N_s, grid.N_t)),
            np.zeros((grid.N_s, grid.N_t)),
        )


@dataclass
class GaugeTransform:
    """g = e^{i theta} with theta a periodic real vertex field."""

    theta: np.ndarray

    def inverse(self) -> "GaugeTransform":
        return GaugeTransform(-self.theta)


def gauge_apply(g: GaugeTransform, state: FieldState) -> FieldState:
    """g*(u, A): u_k -> e^{-i w_k theta} u_k, Phi -> Phi + d_s theta, Psi -> Psi + d_t theta."""
    grid, w = state.grid, state.model.weights
    phase = np.exp(-1j * w[:, None, None] * g.theta[None, :, :])
    return FieldState(
        state.model,
        grid,
        phase * state.u,
        state.Phi + grid.ds_scalar(g.theta),
        state.Psi + grid.dt_scalar(g.theta),
        state.eps,
    )


def gauge_apply_tangent(g: GaugeTransform, state: FieldState, zeta: Tangent) -> Tangent:
    """Transport a tangent pair: xi rotates like u, alpha is invariant (abelian)."""
    w = state.model.weights
    phase = np.exp(-1j * w[:, None, None] * g.theta[None, :, :])
    return Tangent(phase * zeta.xi, zeta.phi.copy(), zeta.psi.copy())


def exp_update(state: FieldState, zeta: Tangent) -> FieldState:
    """Flat exponential: (u + xi, Phi + phi, Psi + psi), same eps."""
    return FieldState(
        state.model, state.grid,
        state.u + zeta.xi, state.Phi + zeta.phi, state.Psi + zeta.psi,
        state.eps,
    )


def inner_eps(state: FieldState, z1: Tangent, z2: Tangent) -> float:
    """Domain inner product <z1, z2>_eps (lambda^2 on xi, eps^2 on alpha)."""
    g = state.grid
    a = np.sum(np.real(np.conj(z1.xi) * z2.xi)) * g.lam**2
    b = np.sum(z1.phi * z2.phi + z1.psi * z2.psi)
    return float((a + state.eps**2 * b) * g.area_weight)


def inner_cod(state: FieldState, z1: CoTriple, z2: CoTriple) -> float:
    """Codomain product: twice-standard on the (0,1)-part, eps^2 on the scalars."""
    g = state.grid
    a = np.sum(np.real(np.conj(z1.xi) * z2.xi))
    b = np.sum(z1.phi * z2.phi + z1.psi * z2.psi) * g.lam**2
    return float((a + state.eps**2 * b) * g.area_weight)


def _lp(grid: TorusGrid, pointwise: np.ndarray, p, lam_power: int = 2) -> float:
    """L^p norm of a nonnegative pointwise magnitude against lambda^q dvol."""
    if p == np.inf or p == "inf":
        return float(np.max(pointwise))
    w = grid.lam**lam_power * grid.area_weight
    return float((np.sum(pointwise**p) * w) ** (1.0 / p))


def _xi_block_norms(state: FieldState, xi: np.ndarray, k: int, p) -> float:
    """||xi||_{k,p,eps} for a section-like field, derivatives via the gauged stencils."""
    from . import operators as ops  # local import to avoid a cycle

    g, eps = state.grid, state.eps
    mag = np.sqrt(np.sum(np.abs(xi) ** 2, axis=0))
    terms = [_lp(g, mag, p)]
    if k >= 1:
        ds = ops.cov_ds(state, xi)
        dt = ops.cov_dt(state, xi)
        grad = np.sqrt(np.sum(np.abs(ds) ** 2 + np.abs(dt) ** 2, axis=0)) / g.lam
        terms.append(eps * _lp(g, grad, p))
    if k >= 2:
        lap = ops.cov_laplace(state, xi)
        lmag = np.sqrt(np.sum(np.abs(lap) ** 2, axis=0))
        terms.append(eps**2 * _lp(g, lmag, p))
    return float(np.sqrt(np.sum(np.square(terms))))


def _alpha_block_norms(state: FieldState, phi: np.ndarray, psi: np.ndarray, k: int, p) -> float:
    """||alpha||_{k,p,eps} for a one-form, d/d* blocks via exact stencils."""
    g, eps = state.grid, state.eps
    mag = np.sqrt(phi**2 + psi**2) / g.lam
    terms = [_lp(g, mag, p)]
    if k >= 1:
        d_a = (g.ds_scalar(psi) - g.dt_scalar(phi)) / g.lam**2
        dstar = -(g.ds_scalar(phi) + g.dt_scalar(psi)) / g.lam**2
        terms.append(eps * _lp(g, np.abs(d_a), p))
        terms.append(eps * _lp(g, np.abs(dstar), p))
    if k >= 2:
        d_a = (g.ds_scalar(psi) - g.dt_scalar(phi)) / g.lam**2
        dstar = -(g.ds_scalar(phi) + g.dt_scalar(psi)) / g.lam**2
        hphi = g.dt_scalar(d_a) + g.ds_scalar(dstar)
        hpsi = -g.ds_scalar(d_a) + g.dt_scalar(dstar)
        hodge = np.sqrt(hphi**2 + hpsi**2) / g.lam
        terms.append(eps**2 * _lp(g, hodge, p))
    return float(np.sqrt(np.sum(np.square(terms))))


def norm_eps(state: FieldState, zeta, k: int = 0, p=2) -> float:
    """(k,p,eps)-norm of a Tangent or CoTriple; blocks combined in quadrature.

    Gauge invariant up to the O(h^2) covariance of the stencils; exactly
    invariant under constant gauge rotations.  For k = 0, p = 2 on a Tangent
    this is sqrt(inner_eps(zeta, zeta)).
    """
    if k not in (0, 1, 2):
        raise ValueError(f"unsupported derivative order k={k}")
    if p != np.inf and not (isinstance(p, (int, float)) and p >= 2):
        raise ValueError(f"unsupported integrability p={p}")
    eps = state.eps
    if isinstance(zeta, Tangent):
        nxi = _xi_block_norms(state, zeta.xi, k, p)
        nal = _alpha_block_norms(state, zeta.phi, zeta.psi, k, p)
        return float(np.sqrt(nxi**2 + (eps * nal)**2))
    if isinstance(zeta, CoTriple):
        nxi = _xi_block_norms(state, zeta.xi, k, p)
        nph = _scalar_block_norms(state, zeta.phi, k, p)
        nps = _scalar_block_norms(state, zeta.psi, k, p)
        return float(np.sqrt(nxi**2 + (eps * nph)**2 + (eps * nps)**2))
    raise TypeError(f"expected Tangent or CoTriple, got {type(zeta)!r}")


def _scalar_block_norms(state: FieldState, f: np.ndarray, k: int, p) -> float:
    """||eta||_{k,p,eps} for a Lie-algebra scalar (abelian: plain derivatives)."""
    g, eps = state.grid, state.eps
    terms = [_lp(g, np.abs(f), p)]
    if k >= 1:
        grad = np.sqrt(g.ds_scalar(f) ** 2 + g.dt_scalar(f) ** 2) / g.lam
        terms.append(eps * _lp(g, grad, p))
    if k >= 2:
        lap = -(g.ds_scalar(g.ds_scalar(f)) + g.dt_scalar(g.dt_scalar(f))) / g.lam**2
        terms.append(eps**2 * _lp(g, np.abs(lap), p))
    return float(np.sqrt(np.sum(np.square(terms))))


# -- snapshot file format -------------------------------------------------
# magic "VORTX1", u32 header length, UTF-8 JSON header, then row-major
# little-endian float64 planes: Re u_k, Im u_k for each k, then Phi, Psi.


def save_snapshot(path, state: FieldState) -> None:
    header = {
        "surface": "torus",
        "L_s": state.grid.L_s,
        "L_t": state.grid.L_t,
        "N_s": state.grid.N_s,
        "N_t": state.grid.N_t,
        "degree": state.grid.degree,
        "lambda": state.grid.lam,
        "n": state.model.n,
        "weights": state.model.weights.tolist(),
        "level": state.model.level,
        "strict_free": state.model.strict_free,
        "eps": state.eps,
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    buf = io.BytesIO()
    buf.write(SNAPSHOT_MAGIC)
    buf.write(struct.pack("<I", len(blob)))
    buf.write(blob)
    planes = []
    for k in range(state.model.n):
        planes.append(np.real(state.u[k]))
        planes.append(np.imag(state.u[k]))
    planes.extend([state.Phi, state.Psi])
    for plane in planes:
        buf.write(np.ascontiguousarray(plane, dtype="<f8").tobytes())
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())


def load_snapshot(path) -> FieldState:
    with open(path, "rb") as fh:
        magic = fh.read(len(SNAPSHOT_MAGIC))
        if magic != SNAPSHOT_MAGIC:
            raise ValueError(f"not a field snapshot (bad magic {magic!r})")
        (hlen,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(hlen).decode("utf-8"))
        n, N_s, N_t = header["n"], header["N_s"], header["N_t"]
        count = (2 * n + 2) * N_s * N_t
        data = np.frombuffer(fh.read(count * 8), dtype="<f8").reshape(2 * n + 2, N_s, N_t)
    model = MomentModel(
        n=n,
        weights=np.array(header["weights"], dtype=int),
        level=header["level"],
        strict_free=header["strict_free"],
    )
    grid = TorusGrid(
        L_s=header["L_s"], L_t=header["L_t"], N_s=N_s, N_t=N_t,
        degree=header["degree"], lam=header["lambda"],
    )
    u = data[0:2 * n:2] + 1j * data[1:2 * n:2]
    return FieldState(model, grid, u, data[2 * n].copy(), data[2 * n + 1].copy(), header["eps"])
