"""Linear Hamiltonian circle actions on C^n: moment map and bookkeeping.

The circle acts on C^n with integer weights w_k >= 1,

    e^{i theta} . x = (e^{i w_k theta} x_k)_k,

generated by the vector field L_x(eta) = (i w_k eta x_k)_k for eta in the
Lie algebra, identified with R.  The flat metric is <a, b> = Re(conj(a) b)
summed over components, J is multiplication by i, and the symplectic form
is omega(a, b) = Im(conj(a) b).

With these conventions the moment map at level r > 0 is

    mu(x) = (r - sum_k w_k |x_k|^2) / 2.

The sign is pinned by requiring simultaneously

    <L_x eta, xi> = eta * Lstar(x, xi)      (adjointness)
    Lstar(x, xi)  = d mu(x)[J xi]           (metric/complex compatibility)

which a startup self-test asserts on random data; the opposite sign of mu
fails the second identity.  Consequently mu is bounded above, vortex-type
configurations have mu(u) >= 0 in their cores, and solutions carry total
curvature -2*pi*d on a degree-d surface (orientation sign sigma = -1).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "MomentModel",
    "TopologyInfo",
    "moment_map",
    "d_moment",
    "infinitesimal_action",
    "action_adjoint",
    "rho_form",
    "dimension_formula",
    "maslov_and_unit",
    "invariant_bookkeeping",
    "in_regular_region",
    "convention_selftest",
]


def _wcast(weights: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Reshape the weight vector so it broadcasts along the component axis."""
    return weights.reshape((len(weights),) + (1,) * (x.ndim - 1))


@dataclass(frozen=True)
class MomentModel:
    """Weights, moment level, and action data for a linear S^1 action on C^n."""

    n: int
    weights: np.ndarray
    level: float
    strict_free: bool = False

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=int)
        object.__setattr__(self, "weights", w)
        if self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")
        if w.shape != (self.n,):
            raise ValueError(f"weights must have shape ({self.n},), got {w.shape}")
        if np.any(w < 1):
            raise ValueError(f"all weights must be >= 1, got {w.tolist()}")
        if self.strict_free and np.any(w != 1):
            raise ValueError("strict_free requires all weights equal to 1")
        if not self.level > 0:
            raise ValueError(f"moment level must be positive, got {self.level}")
        _assert_conventions()

    @property
    def weight_sum(self) -> int:
        return int(self.weights.sum())


@dataclass(frozen=True)
class TopologyInfo:
    """Genus, bundle degree, and Euler characteristic of the base surface."""

    genus: int
    degree: int
    chi: int = field(init=False)

    def __post_init__(self):
        if self.genus not in (0, 1):
            raise ValueError(f"genus must be 0 or 1, got {self.genus}")
        object.__setattr__(self, "chi", 2 - 2 * self.genus)


def moment_map(model: MomentModel, x: np.ndarray) -> np.ndarray | float:
    """mu(x) = (r - sum_k w_k |x_k|^2) / 2, valued in g ~ R."""
    x = np.asarray(x, dtype=complex)
    w = _wcast(model.weights, x)
    val = 0.5 * (model.level - np.sum(w * np.abs(x) ** 2, axis=0))
    return float(val) if np.ndim(val) == 0 else val


def d_moment(model: MomentModel, x: np.ndarray, xi: np.ndarray) -> np.ndarray | float:
    """Differential d mu(x)[xi] = -sum_k w_k Re(conj(x_k) xi_k)."""
    x = np.asarray(x, dtype=complex)
    xi = np.asarray(xi, dtype=complex)
    w = _wcast(model.weights, x)
    val = -np.sum(w * np.real(np.conj(x) * xi), axis=0)
    return float(val) if np.ndim(val) == 0 else val


def infinitesimal_action(model: MomentModel, x: np.ndarray, eta) -> np.ndarray:
    """Generating vector field L_x(eta) = (i w_k eta x_k)_k."""
    x = np.asarray(x, dtype=complex)
    w = _wcast(model.weights, x)
    return 1j * w * eta * x


def action_adjoint(model: MomentModel, x: np.ndarray, xi: np.ndarray) -> np.ndarray | float:
    """Adjoint Lstar(x, xi) = sum_k w_k Im(conj(x_k) xi_k).

    Satisfies both <L_x eta, xi> = eta * Lstar(x, xi) and
    Lstar = d mu(x) o J (see convention_selftest).
    """
    x = np.asarray(x, dtype=complex)
    xi = np.asarray(xi, dtype=complex)
    w = _wcast(model.weights, x)
    val = np.sum(w * np.imag(np.conj(x) * xi), axis=0)
    return float(val) if np.ndim(val) == 0 else val


def lstar_l(model: MomentModel, x: np.ndarray) -> np.ndarray | float:
    """Scalar (Lstar L)(x) = sum_k w_k^2 |x_k|^2, positive off the fixed-point set."""
    x = np.asarray(x, dtype=complex)
    w = _wcast(model.weights, x)
    val = np.sum(w**2 * np.abs(x) ** 2, axis=0)
    return float(val) if np.ndim(val) == 0 else val


def rho_form(model: MomentModel, x: np.ndarray, xi1: np.ndarray, xi2: np.ndarray) -> np.ndarray | float:
    """Curvature two-form of the action: rho(xi1, xi2) = <grad_{xi1} L(1), xi2>.

    In the flat case grad_{xi1} X_eta = (i w_k eta xi1_k)_k, so
    rho(xi1, xi2) = sum_k w_k Im(conj(xi1_k) xi2_k); antisymmetric.
    """
    xi1 = np.asarray(xi1, dtype=complex)
    xi2 = np.asarray(xi2, dtype=complex)
    w = _wcast(model.weights, xi1)
    val = np.sum(w * np.imag(np.conj(xi1) * xi2), axis=0)
    return float(val) if np.ndim(val) == 0 else val


def dimension_formula(model: MomentModel, topo: TopologyInfo) -> int:
    """Expected moduli dimension (n - 1) * chi + 2 * (sum_k w_k) * d."""
    return (model.n - 1) * topo.chi + 2 * model.weight_sum * topo.degree


def maslov_and_unit(model: MomentModel) -> tuple[int, float, float]:
    """Minimal Maslov number N, monotonicity constant tau, and quantum hbar.

    Returns (N, tau, hbar) = (sum w_k, pi*r/N, pi*r).  Only validated for
    the strictly free case w = (1, ..., 1), where N equals n.
    """
    if not model.strict_free:
        raise ValueError("maslov_and_unit requires a strict_free model (all weights 1)")
    N = model.weight_sum
    tau = np.pi * model.level / N
    return N, tau, tau * N


def invariant_bookkeeping(model: MomentModel, degree: int, exponents) -> dict:
    """Degree bookkeeping for the generator pairing: valid iff sum(m) = n*d + n - 1."""
    if np.any(model.weights != 1):
        raise ValueError("invariant bookkeeping is restricted to unit weights")
    m_total = int(np.sum(exponents))
    target = model.n * degree + model.n - 1
    return {"valid": m_total == target, "m_total": m_total, "required": target}


def in_regular_region(model: MomentModel, x: np.ndarray, C: float) -> bool:
    """Membership in the compact set |mu(x)| <= C and |eta| <= C |L_x eta|."""
    if not C > 0:
        raise ValueError("C must be positive")
    mu_ok = abs(moment_map(model, x)) <= C
    lnorm = np.sqrt(lstar_l(model, x))
    return bool(mu_ok and 1.0 <= C * lnorm)


_CONVENTIONS_CHECKED = False


def convention_selftest(rng=None, samples: int = 32, tol: float = 1e-12) -> None:
    """Assert the two sign-fixing identities on random data.

    Checks, for random (x, eta, xi):
      * adjointness   <L_x eta, xi> = eta * Lstar(x, xi)
      * compatibility Lstar(x, xi) = d mu(x)[J xi]
    Raises AssertionError if either fails beyond tol * scale.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    n = 3
    w = np.array([1, 2, 3])
    model = object.__new__(MomentModel)
    object.__setattr__(model, "n", n)
    object.__setattr__(model, "weights", w)
    object.__setattr__(model, "level", 1.0)
    object.__setattr__(model, "strict_free", False)
    for _ in range(samples):
        x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        xi = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        eta = rng.standard_normal()
        scale = max(1.0, np.linalg.norm(x) * np.linalg.norm(xi))
        pair = np.sum(np.real(np.conj(infinitesimal_action(model, x, eta)) * xi))
        adj = eta * action_adjoint(model, x, xi)
        assert abs(pair - adj) <= tol * scale * max(1.0, abs(eta)), (
            f"adjointness identity violated: {pair} vs {adj}"
        )
        comp = d_moment(model, x, 1j * xi)
        lhs = action_adjoint(model, x, xi)
        assert abs(lhs - comp) <= tol * scale, (
            f"Lstar = dmu o J violated: {lhs} vs {comp}; moment-map sign is wrong"
        )


def _assert_conventions() -> None:
    global _CONVENTIONS_CHECKED
    if not _CONVENTIONS_CHECKED:
        _CONVENTIONS_CHECKED = True
        convention_selftest()
