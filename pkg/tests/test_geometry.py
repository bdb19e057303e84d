import numpy as np
import pytest

from vortexlab import geometry
from vortexlab.geometry import MomentModel, TopologyInfo


def test_moment_map_on_level_set():
    m = MomentModel(n=2, weights=np.array([1, 1]), level=1.0)
    assert geometry.moment_map(m, np.array([1.0, 0.0])) == pytest.approx(0.0, abs=1e-15)


def test_moment_map_at_origin_is_half_level():
    # mu is bounded above with mu(0) = +r/2; the sign is forced by the
    # adjointness/compatibility self-test (see decisions ledger).
    m = MomentModel(n=2, weights=np.array([1, 1]), level=1.0)
    assert geometry.moment_map(m, np.zeros(2)) == pytest.approx(0.5)
    m3 = MomentModel(n=3, weights=np.array([1, 1, 1]), level=2.5)
    assert geometry.moment_map(m3, np.zeros(3)) == pytest.approx(1.25)


def test_moment_map_weighted_arithmetic():
    m = MomentModel(n=2, weights=np.array([1, 2]), level=1.0)
    assert geometry.moment_map(m, np.array([1.0, 1.0])) == pytest.approx(-1.0)


def test_infinitesimal_action_basic():
    m = MomentModel(n=1, weights=np.array([1]), level=1.0)
    assert geometry.infinitesimal_action(m, np.array([1.0 + 0j]), 1.0)[0] == pytest.approx(1j)
    assert np.all(geometry.infinitesimal_action(m, np.array([1.0 + 0j]), 0.0) == 0)
    m2 = MomentModel(n=1, weights=np.array([2]), level=1.0)
    val = geometry.infinitesimal_action(m2, np.array([1j]), 3.0)[0]
    assert val == pytest.approx(-6.0)


def test_action_adjoint_examples():
    m = MomentModel(n=1, weights=np.array([1]), level=1.0)
    Lx1 = geometry.infinitesimal_action(m, np.array([1.0 + 0j]), 1.0)
    assert geometry.action_adjoint(m, np.array([1.0 + 0j]), Lx1) == pytest.approx(1.0)
    m2 = MomentModel(n=2, weights=np.array([1, 1]), level=1.0)
    x = np.array([1.0 + 0j, 0.0])
    assert geometry.action_adjoint(m2, x, np.array([1j, 0.0])) == pytest.approx(1.0)
    # harmonic directions are annihilated
    assert geometry.action_adjoint(m2, x, np.array([0.0, 1.0 + 1j])) == pytest.approx(0.0)


def test_adjointness_and_compatibility(rng):
    m = MomentModel(n=3, weights=np.array([1, 2, 3]), level=1.0)
    for _ in range(40):
        x = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        xi = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        eta = rng.standard_normal()
        pair = np.sum(np.real(np.conj(geometry.infinitesimal_action(m, x, eta)) * xi))
        assert pair == pytest.approx(eta * geometry.action_adjoint(m, x, xi), abs=1e-11)
        assert geometry.action_adjoint(m, x, xi) == pytest.approx(
            geometry.d_moment(m, x, 1j * xi), abs=1e-11
        )


def test_rho_form(rng):
    m = MomentModel(n=1, weights=np.array([1]), level=1.0)
    assert geometry.rho_form(m, None, np.array([1.0 + 0j]), np.array([1j])) == pytest.approx(1.0)
    for _ in range(20):
        a = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        b = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        m3 = MomentModel(n=3, weights=np.array([2, 1, 3]), level=1.0)
        assert geometry.rho_form(m3, None, a, b) == pytest.approx(
            -geometry.rho_form(m3, None, b, a), abs=1e-12
        )
        assert geometry.rho_form(m3, None, a, a) == pytest.approx(0.0, abs=1e-12)


def test_dimension_formula_sphere_and_torus():
    for n in (1, 2, 3, 5):
        m = MomentModel(n=n, weights=np.ones(n, dtype=int), level=1.0, strict_free=True)
        for d in (0, 1, 2, 4):
            assert geometry.dimension_formula(m, TopologyInfo(genus=0, degree=d)) == 2 * n * d + 2 * n - 2
            assert geometry.dimension_formula(m, TopologyInfo(genus=1, degree=d)) == 2 * n * d
    m1 = MomentModel(n=1, weights=np.array([1]), level=1.0, strict_free=True)
    assert geometry.dimension_formula(m1, TopologyInfo(genus=0, degree=0)) == 0


def test_maslov_and_unit():
    m = MomentModel(n=3, weights=np.array([1, 1, 1]), level=1.0, strict_free=True)
    N, tau, hbar = geometry.maslov_and_unit(m)
    assert N == 3
    assert hbar == pytest.approx(np.pi)
    m2 = MomentModel(n=2, weights=np.array([1, 1]), level=2.0, strict_free=True)
    assert geometry.maslov_and_unit(m2)[2] == pytest.approx(2 * np.pi)
    non_free = MomentModel(n=2, weights=np.array([1, 2]), level=1.0)
    with pytest.raises(ValueError):
        geometry.maslov_and_unit(non_free)


def test_invariant_bookkeeping():
    m = MomentModel(n=2, weights=np.array([1, 1]), level=1.0, strict_free=True)
    assert geometry.invariant_bookkeeping(m, 1, [3])["valid"]
    assert geometry.invariant_bookkeeping(m, 1, [2, 1])["valid"]
    assert not geometry.invariant_bookkeeping(m, 1, [4])["valid"]
    with pytest.raises(ValueError):
        geometry.invariant_bookkeeping(MomentModel(n=2, weights=np.array([1, 2]), level=1.0), 1, [3])


def test_in_regular_region():
    m = MomentModel(n=1, weights=np.array([1]), level=1.0)
    assert geometry.in_regular_region(m, np.array([1.0 + 0j]), 100.0)
    assert not geometry.in_regular_region(m, np.zeros(1, dtype=complex), 1e6)
    assert geometry.in_regular_region(m, np.array([0.5 + 0j]), 2.0)


def test_model_validation():
    with pytest.raises(ValueError):
        MomentModel(n=2, weights=np.array([1, 0]), level=1.0)
    with pytest.raises(ValueError):
        MomentModel(n=2, weights=np.array([1, 2]), level=1.0, strict_free=True)
    with pytest.raises(ValueError):
        MomentModel(n=1, weights=np.array([1]), level=-1.0)


def test_equivariance_of_moment_map(rng):
    m = MomentModel(n=3, weights=np.array([1, 2, 3]), level=1.0)
    for _ in range(20):
        x = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        theta = rng.uniform(0, 2 * np.pi)
        rot = np.exp(1j * m.weights * theta) * x
        assert geometry.moment_map(m, rot) == pytest.approx(geometry.moment_map(m, x), abs=1e-13)
