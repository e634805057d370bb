import math

import numpy as np
import pytest

from honeycomb.errors import ConfigError, NonzeroMass
from honeycomb.geometry import BeamConfig, build_geometry, k_distance_mod, nominal_geometry
from honeycomb.tightbinding import (
    HoppingSet,
    dos_slope,
    tb_bands,
    tb_dirac_points,
    tb_dos,
    tb_scales,
    triangle_ok,
    z_k,
)

from oracles import brute_force_dirac

LAT = nominal_geometry()


def test_balanced_dirac_points_at_zone_corners():
    d = tb_dirac_points(HoppingSet.balanced())
    np.testing.assert_allclose(d.k, LAT.K, atol=1e-12)
    np.testing.assert_allclose(d.kp, LAT.Kp, atol=1e-12)
    assert not d.merged


def test_bands_at_gamma_and_symmetric():
    h = HoppingSet.balanced(-1.0)
    em, ep = tb_bands(np.zeros(2), h)
    assert ep == pytest.approx(3) and em == pytest.approx(-3)
    k = np.random.default_rng(0).normal(size=(30, 2))
    em, ep = tb_bands(k, HoppingSet((0.3 + 0.2j, 1.1, -0.7j), 0.2))
    np.testing.assert_allclose(em, -ep)


def test_gamma_trajectory_closed_form():
    for g in (0.0, 0.5, 1.0, 1.5, 1.9):
        h = HoppingSet.gamma(g)
        if g == 0:
            with pytest.raises(ConfigError):
                tb_dirac_points(h)
            continue
        d = tb_dirac_points(h)
        ky = 3 * math.acos(-g / 2) / (2 * math.pi)
        expect = np.array([0.0, ky])
        dist = min(k_distance_mod(d.k, s * expect, LAT) for s in (1, -1))
        assert dist <= 1e-9


def test_gamma_two_merges_and_beyond_vanishes():
    d = tb_dirac_points(HoppingSet.gamma(2.0))
    assert d.merged
    assert tb_dirac_points(HoppingSet.gamma(2.5)) is None


def test_nonzero_mass_rejected():
    with pytest.raises(NonzeroMass):
        tb_dirac_points(HoppingSet.balanced(epsilon=0.1))


def test_single_vanishing_hopping():
    assert tb_dirac_points(HoppingSet((0.0, 1.0, 0.5))) is None
    with pytest.raises(ConfigError):
        tb_dirac_points(HoppingSet((0.0, 1.0, 1.0)))


def test_triangle_rule():
    assert triangle_ok((1, 1, 1))
    assert triangle_ok((2, 1, 1))
    assert not triangle_ok((2.1, 1, 1))


@pytest.mark.parametrize("t", [
    (0.7, 1.2, 0.9),
    (1.0 * np.exp(0.3j), 0.8 * np.exp(-1.1j), 1.4 * np.exp(2.0j)),
    (1.9, 1.0, 1.0),
])
def test_against_grid_scan_oracle(t):
    d = tb_dirac_points(HoppingSet(t))
    zeros = brute_force_dirac(t, LAT)
    assert zeros
    for k in (d.k, d.kp):
        assert min(k_distance_mod(k, z, LAT) for z in zeros) <= 1e-6


def test_oracle_agrees_on_absence():
    assert brute_force_dirac((2.5, 1.0, 1.0), LAT) == []


def test_rotated_geometry():
    lat = build_geometry(BeamConfig(theta2=-0.1, theta3=0.1))
    h = HoppingSet((1.1, 0.9, 1.0))
    d = tb_dirac_points(h, lat)
    assert abs(z_k(d.k, h, lat)) <= 1e-10


def test_scales():
    s = tb_scales(-1.0, 2.0)
    assert s.W == 6 and s.E_F == 3 and s.v0 == pytest.approx(3.0)
    assert tb_scales(-1.0, 2.0, epsilon=0.9).m_star == pytest.approx(0.1)
    with pytest.raises(ConfigError):
        tb_scales(0.0, 1.0)


def test_dos_normalized_and_linear():
    dos = tb_dos(HoppingSet.balanced(), n_grid=600, n_bins=300)
    assert dos.rho.sum() * dos.width == pytest.approx(2.0, rel=1e-12)
    np.testing.assert_allclose(dos.rho_minus, dos.rho_plus[::-1])
    assert dos_slope(dos) == pytest.approx(2 / (math.sqrt(3) * math.pi), rel=0.05)
    assert np.all(dos.rho[np.abs(dos.centers) > 3] == 0)


def test_dos_rejects_tiny_grids():
    with pytest.raises(ConfigError):
        tb_dos(HoppingSet.balanced(), n_grid=10)
