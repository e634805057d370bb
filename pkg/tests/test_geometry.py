import math

import numpy as np
import pytest

from honeycomb.errors import ConfigError, DegenerateCellError
from honeycomb.geometry import (
    BeamConfig,
    build_geometry,
    dipole_depth,
    k_distance_mod,
    k_path,
    path_corners,
    reduce_to_bz,
    reduce_to_cell,
)

S3 = math.sqrt(3)


def test_nominal_reciprocal_vectors():
    lat = build_geometry(BeamConfig())
    kappa = S3
    np.testing.assert_allclose(lat.b1, kappa * np.array([1, -S3]) / 2, atol=1e-15)
    np.testing.assert_allclose(lat.b2, kappa * np.array([1, S3]) / 2, atol=1e-15)
    assert lat.kappa == pytest.approx(S3)


def test_nominal_lengths():
    lat = build_geometry(BeamConfig())
    assert np.linalg.norm(lat.a1) == pytest.approx(4 * math.pi / 3)
    assert np.linalg.norm(lat.a2) == pytest.approx(4 * math.pi / 3)
    assert lat.Lambda == pytest.approx(4 * math.pi / 3)
    assert lat.a == pytest.approx(4 * math.pi / (3 * lat.kappa))
    np.testing.assert_allclose(lat.k1 + lat.k2 + lat.k3, 0, atol=1e-15)


def test_corners():
    lat = build_geometry(BeamConfig())
    np.testing.assert_allclose(lat.K, (lat.b2 - lat.b1) / 3, atol=1e-15)
    np.testing.assert_allclose(lat.K, lat.k1, atol=1e-15)
    np.testing.assert_allclose(lat.Kp, -lat.K)


@pytest.mark.parametrize("th2,th3", [(0, 0), (0.1, -0.05), (-0.3, 0.2), (1.0, 0.4)])
def test_duality_and_trine(th2, th3):
    lat = build_geometry(BeamConfig(theta2=th2, theta3=th3))
    np.testing.assert_allclose(lat.A @ lat.B.T, 2 * np.pi * np.eye(2), atol=1e-12)
    np.testing.assert_allclose(lat.c.sum(axis=0), 0, atol=1e-14)


def test_first_order_rotation():
    th = 1e-3
    lat0 = build_geometry(BeamConfig())
    lat = build_geometry(BeamConfig(theta2=-th, theta3=th))
    assert np.linalg.norm((lat.b1 - lat0.b1) - th / S3 * lat0.b2) <= 1e-6 * lat0.kappa
    assert np.linalg.norm((lat.b2 - lat0.b2) - th / S3 * lat0.b1) <= 1e-6 * lat0.kappa


def test_positive_theta_closes_reciprocal_angle():
    ang = lambda lat: math.acos(lat.b1 @ lat.b2 / np.linalg.norm(lat.b1) / np.linalg.norm(lat.b2))  # noqa: E731
    assert ang(build_geometry(BeamConfig(theta2=-0.05, theta3=0.05))) < ang(build_geometry(BeamConfig()))


def test_degenerate_cell_rejected():
    # beam 3 rotated onto beam 1 makes b1 vanish
    with pytest.raises(DegenerateCellError):
        build_geometry(BeamConfig(theta3=2 * math.pi / 3))


def test_continuity_in_angles():
    a = build_geometry(BeamConfig(theta2=0.02, theta3=-0.01))
    b = build_geometry(BeamConfig(theta2=0.02 + 1e-9, theta3=-0.01 - 1e-9))
    for name in ("b1", "b2", "a1", "a2", "K"):
        assert np.abs(getattr(a, name) - getattr(b, name)).max() <= 1e-7
    assert np.abs(a.c - b.c).max() <= 1e-7


def test_beam_config_validation():
    with pytest.raises(ConfigError):
        BeamConfig(strengths=(1, -1, 1))
    with pytest.raises(ConfigError):
        BeamConfig(depth=0)
    with pytest.raises(ConfigError):
        BeamConfig(detuning="green")
    cfg = BeamConfig(depth=32)
    assert cfg.hbar_e == pytest.approx(0.25)
    assert BeamConfig.from_hbar_e(0.25).depth == pytest.approx(32)


def test_dipole_depth():
    base = dipole_depth(1.0, 10.0, 2.0)
    assert dipole_depth(1.0, 20.0, 2.0).V0 == pytest.approx(base.V0 / 2)
    assert dipole_depth(1.0, 10.0, 4.0).V0 == pytest.approx(2 * base.V0)
    assert base.V0 > 0 and base.regime == "honeycomb"
    red = dipole_depth(1.0, -10.0, 2.0)
    assert red.V0 < 0 and red.regime == "triangular"
    with pytest.raises(ConfigError):
        dipole_depth(1.0, 0.0, 1.0)


def test_k2_kp3_path_is_vertical_zone_edge():
    lat = build_geometry(BeamConfig())
    names, (p, q) = path_corners("K2-Kp3", lat)
    np.testing.assert_allclose(p, [S3 / 2, -0.5], atol=1e-15)
    np.testing.assert_allclose(q, [S3 / 2, 0.5], atol=1e-15)
    s, k = k_path("K2-Kp3", lat, 10)
    assert len(k) == 11 and s[-1] == pytest.approx(1.0)
    # both ends are zone corners equivalent to K or K'
    assert min(k_distance_mod(p, lat.K, lat), k_distance_mod(p, lat.Kp, lat)) < 1e-12


def test_unknown_path_rejected():
    with pytest.raises(ConfigError):
        k_path("X-Y", build_geometry(BeamConfig()))


def test_reductions():
    lat = build_geometry(BeamConfig())
    rng = np.random.default_rng(1)
    r = rng.uniform(-20, 20, (50, 2))
    u = reduce_to_cell(r, lat) @ lat.B.T / (2 * np.pi)
    assert np.all((u >= -1e-12) & (u < 1 + 1e-12))
    k = rng.uniform(-10, 10, (50, 2))
    kr = reduce_to_bz(k, lat)
    assert np.all(np.linalg.norm(kr, axis=1) <= 1 + 1e-9)  # circumradius |K| = 1
    np.testing.assert_allclose(reduce_to_bz(kr, lat), kr)
    # boundary points keep the caller's representative
    np.testing.assert_allclose(reduce_to_bz(lat.K, lat), lat.K)
