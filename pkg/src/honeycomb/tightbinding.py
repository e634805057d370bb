"""Nearest-neighbour tight-binding model on the honeycomb lattice.

Z(k) = sum_a t_a exp(i k.c_a),   eps_pm(k) = +- sqrt(eps^2 + |Z(k)|^2).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ConfigError, NonzeroMass, NumericalError
from .geometry import LatticeVectors, k_distance_mod, nominal_geometry, reduce_to_bz

SINE_TOL = 1e-9
MERGE_TOL = 1e-6


@dataclass(frozen=True)
class HoppingSet:
    t: tuple  # complex t1, t2, t3
    epsilon: float = 0.0

    def __post_init__(self):
        t = tuple(complex(x) for x in self.t)
        if len(t) != 3:
            raise ConfigError("need three hopping amplitudes")
        if all(x == 0 for x in t):
            raise ConfigError("at least one hopping amplitude must be nonzero")
        object.__setattr__(self, "t", t)

    @classmethod
    def balanced(cls, t0: complex = -1.0, epsilon: float = 0.0) -> "HoppingSet":
        return cls((t0, t0, t0), epsilon)

    @classmethod
    def gamma(cls, gamma: float, t0: complex = -1.0) -> "HoppingSet":
        """t1 = gamma t0, t2 = t3 = t0."""
        return cls((gamma * t0, t0, t0))

    @property
    def magnitudes(self) -> np.ndarray:
        return np.abs(np.array(self.t))

    @property
    def phases(self) -> tuple[float, float]:
        """(arg t2 - arg t1, arg t3 - arg t1)."""
        a = np.angle(np.array(self.t))
        return float(a[1] - a[0]), float(a[2] - a[0])


class DiracPair(NamedTuple):
    k: np.ndarray
    kp: np.ndarray
    merged: bool


def _c(lat):
    return (lat or nominal_geometry()).c


def z_k(k, h: HoppingSet, lat: LatticeVectors | None = None):
    k = np.asarray(k, dtype=float)
    c = _c(lat)
    return np.exp(1j * (k @ c.T)) @ np.array(h.t)


def tb_bands(k, h: HoppingSet, lat: LatticeVectors | None = None):
    """(eps_minus, eps_plus) at k; arrays if k is an array of points."""
    z = np.abs(z_k(k, h, lat))
    e = np.sqrt(h.epsilon**2 + z * z)
    return -e, e


def triangle_ok(m) -> bool:
    m1, m2, m3 = m
    return abs(m2 - m3) <= m1 <= m2 + m3


def tb_dirac_points(h: HoppingSet, lat: LatticeVectors | None = None) -> DiracPair | None:
    """Zeros of Z(k), or None when the magnitudes violate the triangle inequalities."""
    if h.epsilon != 0:
        raise NonzeroMass("Dirac points need epsilon = 0; a nonzero on-site imbalance gaps the spectrum")
    lat = lat or nominal_geometry()
    m1, m2, m3 = h.magnitudes
    if min(m1, m2, m3) == 0:
        lo, mid, hi = sorted((m1, m2, m3))
        if mid == hi:
            raise ConfigError("one vanishing hopping with equal others gives a line of zeros, not points")
        return None
    # factored numerators avoid cancellation when one hopping is tiny
    cx = ((m3 - m2) * (m3 + m2) - m1 * m1) / (2 * m1 * m2)
    cy = ((m2 - m3) * (m2 + m3) - m1 * m1) / (2 * m1 * m3)
    if abs(cx) > 1 + 1e-12 or abs(cy) > 1 + 1e-12:
        return None
    x0 = math.acos(max(-1.0, min(1.0, cx)))
    y0 = math.acos(max(-1.0, min(1.0, cy)))
    scale = max(m1, m2, m3)
    branches = []
    for sx in (-1, 1):
        for sy in (1, -1):
            X, Y = sx * x0, sy * y0
            if abs(m2 * math.sin(X) + m3 * math.sin(Y)) <= SINE_TOL * scale:
                branches.append((X, Y))
    if not branches:
        raise NumericalError("no branch satisfies the sine constraint")
    ph1, ph2 = h.phases
    X, Y = branches[0]
    # the partner zero sits on the mirrored branch; it equals -k only for real hoppings
    k = reduce_to_bz(((X + ph1) * lat.b1 + (Y + ph2) * lat.b2) / (2 * np.pi), lat)
    kp = reduce_to_bz(((ph1 - X) * lat.b1 + (ph2 - Y) * lat.b2) / (2 * np.pi), lat)
    resid = max(abs(z_k(k, h, lat)), abs(z_k(kp, h, lat)))
    if resid > 1e-10 * scale:
        raise NumericalError(f"|Z(k_D)| = {resid:.3g} exceeds tolerance")
    merged = k_distance_mod(k, kp, lat) <= MERGE_TOL * lat.kappa
    return DiracPair(k, kp, bool(merged))


class TBScales(NamedTuple):
    W: float
    E_F: float
    v0: float
    m_star: float


def tb_scales(t0: complex, a: float, epsilon: float = 0.0, hbar: float = 1.0) -> TBScales:
    """Bandwidth, half-filling Fermi energy (from the band bottom), Fermi velocity, Dirac mass."""
    t = abs(t0)
    if t == 0:
        raise ConfigError("t0 must be nonzero")
    v0 = 3 * a * t / (2 * hbar)
    return TBScales(6 * t, 3 * t, v0, epsilon / v0**2)


class DOSResult(NamedTuple):
    centers: np.ndarray
    rho: np.ndarray  # both bands, per unit cell per spin
    rho_minus: np.ndarray
    rho_plus: np.ndarray
    width: float


def tb_dos(h: HoppingSet, n_grid: int = 400, n_bins: int = 600, lat: LatticeVectors | None = None,
           chunk: int = 200) -> DOSResult:
    """Histogram density of states; energies in units of the median |t|, origin at the Dirac energy."""
    if n_grid < 100 or n_bins < 50:
        raise ConfigError("need n_grid >= 100 and n_bins >= 50")
    lat = lat or nominal_geometry()
    unit = float(np.median(h.magnitudes))
    emax = (math.sqrt(h.epsilon**2 + h.magnitudes.sum() ** 2)) / unit * (1 + 1e-9)
    edges = np.linspace(-emax, emax, n_bins + 1)
    counts_m = np.zeros(n_bins, dtype=np.int64)
    counts_p = np.zeros(n_bins, dtype=np.int64)
    u = (np.arange(n_grid) + 0.5) / n_grid
    for start in range(0, n_grid, chunk):
        u1, u2 = np.meshgrid(u[start:start + chunk], u, indexing="ij")
        k = u1[..., None] * lat.b1 + u2[..., None] * lat.b2
        em, ep = tb_bands(k.reshape(-1, 2), h, lat)
        counts_m += np.histogram(em / unit, edges)[0]
        counts_p += np.histogram(ep / unit, edges)[0]
    width = edges[1] - edges[0]
    total = n_grid * n_grid
    rm = counts_m / (total * width)
    rp = counts_p / (total * width)
    return DOSResult(0.5 * (edges[1:] + edges[:-1]), rm + rp, rm, rp, float(width))


def dos_slope(dos: DOSResult, window: float = 0.2) -> float:
    """Least-squares slope of rho = s |E| through the origin over |E| < window."""
    x = np.abs(dos.centers)
    sel = x < window
    return float((x[sel] * dos.rho[sel]).sum() / (x[sel] ** 2).sum())
