"""Beam configuration and lattice vectors of the three-beam honeycomb lattice.

Units: k_L = 1 for wave vectors, 1/k_L for lengths, E_R for energies.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .errors import ConfigError, DegenerateCellError

SQRT3 = math.sqrt(3.0)

# nominal beam directions, 120 degrees apart
K1 = np.array([0.0, 1.0])
K2 = np.array([-SQRT3 / 2, -0.5])
K3 = np.array([SQRT3 / 2, -0.5])

DEGENERATE_CROSS = 1e-6


def rotation(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class BeamConfig:
    """Experimental knobs. Every computation reads from one of these.

    strengths: (s1, s2, s3) field-strength factors, nominal 1.
    theta2, theta3: counterclockwise rotations of beams 2 and 3 (radians).
    phase: the phase of the phase-variant lattice; 0 is the coherent case.
    depth: V0 / E_R.
    """

    strengths: tuple = (1.0, 1.0, 1.0)
    theta2: float = 0.0
    theta3: float = 0.0
    phase: float = 0.0
    depth: float = 32.0
    detuning: str = "blue"

    def __post_init__(self):
        s = tuple(float(x) for x in self.strengths)
        if len(s) != 3:
            raise ConfigError("strengths must have three entries")
        object.__setattr__(self, "strengths", s)
        if not all(math.isfinite(x) and x > 0 for x in s):
            raise ConfigError(f"strengths must be positive, got {s}")
        if not (math.isfinite(self.depth) and self.depth > 0):
            raise ConfigError(f"depth V0/E_R must be positive, got {self.depth}")
        for name in ("theta2", "theta3", "phase"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")
        if self.detuning not in ("blue", "red"):
            raise ConfigError(f"detuning must be 'blue' or 'red', got {self.detuning!r}")

    @property
    def hbar_e(self) -> float:
        return math.sqrt(2.0 / self.depth)

    @classmethod
    def from_hbar_e(cls, hbar_e: float, **kw) -> "BeamConfig":
        if not hbar_e > 0:
            raise ConfigError("hbar_e must be positive")
        return cls(depth=2.0 / hbar_e**2, **kw)

    def with_(self, **kw) -> "BeamConfig":
        return replace(self, **kw)

    @property
    def is_balanced(self) -> bool:
        s1, s2, s3 = self.strengths
        return s1 == s2 == s3 and self.theta2 == 0 and self.theta3 == 0

    def as_dict(self) -> dict:
        return {
            "strengths": list(self.strengths),
            "theta2": self.theta2,
            "theta3": self.theta3,
            "phase": self.phase,
            "depth": self.depth,
            "detuning": self.detuning,
        }


@dataclass(frozen=True)
class LatticeVectors:
    k1: np.ndarray
    k2: np.ndarray
    k3: np.ndarray
    b1: np.ndarray
    b2: np.ndarray
    a1: np.ndarray
    a2: np.ndarray
    c: np.ndarray  # rows c1, c2, c3
    K: np.ndarray
    Kp: np.ndarray
    Lambda: float
    a: float
    kappa: float

    @property
    def c1(self):
        return self.c[0]

    @property
    def c2(self):
        return self.c[1]

    @property
    def c3(self):
        return self.c[2]

    @property
    def B(self) -> np.ndarray:
        """Reciprocal basis as rows."""
        return np.vstack([self.b1, self.b2])

    @property
    def A(self) -> np.ndarray:
        """Bravais basis as rows."""
        return np.vstack([self.a1, self.a2])

    @property
    def r_A(self):
        return (self.a1 + self.a2) / 3

    @property
    def r_B(self):
        return 2 * (self.a1 + self.a2) / 3

    @property
    def M(self):
        """Mid-edge point between K and the next corner."""
        return self.b2 / 2

    @property
    def M_line(self):
        """Mid-edge point reached from K along the line k = s (b2 - b1).

        Equivalent to the midpoint of the vertical zone edge; Dirac pairs
        of the mirror-symmetric distortions merge here.
        """
        return (self.b2 - self.b1) / 2

    def as_dict(self) -> dict:
        out = {}
        for name in ("k1", "k2", "k3", "b1", "b2", "a1", "a2", "K", "Kp"):
            out[name] = getattr(self, name).tolist()
        out["c"] = self.c.tolist()
        out.update(Lambda=self.Lambda, a=self.a, kappa=self.kappa)
        return out


def build_geometry(cfg: BeamConfig) -> LatticeVectors:
    k1 = K1.copy()
    k2 = rotation(cfg.theta2) @ K2
    k3 = rotation(cfg.theta3) @ K3
    b1 = k3 - k1
    b2 = k1 - k2
    cross = b1[0] * b2[1] - b1[1] * b2[0]
    if abs(cross) < DEGENERATE_CROSS:
        raise DegenerateCellError(f"reciprocal basis is degenerate (|b1 x b2| = {abs(cross):.3g})")
    B = np.vstack([b1, b2])
    A = 2 * np.pi * np.linalg.inv(B).T
    a1, a2 = A[0], A[1]
    c = np.vstack([(a1 + a2) / 3, (a2 - 2 * a1) / 3, (a1 - 2 * a2) / 3])
    K = (b2 - b1) / 3
    return LatticeVectors(
        k1=k1, k2=k2, k3=k3, b1=b1, b2=b2, a1=a1, a2=a2, c=c,
        K=K, Kp=-K,
        Lambda=float((np.linalg.norm(a1) + np.linalg.norm(a2)) / 2),
        a=float(np.linalg.norm(c, axis=1).mean()),
        kappa=float((np.linalg.norm(b1) + np.linalg.norm(b2)) / 2),
    )


def nominal_geometry() -> LatticeVectors:
    return build_geometry(BeamConfig())


def reduce_to_cell(r, lat: LatticeVectors) -> np.ndarray:
    """Map positions into the primitive cell {u1 a1 + u2 a2, 0 <= u < 1}."""
    r = np.asarray(r, dtype=float)
    u = r @ lat.B.T / (2 * np.pi)
    u = u - np.floor(u)
    return u @ lat.A


def _shortest(v, basis: np.ndarray, dual: np.ndarray) -> np.ndarray:
    """Shortest representative of v modulo the lattice spanned by basis rows.

    dual rows satisfy basis @ dual.T = 2 pi I.
    """
    v = np.asarray(v, dtype=float)
    flat = v.reshape(-1, 2)
    u = flat @ dual.T / (2 * np.pi)
    base = u - np.floor(u)
    # keep the input unless a translate is strictly shorter, so points on the
    # zone boundary stay where the caller put them
    best = flat.copy()
    best_n = np.einsum("ij,ij->i", best, best)
    tol = 1e-9 * float(np.einsum("ij,ij->i", basis, basis).max())
    for m1 in (-2, -1, 0, 1):
        for m2 in (-2, -1, 0, 1):
            cand = (base + np.array([m1, m2])) @ basis
            n = np.einsum("ij,ij->i", cand, cand)
            take = n < best_n - tol
            best = np.where(take[:, None], cand, best)
            best_n = np.where(take, n, best_n)
    return best.reshape(v.shape)


def reduce_to_bz(k, lat: LatticeVectors) -> np.ndarray:
    """Shortest representative of k modulo the reciprocal lattice."""
    return _shortest(k, lat.B, lat.A)


def reduce_to_ws(r, lat: LatticeVectors) -> np.ndarray:
    """Shortest representative of r modulo the Bravais lattice."""
    return _shortest(r, lat.A, lat.B)


def r_distance_mod(r, rp, lat: LatticeVectors) -> float:
    return float(np.linalg.norm(reduce_to_ws(np.asarray(r) - np.asarray(rp), lat)))


def k_distance_mod(k, kp, lat: LatticeVectors) -> float:
    return float(np.linalg.norm(reduce_to_bz(np.asarray(k) - np.asarray(kp), lat)))


PATH_PRESETS = ("G-K-M-G", "K2-Kp3")


def path_corners(name: str, lat: LatticeVectors) -> tuple[list[str], list[np.ndarray]]:
    G = np.zeros(2)
    if name == "G-K-M-G":
        return ["G", "K", "M", "G"], [G, lat.K, lat.M, G]
    if name == "K2-Kp3":
        # vertical Brillouin-zone edge at k_x = sqrt(3)/2 (nominal lattice)
        shift = lat.b1 + lat.b2
        start = lat.k2 + shift
        end = -lat.k3 + shift
        return ["K2", "Kp3"], [start, end]
    raise ConfigError(f"unknown k-path preset {name!r}; choose from {PATH_PRESETS}")


def k_path(name: str, lat: LatticeVectors, samples_per_segment: int = 50):
    """Piecewise linear path. Returns (s, k) with s the cumulative arc length."""
    if samples_per_segment < 1:
        raise ConfigError("samples_per_segment must be >= 1")
    _, corners = path_corners(name, lat)
    ks = []
    for p, q in zip(corners[:-1], corners[1:]):
        t = np.arange(samples_per_segment) / samples_per_segment
        ks.append(p[None, :] + t[:, None] * (q - p)[None, :])
    ks.append(corners[-1][None, :])
    k = np.vstack(ks)
    s = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(k, axis=0), axis=1))])
    return s, k


class DipoleDepth(NamedTuple):
    V0: float
    regime: str  # "honeycomb" (blue) or "triangular" (red, outside analysis scope)


def dipole_depth(linewidth: float, detuning: float, intensity_ratio: float, hbar: float = 1.0) -> DipoleDepth:
    """V0 = (hbar Gamma / 8)(Gamma / delta)(I0 / Is).

    Units follow the inputs: linewidth and detuning share one angular
    frequency unit and V0 comes out in hbar times that unit.
    """
    if detuning == 0:
        raise ConfigError("detuning must be nonzero")
    V0 = hbar * linewidth / 8.0 * (linewidth / detuning) * intensity_ratio
    return DipoleDepth(V0, "honeycomb" if detuning > 0 else "triangular")
