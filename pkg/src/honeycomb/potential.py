"""Dimensionless optical potential v(r) (units of V0) and its critical points.

    v = s1^2 + s2^2 + s3^2 + 2 s1 s2 cos(b1.r + phi) + 2 s1 s3 cos(b2.r + phi)
        + 2 s2 s3 cos(b3.r + phi),            b3 = -b1 - b2

with the (possibly distorted) reciprocal basis b1, b2 of the beam config.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NotCritical, TriangleInequalityViolated, TwoMinimaLost
from .geometry import BeamConfig, LatticeVectors, build_geometry, r_distance_mod, reduce_to_cell

GRAD_TOL = 1e-10
NOT_CRITICAL_TOL = 1e-6
# spectral norm of the Hessian at a nominal minimum is 3 kappa^2 / 2; the
# reference scale for "vanishing curvature" is half of that
CURVATURE_SCALE = 0.75 * 3.0
CUBIC_REL = 1e-6


@dataclass(frozen=True)
class CriticalPoint:
    position: np.ndarray
    kind: str  # minimum, maximum, saddle, cubic-saddle
    value: float
    tag: str  # A, B, C, S or none
    gradient_norm: float = 0.0
    hessian_eigs: tuple = ()

    def as_dict(self) -> dict:
        return {
            "x": float(self.position[0]),
            "y": float(self.position[1]),
            "kind": self.kind,
            "value": self.value,
            "tag": self.tag,
            "gradient_norm": self.gradient_norm,
        }


def _terms(cfg: BeamConfig, lat: LatticeVectors | None = None):
    lat = lat or build_geometry(cfg)
    s1, s2, s3 = cfg.strengths
    q = np.vstack([lat.b1, lat.b2, -lat.b1 - lat.b2])
    w = np.array([s1 * s2, s1 * s3, s2 * s3])
    return s1 * s1 + s2 * s2 + s3 * s3, w, q


def potential_value(r, cfg: BeamConfig, lat: LatticeVectors | None = None):
    r = np.asarray(r, dtype=float)
    v0, w, q = _terms(cfg, lat)
    ph = r @ q.T + cfg.phase
    out = v0 + 2 * (np.cos(ph) * w).sum(axis=-1)
    return float(out) if out.ndim == 0 else out


def potential_gradient(r, cfg: BeamConfig, lat: LatticeVectors | None = None):
    r = np.asarray(r, dtype=float)
    _, w, q = _terms(cfg, lat)
    ph = r @ q.T + cfg.phase
    return -2 * (np.sin(ph) * w) @ q


def potential_hessian(r, cfg: BeamConfig, lat: LatticeVectors | None = None):
    r = np.asarray(r, dtype=float)
    _, w, q = _terms(cfg, lat)
    ph = r @ q.T + cfg.phase
    qq = np.einsum("ai,aj->aij", q, q)
    return -2 * np.einsum("...a,aij->...ij", np.cos(ph) * w, qq)


def field_amplitude(r, cfg: BeamConfig, lat: LatticeVectors | None = None):
    """f = s1 + s2 exp(-i b1.r) + s3 exp(i b2.r); |f|^2 = v when phi = 0."""
    if cfg.phase != 0:
        raise ConfigError("field amplitude is only defined for phase 0 (coherent beams)")
    lat = lat or build_geometry(cfg)
    r = np.asarray(r, dtype=float)
    s1, s2, s3 = cfg.strengths
    out = s1 + s2 * np.exp(-1j * (r @ lat.b1)) + s3 * np.exp(1j * (r @ lat.b2))
    return complex(out) if np.ndim(out) == 0 else out


def potential_grid(cfg: BeamConfig, x_range, y_range, nx: int, ny: int):
    """(X, Y, V) on a rectangular grid, V in units of V0."""
    x = np.linspace(x_range[0], x_range[1], nx)
    y = np.linspace(y_range[0], y_range[1], ny)
    X, Y = np.meshgrid(x, y, indexing="xy")
    V = potential_value(np.stack([X, Y], axis=-1), cfg)
    return X, Y, V


def _newton(r, cfg, lat, tol=GRAD_TOL, maxit=60, max_step=0.25):
    """Second-order root finding on the gradient with a step cap."""
    r = np.array(r, dtype=float)
    for _ in range(maxit):
        g = potential_gradient(r, cfg, lat)
        if np.linalg.norm(g) <= tol:
            break
        H = potential_hessian(r, cfg, lat)
        step = np.linalg.lstsq(H, g, rcond=1e-12)[0]
        n = np.linalg.norm(step)
        if n > max_step:
            step *= max_step / n
        r = r - step
    return r, float(np.linalg.norm(potential_gradient(r, cfg, lat)))


def _closed_form_angles(strengths):
    s1, s2, s3 = strengths
    ca = (s3 * s3 - s2 * s2 - s1 * s1) / (2 * s1 * s2)
    cb = (s2 * s2 - s3 * s3 - s1 * s1) / (2 * s1 * s3)
    if abs(ca) > 1 + 1e-14 or abs(cb) > 1 + 1e-14:
        raise TriangleInequalityViolated(
            f"strengths {tuple(strengths)} violate the triangle inequalities; no two-minima basis"
        )
    return math.acos(max(-1.0, min(1.0, ca))), math.acos(max(-1.0, min(1.0, cb)))


def minima_closed_form(cfg: BeamConfig, lat: LatticeVectors | None = None):
    """Zeros of the field amplitude: (b1.r, b2.r) = +-(alpha, beta)."""
    lat = lat or build_geometry(cfg)
    al, be = _closed_form_angles(cfg.strengths)
    rA = (al * lat.a1 + be * lat.a2) / (2 * np.pi)
    rB = reduce_to_cell(-rA, lat)
    return rA, rB


def _make_point(r, cfg, lat, tag=None):
    H = potential_hessian(r, cfg, lat)
    eig = np.linalg.eigvalsh(H)
    g = float(np.linalg.norm(potential_gradient(r, cfg, lat)))
    kind = _kind_from_eigs(eig)
    if tag is None:
        tag = _site_tag(r, kind, lat)
    return CriticalPoint(np.asarray(r, dtype=float), kind, potential_value(r, cfg, lat), tag, g, tuple(eig))


def _kind_from_eigs(eig):
    if np.max(np.abs(eig)) <= CUBIC_REL * CURVATURE_SCALE:
        return "cubic-saddle"
    if eig[0] > 0:
        return "minimum"
    if eig[-1] < 0:
        return "maximum"
    return "saddle"


def _site_tag(r, kind, lat):
    if kind == "saddle":
        return "S"
    sites = {"A": lat.r_A, "B": lat.r_B, "C": np.zeros(2)}
    d = {name: r_distance_mod(r, p, lat) for name, p in sites.items()}
    name = min(d, key=d.get)
    if kind == "maximum":
        return "C"
    if kind == "minimum" and name == "C":
        return "none"
    return name


def locate_minima(cfg: BeamConfig, phase_steps: int = 16):
    """The two minima A, B of the primitive cell.

    Closed form for phase 0, refined by Newton iteration; for nonzero phase,
    continuation in phase from the coherent positions.
    """
    lat = build_geometry(cfg)
    rA, rB = minima_closed_form(cfg, lat)
    out = []
    for r0, tag in ((rA, "A"), (rB, "B")):
        r = r0
        if cfg.phase != 0:
            for ph in np.linspace(0, cfg.phase, phase_steps + 1)[1:]:
                r, _ = _newton(r, cfg.with_(phase=float(ph)), lat)
        r, g = _newton(r, cfg, lat)
        p = _make_point(r, cfg, lat, tag=tag)
        if p.kind != "minimum" or g > GRAD_TOL:
            raise TwoMinimaLost(f"site {tag} is no longer a minimum (kind={p.kind}, |grad|={g:.2e})")
        out.append(p)
    if r_distance_mod(out[0].position, out[1].position, lat) < 1e-6:
        raise TwoMinimaLost("the two minima have merged")
    return out[0], out[1]


def displacement_vectors(lat: LatticeVectors, rA, rB) -> np.ndarray:
    """Vectors from A to its three nearest B neighbours, ordered c1, c2, c3."""
    d = rB - rA
    return np.vstack([d, d - lat.a1, d - lat.a2])


def locate_saddles(cfg: BeamConfig):
    """Saddles on the three A-B bonds and the barrier above the lower minimum.

    Returns (saddles, barriers) with barriers in units of V0.
    """
    lat = build_geometry(cfg)
    A, B = locate_minima(cfg)
    cvec = displacement_vectors(lat, A.position, B.position)
    vmin = min(A.value, B.value)
    saddles, barriers = [], []
    for c in cvec:
        r, _ = _newton(A.position + c / 2, cfg, lat, max_step=0.05)
        p = _make_point(r, cfg, lat)
        saddles.append(p)
        barriers.append(p.value - vmin)
    return saddles, barriers


def classify_point(r, cfg: BeamConfig, max_shift: float = 0.1) -> CriticalPoint:
    """Refine r to a nearby critical point and classify it by its Hessian."""
    lat = build_geometry(cfg)
    r = np.asarray(r, dtype=float)
    g0 = np.linalg.norm(potential_gradient(r, cfg, lat))
    if g0 > 1e-13:
        rr, g = _newton(r, cfg, lat, max_step=max_shift / 4)
        if np.linalg.norm(rr - r) > max_shift:
            g = np.inf
    else:
        rr, g = r, g0
    if g > NOT_CRITICAL_TOL:
        raise NotCritical(f"no critical point near {r.tolist()} (|grad| = {g:.3g})")
    return _make_point(rr, cfg, lat)


def harmonic_frequency(cfg: BeamConfig) -> float:
    """hbar omega_0 / E_R at minimum A from the isotropic part of the Hessian.

    In E_R units the kinetic term is |p|^2, i.e. mass 1/2, so
    omega^2 = 2 V0 * (mean Hessian eigenvalue of v).
    """
    A, _ = locate_minima(cfg)
    return math.sqrt(2 * cfg.depth * float(np.mean(A.hessian_eigs)))
