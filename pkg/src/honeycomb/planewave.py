"""Exact Bloch bands by plane-wave diagonalization.

Basis Q = n1 b1 + n2 b2 with |n1|, |n2| <= N. In E_R units the Bloch matrix is

    H_{QQ'} = |k + Q|^2 delta_{QQ'} + (V0/E_R) v_{Q-Q'}

and v_Q is nonzero only for Q in {0, +-b1, +-b2, +-(b1+b2)}, so each row has
at most seven entries.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.optimize import brentq, minimize, minimize_scalar
from scipy.sparse.linalg import ArpackError, ArpackNoConvergence, eigsh
from threadpoolctl import threadpool_limits

from .errors import BracketingFailure, ConfigError, EigensolverFailure, RankDeficientFit
from .geometry import BeamConfig, LatticeVectors, build_geometry

DENSE_MAX_DIM = 2500
SMALL_DIM = 200
MAX_BANDS = 8
GAP_FLOOR = 1e-6


@dataclass(frozen=True)
class FourierPotential:
    """v(r) = sum_Q v_Q exp(i Q.r), Q = n1 b1 + n2 b2, in units of V0."""

    coeffs: dict

    def evaluate(self, r, lat: LatticeVectors):
        r = np.asarray(r, dtype=float)
        out = np.zeros(r.shape[:-1], dtype=complex)
        for (n1, n2), c in self.coeffs.items():
            Q = n1 * lat.b1 + n2 * lat.b2
            out = out + c * np.exp(1j * (r @ Q))
        return out

    def is_hermitian(self, tol: float = 0.0) -> bool:
        return all(abs(self.coeffs.get((-a, -b), 0) - np.conj(c)) <= tol for (a, b), c in self.coeffs.items())


def fourier_coefficients(cfg: BeamConfig) -> FourierPotential:
    s1, s2, s3 = cfg.strengths
    e = complex(math.cos(cfg.phase), math.sin(cfg.phase))
    w = {(1, 0): s1 * s2, (0, 1): s1 * s3, (-1, -1): s2 * s3}
    coeffs = {(0, 0): complex(s1 * s1 + s2 * s2 + s3 * s3)}
    for (a, b), x in w.items():
        coeffs[(a, b)] = x * e
        coeffs[(-a, -b)] = x * e.conjugate()
    return FourierPotential(coeffs)


@lru_cache(maxsize=64)
def _index(N: int):
    n = np.arange(-N, N + 1)
    n1, n2 = np.meshgrid(n, n, indexing="ij")
    n1, n2 = n1.ravel(), n2.ravel()
    M = 2 * N + 1
    idx = np.arange(M * M)
    links = {}
    for m1 in (-1, 0, 1):
        for m2 in (-1, 0, 1):
            ok = (np.abs(n1 - m1) <= N) & (np.abs(n2 - m2) <= N)
            links[(m1, m2)] = (idx[ok], ((n1 - m1 + N) * M + (n2 - m2 + N))[ok])
    return n1, n2, links


def _sign(cfg: BeamConfig) -> float:
    return 1.0 if cfg.detuning == "blue" else -1.0


def bloch_matrix(k, cfg: BeamConfig, N: int, lat: LatticeVectors | None = None,
                 fourier: FourierPotential | None = None, depth: float | None = None) -> sp.csr_matrix:
    """Sparse Hermitian Bloch matrix in E_R units, dimension (2N+1)^2."""
    if N < 3:
        raise ConfigError("cutoff N must be >= 3")
    lat = lat or build_geometry(cfg)
    fourier = fourier or fourier_coefficients(cfg)
    D = (cfg.depth if depth is None else depth) * _sign(cfg)
    n1, n2, links = _index(N)
    k = np.asarray(k, dtype=float)
    Q = np.outer(n1, lat.b1) + np.outer(n2, lat.b2)
    kin = ((k + Q) ** 2).sum(axis=1)
    real = all(np.imag(c) == 0 for c in fourier.coeffs.values())
    dtype = float if real else complex
    rows, cols, vals = [], [], []
    for m, c in fourier.coeffs.items():
        if c == 0:
            continue
        r, cc = links[m]
        rows.append(r)
        cols.append(cc)
        vals.append(np.full(r.size, D * (c.real if real else c), dtype=dtype))
    dim = n1.size
    rows.append(np.arange(dim))
    cols.append(np.arange(dim))
    vals.append(kin.astype(dtype))
    A = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim))
    return A.tocsr()


def default_cutoff(hbar_e: float) -> int:
    return int(min(24, max(8, math.ceil(4 / hbar_e))))


def spectrum_lower_bound(cfg: BeamConfig) -> float:
    """A number strictly below every Bloch eigenvalue (E_R)."""
    if cfg.phase == 0 and cfg.detuning == "blue":
        return -1.0  # v = |f|^2 >= 0 and the kinetic term is >= 0
    lat = build_geometry(cfg)
    from .potential import _terms

    _, w, q = _terms(cfg, lat)
    g = 48
    u = (np.arange(g) + 0.5) / g
    U1, U2 = np.meshgrid(u, u, indexing="ij")
    r = U1[..., None] * lat.a1 + U2[..., None] * lat.a2
    fo = fourier_coefficients(cfg)
    v = fo.evaluate(r, lat).real * _sign(cfg)
    h = (np.linalg.norm(lat.a1) + np.linalg.norm(lat.a2)) / g
    curv = 2 * float((w * (q**2).sum(axis=1)).sum())
    return cfg.depth * (float(v.min()) - curv * h * h) - 1.0


def _v0(dim: int) -> np.ndarray:
    # fixed pseudo-random start vector: deterministic, and not confined to a
    # symmetry sector the way a constant vector would be
    return np.random.default_rng(20080101).standard_normal(dim)


def lowest_eigenvalues(A, n: int, sigma: float, solver: str = "sparse", k=None) -> np.ndarray:
    dim = A.shape[0]
    with threadpool_limits(limits=1):
        if solver == "sparse" and dim > SMALL_DIM and n < dim - 1:
            try:
                w = eigsh(A, k=n, sigma=sigma, which="LM", v0=_v0(dim), tol=0, return_eigenvectors=False)
                w = np.sort(w.real)
                if np.all(np.isfinite(w)) and w.size == n:
                    return w
            except (ArpackError, ArpackNoConvergence, RuntimeError):
                pass
        if dim > DENSE_MAX_DIM * 2:
            raise EigensolverFailure(k if k is not None else (np.nan, np.nan), "matrix too large for dense fallback")
        try:
            Ad = A.toarray() if sp.issparse(A) else A
            return sla.eigh(Ad, eigvals_only=True, subset_by_index=[0, n - 1])
        except (sla.LinAlgError, ValueError) as exc:
            raise EigensolverFailure(k if k is not None else (np.nan, np.nan), str(exc)) from exc


def eigenvalues_at(k, cfg: BeamConfig, n: int = 2, N: int | None = None, solver: str = "sparse",
                   lat: LatticeVectors | None = None, sigma: float | None = None) -> np.ndarray:
    N = N or default_cutoff(cfg.hbar_e)
    lat = lat or build_geometry(cfg)
    sigma = spectrum_lower_bound(cfg) if sigma is None else sigma
    A = bloch_matrix(k, cfg, N, lat)
    return lowest_eigenvalues(A, n, sigma, solver, k=k)


_RESIDUALS: dict = {}


def convergence_residual(cfg: BeamConfig, N: int, n: int = 2, solver: str = "sparse") -> float:
    """Max eigenvalue shift under N -> N+2 at Gamma, K and the mid-edge point."""
    key = (cfg, N, n, solver)
    if key not in _RESIDUALS:
        lat = build_geometry(cfg)
        sigma = spectrum_lower_bound(cfg)
        shift = 0.0
        for k in (np.zeros(2), lat.K, lat.M):
            e1 = eigenvalues_at(k, cfg, n, N, solver, lat, sigma)
            e2 = eigenvalues_at(k, cfg, n, N + 2, solver, lat, sigma)
            shift = max(shift, float(np.abs(e2 - e1).max()))
        _RESIDUALS[key] = shift
    return _RESIDUALS[key]


@dataclass
class BandGrid:
    k: np.ndarray  # (m, 2)
    energies: np.ndarray  # (m, n), ascending per row, E_R
    cutoff: int
    residual: float
    s: np.ndarray | None = None  # path parameter, if sampled on a path
    meta: dict = field(default_factory=dict)


def _solve_chunk(args):
    ks, cfg, n, N, solver, sigma = args
    lat = build_geometry(cfg)
    return np.array([eigenvalues_at(k, cfg, n, N, solver, lat, sigma) for k in ks])


def solve_bands(cfg: BeamConfig, ks, n: int = 2, N: int | None = None, workers: int = 1,
                solver: str = "sparse", s=None, residual: bool = True) -> BandGrid:
    """Lowest n bands at each k. Results are ordered by k index whatever the worker count."""
    if not 1 <= n <= MAX_BANDS:
        raise ConfigError(f"number of bands must be in [1, {MAX_BANDS}]")
    ks = np.atleast_2d(np.asarray(ks, dtype=float))
    N = N or default_cutoff(cfg.hbar_e)
    sigma = spectrum_lower_bound(cfg)
    if workers > 1 and len(ks) > 1:
        chunks = [c for c in np.array_split(ks, min(len(ks), 4 * workers)) if len(c)]
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_solve_chunk, [(c, cfg, n, N, solver, sigma) for c in chunks]))
        E = np.vstack(parts)
    else:
        E = _solve_chunk((ks, cfg, n, N, solver, sigma))
    res = convergence_residual(cfg, N, n, solver) if residual else float("nan")
    return BandGrid(ks, E, N, res, None if s is None else np.asarray(s, dtype=float))


# mirror symmetry x -> -x of the strength and angle families


def has_mirror_symmetry(cfg: BeamConfig) -> bool:
    s1, s2, s3 = cfg.strengths
    return s2 == s3 and cfg.theta3 == -cfg.theta2 and cfg.phase == 0


@lru_cache(maxsize=64)
def _parity_projectors(N: int):
    n1, n2, _ = _index(N)
    M = 2 * N + 1
    idx = np.arange(M * M)
    img = (-n2 + N) * M + (-n1 + N)
    fixed = idx[img == idx]
    pairs = idx[idx < img]
    P, F = len(pairs), len(fixed)
    h = 1 / math.sqrt(2)
    Ue = sp.csr_matrix(
        (np.concatenate([np.full(P, h), np.full(P, h), np.ones(F)]),
         (np.concatenate([pairs, img[pairs], fixed]), np.concatenate([np.arange(P), np.arange(P), P + np.arange(F)]))),
        shape=(M * M, P + F))
    Uo = sp.csr_matrix(
        (np.concatenate([np.full(P, h), np.full(P, -h)]),
         (np.concatenate([pairs, img[pairs]]), np.concatenate([np.arange(P), np.arange(P)]))),
        shape=(M * M, P))
    return Ue, Uo


def mirror_line_point(s: float, lat: LatticeVectors) -> np.ndarray:
    """k = s (b2 - b1): the mirror-invariant line through Gamma, K (s=1/3) and the mid-edge (s=1/2)."""
    return s * (lat.b2 - lat.b1)


def mirror_sector_energies(k, cfg: BeamConfig, N: int, n: int = 1, lat=None, sigma=None, solver="sparse"):
    """Lowest n eigenvalues in the even and odd mirror sectors at a mirror-invariant k."""
    if not has_mirror_symmetry(cfg):
        raise ConfigError("configuration is not mirror symmetric")
    lat = lat or build_geometry(cfg)
    sigma = spectrum_lower_bound(cfg) if sigma is None else sigma
    A = bloch_matrix(k, cfg, N, lat)
    Ue, Uo = _parity_projectors(N)
    He = (Ue.T @ A @ Ue).tocsr()
    Ho = (Uo.T @ A @ Uo).tocsr()
    return lowest_eigenvalues(He, n, sigma, solver, k), lowest_eigenvalues(Ho, n, sigma, solver, k)


class GapResult(NamedTuple):
    gap: float
    k: np.ndarray
    method: str


def _gap_at(k, cfg, N, lat, sigma, solver):
    e = eigenvalues_at(k, cfg, 2, N, solver, lat, sigma)
    return float(e[1] - e[0])


def min_gap(cfg: BeamConfig, region: str = "auto", N: int | None = None, coarse: int = 17,
            refine: bool = True, solver: str = "sparse") -> GapResult:
    """Minimum of E2 - E1 over the Brillouin zone and where it occurs.

    region 'line' scans the mirror-invariant line with the parity-resolved
    spectrum (a crossing is a sign change of even minus odd), 'zone' scans a
    2D grid of the reciprocal cell. Both finish with an unconstrained 2D
    Nelder-Mead refinement when refine is set.
    """
    N = N or default_cutoff(cfg.hbar_e)
    lat = build_geometry(cfg)
    sigma = spectrum_lower_bound(cfg)
    if region == "auto":
        region = "line" if has_mirror_symmetry(cfg) else "zone"
    gap_at = lambda k: _gap_at(k, cfg, N, lat, sigma, solver)  # noqa: E731

    if region == "line":
        def diff(s):
            e, o = mirror_sector_energies(mirror_line_point(s, lat), cfg, N, 1, lat, sigma, solver)
            return float(e[0] - o[0])

        ss = np.linspace(0.0, 0.5, coarse)
        ds = np.array([diff(s) for s in ss])
        root = None
        for i in range(len(ss) - 1):
            if ds[i] == 0:
                root = ss[i]
                break
            if ds[i] * ds[i + 1] < 0:
                root = brentq(diff, ss[i], ss[i + 1], xtol=1e-12, rtol=1e-12)
                break
        if root is None and ds[-1] == 0:
            root = ss[-1]
        if root is not None:
            k = mirror_line_point(root, lat)
            best = GapResult(gap_at(k), k, "line-crossing")
        else:
            i = int(np.argmin(np.abs(ds)))
            lo, hi = ss[max(i - 1, 0)], ss[min(i + 1, len(ss) - 1)]
            r = minimize_scalar(lambda s: gap_at(mirror_line_point(s, lat)), bounds=(lo, hi),
                                method="bounded", options={"xatol": 1e-8})
            k = mirror_line_point(float(r.x), lat)
            best = GapResult(float(r.fun), k, "line-min")
    elif region == "zone":
        g = coarse
        u = np.arange(g) / g
        cand = [np.zeros(2), lat.K, lat.Kp, lat.M, -lat.M, lat.M_line]
        cand += [a * lat.b1 + b * lat.b2 for a in u for b in u]
        gaps = [gap_at(k) for k in cand]
        i = int(np.argmin(gaps))
        best = GapResult(gaps[i], np.asarray(cand[i], dtype=float), "zone-grid")
    else:
        raise ConfigError(f"unknown search region {region!r}")

    if refine and best.gap > GAP_FLOOR * 1e-3:
        step = 0.02 * lat.kappa
        x0 = best.k
        simplex = np.array([x0, x0 + [step, 0], x0 + [0, step]])
        r = minimize(gap_at, x0, method="Nelder-Mead",
                     options={"initial_simplex": simplex, "xatol": 1e-7, "fatol": 1e-12, "maxfev": 400})
        if r.fun < best.gap:
            best = GapResult(float(r.fun), np.asarray(r.x), best.method + "+nm")
    return best


class T0Estimate(NamedTuple):
    gamma_gap: float  # (E2 - E1)(Gamma) / 6
    cone_slope: float  # from the Dirac-cone slope at K
    residual: float
    cutoff: int


def extract_t0_numeric(cfg: BeamConfig, N: int | None = None, q: float = 1e-3, solver: str = "sparse") -> T0Estimate:
    """|t0|/E_R from the exact spectrum, two ways."""
    if not cfg.is_balanced or cfg.phase != 0:
        raise ConfigError("t0 extraction needs a balanced, undistorted, phase-0 lattice")
    N = N or default_cutoff(cfg.hbar_e)
    lat = build_geometry(cfg)
    sigma = spectrum_lower_bound(cfg)
    eg = eigenvalues_at(np.zeros(2), cfg, 2, N, solver, lat, sigma)
    t_gamma = (eg[1] - eg[0]) / 6
    slopes = []
    for th in np.arange(6) * np.pi / 3:
        e = eigenvalues_at(lat.K + q * np.array([math.cos(th), math.sin(th)]), cfg, 2, N, solver, lat, sigma)
        slopes.append((e[1] - e[0]) / (2 * q))
    t_slope = float(np.mean(slopes)) * 2 / (3 * lat.a)
    return T0Estimate(float(t_gamma), t_slope, convergence_residual(cfg, N, 2, solver), N)


FAMILIES = ("strength-eta", "angle-theta")


def family_config(template: BeamConfig, family: str, value: float, hbar_e: float) -> BeamConfig:
    base = template.with_(depth=2.0 / hbar_e**2)
    if family == "strength-eta":
        _, s2, s3 = base.strengths
        return base.with_(strengths=(1.0 + value, s2, s3))
    if family == "angle-theta":
        return base.with_(theta2=-value, theta3=value)
    raise ConfigError(f"unknown family {family!r}; choose from {FAMILIES}")


class CriticalResult(NamedTuple):
    value: float
    bracket: tuple
    threshold: float
    samples: list


def critical_parameter(template: BeamConfig, family: str, hbar_e: float, bracket=(0.0, 0.3), probes: int = 4,
                       rtol: float = 1e-3, N: int | None = None, solver: str = "sparse") -> CriticalResult:
    """Smallest distortion at which the Dirac degeneracy is lifted.

    Predicate: min_gap > max(1e-6 E_R, 10 residual). The predicate is
    sampled at the bracket ends and `probes` interior points and must be
    monotone there; otherwise BracketingFailure.
    """
    N = N or default_cutoff(hbar_e)
    nominal = family_config(template, family, 0.0, hbar_e)
    thr = max(GAP_FLOOR, 10 * convergence_residual(nominal, N, 2, solver))

    def lifted(x):
        cfg = family_config(template, family, x, hbar_e)
        g = min_gap(cfg, "auto", N, refine=False, solver=solver).gap
        return g > thr, g

    lo, hi = bracket
    xs = np.linspace(lo, hi, probes + 2)
    samples = [(float(x), *lifted(x)) for x in xs]
    flags = [f for _, f, _ in samples]
    first = flags.index(True) if True in flags else None
    if first is None or flags[0] or not all(flags[first:]):
        raise BracketingFailure(f"predicate not monotone on bracket {bracket}: {flags}", samples)
    lo, hi = xs[first - 1], xs[first]
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        ok, g = lifted(mid)
        samples.append((float(mid), ok, g))
        if ok:
            hi = mid
        else:
            lo = mid
    return CriticalResult(0.5 * (lo + hi), (float(lo), float(hi)), thr, samples)


class ScalingFit(NamedTuple):
    alpha: float
    beta: float
    residual: float


def fit_critical_scaling(points) -> ScalingFit:
    """Least-squares fit of critical value = alpha h + beta h^2."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or len(pts) < 4:
        raise ConfigError("need at least 4 (hbar_e, value) points")
    h, y = pts[:, 0], pts[:, 1]
    if len(np.unique(h)) != len(h):
        raise ConfigError("hbar_e values must be distinct")
    X = np.column_stack([h, h * h])
    coef, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    if rank < 2:
        raise RankDeficientFit("design matrix is rank deficient")
    return ScalingFit(float(coef[0]), float(coef[1]), float(np.linalg.norm(X @ coef - y)))


class PhaseScan(NamedTuple):
    phases: np.ndarray
    gaps: np.ndarray
    slope: float
    intercept: float
    r2: float


def phase_gap_scan(template: BeamConfig, phases, N: int | None = None, solver: str = "sparse") -> PhaseScan:
    """Gap E2 - E1 at K versus phase, with a straight-line fit."""
    phases = np.asarray(phases, dtype=float)
    N = N or default_cutoff(template.hbar_e)
    gaps = []
    for ph in phases:
        cfg = template.with_(phase=float(ph))
        gaps.append(_gap_at(build_geometry(cfg).K, cfg, N, build_geometry(cfg), spectrum_lower_bound(cfg), solver))
    gaps = np.array(gaps)
    A = np.column_stack([phases, np.ones_like(phases)])
    (m, c), *_ = np.linalg.lstsq(A, gaps, rcond=None)
    ss_res = float(((A @ [m, c] - gaps) ** 2).sum())
    ss_tot = float(((gaps - gaps.mean()) ** 2).sum())
    return PhaseScan(phases, gaps, float(m), float(c), 1 - ss_res / ss_tot if ss_tot > 0 else 1.0)
