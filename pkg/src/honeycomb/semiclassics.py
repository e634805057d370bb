"""Harmonic and instanton estimates of the nearest-neighbour hopping t0.

Rescaled units for the instanton: lengths 1/k_L, energies V0, mass 1, so the
Hamiltonian is p^2/2 + v(r) and hbar is replaced by hbar_e = sqrt(2 E_R/V0).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson, solve_ivp

from .errors import ConfigError, ConvergenceError
from .geometry import SQRT3, BeamConfig, build_geometry
from .potential import potential_hessian, potential_value

LAMBDA = 3 * math.sqrt(2) / 4
OMEGA0 = 3 / math.sqrt(2)
A_BOND = 4 * math.pi / (3 * SQRT3)  # |c_a| in units of 1/k_L
S0_CLOSED = 4 * math.sqrt(2) * (1 - math.pi / (3 * SQRT3))
ALPHA1 = math.sqrt(27 * math.sqrt(2) / math.pi)
MIN_DEPTH = 5.0
WARN_DEPTH = 10.0


def instanton_trajectory(tau):
    """x0(tau) in units of a along A -> B, solving tan(pi x0/3) = -sqrt3 coth(lambda tau)."""
    s = np.tanh(LAMBDA * np.asarray(tau, dtype=float))
    return 1.5 + (3 / math.pi) * np.arctan(s / SQRT3)


def instanton_velocity(tau):
    """dx0/dtau in units of a per rescaled time."""
    s = np.tanh(LAMBDA * np.asarray(tau, dtype=float))
    return (3 / math.pi) * (LAMBDA * (1 - s * s) / SQRT3) / (1 + s * s / 3)


def instanton_points(tau) -> np.ndarray:
    x = A_BOND * instanton_trajectory(tau)
    return np.stack([x, np.zeros_like(x)], axis=-1)


def instanton_action(panels: int | None = None) -> float:
    """S0 = integral of sqrt(2 v) from A to B; closed form unless panels is given.

    With panels, Simpson quadrature of the potential on the A-B line.
    """
    if panels is None:
        return S0_CLOSED
    cfg = BeamConfig()
    x = np.linspace(A_BOND, 2 * A_BOND, panels + 1)
    v = potential_value(np.stack([x, np.zeros_like(x)], axis=-1), cfg)
    return float(simpson(np.sqrt(2 * np.clip(v, 0, None)), x=x))


def omega_y_sq(tau) -> np.ndarray:
    """Transverse curvature d^2 v / dy^2 along the instanton (analytic Hessian)."""
    H = potential_hessian(instanton_points(tau), BeamConfig())
    return H[..., 1, 1]


def jacobi_ratio(T: float, max_step: float = np.inf, rtol: float = 1e-12) -> tuple[float, float]:
    """sqrt(J0(T)/J(T)) and the relative error of the numerical J0 against its closed form."""
    lat_cfg = BeamConfig()
    lat = build_geometry(lat_cfg)

    def rhs(t, y):
        x = A_BOND * instanton_trajectory(t)
        wy = potential_hessian(np.array([x, 0.0]), lat_cfg, lat)[1, 1]
        return [y[1], wy * y[0], y[3], OMEGA0**2 * y[2]]

    sol = solve_ivp(rhs, (-T, T), [0.0, 1.0, 0.0, 1.0], method="DOP853",
                    rtol=rtol, atol=1e-14, max_step=max_step)
    if not sol.success:
        raise ConvergenceError(f"Jacobi-field integration failed: {sol.message}")
    J, J0num = sol.y[0, -1], sol.y[2, -1]
    J0 = math.sinh(2 * OMEGA0 * T) / OMEGA0
    return math.sqrt(J0 / J), abs(J0num / J0 - 1)


@dataclass(frozen=True)
class PrefactorResult:
    alpha1: float
    alpha2: float
    alpha: float
    T: float
    drift: float
    j0_error: float


def fluctuation_prefactor(T0: float | None = None, step: float | None = None, rtol: float = 1e-4,
                          max_rounds: int = 12, max_step: float = np.inf) -> PrefactorResult:
    """alpha1 (closed form), alpha2 from Jacobi fields, alpha = alpha1 alpha2.

    T grows from 12/omega0 in steps of 3/omega0 until the Aitken-extrapolated
    ratio changes by less than rtol between rounds.
    """
    T = T0 if T0 is not None else 12 / OMEGA0
    dT = step if step is not None else 3 / OMEGA0
    vals, errs = [], []
    prev = None
    drift = math.inf
    for _ in range(max_rounds):
        r, e = jacobi_ratio(T, max_step=max_step)
        vals.append(r)
        errs.append(e)
        est = _aitken(vals)
        if prev is not None:
            drift = abs(est / prev - 1)
            if drift < rtol:
                break
        prev = est
        T += dT
    else:
        raise ConvergenceError(f"alpha2 did not converge in {max_rounds} rounds", drift=drift)
    return PrefactorResult(ALPHA1, est, ALPHA1 * est, T, drift, max(errs))


def _aitken(vals):
    if len(vals) < 3:
        return vals[-1]
    x0, x1, x2 = vals[-3:]
    den = x2 - 2 * x1 + x0
    if abs(den) < 1e-15 * abs(x2):
        return x2
    return x2 - (x2 - x1) ** 2 / den


@dataclass(frozen=True)
class InstantonResult:
    S0: float
    alpha1: float
    alpha2: float
    alpha: float

    def t0_over_V0(self, hbar_e: float) -> float:
        return self.alpha * math.sqrt(hbar_e) * math.exp(-self.S0 / hbar_e)

    def t0_over_ER(self, depth: float) -> float:
        return depth * self.t0_over_V0(math.sqrt(2.0 / depth))

    @property
    def prefactor_ER(self) -> float:
        """c in |t0|/E_R = c D^(3/4) exp(-s sqrt D)."""
        return self.alpha * 2**0.25

    @property
    def exponent_ER(self) -> float:
        return self.S0 / math.sqrt(2)


_CACHE: dict = {}


def instanton_result() -> InstantonResult:
    if "inst" not in _CACHE:
        p = fluctuation_prefactor()
        _CACHE["inst"] = InstantonResult(instanton_action(), p.alpha1, p.alpha2, p.alpha)
    return _CACHE["inst"]


def t0_printed(depth: float) -> float:
    """The rounded-constant form 1.861 D^(3/4) exp(-1.582 sqrt D), for regression checks."""
    return 1.861 * depth**0.75 * math.exp(-1.582 * math.sqrt(depth))


def t0_semiclassical(depth: float) -> float:
    """|t0| / E_R from the instanton estimate."""
    if depth < MIN_DEPTH:
        raise ConfigError(f"V0/E_R = {depth} is outside the tight-binding regime (need >= {MIN_DEPTH})")
    if depth < WARN_DEPTH:
        warnings.warn(f"V0/E_R = {depth} < {WARN_DEPTH}: semiclassical estimate is rough", stacklevel=2)
    return instanton_result().t0_over_ER(depth)


@dataclass(frozen=True)
class HarmonicResult:
    hbar_omega0: float  # E_R
    overlap: float
    t0: float  # E_R, negative
    length: float  # 1/k_L


def t0_harmonic(depth: float) -> HarmonicResult:
    """Gaussian-orbital estimate; a known underestimate of |t0|."""
    if not depth > 0:
        raise ConfigError("depth must be positive")
    g = math.exp(-(2 * math.pi**2 / 9) * math.sqrt(depth))
    return HarmonicResult(
        hbar_omega0=3 * math.sqrt(depth),
        overlap=g,
        t0=-(math.pi**2 / 3 - 1) * depth * g,
        length=math.sqrt(2 / (3 * math.sqrt(depth))),
    )


@dataclass(frozen=True)
class ExperimentalBounds:
    W: float
    E_F: float
    T_max_over_T_R: float
    zeta: float | None
    rho_tilde: float | None
    zeta_note: str = "zeta = sqrt(2|t0|/(m Omega_t^2)); printed form lacks the square on Omega_t"


def experimental_bounds(depth: float, trap_omega: float | None = None, n_atoms: float | None = None) -> ExperimentalBounds:
    """Bandwidth, Fermi energy, temperature ratio and trap length scales.

    Energies in E_R, temperature in T_R = E_R/k_B, trap_omega in E_R/hbar,
    zeta in 1/k_L. Mass is 1/2 in these units.
    """
    t = t0_semiclassical(depth)
    W = 6 * t
    zeta = rho = None
    if trap_omega is not None:
        if not trap_omega > 0:
            raise ConfigError("trap frequency must be positive")
        zeta = math.sqrt(2 * t / (0.5 * trap_omega**2))
        if n_atoms is not None:
            rho = n_atoms * (A_BOND / zeta) ** 2
    return ExperimentalBounds(W, 3 * t, W, zeta, rho)
