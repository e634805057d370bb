"""Critical-distortion sweeps over hbar_e with per-row status and a scaling fit."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .errors import ConfigError, HoneycombError, NumericalError
from .geometry import BeamConfig
from .planewave import critical_parameter, fit_critical_scaling


@dataclass(frozen=True)
class SweepRow:
    hbar_e: float
    critical_value: float  # eta, or theta in radians
    fit_value: float  # eta, or theta / pi
    status: str


@dataclass(frozen=True)
class SweepResult:
    family: str
    rows: list
    alpha: float
    beta: float
    fit_residual: float


def _row(args) -> SweepRow:
    template, family, h, bracket, probes, rtol, cutoff = args
    try:
        r = critical_parameter(template, family, h, bracket=bracket, probes=probes, rtol=rtol, N=cutoff)
    except HoneycombError as exc:
        return SweepRow(h, math.nan, math.nan, f"failed: {type(exc).__name__}: {exc}")
    scale = math.pi if family == "angle-theta" else 1.0
    return SweepRow(h, r.value, r.value / scale, "ok")


def run_sweep(template: BeamConfig, family: str, hbar_values, bracket=(0.0, 0.3), probes: int = 4,
              rtol: float = 1e-3, cutoff: int | None = None, workers: int = 1) -> SweepResult:
    hs = sorted(float(h) for h in hbar_values)
    if len(hs) < 4:
        raise ConfigError("a sweep needs at least 4 hbar_e values")
    jobs = [(template, family, h, tuple(bracket), probes, rtol, cutoff) for h in hs]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(_row, jobs))
    else:
        rows = [_row(j) for j in jobs]
    good = [(r.hbar_e, r.fit_value) for r in rows if r.status == "ok"]
    if len(good) < 4:
        raise NumericalError(f"only {len(good)} sweep rows succeeded; need 4 for the fit")
    fit = fit_critical_scaling(good)
    return SweepResult(family, rows, fit.alpha, fit.beta, fit.residual)
