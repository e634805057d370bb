"""Strict run configuration (JSON) shared by all CLI subcommands."""
from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, ValidationError, model_validator

from .errors import ConfigError
from .geometry import BeamConfig


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class BeamBlock(_Strict):
    strengths: tuple[float, float, float] = (1.0, 1.0, 1.0)
    theta2: float = 0.0
    theta3: float = 0.0
    phase: float = 0.0
    depth: Optional[float] = None
    hbar_e: Optional[float] = None
    detuning: Literal["blue", "red"] = "blue"

    @model_validator(mode="after")
    def _one_depth(self):
        if self.depth is not None and self.hbar_e is not None:
            raise ValueError("give either depth or hbar_e, not both")
        return self

    def to_beam(self) -> BeamConfig:
        depth = self.depth
        if self.hbar_e is not None:
            if not self.hbar_e > 0:
                raise ConfigError("hbar_e must be positive")
            depth = 2.0 / self.hbar_e**2
        return BeamConfig(
            strengths=self.strengths, theta2=self.theta2, theta3=self.theta3,
            phase=self.phase, depth=32.0 if depth is None else depth, detuning=self.detuning,
        )


class BandsBlock(_Strict):
    path: str = "G-K-M-G"
    samples: int = 50
    n: int = 2
    cutoff: Optional[int] = None
    solver: Literal["sparse", "dense"] = "sparse"
    k: Optional[list[tuple[float, float]]] = None


class PotBlock(_Strict):
    xrange: tuple[float, float] = (0.0, 7.3)
    yrange: tuple[float, float] = (-4.2, 4.2)
    nx: int = 101
    ny: int = 101


class TBBlock(_Strict):
    t: Optional[tuple[str, str, str]] = None
    gamma: Optional[list[float]] = None
    epsilon: float = 0.0
    grid: int = 400
    bins: int = 600
    path: str = "G-K-M-G"
    samples: int = 50


class T0Block(_Strict):
    v0: list[float] = [20.0, 32.0, 50.0, 80.0]
    cutoff: Optional[int] = None


class SweepBlock(_Strict):
    hbar_e: list[float] = [0.15, 0.2, 0.25, 0.3, 0.35]
    bracket: tuple[float, float] = (0.0, 0.3)
    probes: int = 4
    rtol: float = 1e-3
    cutoff: Optional[int] = None


class PhaseBlock(_Strict):
    phases: Optional[list[float]] = None
    phi_max: float = math.pi / 48
    count: int = 9


class RunConfig(_Strict):
    beam: BeamBlock = BeamBlock()
    bands: BandsBlock = BandsBlock()
    pot: PotBlock = PotBlock()
    tb: TBBlock = TBBlock()
    t0: T0Block = T0Block()
    sweep: SweepBlock = SweepBlock()
    phase: PhaseBlock = PhaseBlock()
    units: Literal["ER", "V0"] = "ER"
    seed: int = 0
    workers: Optional[int] = None


def load_config(path: str | Path | None, overrides: dict | None = None) -> RunConfig:
    """Read a JSON config (if given) and apply nested overrides on top."""
    data: dict = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
    for dotted, value in (overrides or {}).items():
        node = data
        *head, last = dotted.split(".")
        for key in head:
            node = node.setdefault(key, {})
        node[last] = value
    # depth and hbar_e are alternatives; a flag for one replaces the other
    beam = data.get("beam", {})
    if "beam.depth" in (overrides or {}):
        beam.pop("hbar_e", None)
    if "beam.hbar_e" in (overrides or {}):
        beam.pop("depth", None)
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc
