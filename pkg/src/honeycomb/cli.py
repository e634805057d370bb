"""Command-line front end.

Every subcommand writes a CSV (or JSON for geom). With --out the file is
written atomically next to a .meta.json sidecar holding the resolved config;
without --out the CSV goes to stdout preceded by a '# {json}' header line.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
import tempfile
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, load_config
from .errors import ConfigError, HoneycombError, NumericalError
from .geometry import build_geometry, k_path
from .planewave import extract_t0_numeric, phase_gap_scan, solve_bands
from .potential import locate_minima, locate_saddles, potential_grid
from .semiclassics import t0_harmonic, t0_semiclassical
from .sweeps import run_sweep
from .tightbinding import HoppingSet, dos_slope, tb_bands, tb_dirac_points, tb_dos

WORKERS_ENV = "HONEYCOMB_WORKERS"


def fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    return format(x, ".17g")


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(fmt(v) for v in row) + "\n")
    return buf.getvalue()


def atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, default=_jsonable)


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    raise TypeError(f"not serializable: {type(x)}")


def emit(args, cfg: RunConfig, text: str, meta: dict) -> None:
    meta = {"command": args.command, "version": __version__, "config": cfg.model_dump(mode="json"), **meta}
    if args.out:
        out = Path(args.out)
        side = out.with_name(out.name + ".meta.json")
        atomic_write(side, json.dumps(meta, sort_keys=True, indent=2, default=_jsonable) + "\n")
        atomic_write(out, text)
    else:
        sys.stdout.write("# " + _dumps(meta) + "\n")
        sys.stdout.write(text)


def _energy_scale(cfg: RunConfig) -> float:
    beam = cfg.beam.to_beam()
    return 1.0 / beam.depth if cfg.units == "V0" else 1.0


def _workers(cfg: RunConfig) -> int:
    if cfg.workers is not None:
        return max(1, int(cfg.workers))
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"{WORKERS_ENV} must be an integer") from exc
    return 1


def _hoppings(cfg: RunConfig, gamma: float | None = None) -> HoppingSet:
    tb = cfg.tb
    if gamma is not None:
        h = HoppingSet.gamma(gamma)
        return HoppingSet(h.t, tb.epsilon)
    if tb.t is not None:
        try:
            t = tuple(complex(str(x).replace(" ", "")) for x in tb.t)
        except ValueError as exc:
            raise ConfigError(f"bad hopping value: {exc}") from exc
        return HoppingSet(t, tb.epsilon)
    return HoppingSet.balanced(-1.0, tb.epsilon)


# subcommands


def cmd_geom(args, cfg):
    beam = cfg.beam.to_beam()
    lat = build_geometry(beam)
    text = json.dumps({"beam": beam.as_dict(), "lattice": lat.as_dict()}, sort_keys=True, indent=2, default=_jsonable) + "\n"
    emit(args, cfg, text, {})


def cmd_pot(args, cfg):
    beam = cfg.beam.to_beam()
    p = cfg.pot
    if p.nx < 2 or p.ny < 2:
        raise ConfigError("nx and ny must be >= 2")
    X, Y, V = potential_grid(beam, p.xrange, p.yrange, p.nx, p.ny)
    scale = beam.depth if cfg.units == "ER" else 1.0
    rows = zip(X.ravel(), Y.ravel(), V.ravel() * scale)
    emit(args, cfg, csv_text(["x", "y", "v"], rows), {"energy_unit": cfg.units})


def cmd_minima(args, cfg):
    beam = cfg.beam.to_beam()
    A, B = locate_minima(beam)
    saddles, barriers = locate_saddles(beam)
    scale = beam.depth if cfg.units == "ER" else 1.0
    rows = [("A", A.kind, A.tag, *A.position, A.value * scale, 0.0),
            ("B", B.kind, B.tag, *B.position, B.value * scale, (B.value - min(A.value, B.value)) * scale)]
    for i, (s, b) in enumerate(zip(saddles, barriers), 1):
        rows.append((f"S{i}", s.kind, s.tag, *s.position, s.value * scale, b * scale))
    emit(args, cfg, csv_text(["name", "kind", "tag", "x", "y", "v", "barrier"], rows), {"energy_unit": cfg.units})


def _ks(cfg, lat):
    b = cfg.bands
    if b.k is not None:
        k = np.asarray(b.k, dtype=float)
        s = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(k, axis=0), axis=1))])
        return s, k
    return k_path(b.path, lat, b.samples)


def cmd_bands(args, cfg):
    beam = cfg.beam.to_beam()
    lat = build_geometry(beam)
    s, ks = _ks(cfg, lat)
    b = cfg.bands
    grid = solve_bands(beam, ks, n=b.n, N=b.cutoff, workers=_workers(cfg), solver=b.solver, s=s)
    scale = _energy_scale(cfg)
    header = ["path_s", "k_x", "k_y"] + [f"e{i + 1}" for i in range(b.n)] + ["residual"]
    rows = [(si, *k, *(e * scale), grid.residual * scale) for si, k, e in zip(s, ks, grid.energies)]
    emit(args, cfg, csv_text(header, rows), {"cutoff": grid.cutoff, "residual": grid.residual, "energy_unit": cfg.units})


def cmd_tb_bands(args, cfg):
    h = _hoppings(cfg, cfg.tb.gamma[0] if cfg.tb.gamma else None)
    lat = build_geometry(cfg.beam.to_beam())
    s, ks = k_path(cfg.tb.path, lat, cfg.tb.samples)
    em, ep = tb_bands(ks, h, lat)
    rows = [(*k, a, b) for k, a, b in zip(ks, em, ep)]
    emit(args, cfg, csv_text(["k_x", "k_y", "e_minus", "e_plus"], rows), {"hoppings": [str(t) for t in h.t]})


def cmd_dirac(args, cfg):
    lat = build_geometry(cfg.beam.to_beam())
    rows = []
    gammas = cfg.tb.gamma if cfg.tb.gamma else [None]
    for g in gammas:
        h = _hoppings(cfg, g)
        pair = tb_dirac_points(h, lat)
        label = float("nan") if g is None else g
        if pair is None:
            sys.stderr.write(f"no Dirac points (gamma={fmt(label)})\n")
            rows.append((label, float("nan"), float("nan"), False, False))
        else:
            rows.append((label, pair.k[0], pair.k[1], True, pair.merged))
    emit(args, cfg, csv_text(["gamma", "k_Dx", "k_Dy", "exists", "merged"], rows), {})


def cmd_dos(args, cfg):
    h = _hoppings(cfg, cfg.tb.gamma[0] if cfg.tb.gamma else None)
    d = tb_dos(h, cfg.tb.grid, cfg.tb.bins)
    rows = zip(d.centers, d.rho, d.rho_minus, d.rho_plus)
    meta = {"bin_width": d.width, "slope_near_zero": dos_slope(d)}
    emit(args, cfg, csv_text(["E", "rho", "rho_minus", "rho_plus"], rows), meta)


def cmd_t0(args, cfg):
    base = cfg.beam.to_beam()
    rows = []
    for D in cfg.t0.v0:
        beam = base.with_(depth=float(D))
        ex = extract_t0_numeric(beam, N=cfg.t0.cutoff)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            sc = t0_semiclassical(D)
        ha = abs(t0_harmonic(D).t0)
        ref = ex.gamma_gap
        for method, val in (("exact-gamma", ex.gamma_gap), ("exact-slope", ex.cone_slope),
                            ("semiclassical", sc), ("harmonic", ha)):
            rows.append((D, method, val, val / ref))
    emit(args, cfg, csv_text(["v0", "method", "t0", "ratio_to_exact"], rows), {"energy_unit": "ER"})


def _sweep(args, cfg, family):
    beam = cfg.beam.to_beam()
    sw = cfg.sweep
    res = run_sweep(beam, family, sw.hbar_e, bracket=sw.bracket, probes=sw.probes, rtol=sw.rtol,
                    cutoff=sw.cutoff, workers=_workers(cfg))
    rows = [(r.hbar_e, r.critical_value, r.fit_value, r.status) for r in res.rows]
    meta = {"family": family, "alpha_fit": res.alpha, "beta_fit": res.beta, "fit_residual": res.fit_residual,
            "fit_variable": "theta/pi" if family == "angle-theta" else "eta"}
    emit(args, cfg, csv_text(["hbar_e", "critical_value", "fit_value", "status"], rows), meta)


def cmd_phase_scan(args, cfg):
    beam = cfg.beam.to_beam()
    ph = cfg.phase
    phases = ph.phases if ph.phases is not None else np.linspace(0.0, ph.phi_max, ph.count)
    r = phase_gap_scan(beam, phases, N=cfg.bands.cutoff)
    scale = _energy_scale(cfg)
    meta = {"slope": r.slope * scale, "intercept": r.intercept * scale, "r2": r.r2, "energy_unit": cfg.units}
    emit(args, cfg, csv_text(["phase", "gap"], zip(r.phases, r.gaps * scale)), meta)


COMMANDS = {
    "geom": cmd_geom,
    "pot": cmd_pot,
    "minima": cmd_minima,
    "bands": cmd_bands,
    "tb-bands": cmd_tb_bands,
    "dirac": cmd_dirac,
    "dos": cmd_dos,
    "t0": cmd_t0,
    "sweep-eta": lambda a, c: _sweep(a, c, "strength-eta"),
    "sweep-theta": lambda a, c: _sweep(a, c, "angle-theta"),
    "phase-scan": cmd_phase_scan,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("configuration")
    g.add_argument("--config", help="JSON run configuration; flags override it")
    g.add_argument("--out", help="output file (default: stdout)")
    g.add_argument("--v0", dest="beam.depth", type=float, help="lattice depth V0/E_R")
    g.add_argument("--hbar-e", dest="beam.hbar_e", type=float, help="effective Planck constant")
    g.add_argument("--strengths", dest="beam.strengths", type=float, nargs=3, metavar="S")
    g.add_argument("--theta2", dest="beam.theta2", type=float)
    g.add_argument("--theta3", dest="beam.theta3", type=float)
    g.add_argument("--phase", dest="beam.phase", type=float)
    g.add_argument("--detuning", dest="beam.detuning", choices=["blue", "red"])
    g.add_argument("--units", dest="units", choices=["ER", "V0"])
    g.add_argument("--workers", dest="workers", type=int)
    g.add_argument("--seed", dest="seed", type=int)

    p = argparse.ArgumentParser(prog="honeycomb", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("geom", parents=[common], help="lattice vectors as JSON")

    sp = sub.add_parser("pot", parents=[common], help="potential on a grid")
    sp.add_argument("--xrange", dest="pot.xrange", type=float, nargs=2)
    sp.add_argument("--yrange", dest="pot.yrange", type=float, nargs=2)
    sp.add_argument("--nx", dest="pot.nx", type=int)
    sp.add_argument("--ny", dest="pot.ny", type=int)

    sub.add_parser("minima", parents=[common], help="minima, saddles and barriers")

    sp = sub.add_parser("bands", parents=[common], help="plane-wave bands along a k-path")
    sp.add_argument("--path", dest="bands.path", choices=["G-K-M-G", "K2-Kp3"])
    sp.add_argument("--samples", dest="bands.samples", type=int, help="samples per path segment")
    sp.add_argument("--n", dest="bands.n", type=int, help="number of bands")
    sp.add_argument("--cutoff", dest="bands.cutoff", type=int)
    sp.add_argument("--solver", dest="bands.solver", choices=["sparse", "dense"])

    for name, helptext in (("tb-bands", "tight-binding bands along a k-path"),
                           ("dirac", "tight-binding Dirac points"),
                           ("dos", "tight-binding density of states")):
        sp = sub.add_parser(name, parents=[common], help=helptext)
        sp.add_argument("--t", dest="tb.t", nargs=3, metavar="T", help="hoppings t1 t2 t3 (complex allowed, e.g. 1+0.5j)")
        sp.add_argument("--gamma", dest="tb.gamma", type=float, nargs="+", help="t1 = gamma t0, t2 = t3 = t0")
        sp.add_argument("--epsilon", dest="tb.epsilon", type=float)
        if name == "tb-bands":
            sp.add_argument("--path", dest="tb.path", choices=["G-K-M-G", "K2-Kp3"])
            sp.add_argument("--samples", dest="tb.samples", type=int)
        if name == "dos":
            sp.add_argument("--grid", dest="tb.grid", type=int)
            sp.add_argument("--bins", dest="tb.bins", type=int)

    sp = sub.add_parser("t0", parents=[common], help="hopping amplitude: exact vs semiclassical vs harmonic")
    sp.add_argument("--v0-list", dest="t0.v0", type=float, nargs="+")
    sp.add_argument("--cutoff", dest="t0.cutoff", type=int)

    for name in ("sweep-eta", "sweep-theta"):
        sp = sub.add_parser(name, parents=[common], help="critical distortion versus hbar_e")
        sp.add_argument("--hbar-e-list", dest="sweep.hbar_e", type=float, nargs="+")
        sp.add_argument("--bracket", dest="sweep.bracket", type=float, nargs=2)
        sp.add_argument("--probes", dest="sweep.probes", type=int)
        sp.add_argument("--rtol", dest="sweep.rtol", type=float)
        sp.add_argument("--cutoff", dest="sweep.cutoff", type=int)

    sp = sub.add_parser("phase-scan", parents=[common], help="gap at K versus phase")
    sp.add_argument("--phases", dest="phase.phases", type=float, nargs="+")
    sp.add_argument("--phi-max", dest="phase.phi_max", type=float)
    sp.add_argument("--count", dest="phase.count", type=int)
    sp.add_argument("--cutoff", dest="bands.cutoff", type=int)
    return p


def run_command(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    ns = vars(args)
    overrides = {k: v for k, v in ns.items() if "." in k or k in ("units", "workers", "seed")}
    overrides = {k: (list(v) if isinstance(v, (list, tuple)) else v) for k, v in overrides.items() if v is not None}
    if args.command == "t0" and "beam.depth" in overrides and "t0.v0" not in overrides:
        overrides["t0.v0"] = [overrides["beam.depth"]]
    try:
        cfg = load_config(args.config, overrides)
        COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        _error(exc, 2)
        return 2
    except NumericalError as exc:
        _error(exc, 3)
        return 3
    except HoneycombError as exc:
        _error(exc, 2)
        return 2
    return 0


def _error(exc, code):
    payload = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    for attr in ("k", "drift", "samples"):
        if hasattr(exc, attr):
            payload[attr] = getattr(exc, attr)
    sys.stderr.write(_dumps(payload) + "\n")


def main(argv=None):
    sys.exit(run_command(argv))


if __name__ == "__main__":
    main()
