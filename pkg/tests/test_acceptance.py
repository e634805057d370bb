"""Quantitative acceptance checks, one recorded line per criterion.

Tolerances are pinned here; the terminal summary lists PASS/FAIL for each.
"""
import math
import subprocess
import sys

import numpy as np
import pytest

from honeycomb.geometry import BeamConfig, build_geometry, k_distance_mod, nominal_geometry
from honeycomb.planewave import convergence_residual, default_cutoff, eigenvalues_at, extract_t0_numeric, phase_gap_scan
from honeycomb.potential import classify_point, locate_minima, locate_saddles, potential_gradient, potential_hessian
from honeycomb.semiclassics import experimental_bounds, instanton_action, instanton_result, t0_harmonic, t0_semiclassical
from honeycomb.sweeps import run_sweep
from honeycomb.tightbinding import HoppingSet, dos_slope, tb_dirac_points, tb_dos

from oracles import brute_force_dirac

HBAR_SWEEP = (0.15, 0.2, 0.25, 0.3, 0.35)


def test_c01_instanton_constants(record):
    r = instanton_result()
    quad = instanton_action(10**6)
    checks = {
        "S0": abs(r.S0 - 2.2375) <= 1e-3,
        "quad": abs(quad - r.S0) <= 1e-8,
        "alpha1": abs(r.alpha1 - 3.486) <= 1e-3,
        "alpha2": abs(r.alpha2 - 0.449) <= 5e-3,
        "alpha": abs(r.alpha - 1.565) <= 1e-2,
    }
    detail = (f"S0={r.S0:.7f} (quad diff {abs(quad - r.S0):.1e}), alpha1={r.alpha1:.6f}, "
              f"alpha2={r.alpha2:.6f}, alpha={r.alpha:.6f}")
    assert record("1 instanton constants", all(checks.values()), detail), checks


def test_c02_hopping_formula_constants(record):
    r = instanton_result()
    c, s = r.prefactor_ER, r.exponent_ER
    ok = abs(c / 1.861 - 1) <= 5e-3 and abs(s / 1.582 - 1) <= 5e-3
    assert record("2 hopping formula constants", ok, f"prefactor {c:.5f} vs 1.861, exponent {s:.5f} vs 1.582")


def test_c03_exact_vs_semiclassical(record):
    parts, ok = [], True
    exact = {}
    for D in (20.0, 32.0, 50.0, 80.0):
        ex = extract_t0_numeric(BeamConfig(depth=D)).gamma_gap
        exact[D] = ex
        ratio = ex / t0_semiclassical(D)
        ok &= abs(ratio - 1) <= 0.15
        parts.append(f"D={D:g}: {ratio:.3f}")
    harm = abs(t0_harmonic(32.0).t0) / exact[32.0]
    ok &= 1 / 20 <= harm <= 1 / 5
    detail = "exact/semiclassical " + ", ".join(parts) + f"; harmonic/exact at 32 = {harm:.4f}"
    assert record("3 exact vs semiclassical t0", ok, detail)


def test_c04_dirac_degeneracy(record):
    parts, ok = [], True
    for h in (0.16, 0.25, 0.3):
        cfg = BeamConfig.from_hbar_e(h)
        N = default_cutoff(h)
        e = eigenvalues_at(build_geometry(cfg).K, cfg, 2, N)
        res = convergence_residual(cfg, N)
        tol = max(1e-8, 10 * res)
        ok &= (e[1] - e[0]) <= tol
        parts.append(f"hbar_e={h}: gap {e[1] - e[0]:.1e} (tol {tol:.0e})")
    assert record("4 Dirac degeneracy at K", ok, "; ".join(parts))


@pytest.fixture(scope="module")
def sweeps():
    return {fam: run_sweep(BeamConfig(), fam, HBAR_SWEEP) for fam in ("strength-eta", "angle-theta")}


def test_c05_critical_sweeps(record, sweeps):
    eta, th = sweeps["strength-eta"], sweeps["angle-theta"]
    n_ok = min(sum(r.status == "ok" for r in s.rows) for s in (eta, th))
    th03 = next(r.critical_value for r in th.rows if r.hbar_e == 0.3)
    deg = math.degrees(th03)
    ok = (n_ok >= 5 and abs(eta.alpha / 0.1074 - 1) <= 0.2 and abs(th.alpha / 0.109 - 1) <= 0.2
          and abs(deg / 5 - 1) <= 0.25)
    detail = (f"eta alpha={eta.alpha:.5f} (x{eta.alpha / 0.1074:.3f}), theta/pi alpha={th.alpha:.5f} "
              f"(x{th.alpha / 0.109:.3f}), theta_c(0.3)={deg:.3f} deg, rows ok={n_ok}")
    assert record("5 critical sweeps", ok, detail)


def test_c06_tight_binding_oracle(record):
    rng = np.random.default_rng(2024)
    lat = nominal_geometry()
    verdict_mismatch, worst = 0, 0.0
    for _ in range(200):
        t = rng.uniform(0.1, 3, 3) * np.exp(1j * rng.uniform(-np.pi, np.pi, 3))
        pair = tb_dirac_points(HoppingSet(tuple(t)), lat)
        zeros = brute_force_dirac(t, lat)
        if (pair is None) != (not zeros):
            verdict_mismatch += 1
            continue
        if pair is not None:
            for k in (pair.k, pair.kp):
                worst = max(worst, min(k_distance_mod(k, z, lat) for z in zeros) / lat.kappa)
    ok = verdict_mismatch == 0 and worst <= 1e-6
    assert record("6 tight-binding oracle", ok, f"verdict mismatches {verdict_mismatch}/200, worst position {worst:.1e} kappa")


def test_c07_gamma_trajectory(record):
    lat = nominal_geometry()
    worst = 0.0
    for g in (0.25, 0.5, 1.0, 1.5, 2.0):
        pair = tb_dirac_points(HoppingSet.gamma(g), lat)
        for k in (pair.k, pair.kp):
            worst = max(worst, abs(math.cos(k @ lat.a1) + g / 2))
    merged = tb_dirac_points(HoppingSet.gamma(2.0), lat).merged
    none = tb_dirac_points(HoppingSet.gamma(2.5), lat) is None
    ok = worst <= 1e-9 and merged and none
    assert record("7 gamma trajectory", ok, f"max |cos + gamma/2| = {worst:.1e}, gamma=2 merged={merged}, gamma=2.5 none={none}")


def test_c08_density_of_states(record):
    d = tb_dos(HoppingSet.balanced(), n_grid=2000, n_bins=600)
    slope = dos_slope(d)
    target = 2 / (math.sqrt(3) * math.pi)
    neg = d.centers < 0
    peak_m = d.centers[neg][np.argmax(d.rho[neg])]
    peak_p = d.centers[~neg][np.argmax(d.rho[~neg])]
    norm_m = d.rho_minus.sum() * d.width
    norm_p = d.rho_plus.sum() * d.width
    ok = (abs(slope / target - 1) <= 0.05 and abs(abs(peak_m) - 1) <= d.width and abs(peak_p - 1) <= d.width
          and abs(norm_m - 1) <= 1e-3 and abs(norm_p - 1) <= 1e-3)
    detail = (f"slope {slope:.5f} vs {target:.5f}, peaks {peak_m:.4f}/{peak_p:.4f} (bin {d.width:.4f}), "
              f"norms {norm_m:.6f}/{norm_p:.6f}")
    assert record("8 density of states", ok, detail)


def test_c09_temperature_bounds(record):
    w32 = experimental_bounds(32.0).T_max_over_T_R
    w10 = experimental_bounds(10.0).T_max_over_T_R
    ok = 1 / 60 <= w32 <= 1 / 40 and 1 / 3 <= w10 <= 1 / 2
    assert record("9 temperature bounds", ok, f"W/E_R at 32 = {w32:.5f} (1/{1 / w32:.1f}), at 10 = {w10:.4f} (1/{1 / w10:.2f})")


def test_c10_distorted_closed_forms(record):
    lat = nominal_geometry()
    worst = 0.0
    for eta in (-0.5, 0.25, 0.5):
        cfg = BeamConfig(strengths=(1 + eta, 1, 1))
        for p in locate_minima(cfg):
            u = p.position @ lat.b1 / (2 * np.pi)
            worst = max(worst, abs(math.cos(2 * math.pi * u) + (1 + eta) / 2),
                        np.linalg.norm(p.position - u * (lat.a1 + lat.a2)))
        _, barriers = locate_saddles(cfg)
        expect = [(eta - 1) ** 2, (eta + 1) ** 2, (eta + 1) ** 2]
        worst = max(worst, max(abs(b - e) for b, e in zip(barriers, expect)))
    assert record("10 distorted-lattice closed forms", worst <= 1e-9, f"max deviation {worst:.1e}")


def test_c11_phase_variant(record):
    scan = phase_gap_scan(BeamConfig.from_hbar_e(0.35), np.linspace(0, math.pi / 48, 9))
    mono = bool(np.all(np.diff(scan.gaps) > 0))
    cfg = BeamConfig(phase=math.pi / 6)
    rB = build_geometry(cfg).r_B
    gnorm = float(np.linalg.norm(potential_gradient(rB, cfg)))
    hnorm = float(np.linalg.norm(potential_hessian(rB, cfg)))
    kind = classify_point(rB, cfg).kind
    ok = mono and scan.r2 >= 0.999 and gnorm <= 1e-6 and hnorm <= 1e-6 and kind == "cubic-saddle"
    D = BeamConfig.from_hbar_e(0.35).depth
    pred = math.sqrt(3) * (6 * D - 3 * math.sqrt(D))
    detail = (f"R2={scan.r2:.6f}, monotone={mono}, slope {scan.slope:.2f} E_R/rad "
              f"(first-order estimate {pred:.2f}); r_B grad {gnorm:.1e}, hess {hnorm:.1e}, kind {kind}")
    assert record("11 phase variant", ok, detail)


def test_c12_property_suites_standalone(record):
    r = subprocess.run([sys.executable, "-m", "pytest", "-m", "properties", "-q", "-p", "no:cacheprovider"],
                       capture_output=True, text=True)
    last = r.stdout.strip().splitlines()[-1] if r.stdout.strip() else r.stderr[-200:]
    assert record("12 property suites standalone", r.returncode == 0, last)
