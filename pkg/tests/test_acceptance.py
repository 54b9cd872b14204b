"""Acceptance criteria, one test per criterion, each printing a PASS/FAIL line.

Tolerances are pinned constants below; expensive fields are cached at module
level and shared between criteria. Run standalone with
``python tests/test_acceptance.py`` for just the summary lines.
"""

from __future__ import annotations

import filecmp
import math
import time
from functools import lru_cache

import numpy as np
import pytest

from obstruction_lab import almost_rep as ar
from obstruction_lab import chern_lab as cl
from obstruction_lab import torus_bundle as tb
from obstruction_lab.audit import run_audit
from obstruction_lab.linalg_core import schatten_norm
from obstruction_lab.scenarios import ScenarioConfig, emit_report, loglog_slope, run_scenario

WINDING_NS = (3, 8, 16, 64, 256)
WINDING_TOL = 1e-9
DEFECT_NS = (8, 64)
DEFECT_PS = (1, 2, 4, math.inf)
DEFECT_TOL = 1e-10
SLOPE_NS = (8, 16, 32, 64, 128)
SLOPE_TOL = 0.05
CH1_NS = (16, 32, 64)
CH1_GRID = 64
CH1_TOL = 0.1
REFINE_N = 32
REFINE_GRIDS = (32, 64, 128)
REFINE_SLACK = 1.1
DECAY_NS = (8, 16, 32, 64)
DECAY_STEP = 0.95
FLOOR_FRACTION = 0.5
Z4_N, Z4_GRID, Z4_OVERHANG = 16, 64, 1.0 / 16
Z4_AUDIT_N, Z4_AUDIT_GRID, Z4_AUDIT_TOL = 4, 6, 1e-8
CH2_TOL, C2_TOL = 0.02, 0.05
AUDIT_SEED, SCALAR_SAMPLES, MATRIX_SAMPLES = 42, 100_000, 1_000
CONTROL_DEFECT_TOL, CONTROL_CH1_TOL, FLAT_NORM_TOL = 1e-12, 5e-3, 1e-8


def report(capsys, criterion: str, ok: bool, detail: str) -> None:
    with capsys.disabled():
        print(f"\n[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}")


@lru_cache(maxsize=None)
def voiculescu_curvature(n: int, grid: int):
    field = tb.assemble_bundle(ar.normalize(ar.voiculescu_pair(n)), resolution=grid)
    curv = cl.curvature(field)
    return field, curv, cl.integrate(cl.chern_character_form(curv, 1), (0, 1))


@lru_cache(maxsize=None)
def flagship(same_axes: bool = False):
    cover = tb.CircleCover(Z4_OVERHANG)
    src = tb.assemble_bundle(ar.normalize(ar.voiculescu_pair(Z4_N)), cover, Z4_GRID)
    second = (0, 1) if same_axes else (2, 3)
    fs = tb.FieldSum((tb.pullback_field(src, (0, 1), 4), tb.pullback_field(src, second, 4)))
    curv = cl.curvature(fs)
    ch1 = cl.chern_character_form(curv, 1)
    ch2 = cl.integrate(cl.chern_character_form(curv, 2), (0, 1, 2, 3))
    classes = cl.chern_classes(ch1, ch2, (0, 1, 2, 3), planes=[(0, 1), (2, 3)])
    return curv, classes


def test_criterion_1_winding_oracle(capsys):
    t0 = time.perf_counter()
    worst = 0.0
    ok = True
    for n in WINDING_NS:
        s, om = ar.clock_shift(n)
        a, b = ar.winding(s, om), ar.winding(om, s)
        worst = max(worst, abs(a.value + 1), abs(b.value - 1))
        ok &= a.integer == -1 and b.integer == 1
    ok &= worst <= WINDING_TOL
    dt = time.perf_counter() - t0
    report(capsys, "1 winding oracle", ok and dt < 1,
           f"max |raw - integer| = {worst:.1e}, {dt:.2f} s")
    assert ok and dt < 1


def test_criterion_2_defect_closed_form(capsys):
    t0 = time.perf_counter()
    err = 0.0
    for n in DEFECT_NS:
        s, om = ar.clock_shift(n)
        for p in DEFECT_PS:
            want = 2 * math.sin(math.pi / n) * (1.0 if p == math.inf else n ** (1 / p))
            err = max(err, abs(schatten_norm(s @ om - om @ s, p) - want))
    vals = [ar.defect(ar.voiculescu_pair(n), math.inf, 1).max_defect for n in SLOPE_NS]
    fit = loglog_slope(SLOPE_NS, vals, np.random.default_rng(0))
    dt = time.perf_counter() - t0
    ok = err <= DEFECT_TOL and abs(fit["slope"] + 1) <= SLOPE_TOL and dt < 5
    report(capsys, "2 defect closed form", ok,
           f"max error {err:.1e}, slope {fit['slope']:.4f} "
           f"(95% CI {fit['ci95'][0]:.4f}..{fit['ci95'][1]:.4f}), {dt:.2f} s")
    assert ok


def test_criterion_3_ch1_equals_winding(capsys):
    t0 = time.perf_counter()
    wind = ar.winding(*ar.clock_shift(16)).integer
    pairs = {n: voiculescu_curvature(n, CH1_GRID)[2] for n in CH1_NS}
    ok = all(abs(v - wind) <= CH1_TOL and round(v) == -1 for v in pairs.values())
    resid = []
    for g in REFINE_GRIDS:
        v = voiculescu_curvature(REFINE_N, g)[2]
        resid.append(abs(v - round(v)))
    mono = all(b <= REFINE_SLACK * a for a, b in zip(resid, resid[1:]))
    dt = time.perf_counter() - t0
    ok = ok and mono and dt < 300
    report(capsys, "3 ch1 = winding", ok,
           "pairings " + ", ".join(f"n={n}: {v:.4f}" for n, v in pairs.items())
           + "; refinement residuals " + ", ".join(f"{r:.4f}" for r in resid)
           + f", {dt:.0f} s")
    assert ok


def test_criterion_4_curvature_decay(capsys):
    t0 = time.perf_counter()
    curvs = [voiculescu_curvature(n, CH1_GRID)[1] for n in DECAY_NS]
    n2 = [cl.curvature_norm(c, 2, "estimator") for c in curvs]
    n1 = [cl.curvature_norm(c, 1, "estimator") for c in curvs]
    steps = [b / a for a, b in zip(n2, n2[1:])]
    ok = all(s <= DECAY_STEP for s in steps) and all(v >= FLOOR_FRACTION * n1[0] for v in n1)
    dt = time.perf_counter() - t0
    report(capsys, "4 curvature decay", ok and dt < 600,
           "||F||_2 " + ", ".join(f"{v:.0f}" for v in n2)
           + "; ||F||_1 " + ", ".join(f"{v:.0f}" for v in n1) + f", {dt:.0f} s")
    assert ok and dt < 600


def test_criterion_5_pullback_audit(capsys):
    cover = tb.CircleCover(Z4_OVERHANG)
    v = ar.normalize(ar.voiculescu_pair(Z4_AUDIT_N))
    direct = tb.assemble_bundle(
        ar.direct_sum(ar.embed_rank(v, 4, (0, 1)), ar.embed_rank(v, 4, (2, 3))),
        cover, Z4_AUDIT_GRID)
    src = tb.assemble_bundle(v, cover, (Z4_AUDIT_GRID,) * 2)
    fs = tb.FieldSum((tb.pullback_field(src, (0, 1), 4), tb.pullback_field(src, (2, 3), 4)))
    diff = max(float(np.abs(direct.q_at(p) - fs.q_at(p)).max())
               for p in np.ndindex(*direct.grid_shape))
    ok = diff <= Z4_AUDIT_TOL
    report(capsys, "5a flagship pullback audit", ok, f"max |q_direct - q_pullback| = {diff:.1e}")
    assert ok


def test_criterion_5_chern_classes(capsys):
    t0 = time.perf_counter()
    _, classes = flagship()
    planes = [classes.c1[(0, 1)], classes.c1[(2, 3)]]
    ok = (abs(classes.ch2) <= CH2_TOL and abs(classes.c2 - 1) <= C2_TOL
          and all(round(p) == -1 for p in planes))
    dt = time.perf_counter() - t0
    report(capsys, "5b flagship Chern classes", ok and dt < 1200,
           f"ch2 = {classes.ch2:.2e}, c2 = {classes.c2:.4f}, "
           f"planes {planes[0]:.4f} {planes[1]:.4f}, {dt:.0f} s")
    assert ok and dt < 1200


def test_criterion_5_vanishing_verdict(capsys):
    curv, classes = flagship()
    norm2 = cl.curvature_norm(curv, 2, "estimator")
    verdict = cl.vanishing_verdict(4, 2, 2, norm2, classes.ch2)
    ok = verdict.verdict == cl.VANISHES
    report(capsys, "5c flagship verdict k=2 p=2", ok,
           f"{verdict.verdict}: B = {verdict.bound:.3e} vs gap {verdict.gap}")
    assert ok


def test_criterion_6_property_suites(capsys):
    t0 = time.perf_counter()
    res = run_audit(AUDIT_SEED, SCALAR_SAMPLES, MATRIX_SAMPLES)
    dt = time.perf_counter() - t0
    bad = [s["name"] for s in res["suites"] if not s["ok"]]
    ok = res["failures"] == 0 and dt < 120
    report(capsys, "6 property suites", ok,
           f"{len(res['suites'])} suites, {res['failures']} failures {bad}, {dt:.1f} s")
    assert ok


def test_criterion_7_controls(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    genuine = [ar.trivial_rep(2, 1), ar.character([0.3, 0.7]),
               ar.diagonal_rep(rng.random((2, 3)))]
    worst_defect = worst_ch1 = worst_norm = 0.0
    for rep in genuine:
        worst_defect = max(worst_defect, max(ar.defect(rep, p).max_defect
                                             for p in (1, 2, math.inf)))
        curv = cl.curvature(tb.assemble_bundle(ar.normalize(rep), resolution=64))
        worst_ch1 = max(worst_ch1, abs(cl.integrate(cl.chern_character_form(curv, 1), (0, 1))))
        worst_norm = max(worst_norm, max(cl.curvature_norm(curv, p) for p in (1, 2, math.inf)))
    bott = {}
    for w in (-1, 0, 1):
        curv = cl.curvature(tb.bott_field(w, (64, 64)))
        bott[w] = cl.integrate(cl.chern_character_form(curv, 1), (0, 1))
    dt = time.perf_counter() - t0
    ok = (worst_defect <= CONTROL_DEFECT_TOL and worst_ch1 <= CONTROL_CH1_TOL
          and worst_norm <= FLAT_NORM_TOL
          and all(abs(v - w) <= CONTROL_CH1_TOL for w, v in bott.items()) and dt < 60)
    report(capsys, "7 controls", ok,
           f"defect {worst_defect:.1e}, flat |ch1| {worst_ch1:.1e}, flat norms {worst_norm:.1e}, "
           + "bott " + ", ".join(f"w={w}: {v:.5f}" for w, v in bott.items()) + f", {dt:.1f} s")
    assert ok


@pytest.mark.parametrize("scenario,overrides", [
    ("property-audit", {"extra": {"scalar_samples": 20_000, "matrix_samples": 200}}),
    ("z2-voiculescu-sweep", {"rep": {"family": "voiculescu", "n": [8, 16]}, "grid": 32,
                             "extra": {"refine_grids": [16, 32], "refine_n": 8}}),
])
def test_criterion_8_reproducibility(capsys, tmp_path, scenario, overrides):
    outs = []
    for k in range(2):
        cfg = ScenarioConfig.for_scenario(scenario, **overrides)
        out = tmp_path / f"run{k}"
        emit_report(run_scenario(cfg), out)
        outs.append(out)
    names = sorted(p.name for p in outs[0].iterdir() if p.name != "timing.json")
    match, mismatch, errors = filecmp.cmpfiles(outs[0], outs[1], names, shallow=False)
    ok = not mismatch and not errors and len(match) == len(names)
    report(capsys, f"8 reproducibility ({scenario})", ok,
           f"{len(match)}/{len(names)} files byte-identical")
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-p", "no:randomly"]))
