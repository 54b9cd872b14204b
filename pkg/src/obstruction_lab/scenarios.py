"""Shipped scenarios, their configuration schema, and report emission."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import almost_rep as ar
from . import chern_lab as cl
from . import torus_bundle as tb
from .audit import run_audit
from .errors import ContractError

SCHEMA_VERSION = 1

SCENARIOS = ("z2-voiculescu-sweep", "z4-chern-class", "curvature-decay", "property-audit",
             "genuine-rep-controls")

DEFAULTS = {
    "z2-voiculescu-sweep": {"rep": {"family": "voiculescu", "n": [8, 16, 32, 64]}, "rank": 2,
                            "grid": 64, "p": [1, 2, "inf"], "k": [1], "cycles": [[0, 1]],
                            "extra": {"word_radius": 1, "slope_n": [8, 16, 32, 64, 128],
                                      "refine_n": 32, "refine_grids": [32, 64, 128]}},
    "curvature-decay": {"rep": {"family": "voiculescu", "n": [8, 16, 32, 64]}, "rank": 2,
                        "grid": 64, "p": [1, 2], "k": [1], "cycles": [[0, 1]]},
    "z4-chern-class": {"rep": {"family": "voiculescu-z4", "n": 16}, "rank": 4, "grid": 64,
                       "overhang": 1.0 / 16, "p": [2], "k": [1, 2],
                       "cycles": [[0, 1], [2, 3], [0, 1, 2, 3]],
                       "extra": {"audit_n": 4, "audit_grid": 6}},
    "property-audit": {"rep": {"family": "none"}, "rank": 2, "grid": 8, "p": [1, 2, 4, "inf"],
                       "k": [], "cycles": [],
                       "extra": {"scalar_samples": 100_000, "matrix_samples": 1_000}},
    "genuine-rep-controls": {"rep": {"family": "genuine"}, "rank": 2, "grid": 64,
                             "p": [1, 2, "inf"], "k": [1], "cycles": [[0, 1]],
                             "extra": {"windings": [-1, 0, 1]}},
}


def _p_value(p) -> float:
    if isinstance(p, str):
        if p.lower() in ("inf", "infinity"):
            return math.inf
        p = float(p)
    return float(p)


def _p_label(p: float) -> str:
    return "inf" if p == math.inf else f"{p:g}"


@dataclass
class ScenarioConfig:
    """Validated scenario configuration (JSON-serializable)."""

    scenario: str
    rep: dict = field(default_factory=dict)
    rank: int = 2
    grid: int | list = 64
    overhang: float = tb.DEFAULT_OVERHANG
    p: list = field(default_factory=lambda: [1, 2, "inf"])
    k: list = field(default_factory=lambda: [1])
    cycles: list = field(default_factory=list)
    norm_mode: str = "estimator"
    gap_tol: float = tb.DEFAULT_GAP_TOL
    output: str | None = None
    seed: int = 42
    threads: int = 1
    extra: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    @classmethod
    def for_scenario(cls, name: str, **overrides) -> "ScenarioConfig":
        if name not in DEFAULTS:
            raise ContractError(f"unknown scenario {name!r}; have {list(SCENARIOS)}")
        data = {"scenario": name}
        data.update(json.loads(json.dumps(DEFAULTS[name])))
        extra = dict(data.get("extra", {}))
        extra.update(overrides.pop("extra", {}) or {})
        data.update(overrides)
        data["extra"] = extra
        return cls.from_dict(data)

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        data = dict(data)
        version = data.get("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ContractError(f"unsupported schema_version {version}")
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ContractError(f"unknown config keys: {sorted(unknown)}")
        if "scenario" not in data:
            raise ContractError("config needs a 'scenario' field")
        base = {"scenario": data["scenario"]}
        if data["scenario"] in DEFAULTS:
            base.update(json.loads(json.dumps(DEFAULTS[data["scenario"]])))
            extra = dict(base.get("extra", {}))
            extra.update(data.get("extra", {}))
            base.update(data)
            base["extra"] = extra
        else:
            base.update(data)
        cfg = cls(**base)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        return asdict(self)

    def sweep(self) -> list[int]:
        n = self.rep.get("n", [])
        return [int(v) for v in (n if isinstance(n, list) else [n])]

    def resolution(self) -> tuple[int, ...]:
        g = self.grid
        return tuple(int(v) for v in g) if isinstance(g, list) else (int(g),) * self.rank

    def p_values(self) -> list[float]:
        return [_p_value(p) for p in self.p]

    def validate(self) -> None:
        if self.scenario not in SCENARIOS:
            raise ContractError(f"unknown scenario {self.scenario!r}; have {list(SCENARIOS)}")
        ns = self.sweep()
        if any(b <= a for a, b in zip(ns, ns[1:])):
            raise ContractError(f"sweep list {ns} is not strictly increasing")
        if any(n < 2 for n in ns):
            raise ContractError("representation sizes must be at least 2")
        res = self.resolution()
        if len(res) not in (1, self.rank) or min(res) < 8:
            raise ContractError(f"grid resolutions must be >= 8 per axis, got {self.grid}")
        if any(p < 1 for p in self.p_values()):
            raise ContractError(f"p values must be >= 1, got {self.p}")
        if self.norm_mode not in ("estimator", "literal"):
            raise ContractError("norm_mode must be 'estimator' or 'literal'")
        if not 0 < self.overhang < 1.0 / 12:
            raise ContractError(f"overhang {self.overhang} outside (0, 1/12)")
        if self.threads < 1:
            raise ContractError("threads must be positive")
        for cyc in self.cycles:
            if len(set(cyc)) != len(cyc) or any(not 0 <= a < self.rank for a in cyc):
                raise ContractError(f"bad cycle {cyc} for rank {self.rank}")


@dataclass
class Check:
    name: str
    expected: str
    measured: object
    passed: bool

    def as_dict(self) -> dict:
        return {"name": self.name, "expected": self.expected, "measured": self.measured,
                "pass": bool(self.passed)}


@dataclass
class RunReport:
    config: dict
    entries: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)
    decay: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    verdicts: list = field(default_factory=list)
    flops_estimate: float = 0.0
    timing: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str, expected: str, measured, passed: bool) -> None:
        self.checks.append(Check(name, expected, _clean(measured), bool(passed)))

    def as_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "tool_version": __version__,
            "scenario": self.config["scenario"],
            "config": self.config,
            "entries": _clean(self.entries),
            "tables": _clean(self.tables),
            "decay": _clean(self.decay),
            "checks": [c.as_dict() for c in self.checks],
            "verdicts": _clean(self.verdicts),
            "flops_estimate": self.flops_estimate,
            "all_checks_pass": self.ok,
        }


def _clean(obj):
    """Make an object JSON-safe: numpy scalars to Python, inf to the string 'inf'."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return "nan"
        return x
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


# -- helpers ------------------------------------------------------------------


def loglog_slope(x, y, rng: np.random.Generator, n_boot: int = 2000) -> dict:
    """Least-squares slope of ``log y`` on ``log x`` with a 95% bootstrap interval."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    if np.unique(lx).size < 2:
        return {"x": list(map(float, x)), "y": list(map(float, y)), "slope": math.nan,
                "ci95": [math.nan, math.nan], "bootstrap_samples": 0}
    slope = float(np.polyfit(lx, ly, 1)[0])
    boots = []
    for _ in range(n_boot):
        idx = rng.integers(0, len(lx), size=len(lx))
        if np.unique(lx[idx]).size < 2:
            continue
        boots.append(np.polyfit(lx[idx], ly[idx], 1)[0])
    lo, hi = (np.percentile(boots, [2.5, 97.5]) if boots else (math.nan, math.nan))
    return {"x": list(map(float, x)), "y": list(map(float, y)), "slope": slope,
            "ci95": [float(lo), float(hi)], "bootstrap_samples": len(boots)}


def _flops(bundle) -> float:
    """Rough count: one Hermitian eigensolve (~10 s^3 complex flops x4) per point."""
    return float(sum(len(g) * 40.0 * g.size ** 3 for g in bundle.groups))


def _bundle(cfg: ScenarioConfig, rep, resolution=None, overhang=None, threads=None):
    cover = tb.CircleCover(overhang if overhang is not None else cfg.overhang)
    return tb.assemble_bundle(ar.normalize(rep), cover, resolution or cfg.resolution(),
                              gap_tol=cfg.gap_tol, threads=threads or cfg.threads)


def _norm_specs(cfg: ScenarioConfig) -> tuple:
    return tuple((p, cfg.norm_mode) for p in sorted(set(cfg.p_values()) | {1.0, 2.0}))


# -- scenarios -----------------------------------------------------------------


def _z2_rows(cfg: ScenarioConfig, report: RunReport) -> list[dict]:
    rows = []
    radius = int(cfg.extra.get("word_radius", 1))
    for n in cfg.sweep():
        rep = ar.voiculescu_pair(n)
        defects = {p: ar.defect(rep, p, radius).max_defect for p in (math.inf, 1.0, 2.0)}
        wind = ar.winding(*rep.gens)
        field_ = _bundle(cfg, rep)
        curv = cl.curvature(field_, norms=_norm_specs(cfg), threads=cfg.threads)
        ch1 = cl.chern_character_form(curv, 1)
        pairing = cl.integrate(ch1, (0, 1))
        norms = {p: cl.curvature_norm(curv, p, cfg.norm_mode) for p in (1.0, 2.0)}
        verdict = cl.vanishing_verdict(2, 1, 1, norms[1.0], pairing)
        report.verdicts.append({"n": n, **verdict.as_dict()})
        report.flops_estimate += _flops(field_)
        rows.append({
            "n": n, "dim": field_.size, "grid": list(field_.grid_shape),
            "norm_mode": cfg.norm_mode, "word_radius": radius,
            "defect_inf": defects[math.inf], "defect_1": defects[1.0], "defect_2": defects[2.0],
            "winding": wind.integer, "winding_raw": wind.value,
            "ch1_pair": pairing, "ch1_residual": abs(pairing - round(pairing)),
            "ch1_imag_residue": ch1.imag_residue,
            "curv_norm_1": norms[1.0], "curv_norm_2": norms[2.0],
            "verdict": verdict.verdict, "min_gap": field_.gap_stats.min_gap,
            "rank": field_.rank, "bundle_residual": curv.residual,
        })
    return rows


SWEEP_COLUMNS = ["n", "dim", "defect_inf", "defect_1", "defect_2", "winding", "ch1_pair",
                 "ch1_residual", "curv_norm_1", "curv_norm_2", "verdict"]


def _sweep_table(rows) -> dict:
    return {"columns": SWEEP_COLUMNS, "rows": [[r[c] for c in SWEEP_COLUMNS] for r in rows]}


def _decay_checks(rows, report: RunReport) -> None:
    n2 = [r["curv_norm_2"] for r in rows]
    steps = [b / a for a, b in zip(n2, n2[1:])]
    report.check("curv_norm_2 decreases by >= 5% per step", "ratio <= 0.95", steps,
                 all(s <= 0.95 for s in steps))
    n1 = [r["curv_norm_1"] for r in rows]
    report.check("curv_norm_1 stays above half its first value", ">= 0.5 * first",
                 [v / n1[0] for v in n1], all(v >= 0.5 * n1[0] for v in n1))


def run_z2_sweep(cfg: ScenarioConfig, report: RunReport) -> None:
    rows = _z2_rows(cfg, report)
    report.entries.extend(rows)
    report.tables["sweep"] = _sweep_table(rows)
    rng = np.random.default_rng(cfg.seed)
    ns = [r["n"] for r in rows]
    for key in ("curv_norm_2", "curv_norm_1"):
        report.decay[key] = loglog_slope(ns, [r[key] for r in rows], rng)
    for r in rows:
        report.check(f"ch1 rounds to the winding at n={r['n']}", f"{r['winding']}",
                     r["ch1_pair"], round(r["ch1_pair"]) == r["winding"])
        report.check(f"|ch1 - winding| <= 0.1 at n={r['n']}", "<= 0.1",
                     abs(r["ch1_pair"] - r["winding"]), abs(r["ch1_pair"] - r["winding"]) <= 0.1)
        report.check(f"p=1 verdict at n={r['n']}", cl.UNDECIDED, r["verdict"],
                     r["verdict"] == cl.UNDECIDED)
    # the defect alone is cheap, so its slope uses its own (longer) sweep
    slope_n = [int(n) for n in cfg.extra.get("slope_n") or ns]
    radius = int(cfg.extra.get("word_radius", 1))
    vals = [ar.defect(ar.voiculescu_pair(n), math.inf, radius).max_defect for n in slope_n]
    report.decay["defect_inf"] = loglog_slope(slope_n, vals, rng)
    if len(slope_n) >= 3:
        s = report.decay["defect_inf"]["slope"]
        report.check("defect_inf log-log slope", "-1 +/- 0.05", s, abs(s + 1) <= 0.05)

    refine = cfg.extra.get("refine_grids") or []
    if refine:
        n = int(cfg.extra.get("refine_n", 32))
        rep = ar.voiculescu_pair(n)
        resid = []
        ref_rows = []
        for g in refine:
            f = _bundle(cfg, rep, resolution=(int(g),) * 2)
            c = cl.curvature(f, norms=())
            val = cl.integrate(cl.chern_character_form(c, 1), (0, 1))
            resid.append(abs(val - round(val)))
            ref_rows.append([int(g), val, resid[-1]])
            report.flops_estimate += _flops(f)
        report.tables["refinement"] = {"columns": ["grid", "ch1_pair", "ch1_residual"],
                                       "rows": ref_rows, "n": n}
        report.check(f"ch1 residual shrinks under refinement at n={n}",
                     "r[i+1] <= 1.1 r[i]", resid,
                     all(b <= 1.1 * a for a, b in zip(resid, resid[1:])))


def run_curvature_decay(cfg: ScenarioConfig, report: RunReport) -> None:
    rows = []
    for n in cfg.sweep():
        field_ = _bundle(cfg, ar.voiculescu_pair(n))
        curv = cl.curvature(field_, norms=_norm_specs(cfg), threads=cfg.threads)
        row = {"n": n, "grid": list(field_.grid_shape), "norm_mode": cfg.norm_mode,
               "defect_2": float(ar.generator_commutator_defect(ar.voiculescu_pair(n), 2))}
        for p in sorted(set(cfg.p_values()) | {1.0, 2.0}):
            row[f"curv_norm_{_p_label(p)}"] = cl.curvature_norm(curv, p, cfg.norm_mode)
        rows.append(row)
        report.flops_estimate += _flops(field_)
    report.entries.extend(rows)
    cols = list(rows[0])
    cols.remove("grid")
    report.tables["decay"] = {"columns": cols, "rows": [[r[c] for c in cols] for r in rows]}
    rng = np.random.default_rng(cfg.seed)
    ns = [r["n"] for r in rows]
    for key in [c for c in cols if c.startswith(("curv_norm", "defect"))]:
        report.decay[key] = loglog_slope(ns, [r[key] for r in rows], rng)
    _decay_checks(rows, report)


def _flagship_rep(n: int):
    v = ar.normalize(ar.voiculescu_pair(n))
    return ar.direct_sum(ar.embed_rank(v, 4, (0, 1)), ar.embed_rank(v, 4, (2, 3)))


def _flagship_field(n: int, grid: int, overhang: float, gap_tol: float, threads: int,
                    same_axes: bool = False):
    cover = tb.CircleCover(overhang)
    src = tb.assemble_bundle(ar.normalize(ar.voiculescu_pair(n)), cover, (grid, grid),
                             gap_tol=gap_tol, threads=threads)
    second = (0, 1) if same_axes else (2, 3)
    parts = (tb.pullback_field(src, (0, 1), 4), tb.pullback_field(src, second, 4))
    return src, tb.FieldSum(parts)


def run_z4(cfg: ScenarioConfig, report: RunReport) -> None:
    n = cfg.sweep()[0]
    grid = cfg.resolution()[0]
    an, ag = int(cfg.extra.get("audit_n", 4)), int(cfg.extra.get("audit_grid", 6))

    # pullback against direct assembly on a coarse T^4 grid
    _, coarse = _flagship_field(an, ag, cfg.overhang, cfg.gap_tol, cfg.threads)
    direct = tb.assemble_bundle(_flagship_rep(an), tb.CircleCover(cfg.overhang), ag,
                                gap_tol=cfg.gap_tol, threads=cfg.threads)
    diff = max(float(np.abs(direct.q_at(p) - coarse.q_at(p)).max())
               for p in np.ndindex(*direct.grid_shape))
    report.check(f"pullback q equals direct assembly (n={an}, grid {ag}^4)", "<= 1e-8",
                 diff, diff <= 1e-8)
    report.flops_estimate += _flops(direct)

    src, fs = _flagship_field(n, grid, cfg.overhang, cfg.gap_tol, cfg.threads)
    report.flops_estimate += _flops(src)
    curv = cl.curvature(fs)
    ch1 = cl.chern_character_form(curv, 1)
    ch2 = cl.chern_character_form(curv, 2)
    full = (0, 1, 2, 3)
    ch2_pair = cl.integrate(ch2, full)
    classes = cl.chern_classes(ch1, ch2_pair, full)
    norm2 = cl.curvature_norm(curv, 2, "estimator")
    verdict = cl.vanishing_verdict(4, 2, 2, norm2, ch2_pair)
    report.verdicts.append({"n": n, **verdict.as_dict()})

    _, stacked = _flagship_field(n, grid, cfg.overhang, cfg.gap_tol, cfg.threads,
                                 same_axes=True)
    scurv = cl.curvature(stacked)
    s1 = cl.chern_character_form(scurv, 1)
    s2 = cl.integrate(cl.chern_character_form(scurv, 2), full)
    stacked_c2 = cl.chern_classes(s1, s2, full).c2

    entry = {"n": n, "grid_t2": [grid, grid], "grid_t4": [grid] * 4, "overhang": cfg.overhang,
             "norm_mode": "estimator", "dim": fs.n_patches * fs.m, "rank": fs.rank,
             "min_gap": src.gap_stats.min_gap,
             "ch1": {"".join(map(str, k)): v for k, v in classes.c1.items()},
             "ch1_imag_residue": ch1.imag_residue, "ch2": ch2_pair,
             "ch2_imag_residue": ch2.imag_residue, "ch1_wedge_ch1": classes.ch1_squared,
             "c2": classes.c2, "curv_norm_2": norm2, "verdict": verdict.verdict,
             "stacked_same_axes_c2": stacked_c2, "audit_q_difference": diff}
    report.entries.append(entry)
    report.check("|<ch2, T^4>| <= 0.02", "<= 0.02", ch2_pair, abs(ch2_pair) <= 0.02)
    report.check("|<c2, T^4> - 1| <= 0.05", "<= 0.05", classes.c2, abs(classes.c2 - 1) <= 0.05)
    for plane in ((0, 1), (2, 3)):
        v = classes.c1[plane]
        report.check(f"ch1 on plane {plane} rounds to -1", "-1", v, round(v) == -1)
    report.check("stacked blocks on the same axes give c2 = 0", "|c2| <= 0.05", stacked_c2,
                 abs(stacked_c2) <= 0.05)
    report.check("vanishing verdict k=2 p=2", cl.VANISHES, verdict.verdict,
                 verdict.verdict == cl.VANISHES)


def run_property_audit(cfg: ScenarioConfig, report: RunReport) -> None:
    res = run_audit(cfg.seed, int(cfg.extra.get("scalar_samples", 100_000)),
                    int(cfg.extra.get("matrix_samples", 1_000)))
    report.entries.append(res)
    report.tables["audit"] = {"columns": ["suite", "samples", "failures", "worst_excess"],
                              "rows": [[s["name"], s["samples"], s["failures"], s["worst_excess"]]
                                       for s in res["suites"]]}
    for s in res["suites"]:
        report.check(f"audit suite {s['name']}", "0 failures", s["failures"], s["ok"])


def _genuine_reps(seed: int) -> dict:
    rng = np.random.default_rng(seed)
    return {
        "trivial": ar.trivial_rep(2, 1),
        "character": ar.character([0.3, 0.7]),
        "diagonal": ar.diagonal_rep(rng.random((2, 3))),
        "conjugated_diagonal": ar.diagonal_rep(rng.random((2, 3))).conjugated(
            np.linalg.qr(rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)))[0]),
    }


def run_controls(cfg: ScenarioConfig, report: RunReport) -> None:
    res = cfg.resolution()
    for name, rep in _genuine_reps(cfg.seed).items():
        dft = max(ar.defect(rep, p, 2).max_defect for p in (math.inf, 1.0, 2.0))
        f = _bundle(cfg, rep)
        curv = cl.curvature(f, norms=_norm_specs(cfg), threads=cfg.threads)
        pairing = cl.integrate(cl.chern_character_form(curv, 1), (0, 1))
        norms = {_p_label(p): cl.curvature_norm(curv, p, cfg.norm_mode)
                 for p in sorted(set(cfg.p_values()) | {1.0, 2.0})}
        report.entries.append({"control": name, "kind": "genuine", "w": 0, "dim": f.size,
                               "grid": list(res), "norm_mode": cfg.norm_mode,
                               "max_defect": dft, "ch1_pair": pairing,
                               "curv_norms": norms})
        report.check(f"{name}: max defect <= 1e-12", "<= 1e-12", dft, dft <= 1e-12)
        report.check(f"{name}: |ch1| <= 5e-3", "<= 5e-3", pairing, abs(pairing) <= 5e-3)
        worst = max(norms.values())
        report.check(f"{name}: curvature norms <= 1e-8", "<= 1e-8", worst, worst <= 1e-8)
    for w in cfg.extra.get("windings", [-1, 0, 1]):
        f = tb.bott_field(int(w), res)
        curv = cl.curvature(f, norms=_norm_specs(cfg))
        pairing = cl.integrate(cl.chern_character_form(curv, 1), (0, 1))
        lattice = cl.lattice_chern_number(f)
        report.entries.append({"control": f"bott_w{w}", "kind": "bott", "w": int(w),
                               "grid": list(res), "ch1_pair": pairing,
                               "lattice_chern": lattice})
        report.check(f"bott w={w}: |ch1 - w| <= 5e-3", "<= 5e-3", pairing,
                     abs(pairing - w) <= 5e-3)
        report.check(f"bott w={w}: lattice oracle equals w", f"{w}", lattice,
                     round(lattice) == w)


RUNNERS = {
    "z2-voiculescu-sweep": run_z2_sweep,
    "curvature-decay": run_curvature_decay,
    "z4-chern-class": run_z4,
    "property-audit": run_property_audit,
    "genuine-rep-controls": run_controls,
}


def run_scenario(cfg: ScenarioConfig) -> RunReport:
    """Run one shipped scenario end to end; deterministic given config and threads."""
    cfg.validate()
    env = os.environ.get("OBSTRUCTION_LAB_THREADS")
    if env:
        cfg.threads = max(1, int(env))
    report = RunReport(cfg.to_dict())
    t0 = time.perf_counter()
    RUNNERS[cfg.scenario](cfg, report)
    report.timing = {"scenario": cfg.scenario, "seconds": time.perf_counter() - t0,
                     "threads": cfg.threads}
    return report


# -- emission ---------------------------------------------------------------------


def _csv_text(table: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table["columns"])
    for row in table["rows"]:
        w.writerow([_fmt_cell(v) for v in row])
    return buf.getvalue()


def _fmt_cell(v):
    if isinstance(v, float):
        return repr(v)
    return v


def emit_report(report: RunReport, out_dir) -> list[Path]:
    """Write ``report.json``, one CSV per table, decay ``.dat`` files and ``timing.json``.

    Everything except ``timing.json`` is a pure function of the config.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    path = out / "report.json"
    path.write_text(json.dumps(report.as_dict(), indent=2, sort_keys=True) + "\n")
    written.append(path)
    for name, table in sorted(report.tables.items()):
        p = out / f"{name}.csv"
        p.write_text(_csv_text(table))
        written.append(p)
    for name, fit in sorted(report.decay.items()):
        p = out / f"decay_{name}.dat"
        lines = [f"# log-log fit of {name} against n",
                 f"# slope {fit['slope']!r}  95% bootstrap interval "
                 f"[{fit['ci95'][0]!r}, {fit['ci95'][1]!r}]",
                 "# n value"]
        lines += [f"{x!r} {y!r}" for x, y in zip(fit["x"], fit["y"])]
        p.write_text("\n".join(lines) + "\n")
        written.append(p)
    p = out / "timing.json"
    p.write_text(json.dumps(report.timing, indent=2, sort_keys=True) + "\n")
    written.append(p)
    return written
