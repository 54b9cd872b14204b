"""Randomized property suites for the inequalities the pipeline relies on.

Each suite draws its own stream from one seeded generator, in a fixed order,
so a given seed always yields the same samples and the same report.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from . import almost_rep as ar
from .grid_forms import (MatrixFormField, ext_d, form_norm, form_trace,
                         pointwise_literal_norm, wedge)
from .linalg_core import (chi_half_plane, normal_funcalc, random_hermitian, random_matrix,
                          random_unitary, schatten_norm, schatten_norm_trace_formula,
                          spectral_projector)

SCALAR_SAMPLES = 100_000
MATRIX_SAMPLES = 1_000
HOLDER_TRIPLES = ((2, 2, 1), (4, 4, 2), (np.inf, 1, 1), (np.inf, 2, 2), (np.inf, 4, 4),
                  (1, np.inf, 1), (2, np.inf, 2), (4, np.inf, 4))


@dataclass(frozen=True)
class SuiteResult:
    name: str
    samples: int
    failures: int
    worst: float
    tolerance: float

    @property
    def ok(self) -> bool:
        return self.failures == 0

    def as_dict(self) -> dict:
        return {"name": self.name, "samples": self.samples, "failures": self.failures,
                "worst_excess": self.worst, "tolerance": self.tolerance, "ok": self.ok}


def _disk(rng, n, radius=2.0):
    r = radius * np.sqrt(rng.random(n))
    t = 2 * np.pi * rng.random(n)
    return r * np.exp(1j * t)


def scalar_projection_bound(rng, n=SCALAR_SAMPLES) -> SuiteResult:
    """``|chi_{Re >= 1/2}(z) - z| <= 2 |z^2 - z|``, exact."""
    z = _disk(rng, n)
    excess = np.abs(chi_half_plane(z, 0.5, True) - z) - 2 * np.abs(z * z - z)
    return SuiteResult("scalar_projection_bound", n, int(np.count_nonzero(excess > 0)),
                       float(excess.max()), 0.0)


def scalar_sign_bound(rng, n=SCALAR_SAMPLES) -> SuiteResult:
    """``|z - (2 chi_{Re > 0}(z) - 1)| <= |z^2 - 1|``, exact."""
    z = _disk(rng, n)
    excess = np.abs(z - (2 * chi_half_plane(z, 0.0, False) - 1)) - np.abs(z * z - 1)
    return SuiteResult("scalar_sign_bound", n, int(np.count_nonzero(excess > 0)),
                       float(excess.max()), 0.0)


def schatten_consistency(rng, n=MATRIX_SAMPLES, tol=1e-9) -> SuiteResult:
    """Monotonicity in p and agreement with the trace formula."""
    fails, worst = 0, -np.inf
    for _ in range(n):
        r, c = rng.integers(1, 9, size=2)
        a = random_matrix(int(r), int(c), rng)
        vals = {p: schatten_norm(a, p) for p in (1, 2, 4, np.inf)}
        scale = max(1.0, vals[1])
        ex = max(vals[np.inf] - vals[4], vals[4] - vals[2], vals[2] - vals[1]) / scale
        for p in (1, 2, 4):
            ex = max(ex, abs(vals[p] - schatten_norm_trace_formula(a, p)) / scale)
        worst = max(worst, ex)
        fails += ex > tol
    return SuiteResult("schatten_consistency", n, int(fails), float(worst), tol)


def matrix_holder(rng, n=MATRIX_SAMPLES, tol=1e-9) -> SuiteResult:
    fails, worst = 0, -np.inf
    for i in range(n):
        k, l, m = (int(x) for x in rng.integers(1, 9, size=3))
        a, b = random_matrix(k, l, rng), random_matrix(l, m, rng)
        p, q, r = HOLDER_TRIPLES[i % len(HOLDER_TRIPLES)]
        ex = schatten_norm(a @ b, r) - schatten_norm(a, p) * schatten_norm(b, q)
        worst = max(worst, ex)
        fails += ex > tol
    return SuiteResult("matrix_holder", n, int(fails), float(worst), tol)


def _random_form(rng, d, k, s, grid=(2, 2)):
    shape = (comb(d, k),) + tuple(grid[:d]) + (s, s)
    vals = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return MatrixFormField(d, k, vals)


def form_holder(rng, n=MATRIX_SAMPLES, tol=1e-9) -> SuiteResult:
    """Literal-mode Hölder for wedge products of random forms, ``d <= 2``, ``s <= 8``."""
    fails, worst = 0, -np.inf
    for i in range(n):
        d = int(rng.integers(1, 3))
        k = int(rng.integers(0, d + 1))
        j = int(rng.integers(0, d - k + 1))
        s = int(rng.integers(1, 9))
        a, b = _random_form(rng, d, k, s), _random_form(rng, d, j, s)
        p, q, r = HOLDER_TRIPLES[i % len(HOLDER_TRIPLES)]
        lhs = form_norm(wedge(a, b), r, "literal").sup
        ex = lhs - form_norm(a, p, "literal").sup * form_norm(b, q, "literal").sup
        worst = max(worst, ex)
        fails += ex > tol
    return SuiteResult("form_holder", n, int(fails), float(worst), tol)


def trace_bound(rng, n=MATRIX_SAMPLES, tol=1e-9) -> SuiteResult:
    """``|Tr a(x)| <= 2^d sqrt(C(d,k)) ||a(x)||_1`` with the literal norm."""
    fails, worst = 0, -np.inf
    for _ in range(n):
        d = int(rng.integers(1, 4))
        k = int(rng.integers(0, d + 1))
        s = int(rng.integers(1, 5))
        a = _random_form(rng, d, k, s, grid=(1, 1, 1))
        tr = form_trace(a).comps[..., 0, 0]
        lhs = np.sqrt((np.abs(tr) ** 2).sum(axis=0))
        rhs = 2 ** d * np.sqrt(comb(d, k)) * pointwise_literal_norm(a.comps, d, k, 1)
        ex = float((lhs - rhs).max())
        worst = max(worst, ex)
        fails += ex > tol
    return SuiteResult("trace_bound", n, int(fails), float(worst), tol)


def single_term_norm(rng, n=MATRIX_SAMPLES, tol=1e-9) -> SuiteResult:
    """``|| b dx^I ||_p = 2^{-k/p} ||b||_p`` in literal mode."""
    fails, worst = 0, -np.inf
    for i in range(n):
        d = int(rng.integers(1, 4))
        k = int(rng.integers(0, d + 1))
        s = int(rng.integers(1, 5))
        p = (1, 2, 4, np.inf)[i % 4]
        b = random_matrix(s, s, rng)
        comps = np.zeros((comb(d, k), s, s), dtype=complex)
        comps[int(rng.integers(0, comb(d, k)))] = b
        got = float(pointwise_literal_norm(comps, d, k, p))
        want = (2.0 ** (-k / p) if p != np.inf else 1.0) * schatten_norm(b, p)
        ex = abs(got - want) / max(1.0, want)
        worst = max(worst, ex)
        fails += ex > tol
    return SuiteResult("single_term_norm", n, int(fails), float(worst), tol)


def estimator_dominates(rng, n=MATRIX_SAMPLES, tol=1e-9) -> SuiteResult:
    fails, worst = 0, -np.inf
    for i in range(n):
        d = int(rng.integers(1, 4))
        k = int(rng.integers(0, d + 1))
        s = int(rng.integers(1, 5))
        p = (1, 2, 4, np.inf)[i % 4]
        a = _random_form(rng, d, k, s, grid=(1, 1, 1))
        ex = form_norm(a, p, "literal").sup - form_norm(a, p, "estimator").sup
        worst = max(worst, ex)
        fails += ex > tol
    return SuiteResult("estimator_dominates_literal", n, int(fails), float(worst), tol)


def dd_zero(rng, n=MATRIX_SAMPLES, tol=1e-12) -> SuiteResult:
    """``d(d f) = 0`` relative to the second-difference scale ``||f|| n^2``."""
    fails, worst = 0, -np.inf
    for _ in range(n):
        d = int(rng.integers(2, 4))
        k = int(rng.integers(0, d - 1))
        grid = tuple(int(x) for x in rng.integers(4, 9, size=d))
        s = int(rng.integers(1, 3))
        shape = (comb(d, k),) + grid + (s, s)
        f = MatrixFormField(d, k, rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
        dd = ext_d(ext_d(f))
        scale = max(1.0, float(np.abs(f.comps).max()) * max(grid) ** 2)
        ex = float(np.abs(dd.comps).max()) / scale
        worst = max(worst, ex)
        fails += ex > tol
    return SuiteResult("dd_zero", n, int(fails), float(worst), tol)


def projector_idempotent(rng, n=MATRIX_SAMPLES, tol=1e-10) -> SuiteResult:
    fails, worst = 0, -np.inf
    for _ in range(n):
        s = int(rng.integers(1, 13))
        u = random_unitary(s, rng)
        lo = rng.uniform(-1.0, 0.4, size=s)
        hi = rng.uniform(0.6, 2.0, size=s)
        lam = np.where(rng.random(s) < 0.5, lo, hi)
        a = (u * lam) @ u.conj().T
        q = spectral_projector(a, 0.5, 1e-3)
        ex = max(float(np.abs(q @ q - q).max()), float(np.abs(q - q.conj().T).max()))
        worst = max(worst, ex)
        fails += ex > tol
    return SuiteResult("projector_idempotent", n, int(fails), float(worst), tol)


def funcalc_polynomial(rng, n=MATRIX_SAMPLES, tol=1e-9) -> SuiteResult:
    """Functional calculus of normal matrices agrees with polynomial evaluation."""
    fails, worst = 0, -np.inf
    for i in range(n):
        s = int(rng.integers(1, 9))
        if i % 2:
            a = random_unitary(s, rng)
        else:
            a = random_hermitian(s, rng)
        c = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        got = normal_funcalc(a, lambda z: c[0] + c[1] * z + c[2] * z * z)
        want = c[0] * np.eye(s) + c[1] * a + c[2] * a @ a
        ex = float(np.abs(got - want).max()) / max(1.0, float(np.abs(want).max()))
        worst = max(worst, ex)
        fails += ex > tol
    return SuiteResult("funcalc_polynomial", n, int(fails), float(worst), tol)


def normalize_involution(rng, n=MATRIX_SAMPLES, tol=1e-10) -> SuiteResult:
    """``psi(g) psi(-g) = 1`` and ``||psi(g) - rho(g)||_p`` within twice the word defect."""
    fails, worst = 0, -np.inf
    rep = None
    for i in range(n):
        if i % 50 == 0:
            rank = int(rng.integers(1, 4))
            dim = int(rng.integers(1, 7))
            rep = ar.AlmostRep(tuple(random_unitary(dim, rng) for _ in range(rank)))
            psi = ar.normalize(rep)
        g = tuple(int(x) for x in rng.integers(-2, 3, size=rep.rank))
        ex = float(np.abs(psi(g) @ psi(tuple(-x for x in g)) - np.eye(rep.dim)).max())
        if not ar.lex_positive(g) and any(g):
            # psi(g) - rho(g) = rho(-g)* - rho(g) = -rho(-g)* (rho(-g) rho(g) - rho(0))
            dft = float(schatten_norm(rep(tuple(-x for x in g)) @ rep(g) - np.eye(rep.dim), 2))
            gap = float(schatten_norm(psi(g) - rep(g), 2)) - 2 * dft
            ex = max(ex, gap)
        worst = max(worst, ex)
        fails += ex > tol
    return SuiteResult("normalize_involution", n, int(fails), float(worst), tol)


def c1_submultiplicative(rng, n=MATRIX_SAMPLES, tol=1e-9) -> SuiteResult:
    """``||ab||_{C^1} <= ||a||_{C^1} ||b||_{C^1}`` for trigonometric samples.

    Derivatives are exact, so the inequality is asserted; the sup runs over a
    fine grid, on which both sides are evaluated consistently.
    """
    fails, worst = 0, -np.inf
    x = np.arange(64) / 64
    for _ in range(n):
        s = int(rng.integers(1, 4))
        ca, cb = (random_matrix(s, s, rng) for _ in range(2))
        da, db = (random_matrix(s, s, rng) for _ in range(2))
        fa, fb = (int(v) for v in rng.integers(1, 4, size=2))
        ph = np.exp(2j * np.pi * fa * x)[:, None, None]
        qh = np.exp(2j * np.pi * fb * x)[:, None, None]
        a, a1 = ca + da * ph, da * (2j * np.pi * fa) * ph
        b, b1 = cb + db * qh, db * (2j * np.pi * fb) * qh
        ab, ab1 = a @ b, a1 @ b + a @ b1

        def c1(v, v1):
            return float(schatten_norm(v, np.inf).max() + schatten_norm(v1, np.inf).max())

        ex = c1(ab, ab1) - c1(a, a1) * c1(b, b1)
        worst = max(worst, ex)
        fails += ex > tol
    return SuiteResult("c1_submultiplicative", n, int(fails), float(worst), tol)


def c1_discrete_slack(rng, n=100, grid=32) -> dict:
    """Report-only: the same inequality with central differences."""
    worst = -np.inf
    for _ in range(n):
        s = int(rng.integers(1, 4))
        coeffs = [random_matrix(s, s, rng) for _ in range(4)]
        x = np.arange(grid) / grid
        ph = np.exp(2j * np.pi * x)[:, None, None]
        a = MatrixFormField(1, 0, (coeffs[0] + coeffs[1] * ph)[None])
        b = MatrixFormField(1, 0, (coeffs[2] + coeffs[3] * ph)[None])
        ab = MatrixFormField(1, 0, (a.comps[0] @ b.comps[0])[None])

        def c1(f):
            return (form_norm(f, np.inf, "estimator").sup
                    + form_norm(ext_d(f), np.inf, "estimator").sup)

        worst = max(worst, c1(ab) - c1(a) * c1(b))
    return {"name": "c1_discrete_slack", "samples": n, "grid": grid, "worst_excess": float(worst)}


SUITES = (scalar_projection_bound, scalar_sign_bound, schatten_consistency, matrix_holder,
          form_holder, trace_bound, single_term_norm, estimator_dominates, dd_zero,
          projector_idempotent, funcalc_polynomial, normalize_involution,
          c1_submultiplicative)


def run_audit(seed: int = 42, scalar_samples: int = SCALAR_SAMPLES,
              matrix_samples: int = MATRIX_SAMPLES) -> dict:
    """Run every suite; returns a JSON-ready dict with per-suite results."""
    rng = np.random.default_rng(seed)
    streams = rng.spawn(len(SUITES) + 1)
    results = []
    for suite, stream in zip(SUITES, streams):
        n = scalar_samples if suite.__name__.startswith("scalar_") else matrix_samples
        results.append(suite(stream, n))
    slack = c1_discrete_slack(streams[-1])
    return {
        "seed": seed,
        "scalar_samples": scalar_samples,
        "matrix_samples": matrix_samples,
        "suites": [r.as_dict() for r in results],
        "reported": [slack],
        "failures": sum(r.failures for r in results),
    }

