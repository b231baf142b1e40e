"""Cross-module oracle suite behind ``riemann-scan verify``."""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath as mp
import numpy as np

from . import classify as cl
from . import families as fam
from . import normalform as nfm
from . import oracles
from . import potential as pot
from . import reduced as red
from .geometry import sample_shape_points, semiaxes_from_xy

FD_HESSIAN_TOL = 1e-6
CRITICAL_TOL = 1e-6
# finite differences degrade near the edges, where J(b) is singular
INTERIOR_MARGIN = 0.02


def sample_axes(rng, count, margin=1e-3):
    return [semiaxes_from_xy(x, y) for x, y in sample_shape_points(rng, count, margin)]


@dataclass(frozen=True)
class OracleResult:
    name: str
    passed: bool
    value: float
    threshold: float
    detail: str = ""


def region_samples(kind, rng, count, g=1.0, elliptic=False, margin=1e-3, max_tries=200000):
    """Random semiaxes inside the existence region of ``kind`` (optionally elliptic)."""
    kind = fam.EllipsoidType(kind)
    out = []
    tries = 0
    while len(out) < count and tries < max_tries:
        batch = sample_axes(rng, 256, margin)
        tries += len(batch)
        for b in batch:
            if not fam.region_contains(kind, b, g):
                continue
            e = fam.equilibrium(kind, b, g=g)
            if not e.is_generic:
                continue
            if elliptic and not red.linearize(e).elliptic:
                continue
            out.append(b)
            if len(out) == count:
                break
    return out


def check_critical_points(rng, per_type=20, g=1.0):
    worst = 0.0
    for kind in fam.EllipsoidType:
        for b in region_samples(kind, rng, per_type, g, margin=INTERIOR_MARGIN):
            gb, torque = fam.critical_point_residual(fam.equilibrium(kind, b, g=g))
            worst = max(worst, gb, torque)
    return OracleResult("critical-point residual", worst <= CRITICAL_TOL, worst, CRITICAL_TOL)


def check_table_oracle(rng, per_type=40, g=1.0):
    bad = 0
    for kind in fam.EllipsoidType:
        for b in sample_axes(rng, per_type * 5):
            inside = fam.region_contains(kind, b, g)
            if inside != oracles.generic_contains(kind, b, g):
                bad += 1
            elif inside and not oracles.matches_table(kind, b, fam.momenta(kind, b, g=g), g):
                bad += 1
    return OracleResult("family tables vs generic conditions", bad == 0, bad, 0)


def check_empty_sets(rng, count=2000, g=1.0):
    hits = sum(oracles.r_set(b, i, j, s, g) for b in sample_axes(rng, count, 1e-4)
               for i, j, s in oracles.EMPTY_SETS)
    return OracleResult("empty planar sets", hits == 0, hits, 0)


def check_potential(rng, count=20):
    g = 1.0
    errs = [abs(pot.potential_axes((1.0, 1.0, 1.0), g) + 4 * math.pi) / (4 * math.pi),
            abs(pot.cn((1.0, 1.0, 1.0), 0, g) - 4 * math.pi / 7) / (4 * math.pi / 7),
            abs(pot.cn((1.0, 1.0, 1.0), 1, g) - 8 * math.pi / 35) / (8 * math.pi / 35)]
    for b in sample_axes(rng, count, 1e-2):
        v = pot.potential_V(b, g)
        errs.append(abs(v - pot.potential_V_elliptic(b, g)) / abs(v))
    worst = max(errs)
    return OracleResult("potential closed forms and elliptic formula", worst <= 1e-10, worst, 1e-10)


def check_blocks(rng, per_type=5, g=1.0):
    worst = 0.0
    failures = 0
    for kind in fam.EllipsoidType:
        for b in region_samples(kind, rng, per_type, g):
            e = fam.equilibrium(kind, b, g=g)
            try:
                _, rep = red.hessian_at_equilibrium(e, check=True)
            except red.FrameError:
                failures += 1
                continue
            zero = ["cb", "cq", "cp", "bp", "qp"] + (["bq"] if kind.is_s_type else [])
            worst = max([worst] + [rep[k] for k in zero])
    ok = failures == 0 and worst <= red.BLOCK_TOL
    return OracleResult("zero Hessian blocks", ok, worst, red.BLOCK_TOL, f"{failures} frame failures")


def reduced_hamiltonian_mp(e: fam.EquilibriumPoint, xi, dps=40):
    """The reduced Hamiltonian evaluated in ``dps``-digit arithmetic.

    Built directly from the mass-matrix formulas, the Poincare chart and the
    elliptic-integral form of V, so it shares no code path with the analytic
    Hessian beyond the entry formulas of K and J.
    """
    with mp.workdps(dps):
        xi = [mp.mpf(v) for v in xi]
        b1, b2 = mp.mpf(e.b.b1) + xi[0], mp.mpf(e.b.b2) + xi[1]
        b3 = 1 / (b1 * b2)
        K, j1, j2 = red._mass_entries(b1, b2)
        c1, c2 = xi[2], xi[3]
        h = (K[0] * c1 * c1 + 2 * K[1] * c1 * c2 + K[2] * c2 * c2) / 2
        ms = []
        for chart, q, p in zip(red.equilibrium_charts(e), xi[4:6], xi[6:8]):
            rho = mp.sqrt(sum(mp.mpf(v) ** 2 for v in chart.center))
            r2 = q * q + p * p
            s = mp.sqrt(rho - r2 / 4)
            local = (p * s, -q * s, rho - r2 / 2)
            ms.append([sum(mp.mpf(chart.frame[i, j]) * local[j] for j in range(3)) for i in range(3)])
        ml, mr = ms
        for i in range(3):
            h += (j1[i] * (ml[i] ** 2 + mr[i] ** 2)) / 2 + j2[i] * ml[i] * mr[i]
        phi = mp.acos(b3 / b1)
        m = (b1 * b1 - b2 * b2) / (b1 * b1 - b3 * b3)
        h += -4 * mp.pi * e.g / mp.sqrt(b1 * b1 - b3 * b3) * mp.ellipf(phi, m)
        return h


def fd_hessian_mp(e: fam.EquilibriumPoint, step=1e-10, dps=40) -> np.ndarray:
    """Central-difference Hessian in extended precision (no roundoff at tiny steps)."""
    with mp.workdps(dps):
        hstep = mp.mpf(step)

        def f(*pairs):
            xi = [mp.mpf(0)] * 8
            for k, sgn in pairs:
                xi[k] += sgn * hstep
            return reduced_hamiltonian_mp(e, xi, dps)

        f0 = f()
        H = np.zeros((8, 8))
        for i in range(8):
            H[i, i] = float((f((i, 1)) - 2 * f0 + f((i, -1))) / hstep ** 2)
            for j in range(i):
                v = (f((i, 1), (j, 1)) - f((i, 1), (j, -1)) - f((i, -1), (j, 1)) + f((i, -1), (j, -1)))
                H[i, j] = H[j, i] = float(v / (4 * hstep ** 2))
    return H


def fd_hessian_error(e: fam.EquilibriumPoint) -> float:
    """Max deviation of the analytic Hessian from ``fd_hessian_mp``, relative to ``max(1, |H|)``."""
    H, _ = red.hessian_at_equilibrium(e, check=False)
    return float(np.abs(H - fd_hessian_mp(e)).max() / max(1.0, np.abs(H).max()))


def check_fd_hessian(rng, per_type=3, g=1.0):
    worst = 0.0
    for kind in fam.EllipsoidType:
        for b in region_samples(kind, rng, per_type, g, margin=INTERIOR_MARGIN):
            worst = max(worst, fd_hessian_error(fam.equilibrium(kind, b, g=g)))
    return OracleResult("finite-difference Hessian", worst <= FD_HESSIAN_TOL, worst, FD_HESSIAN_TOL)


def normal_form_residuals(nf: nfm.NormalFormReport) -> dict:
    d = nf.diagnostics
    out = {"symplectic": d.get("symplectic_residual", math.inf),
           "homological": d.get("homological_residual", math.inf)}
    if nf.constructed:
        out["average"] = float(bool(set(nfm.polyalg.spectrum(nf.H4_avg)) - {(0, 0, 0, 0)}))
    return out


def check_normal_forms(rng, per_type=3, g=1.0):
    worst_s = worst_h = 0.0
    bad_avg = 0
    for kind in fam.EllipsoidType:
        for b in region_samples(kind, rng, per_type, g, elliptic=True):
            nf = nfm.birkhoff_order4(fam.equilibrium(kind, b, g=g))
            if not nf.constructed:
                continue
            r = normal_form_residuals(nf)
            worst_s = max(worst_s, r["symplectic"])
            worst_h = max(worst_h, r["homological"])
            bad_avg += int(r["average"])
    ok = worst_s <= nfm.SYMPLECTIC_TOL and worst_h <= 1e-10 and bad_avg == 0
    return OracleResult("normal-form identities", ok, max(worst_s, worst_h), 1e-10,
                        f"symplectic {worst_s:.1e}, homological {worst_h:.1e}, non-averaged {bad_avg}")


def check_g_scaling(rng, per_type=2):
    """At ``g = 2`` V doubles, momenta scale by sqrt 2 and class tags are unchanged."""
    errs = []
    same = True
    for kind in fam.EllipsoidType:
        for b in region_samples(kind, rng, per_type, elliptic=True):
            errs.append(abs(pot.potential_V(b, 2.0) / pot.potential_V(b, 1.0) - 2.0))
            m1, m2 = fam.momenta(kind, b, g=1.0).array, fam.momenta(kind, b, g=2.0).array
            errs.append(np.abs(m2 - math.sqrt(2.0) * m1).max() / max(1.0, np.abs(m1).max()))
            tags = [cl.classify_normal_form(nfm.birkhoff_order4(fam.equilibrium(kind, b, g=g))).tag
                    for g in (1.0, 2.0)]
            same &= tags[0] == tags[1]
    worst = max(errs)
    return OracleResult("g scaling", worst <= 1e-9 and same, worst, 1e-9, f"tags equal: {same}")


ORACLES = (check_potential, check_empty_sets, check_table_oracle, check_critical_points,
           check_blocks, check_fd_hessian, check_normal_forms, check_g_scaling)


def run_oracles(seed=0, oracles_=ORACLES):
    results = []
    for k, fn in enumerate(oracles_):
        rng = np.random.default_rng([seed, k])
        try:
            results.append(fn(rng))
        except Exception as exc:  # an oracle that crashes has failed
            results.append(OracleResult(fn.__name__, False, math.nan, math.nan, f"{type(exc).__name__}: {exc}"))
    return results


def format_table(results) -> str:
    width = max(len(r.name) for r in results)
    lines = []
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        lines.append(f"{status}  {r.name:<{width}}  value={r.value:.3g}  threshold={r.threshold:.3g}  {r.detail}".rstrip())
    return "\n".join(lines) + "\n"

