import math
import time

import numpy as np
import pytest

from conftest import CRITERIA
from entspec import bounds as bnd
from entspec import concentration as conc
from entspec import dilution as dil
from entspec import operators as ops
from entspec import rates
from entspec import sequences as sq
from entspec.cli import main

pytestmark = pytest.mark.acceptance

H = 0.562335
QUBIT = sq.iid_sequence([0.75, 0.25])
NS = [50, 100, 200]


def record(name, checks):
    # checks: list of (label, ok, value)
    ok = all(c[1] for c in checks)
    detail = "; ".join(f"{label}={value} [{'ok' if good else 'FAIL'}]" for label, good, value in checks)
    line = f"{'PASS' if ok else 'FAIL'} {name}: {detail}"
    print(line)
    CRITERIA.append((name, ok, detail))
    assert ok, line


def within(x, centre, tol):
    return abs(x - centre) <= tol


def test_c01_lemma_suites():
    t0 = time.perf_counter()
    rep = rates.run_lemma_suite(1000, dims=(2, 3, 4, 5, 6), seed=0)
    dt = time.perf_counter() - t0
    record("C1 lemma suites", [
        ("checks", rep.checks == 3000, rep.checks),
        ("failures", rep.failures == 0, rep.failures),
        ("runtime_s", dt < 60, f"{dt:.1f}"),
    ])


def test_c02_iid_entropy_convergence():
    t0 = time.perf_counter()
    est = rates.estimate_entropy_rates(QUBIT, NS, epsilon=0.01)
    dt = time.perf_counter() - t0
    lo, hi = est.lower_rate(200), est.upper_rate(200)
    w50, w200 = est.bracket(50).width, est.bracket(200).width
    record("C2 iid entropy-rate convergence", [
        ("S_lower(200)", within(lo, H, 0.05), f"{lo:.4f}"),
        ("S_upper(200)", within(hi, H, 0.05), f"{hi:.4f}"),
        ("width200<width50/2", w200 < w50 / 2, f"{w200:.3f}/{w50:.3f}"),
        ("runtime_s", dt < 30, f"{dt:.1f}"),
    ])


def test_c03_separation_demo():
    t0 = time.perf_counter()
    mix = sq.mixture_sequence(sq.MixtureSpec((0.9, 0.1), (0.5, 0.5), 0.5))
    est = rates.estimate_entropy_rates(mix, [200], epsilon=0.01)
    dt = time.perf_counter() - t0
    lo, hi = est.lower_rate(200), est.upper_rate(200)
    lower_cell, upper_cell = est.lower_cell(200), est.upper_cell(200)
    record("C3 separation demo", [
        ("S_lower(200)", within(lo, 0.325083, 0.05), f"{lo:.4f}"),
        ("S_upper(200)", within(hi, 0.693147, 0.05), f"{hi:.4f}"),
        ("disjoint", lower_cell[1] < upper_cell[0], f"{lower_cell} < {upper_cell}"),
        ("runtime_s", dt < 60, f"{dt:.1f}"),
    ])


def test_c04_concentration_coding():
    gamma = 0.512335
    outs = conc.concentration_sweep(QUBIT, gamma, NS)
    p = [o.p_fail for o in outs]
    record("C4 concentration coding", [
        ("p_fail(200)<0.05", p[-1] < 0.05, f"{p[-1]:.4f}"),
        ("decreasing", p[0] > p[1] > p[2], [round(x, 4) for x in p]),
        ("majorization_ok", all(o.majorization_ok for o in outs if o.M != 0), True),
        ("rate>=lower_bound", all(o.rate >= o.rate_lower_bound - 1e-12 for o in outs),
         [round(o.rate - o.rate_lower_bound, 4) for o in outs]),
    ])


def test_c05_concentration_strong_converse():
    out = conc.concentration_sweep(QUBIT, H + 0.1, [200], strict=False)[0]
    record("C5 concentration strong converse", [("p_fail(200)>0.95", out.p_fail > 0.95, f"{out.p_fail:.4f}")])


def test_c06_dilution_coding():
    alpha = H + 0.05
    fids = [dil.coding_fidelity(QUBIT.spectrum(n), alpha, n) for n in NS]
    counts = [dil.projector_log_count(QUBIT.spectrum(n), alpha, n) - n * alpha for n in NS]
    record("C6 dilution coding", [
        ("fidelity(200)>=0.95", fids[-1] >= 0.95, f"{fids[-1]:.4f}"),
        ("nondecreasing", fids[0] <= fids[1] <= fids[2], [round(f, 4) for f in fids]),
        ("count<=e^(n alpha)", all(c <= 0 for c in counts), [round(c, 3) for c in counts]),
    ])


def test_c07_dilution_converse():
    b = dil.dilution_converse_bound(QUBIT.spectrum(200), H - 0.1, H - 0.2, 200)
    hand = dil.dilution_converse_bound(sq.iid_sequence([0.5, 0.5]).spectrum(10), 0.6, 0.5, 10)
    record("C7 dilution converse", [
        ("bound(200)<0.1", b.total < 0.1, f"{b.total:.6f}"),
        ("hand_check", within(hand.total, math.exp(-1), 1e-9), f"{hand.total:.9f}"),
    ])


def test_c08_bounds_exactness():
    worst = 0.0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        d = int(rng.integers(2, 4))
        sigma = ops.random_separable(rng, d)
        m = int(rng.integers(1, 9))
        worst = max(worst, abs(bnd.relent_fidelity_bound(sigma, sigma, 0.0, m).total - 1 / m))
    phi = ops.maximally_entangled(2)
    coh = bnd.coherent_fidelity_bound(phi.density(), (2, 2), 0.0, 2).total
    record("C8 bounds exactness", [
        ("relent_sep=1/M", worst <= 1e-12, f"{worst:.1e}"),
        ("coherent_bell=1.25", within(coh, 1.25, 1e-9), f"{coh:.9f}"),
    ])


def test_c09_pure_state_identity():
    ns = list(range(1, 9))
    cond = rates.estimate_conditional_rates(sq.purify(QUBIT), ns)
    ent = rates.estimate_entropy_rates(QUBIT, ns)
    overlaps = []
    for n in ns:
        neg = (-cond.upper_rate(n), -cond.lower_rate(n))
        overlaps.append(max(neg[0], ent.lower_rate(n)) <= min(neg[1], ent.upper_rate(n)))
    # the rank-one path must agree with dense diagonalization wherever dense fits
    grid = rates.GammaGrid(-1.0, 0.0, 0.05).points()
    gap = 0.0
    for n in range(1, 5):
        fast = rates.conditional_curve(sq.purify(QUBIT), n, grid, "rank_one").values
        slow = rates.conditional_curve(sq.purify(QUBIT), n, grid, "dense").values
        gap = max(gap, np.abs(fast - slow).max())
    record("C9 pure-state identity", [
        ("overlap n=1..8", all(overlaps), sum(overlaps)),
        ("rank_one=dense n<=4", gap < 1e-9, f"{gap:.1e}"),
    ])


def test_c10_determinism(tmp_path):
    outs = []
    for i in range(2):
        csv, svg = tmp_path / f"r{i}.csv", tmp_path / f"r{i}.svg"
        code = main(["separation", "--sigma", "0.9,0.1", "--omega", "0.5,0.5", "--t", "0.5",
                     "--n", "50,100,200", "--seed", "0", "-o", str(csv), "--plot", str(svg)])
        outs.append((code, csv.read_bytes(), svg.read_bytes()))
    record("C10 determinism", [
        ("exit", outs[0][0] == outs[1][0] == 0, outs[0][0]),
        ("csv_identical", outs[0][1] == outs[1][1], len(outs[0][1])),
        ("svg_identical", outs[0][2] == outs[1][2], len(outs[0][2])),
    ])
