"""Acceptance criteria at full trial counts and stated tolerances.

Each test prints one ``CRITERION k PASS|FAIL`` line. Run alone with
``pytest tests/test_acceptance.py -v`` or ``python tests/test_acceptance.py``.
"""

import sys
import time

import numpy as np
import pytest

from duality_lab.campaign import (
    CampaignConfig,
    example1_report,
    run_campaign,
    sample_cq,
    sample_interferometer,
    trial_seed,
)
from duality_lab.entropy import distinguishability_from_pguess, pguess, psecr
from duality_lab.interferometer import (
    detector_form,
    erasure_pipeline,
    pmax_detector,
    propagate,
)
from duality_lab.numerics import haar_unitary, random_density, random_source
from duality_lab.oracles import grid_phase_extremum, secrecy_by_duality, two_path_pure
from duality_lab.quantum import POVM, CQState, cq_conditional_on_path, random_povm
from duality_lab.wpdr import (
    check_asymmetric,
    check_erasure,
    check_erasure_entropic,
    check_theorem1,
    theorem1_terms,
)

SEED = 20240917


def emit(k, ok, detail):
    line = f"CRITERION {k:>2} {'PASS' if ok else 'FAIL'}  {detail}"
    capture = getattr(emit, "capsys", None)
    if capture is not None:
        with capture.disabled():
            print("\n" + line)
    else:
        print(line)
    sys.stdout.flush()


@pytest.fixture(autouse=True)
def _route_output(capsys, monkeypatch):
    monkeypatch.setattr(emit, "capsys", capsys, raising=False)
    monkeypatch.setenv("DUALITY_LAB_THREADS", "1")


def campaign(relation, trials, **kw):
    cfg = CampaignConfig(relations=[relation], trials=trials, seed=SEED, **kw)
    return list(run_campaign(cfg))


def min_slack(recs):
    return min(r["slack"] for r in recs)


def criterion_1():
    cfg = CampaignConfig(relations=["LEMMA1"], trials=100_000, seed=SEED, n_range=(2, 8), tol=1e-12)
    start = time.perf_counter()
    count, worst, eq, ok = 0, np.inf, 0.0, True
    for r in run_campaign(cfg):
        count += 1
        worst = min(worst, r["slack"])
        ok &= r["pass"]
        if r["n"] == 2:
            eq = max(eq, abs(r["slack"]))
    elapsed = time.perf_counter() - start
    ok = ok and worst >= -1e-12 and eq <= 1e-12 and elapsed < 5.0 and count == 100_000
    return ok, f"LEMMA1: 1e5 trials, min slack {worst:.2e}, max |slack| at d=2 {eq:.2e}, {elapsed:.2f} s"


def criterion_2():
    start = time.perf_counter()
    recs = campaign("LEMMA2", 2000, n_range=(2, 4), env_dim_range=(1, 4))
    elapsed = time.perf_counter() - start
    worst = min_slack(recs)
    gap = max(max(r["gaps"], default=0.0) for r in recs)
    ok = worst >= -1e-6 and gap <= 1e-7 and elapsed < 600
    return ok, f"LEMMA2: 2000 trials, min slack {worst:.2e}, max solver gap {gap:.2e}, {elapsed:.1f} s"


def criterion_3():
    parts, ok = [], True
    for rid in ("MMEUR", "PGUESS_UR", "MUB_UR"):
        recs = campaign(rid, 500, n_range=(2, 4), env_dim_range=(1, 3))
        worst = min_slack(recs)
        ok &= worst >= -1e-6 and all(r["pass"] for r in recs)
        parts.append(f"{rid} min slack {worst:.2e}")
    return ok, "uncertainty relations, 500 trials each: " + ", ".join(parts)


def criterion_4():
    start = time.perf_counter()
    errs = {"pguess": 0.0, "D": 0.0, "Vnaive": 0.0, "pmin": 0.0}
    for n in range(3, 9):
        r = example1_report(n, 1e-12)
        errs["pguess"] = max(errs["pguess"], abs(r["pguess_z"] - (n - 1) / n))
        errs["D"] = max(errs["D"], abs(r["D"] - (n - 2) / (n - 1)))
        errs["Vnaive"] = max(errs["Vnaive"], abs(r["V_naive"] - 1.0))
        errs["pmin"] = max(errs["pmin"], abs(r["p_c1_at_example_phases"]))
    elapsed = time.perf_counter() - start
    ok = errs["pguess"] <= 1e-12 and errs["D"] <= 1e-12 and errs["pmin"] <= 1e-10 and errs["Vnaive"] <= 1e-9
    ok &= elapsed < 10
    detail = ", ".join(f"{k} err {v:.1e}" for k, v in errs.items())
    return ok, f"example, n=3..8: {detail}, {elapsed:.2f} s"


def criterion_5():
    cfg = CampaignConfig(n_range=(2, 5), env_dim_range=(1, 4), seed=SEED).validate()
    worst, sat, oracle, pure_count = np.inf, 0.0, 0.0, 0
    for t in range(1000):
        rng = random_source(trial_seed(SEED, t))
        n = int(rng.integers(2, 6))
        ifm = sample_interferometer(n, cfg, rng)
        r = check_theorem1(ifm)
        worst = min(worst, r.slack)
        if n == 2:
            rho = propagate(ifm).matrix
            w, vecs = np.linalg.eigh(rho)
            if w[-1] > 1 - 1e-12:
                pure_count += 1
                d_ref, v_ref = two_path_pure(vecs[:, -1], ifm.env_dim)
                sat = max(sat, abs(r.slack))
                oracle = max(oracle, abs(r.term_values["D"] - d_ref), abs(r.term_values["V"] - v_ref))
    ok = worst >= -1e-6 and sat <= 1e-6 and oracle <= 1e-6 and pure_count > 0
    return ok, (f"THEOREM1: 1000 trials, min slack {worst:.2e}; {pure_count} pure two-path cases, "
                f"max |V^2+D^2-1| {sat:.2e}, max oracle deviation {oracle:.2e}")


def criterion_6():
    recs = campaign("ASYMMETRIC", 1000, n_range=(2, 4), coupler="haar")
    worst = min_slack(recs)
    settings = min(r["terms"]["phase_settings"] for r in recs)
    cfg = CampaignConfig(n_range=(2, 2), seed=SEED).validate()
    agree, v_dev = True, 0.0
    for t in range(200):
        ifm = sample_interferometer(2, cfg, random_source(trial_seed(SEED + 1, t)))
        a, b = check_asymmetric(ifm), check_theorem1(ifm)
        agree &= a.passed == b.passed
        v_dev = max(v_dev, abs(a.term_values["V1"] - b.term_values["V"]))
    ok = worst >= -1e-6 and settings == 17 and agree and v_dev <= 1e-6
    return ok, (f"asymmetric couplers: 1000 trials x 17 phase settings, min slack {worst:.2e}; "
                f"two-path symmetric verdicts agree: {agree}, max |V1-V| {v_dev:.2e}")


def criterion_7():
    cfg = CampaignConfig(n_range=(2, 3), env_dim_range=(2, 4), seed=SEED).validate()
    worst = worst_ent = np.inf
    v_drop = d_rise = d_opt = 0.0
    for t in range(500):
        rng = random_source(trial_seed(SEED, t))
        n = int(rng.integers(2, 4))
        ifm = sample_interferometer(n, cfg, rng)
        povm = random_povm(ifm.env_dim, int(rng.integers(2, 5)), rng, mix=0.3)
        v, d, pg = theorem1_terms(ifm, 1e-6)
        e = check_erasure(ifm, povm)
        worst = min(worst, e.slack)
        v_drop = max(v_drop, v - e.term_values["V_Y"])
        d_rise = max(d_rise, e.term_values["D_Y"] - d)
        rho_se = propagate(ifm).matrix
        best = pguess(cq_conditional_on_path(rho_se, n, ifm.env_dim), 1e-12)
        rec = erasure_pipeline(rho_se, POVM(best.optimizer), ifm.fc2)
        d_opt = max(d_opt, abs(rec.D - distinguishability_from_pguess(best.value, n)))
        worst_ent = min(worst_ent, check_erasure_entropic(ifm, povm).slack)
    ok = worst >= -1e-6 and v_drop <= 1e-6 and d_rise <= 1e-6 and d_opt <= 1e-6 and worst_ent >= -1e-6
    return ok, (f"erasure: 500 trials, min slack {worst:.2e}, max V-V(Y) {v_drop:.2e}, "
                f"max D(Y)-D {d_rise:.2e}, optimal-POVM |D(Y)-D| {d_opt:.2e}, entropic min slack {worst_ent:.2e}")


def criterion_8():
    recs = campaign("N2_REDUCTIONS", 300, env_dim_range=(1, 4))
    r1 = max(r["terms"]["hmin_residual"] for r in recs)
    r2 = max(r["terms"]["hmax_residual"] for r in recs)
    r3 = max(r["terms"]["pdec_residual"] for r in recs)
    ok = all(r["pass"] for r in recs) and r1 <= 1e-6 and r2 <= 1e-6 and r3 <= 1e-9
    return ok, f"two-path identities: 300 trials, residuals hmin {r1:.2e}, hmax {r2:.2e}, pdec {r3:.2e}"


def criterion_9():
    rng = random_source(SEED)
    hel = 0.0
    for _ in range(500):
        db = int(rng.integers(2, 5))
        cq = CQState(rng.dirichlet(np.ones(2)), np.stack([random_density(db, int(rng.integers(1, db + 1)), rng)
                                                          for _ in range(2)]))
        hel = max(hel, abs(pguess(cq).value - pguess(cq, 1e-11, method="iterative").value))
    sec = 0.0
    for _ in range(200):
        cq = sample_cq(int(rng.integers(2, 4)), int(rng.integers(2, 4)), rng)
        sec = max(sec, abs(psecr(cq, 1e-10).value - secrecy_by_duality(cq)))
    grid = 0.0
    for _ in range(200):
        n = int(rng.integers(2, 4))
        rho, u = random_density(n, int(rng.integers(1, n + 1)), rng), haar_unitary(n, rng)
        c = int(rng.integers(n))
        ref, _ = grid_phase_extremum(detector_form(rho, u, c))
        grid = max(grid, abs(pmax_detector(rho, u, c)[0] - ref))
    ok = hel <= 1e-8 and sec <= 1e-5 and grid <= 1e-6
    return ok, f"solver cross-checks: Helstrom/iterative {hel:.2e}, secrecy/duality oracle {sec:.2e}, ascent/grid {grid:.2e}"


def criterion_10():
    recs = campaign("DURR_IDENTITY", 1000, n_range=(2, 8), tol=1e-12)
    worst = max(r["lhs"] for r in recs)
    return worst <= 1e-12 and all(r["pass"] for r in recs), f"purity split: 1000 trials, max residual {worst:.2e}"


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9, criterion_10]


@pytest.mark.parametrize("k", range(1, 11))
def test_criterion(k):
    ok, detail = CRITERIA[k - 1]()
    emit(k, ok, detail)
    assert ok, detail


if __name__ == "__main__":
    failed = 0
    for k, fn in enumerate(CRITERIA, 1):
        ok, detail = fn()
        emit(k, ok, detail)
        failed += not ok
    sys.exit(1 if failed else 0)
