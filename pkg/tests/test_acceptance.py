"""Acceptance criteria, one test each, at their stated tolerances.

Every test records a PASS/FAIL line through the ``acceptance`` fixture;
the lines are printed in a dedicated section of the pytest summary.
"""
import math
import time

import numpy as np
import pytest

from fallsift import _backend
from fallsift.catalog import DatasetManifest, SampleEntry, builtin_registry, emit_report, \
    registry_entry
from fallsift.cleaner import GaussianModel, ReferenceSet, distance_to_references, \
    fit_gaussian, fit_threshold, gaussian_intersection, label_for
from fallsift.hausdorff import HdMode, directed_hd, symmetric_hd
from fallsift.kinematics import Trajectory, differentiate, extract_profile
from fallsift.synth import RigidFallParams, descent_path, gen_rigid_fall, integrate_rigid, \
    make_cohort, reference_falls

from oracles import bisect_pdf_crossing, brute_directed_1d, brute_directed_2d, normal_pdf
from test_catalog import ADL_TOTAL, FALL_TOTAL, TABLE

MODE_1D = HdMode.parse("1d")
E2E_SEED = 1


def metric(t, y):
    return Trajectory("acc", np.asarray(t, float), np.zeros(len(t)), np.asarray(y, float),
                      unit="meters", y_axis="up_positive")


def random_set(rng, two_d):
    n = int(rng.integers(1, 51))
    scale = 10.0 ** rng.uniform(-2, 2)
    if two_d:
        return rng.normal(0, scale, (n, 2))
    return rng.normal(0, scale, n)


def test_hausdorff_oracle_equivalence(acceptance):
    rng = np.random.default_rng(20240501)
    pairs = [(random_set(rng, d), random_set(rng, d), d, float(rng.uniform(0.1, 5)))
             for d in (False, True) for _ in range(1000)]
    wants = []
    for a, b, two_d, lam in pairs:
        if two_d:
            wants.append((brute_directed_2d(a, b, lam), brute_directed_2d(b, a, lam)))
        else:
            wants.append((brute_directed_1d(a, b), brute_directed_1d(b, a)))
    previous = _backend.BACKEND
    details, ok = [], True
    try:
        for name in _backend.available():
            _backend.use(name)
            mismatches, elapsed = 0, 0.0
            for (a, b, two_d, lam), want in zip(pairs, wants):
                mode = HdMode.parse("2d", lam) if two_d else MODE_1D
                start = time.perf_counter()
                got = (directed_hd(a, b, mode), directed_hd(b, a, mode))
                elapsed += time.perf_counter() - start
                mismatches += got != want
            ok &= mismatches == 0 and elapsed < 5.0
            details.append(f"{name}: {mismatches} not bit-equal, {elapsed:.3f} s")
    finally:
        _backend.use(previous)
    ok = acceptance("Hausdorff oracle equivalence", ok,
                    f"{len(pairs)} pairs (1000 per mode); " + "; ".join(details))
    assert ok


def test_metric_properties(acceptance):
    rng = np.random.default_rng(7)
    violations = {"nonneg": 0, "symmetry": 0, "identity": 0, "triangle": 0}
    modes = [MODE_1D, HdMode.parse("2d", 1.0)]
    for i in range(1000):
        mode = modes[i % 2]
        a, b, c = (random_set(rng, mode.kind != MODE_1D.kind) for _ in range(3))
        ab, ba = symmetric_hd(a, b, mode).symmetric, symmetric_hd(b, a, mode).symmetric
        bc, ac = symmetric_hd(b, c, mode).symmetric, symmetric_hd(a, c, mode).symmetric
        violations["nonneg"] += bool(min(ab, bc, ac) < 0)
        violations["symmetry"] += bool(ab != ba)
        violations["identity"] += bool(symmetric_hd(a, a, mode).symmetric != 0.0)
        # a few ulps of slack for the sum; the inequality is exact in real arithmetic
        violations["triangle"] += bool(ac > (ab + bc) * (1 + 4 * np.finfo(float).eps))
    total = sum(violations.values())
    ok = acceptance("metric properties", total == 0,
                    f"1000 triples, violations {violations}")
    assert ok


def test_differentiation_exactness(acceptance):
    t = np.arange(61) / 30.0
    p = differentiate(metric(t, 2.0 - 0.5 * 9.81 * t ** 2))
    quad_err = float(np.max(np.abs(p.vy[1:-1] - (-9.81 * t[1:-1]))))
    sin_err = 0.0
    ts = np.arange(401) / 200.0
    for phase in np.linspace(0, 2 * np.pi, 16, endpoint=False):
        q = differentiate(metric(ts, np.sin(2 * np.pi * ts + phase)))
        truth = 2 * np.pi * np.cos(2 * np.pi * ts + phase)
        sin_err = max(sin_err, float(np.max(np.abs(q.vy[1:-1] - truth[1:-1]))))
    ok = acceptance("differentiation exactness", quad_err <= 1e-9 and sin_err <= 2e-3,
                    f"free fall interior max err {quad_err:.2e} m/s (<= 1e-9), "
                    f"1 Hz sinusoid at 200 Hz max err {sin_err:.2e} m/s (<= 2e-3)")
    assert ok


def test_rigid_fall_physics(acceptance):
    p = RigidFallParams(1.7, math.radians(1.0), dt=1e-3)
    _, theta, omega = integrate_rigid(p)
    # energy measured from the release angle; the rest state itself is skipped
    gap = 2.0 * np.sin(0.5 * (theta + p.theta0)) * np.sin(0.5 * (theta - p.theta0))
    expected = 3.0 * p.g / p.length * gap
    energy_err = float(np.max(np.abs(omega[1:] ** 2 - expected[1:]) / expected[1:]))
    speed = descent_path(gen_rigid_fall(p, 30.0)).peak_speed
    speed_err = abs(speed - 7.07) / 7.07
    ok = acceptance("rigid-fall physics", energy_err <= 1e-6 and speed_err <= 5e-3,
                    f"max relative energy error {energy_err:.2e} over {len(theta)} RK4 nodes "
                    f"(<= 1e-6); impact head speed {speed:.4f} m/s, "
                    f"{100 * speed_err:.3f}% from 7.07 (<= 0.5%)")
    assert ok


def test_gaussian_machinery(acceptance):
    m = fit_gaussian(np.random.default_rng(2024).normal(1.0, 0.2, 10_000))
    fit_ok = abs(m.mu - 1.0) <= 0.01 and abs(m.sigma - 0.2) <= 0.01
    mid = gaussian_intersection(GaussianModel(0.0, 1.0, 5), GaussianModel(2.0, 1.0, 5))
    a, b = GaussianModel(0.5, 0.1, 7), GaussianModel(2.9, 0.5, 41)
    x = gaussian_intersection(a, b)
    bis = bisect_pdf_crossing(a.mu, a.sigma, b.mu, b.sigma)
    ok = acceptance("Gaussian machinery", fit_ok and mid == 1.0 and abs(x - bis) <= 1e-10,
                    f"fit mu={m.mu:.4f} sigma={m.sigma:.4f} (+-0.01); equal-sigma midpoint "
                    f"{mid!r}; unequal-sigma crossing off bisection by {abs(x - bis):.1e} "
                    f"(<= 1e-10)")
    assert ok
    assert normal_pdf(x, a.mu, a.sigma) == pytest.approx(normal_pdf(x, b.mu, b.sigma))


def test_reported_value_fixture(acceptance):
    rng = np.random.default_rng(48)
    real = 0.53 + rng.normal(0, 0.1, 7)
    hes = 2.93 + rng.normal(0, 0.5, 41)
    tm = fit_threshold(real, hes)
    labels_ok = label_for(0.53, tm.tau) == "realistic" and label_for(2.93, tm.tau) == "hesitated"
    manifest = DatasetManifest("act42", tuple(
        SampleEntry(f"a{i:02d}", f"{i}.csv", "fall", "collapse") for i in range(48)))
    decisions = [{"sample_id": f"a{i:02d}", "label": "realistic" if i < 7 else "hesitated",
                  "distance": float(real[i] if i < 7 else hes[i - 7])} for i in range(48)]
    rep = emit_report(decisions, manifest)
    frac_ok = rep["kept"] == 7 and rep["total"] == 48 and rep["kept_fraction"] == 7 / 48
    ok = acceptance("reported-value fixture classification", labels_ok and frac_ok,
                    f"tau={tm.tau:.4f} labels 0.53 {label_for(0.53, tm.tau)}, 2.93 "
                    f"{label_for(2.93, tm.tau)}; kept fraction {rep['kept']}/{rep['total']} "
                    f"= {rep['kept_fraction']:.3f}")
    assert ok


def _held_out_accuracy(seed, refs):
    cohort = make_cohort(20, 20, seed=seed)
    d = [distance_to_references(extract_profile(s.trajectory), refs)[0] for s in cohort]
    truth = [s.truth for s in cohort]
    fit, test = range(0, 40, 2), range(1, 40, 2)
    tm = fit_threshold([d[i] for i in fit if truth[i] == "realistic"],
                       [d[i] for i in fit if truth[i] == "hesitated"])
    return float(np.mean([label_for(d[i], tm.tau) == truth[i] for i in test]))


def test_end_to_end_cleaning(acceptance):
    start = time.perf_counter()
    refs = ReferenceSet(tuple(extract_profile(t) for t in reference_falls(1)), "synthetic")
    acc = _held_out_accuracy(E2E_SEED, refs)
    elapsed = time.perf_counter() - start
    spread = [_held_out_accuracy(s, refs) for s in range(10)]
    ok = acceptance("end-to-end synthetic cleaning", acc >= 0.9 and elapsed < 10.0,
                    f"seed {E2E_SEED}: held-out accuracy {acc:.3f} (>= 0.90) in "
                    f"{elapsed:.2f} s (< 10 s); info: seeds 0-9 mean {np.mean(spread):.3f}, "
                    f"{sum(a >= 0.9 for a in spread)}/10 at >= 0.90")
    assert ok


def test_registry_fidelity(acceptance):
    reg = builtin_registry()
    bad = []
    for e in reg:
        subjects, actions, falls, adls, types = TABLE[e.dataset]
        if (e.subjects, e.actions, e.fall_samples, e.adl_samples, set(e.data_types)) != \
                (subjects, actions, falls, adls, types):
            bad.append(e.dataset)
    ur = registry_entry("UR")
    tst = registry_entry("TST v2")
    notes_ok = "15" in ur.notes and tst.fall_samples is None and tst.adl_samples is None
    falls = sum(e.fall_samples for e in reg if e.fall_samples is not None)
    adls = sum(e.adl_samples for e in reg if e.adl_samples is not None)
    ok = acceptance("registry fidelity",
                    len(reg) == len(TABLE) and not bad and notes_ok
                    and (falls, adls) == (FALL_TOTAL, ADL_TOTAL),
                    f"{len(reg)} rows, mismatched {bad or 'none'}; falls {falls}, ADLs {adls}; "
                    f"UR note present: {'15' in ur.notes}; TST v2 counts absent: "
                    f"{tst.fall_samples is None}")
    assert ok
