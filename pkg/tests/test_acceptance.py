"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines as they complete.
"""

import math
import time

import numpy as np

from lskmatte import (
    AlphaMatte,
    Label,
    RgbImage,
    RunConfig,
    Trimap,
    build_laplacian,
    classifier_alpha,
    classifier_confidence,
    classify,
    encode_matte,
    evaluate,
    expand_trimap,
    gradients,
    project_alpha,
    run_matte,
    solve_raw,
    to_lab,
    train,
)
from lskmatte.constraints import ConstraintField
from lskmatte.features import build_features
from lskmatte.solver import assemble_system

from conftest import flat_spatial_scene, ring_hole_scene, strip_trimap, two_color_scene
from test_constraints import grid_project_oracle
from test_knn import brute_force_knn
from test_metrics import loop_oracle
from test_solver import dense_laplacian_oracle


def check(num, name, ok):
    print(f"[acceptance {num:02d}] {name}: {'PASS' if ok else 'FAIL'}")
    assert ok, f"acceptance criterion {num} ({name}) failed"


def test_01_dense_oracle_equivalence():
    started = time.perf_counter()
    worst = 0.0
    for seed in range(5):
        rng = np.random.default_rng(seed)
        h, w = int(rng.integers(14, 21)), int(rng.integers(14, 21))
        img = RgbImage(rng.random((h, w, 3)))
        tri = strip_trimap(h, w, int(rng.integers(3, 6)), w - int(rng.integers(3, 6)))
        result = run_matte(img, tri)
        dense = np.linalg.solve(result.system.matrix.toarray(), result.system.rhs)
        worst = max(worst, float(np.abs(result.raw_alpha - dense).max()))
    elapsed = time.perf_counter() - started
    check(1, f"dense-oracle equivalence (max |diff| {worst:.2e}, {elapsed:.1f}s)",
          worst <= 1e-6 and elapsed < 10.0)


def test_02_laplacian_properties():
    rng = np.random.default_rng(42)
    worst_sym = worst_row = worst_eig = worst_ref = 0.0
    for _ in range(10):
        h, w = int(rng.integers(6, 21)), int(rng.integers(6, 21))
        img = RgbImage(rng.random((h, w, 3)))
        L = build_laplacian(img)
        worst_sym = max(worst_sym, float(abs(L - L.T).max()))
        worst_row = max(worst_row, float(np.abs(np.asarray(L.sum(axis=1))).max()))
        dense = L.toarray()
        worst_eig = min(worst_eig, float(np.linalg.eigvalsh(dense).min()))
        worst_ref = max(worst_ref, float(np.abs(dense - dense_laplacian_oracle(img)).max()))
    ok = (worst_sym <= 1e-12 and worst_row <= 1e-10 and worst_eig >= -1e-9
          and worst_ref <= 1e-10)
    check(2, f"laplacian properties (sym {worst_sym:.1e}, row {worst_row:.1e}, "
             f"eig {worst_eig:.1e}, ref {worst_ref:.1e})", ok)


def test_03_projection_oracle():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(1000):
        p, f, b = rng.random((3, 3))
        worst = max(worst, abs(project_alpha(p, f, b) - grid_project_oracle(p, f, b)))
    check(3, f"projection grid oracle (max |diff| {worst:.2e})", worst <= 1e-3)


def test_04_classifier_correctness():
    img, tri = two_color_scene(h=50, w=20, fg_end=9, bg_start=12)
    lab = to_lab(img)
    grads = gradients(lab)
    clf = train(build_features(lab, grads), build_features(lab, grads, True), tri)
    counts = (clf.samples.count(1), clf.samples.count(-1))
    all_perfect = all(score == 1.0 for _, score in clf.score_table)

    rng = np.random.default_rng(11)
    feats = clf.samples.features
    labels = clf.samples.labels
    agree = True
    for _ in range(500):
        x = rng.uniform(0.0, 255.0, size=9)
        if classify(clf, x).flag != brute_force_knn(feats, labels, x, clf.k):
            agree = False
            break
    ok = counts == (50, 50) and all_perfect and agree
    check(4, f"classifier correctness (samples {counts}, all-k accuracy 1.0: "
             f"{all_perfect}, oracle agreement: {agree})", ok)


def test_05_adaptive_11d_switch():
    img, tri = flat_spatial_scene()
    lab = to_lab(img)
    grads = gradients(lab)
    f9 = build_features(lab, grads)
    f11 = build_features(lab, grads, with_coords=True)
    auto = train(f9, f11, tri, policy="auto", accuracy_floor=0.85)
    color_only = train(f9, None, tri, policy="force9")
    ok = (auto.used_coords and auto.cv_accuracy >= 0.95
          and color_only.cv_accuracy <= 0.65)
    check(5, f"adaptive 11D switch (11D cv {auto.cv_accuracy:.3f}, "
             f"9D cv {color_only.cv_accuracy:.3f})", ok)


def test_06_trimap_expansion():
    size = 32
    img = RgbImage(np.full((size, size, 3), 0.5))
    yy, xx = np.mgrid[0:size, 0:size]
    labels = np.full((size, size), Label.UNKNOWN, dtype=np.uint8)
    disk = np.hypot(yy - 16, xx - 16) <= 5.0
    labels[disk] = Label.FOREGROUND
    tri = Trimap(labels)
    out = expand_trimap(img, tri)

    fy, fx = np.nonzero(disk)
    dist = np.sqrt(
        (yy[..., None] - fy[None, None, :]) ** 2
        + (xx[..., None] - fx[None, None, :]) ** 2
    ).min(axis=2)
    should_flip = tri.is_unknown & (dist < 9.0)
    flipped = tri.is_unknown & (out.labels == Label.FOREGROUND)
    ok = (np.array_equal(flipped, should_flip)
          and np.array_equal(out.labels[tri.is_known], tri.labels[tri.is_known])
          and bool((out.is_unknown <= tri.is_unknown).all()))
    check(6, f"trimap expansion ({int(flipped.sum())} pixels relabeled)", ok)


def test_07_hole_region_improvement():
    started = time.perf_counter()
    img, tri, truth_alpha = ring_hole_scene(size=64)
    truth = AlphaMatte(truth_alpha)
    augmented = run_matte(img, tri, RunConfig(mode="augmented"))
    baseline = run_matte(img, tri, RunConfig(mode="cf-baseline"))
    sad_aug = evaluate(augmented.matte, truth).sad
    sad_cf = evaluate(baseline.matte, truth).sad
    elapsed = time.perf_counter() - started
    ok = sad_aug < sad_cf and sad_aug <= 0.75 * sad_cf and elapsed < 30.0
    check(7, f"hole-region improvement (SAD {sad_aug:.2f} vs {sad_cf:.2f} baseline, "
             f"{elapsed:.1f}s)", ok)


def test_08_metric_oracle():
    rng = np.random.default_rng(3)
    same = AlphaMatte(rng.random((9, 9)))
    r = evaluate(same, same)
    identical_ok = r.sad == 0.0 and r.mse == 0.0

    a = np.zeros((6, 7))
    b = a.copy()
    b[4, 2] = 1.0
    single = evaluate(AlphaMatte(a), AlphaMatte(b))
    single_ok = single.sad == 1.0 and abs(single.mse - 1.0 / 42) < 1e-15

    x, y = rng.random((2, 8, 8))
    got = evaluate(AlphaMatte(x), AlphaMatte(y))
    sad_ref, mse_ref = loop_oracle(x, y)
    loop_ok = abs(got.sad - sad_ref) <= 1e-12 and abs(got.mse - mse_ref) <= 1e-12
    check(8, "metric oracle", identical_ok and single_ok and loop_ok)


def test_09_baseline_reduction():
    rng = np.random.default_rng(29)
    img = RgbImage(rng.random((18, 18, 3)))
    tri = strip_trimap(18, 18, 5, 13)

    augmented = run_matte(img, tri, RunConfig(mode="augmented"))
    forced = ConstraintField(
        a_init=augmented.constraints.a_init,
        confidence=augmented.constraints.confidence,
        gamma=np.zeros_like(augmented.constraints.gamma),
        source=augmented.constraints.source,
    )
    system = assemble_system(build_laplacian(img), augmented.trimap, forced)
    forced_raw = solve_raw(system)
    baseline = run_matte(img, tri, RunConfig(mode="cf-baseline"))

    raw_ok = np.array_equal(forced_raw, baseline.raw_alpha)
    bytes_ok = (encode_matte(np.clip(forced_raw, 0, 1).reshape(18, 18))
                == encode_matte(baseline.matte.alpha))
    check(9, "baseline reduction is bit-identical", raw_ok and bytes_ok)


def test_10_constraint_branch_analytics():
    conf_ok = abs(classifier_confidence(2.0, 2.0) - math.exp(-1.0)) <= 1e-12
    alpha_ok = abs(classifier_alpha(1, 15.0, 15.0) - 1.0 / (1.0 + math.exp(-1.0))) <= 1e-12

    dis = np.linspace(0.5, 50.0, 1000)
    mono_ok = (
        (np.diff(classifier_alpha(1, dis)) < 0).all()
        and (np.diff(classifier_alpha(-1, dis)) > 0).all()
        and (np.diff(classifier_confidence(dis)) < 0).all()
    )
    wide = np.linspace(0.5, 845.0, 1000)
    side_ok = ((classifier_alpha(1, wide) > 0.5).all()
               and (classifier_alpha(-1, wide) < 0.5).all())
    check(10, "constraint-branch analytics", conf_ok and alpha_ok and mono_ok and side_ok)


def benchmark_scene(h=600, w=800):
    """Benchmark-scale synthetic: shaded foreground disk with an enclosed hole."""
    rng = np.random.default_rng(2024)
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    base = np.empty((h, w, 3))
    base[..., 0] = 0.15 + 0.20 * xx / (w - 1)
    base[..., 1] = 0.30 + 0.30 * yy / (h - 1)
    base[..., 2] = 0.70 - 0.30 * xx / (w - 1)
    rr = np.hypot(yy - 300.0, xx - 400.0)
    on_fg = (rr <= 140.0) & (rr > 35.0)
    shade = 0.75 + 0.25 * np.cos(rr / 25.0)
    fg = np.stack([0.85 * shade, 0.15 * shade, 0.10 * shade], axis=-1)
    base = np.where(on_fg[..., None], fg, base)
    base += rng.normal(0.0, 0.015, base.shape)
    img = RgbImage(np.clip(base, 0.0, 1.0))

    labels = np.full((h, w), Label.UNKNOWN, dtype=np.uint8)
    labels[(rr >= 45.0) & (rr <= 110.0)] = Label.FOREGROUND
    labels[rr >= 170.0] = Label.BACKGROUND
    return img, Trimap(labels)


def test_11_benchmark_scale_determinism():
    img, tri = benchmark_scene()
    runs = []
    slowest = 0.0
    for _ in range(2):
        started = time.perf_counter()
        result = run_matte(img, tri)
        slowest = max(slowest, time.perf_counter() - started)
        runs.append((result.raw_alpha, encode_matte(result.matte.alpha)))
    raw_ok = np.array_equal(runs[0][0], runs[1][0])
    bytes_ok = runs[0][1] == runs[1][1]
    check(11, f"benchmark-scale determinism (slowest run {slowest:.0f}s)",
          raw_ok and bytes_ok and slowest <= 300.0)
