"""Acceptance criteria, one test per criterion.

Run ``pytest -m acceptance -rs`` to get a PASS / FAIL / SKIP line for each
one at the end of the session. The dataset reproductions need the licensed
MCYT, SUSIG and CMU corpora converted to manifests; point the environment
variables ``SIGQUALITY_MCYT``, ``SIGQUALITY_SUSIG`` and ``SIGQUALITY_CMU`` at
them. Without those they are skipped with that reason.
"""

import math
import os
import time

import numpy as np
import pytest

from sigquality import (
    Protocol,
    dtw_distance,
    emd_complexity,
    evaluate,
    extract_features,
    far_frr,
    generic_population_stats,
    golden_rank,
    load_dataset,
    make_verifier,
    repeatability,
    run_protocol,
    spearman,
    synth_corpus,
)
from sigquality.cli import main
from sigquality.evaluation import template_quality
from sigquality.features import DEFAULT_SPEC
from sigquality.ingest import SignatureSample
from sigquality.quality import binomial_bin_stats, build_template
from tests.conftest import random_sample
from tests.oracles import brute_dtw, naive_emd, naive_frames, pearson_of_ranks


def acceptance(label):
    return pytest.mark.acceptance(label)


# ---------------------------------------------------------------------------
# 1. property suite

@acceptance("1a feature invariance, 1000 samples, exact")
def test_feature_invariance(record_property):
    rng = np.random.default_rng(101)
    for _ in range(1000):
        s = random_sample(rng)
        base = extract_features(s)
        dx, dy = rng.integers(-5000, 5000, size=2)
        scale = int(rng.integers(2, 9))
        assert extract_features(s.transformed(int(dx), int(dy))) == base
        assert extract_features(s.transformed(scale=scale)) == base
        assert extract_features(s.transformed(int(dx), int(dy), scale)) == base
    record_property("measured", "1000/1000 identical")


@acceptance("1b binomial population model vs Monte Carlo, sigma within 2%")
def test_binomial_model_matches_simulation(record_property):
    n_bins, L = 16, 147
    rng = np.random.default_rng(202)
    draws = rng.multinomial(L, np.full(n_bins, 1 / n_bins), size=100_000) / L
    mc_sigma = draws.std(axis=0, ddof=1)
    mu, sigma = binomial_bin_stats(n_bins, L)
    rel = np.abs(mc_sigma - sigma) / sigma
    record_property("measured", f"max rel sigma error {rel.max():.4%}")
    assert np.all(rel < 0.02)
    assert np.all(np.abs(draws.mean(axis=0) - mu) < 0.02 * mu)

    pop = generic_population_stats(DEFAULT_SPEC, L)
    assert np.all(pop.sigma[2 * DEFAULT_SPEC.sa_size:] == sigma)
    k, p = DEFAULT_SPEC.sa_size, DEFAULT_SPEC.pressure_bins
    halves = [pop.mu[:k], pop.mu[k:2 * k], pop.mu[2 * k:2 * k + p], pop.mu[2 * k + p:]]
    assert all(math.fsum(h) == 1.0 for h in halves)


@acceptance("1c EMD equals naive double loop, 500 templates, exact")
def test_emd_oracle(record_property):
    rng = np.random.default_rng(303)
    for _ in range(500):
        feats = [extract_features(random_sample(rng)) for _ in range(int(rng.integers(2, 7)))]
        assert emd_complexity(build_template(feats)).value == naive_emd([f.speed_angle() for f in feats])
    record_property("measured", "500/500 exact")


@acceptance("1d DTW equals path enumeration, lengths <= 5, 200 cases, 1e-9")
def test_dtw_oracle(record_property):
    rng = np.random.default_rng(404)
    worst = 0.0
    for _ in range(200):
        xa, ya, xb, yb = (rng.integers(-20, 21, size=5).tolist() for _ in range(4))
        # a DTW frame sequence needs two pen-down points, so lengths run 2..5
        for n in range(2, 6):
            for m in range(2, 6):
                a = SignatureSample(xa[:n], ya[:n], list(range(n)))
                b = SignatureSample(xb[:m], yb[:m], list(range(m)))
                want = brute_dtw(naive_frames(xa[:n], ya[:n]), naive_frames(xb[:m], yb[:m]))
                worst = max(worst, abs(dtw_distance(a, b) - want))
    record_property("measured", f"max abs error {worst:.2e}")
    assert worst <= 1e-9


@acceptance("1e Spearman vs Pearson of ranks, 1000 tie-free cases, 1e-9")
def test_spearman_oracle(record_property):
    rng = np.random.default_rng(505)
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(3, 60))
        x = rng.permutation(10 * n)[:n] + rng.uniform(-0.4, 0.4, n)
        y = rng.permutation(10 * n)[:n].astype(float)
        worst = max(worst, abs(spearman(x, y) - pearson_of_ranks(x.tolist(), y.tolist())))
        assert spearman(x, -x) == -1.0
        assert spearman(x, x) == 1.0
    record_property("measured", f"max abs error {worst:.2e}")
    assert worst <= 1e-9


def _pipeline_quartiles():
    ds = synth_corpus(7, 20, 20, 2, 0.8, 1.0, forgeries_per_user=2)
    proto = Protocol(enroll_count=5, selection="first_session", validation_count=3, imposter_source="both")
    report, _ = evaluate(ds, proto, make_verifier("histogram"))
    return report.quartiles


@acceptance("1f FAR/FRR monotone on every curve; R strictly decreasing, 100 cases")
def test_monotonicity(record_property):
    rng = np.random.default_rng(606)
    n_curves = 0
    for _ in range(100):
        gen = rng.gamma(2.0, 1.0, int(rng.integers(1, 80)))
        imp = rng.gamma(6.0, 1.0, int(rng.integers(1, 80)))
        if rng.random() < 0.3:
            gen = np.round(gen)  # ties
        c = far_frr(gen, imp)
        assert np.all(np.diff(c.far) >= 0) and np.all(np.diff(c.frr) <= 0)
        n_curves += 1
    for q in _pipeline_quartiles().values():
        for row in (*q.curves, q.pooled):
            row = row[~np.isnan(row)]
            d = np.diff(row)
            assert np.all(d >= 0) if q.rate == "far" else np.all(d <= 0)
            n_curves += 1

    for _ in range(100):
        scores = rng.uniform(0.01, 50.0, int(rng.integers(1, 30)))
        bumped = scores.copy()
        k = int(rng.integers(scores.size))
        bumped[k] += rng.uniform(1e-3, 10.0)
        assert repeatability(bumped) < repeatability(scores)
    record_property("measured", f"{n_curves} curves monotone, 100/100 R decreases")


@acceptance("1g determinism: seed-7 synthetic pipeline gives byte-identical reports")
def test_pipeline_determinism(tmp_path, record_property):
    def tree(root):
        return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}

    synth = ["synth", "--seed", "7", "--n-users", "20", "--samples-per-user", "20", "--sessions", "2",
             "--consistency", "0.8", "--complexity-knob", "1.0", "--forgeries-per-user", "2"]
    for name in ("ds_a", "ds_b"):
        assert main([*synth, "--out", str(tmp_path / name)]) == 0
    assert tree(tmp_path / "ds_a") == tree(tmp_path / "ds_b")

    run = ["--enroll-count", "5", "--selection", "first_session", "--validation-count", "3",
           "--imposter-source", "both"]
    codes = []
    for name, ds, extra in (("a", "ds_a", []), ("b", "ds_b", []), ("c", "ds_a", ["--workers", "2"])):
        codes.append(main(["eval", "--manifest", str(tmp_path / ds), "--out", str(tmp_path / name),
                           *run, *extra]))
        codes.append(main(["quality", "--manifest", str(tmp_path / ds), "--out", str(tmp_path / name / "q"),
                           *run]))
    assert set(codes) <= {0, 1}
    a = tree(tmp_path / "a")
    assert "report.json" in a and "scores.csv" in a and "q/quality.json" in a
    assert a == tree(tmp_path / "b") == tree(tmp_path / "c")
    record_property("measured", f"{len(a)} files identical across 3 runs")


# ---------------------------------------------------------------------------
# 2. synthetic ordering experiment

def _ordered_in_range(q, lo=0.01, hi=0.5):
    """Lowest-quality quartile error >= highest quartile error wherever the pooled rate is in range."""
    mask = (q.pooled >= lo) & (q.pooled <= hi)
    low, high = q.curves[0][mask], q.curves[3][mask]
    return int(mask.sum()), bool(np.all(low >= high)), float(np.min(low - high)) if mask.any() else math.nan


@acceptance("2 synthetic quartile ordering: FAR by distinctiveness, FRR by repeatability, < 2 min")
def test_synthetic_ordering(record_property):
    start = time.perf_counter()
    ds = synth_corpus(7, n_users=20, samples_per_user=20, sessions=2, consistency=(0.6, 0.95))
    verifier = make_verifier("histogram")

    far_report, _ = evaluate(ds, Protocol(5, "random", 0, 5, "random_forgery", seed=7), verifier)
    far_q = far_report.quartiles["distinctiveness"]
    n_far, far_ok, far_gap = _ordered_in_range(far_q)

    frr_report, _ = evaluate(ds, Protocol(0, "first_session", 3, 1, seed=7), verifier)
    frr_q = frr_report.quartiles["repeatability"]
    n_frr, frr_ok, frr_gap = _ordered_in_range(frr_q)

    elapsed = time.perf_counter() - start
    record_property("measured", f"FAR: {n_far} thresholds, min gap {far_gap:.4f}; "
                                f"FRR: {n_frr} thresholds, min gap {frr_gap:.4f}; {elapsed:.1f}s")
    assert all(far_q.groups) and all(frr_q.groups)
    assert n_far > 0 and n_frr > 0
    assert far_ok and frr_ok
    assert elapsed < 120


# ---------------------------------------------------------------------------
# 3. conditional dataset reproduction

def _manifest(var, name):
    path = os.environ.get(var)
    if not path:
        pytest.skip(f"needs the licensed {name} corpus as a manifest in ${var}")
    return load_dataset(os.path.join(path, "manifest.json") if os.path.isdir(path) else path)


def _workers():
    return os.cpu_count() or 1


@acceptance("3a MCYT random-forgery EER: histogram 0.72% +- 0.5pp, DTW 2.19% +- 1.0pp")
def test_mcyt_eer(record_property):
    ds = _manifest("SIGQUALITY_MCYT", "MCYT")
    proto = Protocol(5, "random", 0, 100, "random_forgery", seed=0)
    start = time.perf_counter()
    rates = {}
    for kind in ("histogram", "dtw"):
        report, _ = evaluate(ds, proto, make_verifier(kind), workers=_workers())
        rates[kind] = report.eer["random_forgery"]["rate"]
    elapsed = time.perf_counter() - start
    record_property("measured", f"histogram {rates['histogram']:.2%}, dtw {rates['dtw']:.2%}, "
                                f"{elapsed / 60:.1f} min")
    assert abs(rates["histogram"] - 0.0072) <= 0.005
    assert abs(rates["dtw"] - 0.0219) <= 0.010
    assert elapsed <= 3600


def _distinctiveness_stats(ds, seed=0):
    matrix = run_protocol(ds, Protocol(5, "random", 0, 1, "random_forgery", seed=seed),
                          make_verifier("histogram"), workers=_workers())
    d = np.array([q["distinctiveness"] for q in template_quality(matrix, ds).values()])
    return matrix, d


@acceptance("3b distinctiveness: MCYT mean 187.28 +- 5, std 23.24 +- 5; SUSIG mean 171.83 +- 5")
def test_distinctiveness_statistics(record_property):
    mcyt = _manifest("SIGQUALITY_MCYT", "MCYT")
    susig = _manifest("SIGQUALITY_SUSIG", "SUSIG")
    _, d_m = _distinctiveness_stats(mcyt)
    _, d_s = _distinctiveness_stats(susig)
    record_property("measured", f"MCYT {d_m.mean():.2f} ({d_m.std(ddof=1):.2f}), SUSIG {d_s.mean():.2f}")
    assert abs(d_m.mean() - 187.28) <= 5
    assert abs(d_m.std(ddof=1) - 23.24) <= 5
    assert abs(d_s.mean() - 171.83) <= 5


@acceptance("3c MCYT Spearman(distinctiveness, mean imposter rank): empirical 0.78, generic 0.50, +- 0.10")
def test_mcyt_distinctiveness_spearman(record_property):
    ds = _manifest("SIGQUALITY_MCYT", "MCYT")
    matrix = run_protocol(ds, Protocol(5, "random", 0, 1, "random_forgery", seed=0),
                          make_verifier("histogram"), workers=_workers())
    gr = golden_rank(matrix, "mean_all", ("random_forgery",))
    rho = {}
    for population in ("empirical", "generic"):
        q = template_quality(matrix, ds, population=population)
        rho[population] = spearman([q[t]["distinctiveness"] for t in gr.templates], gr.ranks)
    record_property("measured", f"empirical {rho['empirical']:.3f}, generic {rho['generic']:.3f}")
    assert abs(rho["empirical"] - 0.78) <= 0.10
    assert abs(rho["generic"] - 0.50) <= 0.10


@acceptance("3d SUSIG gating: FAR-RF 3.05->2.73%, FRR 2.98->0.94% (+- 0.5pp), HTER gain >= 20%")
def test_susig_gating(record_property):
    ds = _manifest("SIGQUALITY_SUSIG", "SUSIG")
    proto = Protocol(0, "first_session", 5, 1, "both")
    report, _ = evaluate(ds, proto, make_verifier("histogram"), fraction=0.1, workers=_workers())
    rows = {r["constraint"]: r for r in report.gating["rows"]}
    base, dist, rep, comb = rows["none"], rows["distinctiveness"], rows["repeatability"], rows["combined"]
    gain = 1 - comb["hter_rf"] / base["hter_rf"]
    record_property("measured", f"FAR-RF {base['far_rf']:.2%}->{dist['far_rf']:.2%}, "
                                f"FRR {base['frr']:.2%}->{rep['frr']:.2%}, HTER gain {gain:.1%}")
    assert abs(base["far_rf"] - 0.0305) <= 0.005 and abs(dist["far_rf"] - 0.0273) <= 0.005
    assert abs(base["frr"] - 0.0298) <= 0.005 and abs(rep["frr"] - 0.0094) <= 0.005
    assert gain >= 0.20


@acceptance("3e CMU keystroke Spearman(repeatability, max genuine rank) 0.89 +- 0.08")
def test_cmu_repeatability_spearman(record_property):
    ds = _manifest("SIGQUALITY_CMU", "CMU keystroke")
    proto = Protocol(200, "ordered", 50, 1, "random_forgery")
    report, _ = evaluate(ds, proto, make_verifier("keystroke_euclidean"), workers=_workers())
    rho = report.spearman["repeatability"]["max_score"]
    record_property("measured", f"rho {rho:.3f}")
    assert abs(rho - 0.89) <= 0.08
