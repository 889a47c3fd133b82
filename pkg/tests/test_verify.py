import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sigquality import (
    ScoreMatrix,
    SignatureSample,
    dtw_distance,
    dtw_score,
    extract_features,
    histogram_enroll,
    histogram_score,
    keystroke_score,
    make_verifier,
)
from sigquality.errors import FeatureCountMismatch, InvalidParam, SampleTooShort, TooFewSamples
from sigquality.features import FeatureVector
from sigquality.quality import Q_FLOOR
from sigquality.verify import dtw_enroll, dtw_frames, dtw_frames_distance, template_id
from tests.conftest import random_sample
from tests.oracles import brute_dtw, naive_frames, naive_histogram_score, naive_keystroke


def flat_fv(values, m=2, n=4):
    """FeatureVector whose flat layout is ``values`` (length 2 * m * n, no pressure)."""
    v = np.asarray(values, dtype=float)
    k = m * n
    return FeatureVector(v[:k].reshape(m, n), v[k:].reshape(m, n), None, None, 1, 1)


def tiny(xs, ys):
    return SignatureSample(xs, ys, list(range(len(xs))))


# ---------------------------------------------------------------------------
# histogram verifier

def test_enroll_identical_vectors_uses_floor():
    f = flat_fv(np.linspace(0, 1, 16))
    t = histogram_enroll([f, f, f])
    assert np.all(t.q == Q_FLOOR)


def test_enroll_two_values():
    a = np.zeros(16)
    b = np.zeros(16)
    a[0], b[0] = 0.2, 0.4
    t = histogram_enroll([flat_fv(a), flat_fv(b)])
    assert t.mu[0] == pytest.approx(0.3)
    assert t.q[0] == pytest.approx(math.sqrt(0.02))
    assert t.q[0] == pytest.approx(0.1414, abs=1e-4)


def test_enroll_order_does_not_matter(rng):
    feats = [extract_features(random_sample(rng)) for _ in range(5)]
    a = histogram_enroll(feats)
    b = histogram_enroll(feats[::-1])
    assert np.allclose(a.mu, b.mu, rtol=0, atol=1e-15) and np.allclose(a.q, b.q, rtol=0, atol=1e-15)


def test_enroll_needs_two():
    with pytest.raises(TooFewSamples):
        histogram_enroll([flat_fv(np.zeros(16))])


def test_score_of_mean_is_zero(rng):
    feats = [extract_features(random_sample(rng)) for _ in range(4)]
    t = histogram_enroll(feats)
    k = t.sa_size
    mean = FeatureVector(t.mu[:k].reshape(4, 16), t.mu[k:2 * k].reshape(4, 16),
                         t.mu[2 * k:2 * k + 16], t.mu[2 * k + 16:], 1, 1)
    assert histogram_score(t, mean) == 0.0


def test_score_one_quantisation_step():
    rows = [np.zeros(16), np.zeros(16)]
    rows[0][3], rows[1][3] = 0.25, 0.75
    t = histogram_enroll([flat_fv(r) for r in rows])
    test = t.mu.copy()
    test[3] += t.q[3]
    assert histogram_score(t, flat_fv(test)) == pytest.approx(1.0, abs=1e-12)


def test_score_feature_count_mismatch(rng):
    t = histogram_enroll([extract_features(random_sample(rng)) for _ in range(3)])
    with pytest.raises(FeatureCountMismatch):
        histogram_score(t, extract_features(random_sample(rng, pressure=False)))
    with pytest.raises(FeatureCountMismatch):
        histogram_score(t, flat_fv(np.zeros(16)))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 7))
def test_score_matches_naive_oracle(seed, n):
    rng = np.random.default_rng(seed)
    feats = [extract_features(random_sample(rng)) for _ in range(n)]
    test = extract_features(random_sample(rng))
    t = histogram_enroll(feats)
    assert histogram_score(t, test) == naive_histogram_score([f.as_array() for f in feats], test.as_array())


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_score_invariant_to_feature_permutation(seed):
    rng = np.random.default_rng(seed)
    rows = rng.dirichlet(np.ones(16), size=5)
    test = rng.dirichlet(np.ones(16))
    perm = rng.permutation(16)
    a = histogram_score(histogram_enroll([flat_fv(r) for r in rows]), flat_fv(test))
    b = histogram_score(histogram_enroll([flat_fv(r[perm]) for r in rows]), flat_fv(test[perm]))
    assert a == b


# ---------------------------------------------------------------------------
# DTW

def test_frames_layout():
    s = tiny([3, 5, 9], [1, 1, 4])
    assert dtw_frames(s).tolist() == [[0, 0, 2, 0], [2, 0, 4, 3], [6, 3, 4, 3]]
    assert dtw_frames(s).tolist() == [list(map(float, f)) for f in naive_frames([3, 5, 9], [1, 1, 4])]


def test_frames_skip_pen_up():
    s = SignatureSample([0, 50, 1, 2], [0, 50, 0, 0], [0, 1, 2, 3], pen_down=[True, False, True, True])
    assert dtw_frames(s)[:, 0].tolist() == [0, 1, 2]
    with pytest.raises(SampleTooShort):
        dtw_frames(SignatureSample([0, 1], [0, 0], [0, 1], pen_down=[True, False]))


def test_dtw_identity_and_symmetry(rng):
    a, b = random_sample(rng), random_sample(rng)
    assert dtw_distance(a, a) == 0.0
    assert dtw_distance(a, b) == dtw_distance(b, a)
    assert dtw_distance(a, a.transformed(120, -40)) == 0.0


def test_dtw_zero_only_for_equal_translated_geometry(rng):
    a = random_sample(rng, 20, lifts=False)
    x = a.x.copy()
    x[7] += 1
    b = SignatureSample(x, a.y, a.t)
    assert dtw_distance(a, b) > 0


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_dtw_matches_path_enumeration(seed):
    rng = np.random.default_rng(seed)
    n, m = rng.integers(2, 6, size=2)
    xa, ya, xb, yb = (rng.integers(-9, 10, size=k).tolist() for k in (n, n, m, m))
    A, B = naive_frames(xa, ya), naive_frames(xb, yb)
    got = dtw_distance(tiny(xa, ya), tiny(xb, yb))
    assert got == pytest.approx(brute_dtw(A, B), rel=0, abs=1e-9)


def test_dtw_score_hand_computed():
    enrolled = [tiny([0, 1, 2], [0, 0, 1]), tiny([0, 2, 3, 3], [0, 0, 1, 2]), tiny([0, 1], [0, 1])]
    test = tiny([0, 1, 1, 2], [0, 1, 2, 2])
    fr = [naive_frames(s.x.tolist(), s.y.tolist()) for s in enrolled]
    ft = naive_frames(test.x.tolist(), test.y.tolist())
    num = sum(brute_dtw(e, ft) for e in fr) / 3
    den = sum(brute_dtw(a, b) for a, b in itertools.combinations(fr, 2)) / 3
    assert dtw_score(enrolled, test) == pytest.approx(num / den, abs=1e-12)


def test_dtw_score_zero_numerator_and_degenerate_enrollment():
    base = tiny([0, 3, 4, 8], [0, 1, 5, 5])
    enrolled = [base.transformed(dx, 2 * dx) for dx in (0, 10, 20)]
    model = dtw_enroll([dtw_frames(s) for s in enrolled])
    assert model.degenerate and model.denominator == 1e-9
    assert dtw_score(enrolled, base.transformed(-7, 3)) == 0.0


def test_dtw_score_ratio_one():
    # with two enrolled samples a test equal to one of them scores d/2 over d
    a, b = tiny([0, 1, 2, 3], [0, 0, 0, 0]), tiny([0, 1, 3, 6], [0, 1, 1, 0])
    assert dtw_score([a, b], a) == pytest.approx(0.5)
    assert dtw_frames_distance(dtw_frames(a), dtw_frames(b)) > 0


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_dtw_score_permutation_invariant(seed):
    rng = np.random.default_rng(seed)
    enrolled = [random_sample(rng, int(rng.integers(5, 30))) for _ in range(4)]
    test = random_sample(rng, 20)
    a = dtw_score(enrolled, test)
    assert dtw_score(enrolled[::-1], test) == pytest.approx(a, rel=1e-12)
    assert a >= 0


def test_dtw_score_needs_two_enrolled(rng):
    with pytest.raises(TooFewSamples):
        dtw_score([random_sample(rng)], random_sample(rng))


# ---------------------------------------------------------------------------
# keystroke

def test_keystroke_examples():
    mean = np.linspace(0.05, 0.3, 31)
    assert keystroke_score(mean, mean) == 0.0
    off = mean.copy()
    off[4] += 0.1
    assert keystroke_score(mean, off) == pytest.approx(0.01, abs=1e-15)
    with pytest.raises(FeatureCountMismatch):
        keystroke_score(mean, mean[:30])


@given(st.lists(st.floats(-1, 1), min_size=31, max_size=31),
       st.lists(st.floats(-1, 1), min_size=31, max_size=31))
def test_keystroke_oracle_and_symmetry(u, v):
    assert keystroke_score(u, v) == naive_keystroke(u, v)
    assert keystroke_score(u, v) == keystroke_score(v, u)


# ---------------------------------------------------------------------------
# verifier registry and score matrices

def test_make_verifier():
    assert make_verifier("dtw").kind == "dtw"
    assert make_verifier("histogram").modality == "signature"
    assert make_verifier("keystroke_euclidean").modality == "keystroke"
    with pytest.raises(InvalidParam):
        make_verifier("hmm")


def test_score_matrix_roles_and_csv():
    m = ScoreMatrix()
    m.add(template_id("a", 0), "a", "a", 2, "genuine", 1.5)
    m.add(template_id("a", 0), "a", "a", 2, "validation", 2.5)
    m.add(template_id("a", 0), "a", "b", 1, "genuine", 7.0)
    m.add(template_id("a", 0), "a", "a", 0, "skilled_forgery", 4.0)
    assert [r.role for r in m.records] == ["genuine", "validation", "random_forgery", "skilled_forgery"]
    assert m.scores("a@0", "random_forgery").tolist() == [7.0]
    back = ScoreMatrix.from_csv(m.to_csv())
    assert back.records == m.records
    assert back.to_csv() == m.to_csv()


def test_score_matrix_rejects_bad_input():
    m = ScoreMatrix()
    with pytest.raises(InvalidParam):
        m.add("a", "a", "a", 1, "genuine", -1.0)
    with pytest.raises(InvalidParam):
        m.add("a", "a", "a", 1, "genuine", math.inf)
    with pytest.raises(InvalidParam):
        ScoreMatrix.from_csv("a,b\n")
    with pytest.raises(InvalidParam):
        ScoreMatrix.from_csv("test_user,test_session,test_label,target_user,score\nu,1,genuine,v,x\n")
