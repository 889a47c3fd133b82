"""Dissimilarity back-ends and the score matrix they produce.

Three verifiers are provided, each as a small class with ``prepare`` (per
sample preprocessing, done once), ``enroll`` and ``score``:

* :class:`HistogramVerifier` -- Manhattan distance between quantised mean
  feature vector and quantised test features;
* :class:`DTWVerifier` -- DTW over (x, y, dx, dy) frames, score normalised by
  the enrolled samples' own mutual DTW distance;
* :class:`KeystrokeVerifier` -- squared Euclidean distance to the mean timing
  vector.

Lower scores mean more similar. Scores computed elsewhere (an HMM system, for
instance) enter through :meth:`ScoreMatrix.from_csv`.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import FeatureCountMismatch, InvalidParam, SampleTooShort, TooFewSamples
from .features import DEFAULT_SPEC, FeatureVector, HistogramSpec, extract_features
from .ingest import DEFAULT_PRESSURE_MAX, KeystrokeSample, SignatureSample
from .quality import Q_FLOOR, Template, build_template

DTW_DENOM_FLOOR = 1e-9


# ---------------------------------------------------------------------------
# histogram verifier

def histogram_enroll(features: Sequence[FeatureVector], *, include_pressure: bool = True,
                     q_floor: float = Q_FLOOR) -> Template:
    """Template whose quantisation vector is the per-feature sample std."""
    return build_template(features, include_pressure=include_pressure, q_floor=q_floor)


def histogram_score(template: Template, test: FeatureVector) -> float:
    if template.has_pressure and not test.has_pressure:
        raise FeatureCountMismatch("template uses pressure bins the test sample lacks")
    f = test.as_array(include_pressure=template.has_pressure)
    if f.size != template.n_features:
        raise FeatureCountMismatch(f"test has {f.size} features, template {template.n_features}")
    return math.fsum(np.abs(template.mu / template.q - f / template.q))


# ---------------------------------------------------------------------------
# DTW

def dtw_frames(sample: SignatureSample) -> np.ndarray:
    """``(n, 4)`` frames ``(x - x0, y - y0, dx, dy)`` over pen-down points.

    Derivatives are forward differences; the last frame repeats the previous
    derivative.
    """
    down = np.asarray(sample.pen_down)
    x = sample.x[down].astype(float)
    y = sample.y[down].astype(float)
    if x.size < 2:
        raise SampleTooShort("DTW needs at least 2 pen-down points")
    dx = np.diff(x)
    dy = np.diff(y)
    dx = np.append(dx, dx[-1])
    dy = np.append(dy, dy[-1])
    return np.column_stack([x - x[0], y - y[0], dx, dy])


def dtw_path_cost(A: np.ndarray, B: np.ndarray) -> float:
    """Minimal accumulated Euclidean frame cost, steps (1,0), (0,1), (1,1), no window.

    The recurrence is evaluated one anti-diagonal at a time; ``S[k, i]`` holds
    the local cost of cell ``(i, k - i)`` (1-based), ``inf`` off the grid.
    """
    n, m = len(A), len(B)
    C = np.sqrt(((A[:, None, :] - B[None, :, :]) ** 2).sum(axis=-1))
    K = n + m + 1
    rows = np.arange(1, n + 1)
    cols = np.arange(K)[:, None] - rows[None, :]
    valid = (cols >= 1) & (cols <= m)
    S = np.full((K, n + 1), np.inf)
    S[:, 1:][valid] = C[np.broadcast_to(rows - 1, cols.shape)[valid], cols[valid] - 1]

    prev2 = np.full(n + 1, np.inf)
    prev2[0] = 0.0
    prev1 = np.full(n + 1, np.inf)
    for k in range(2, K):
        cur = np.empty(n + 1)
        cur[0] = np.inf
        np.minimum(prev1[:-1], prev1[1:], out=cur[1:])
        np.minimum(cur[1:], prev2[:-1], out=cur[1:])
        cur += S[k]
        prev2, prev1 = prev1, cur
    return float(prev1[n])


def dtw_frames_distance(A: np.ndarray, B: np.ndarray) -> float:
    return dtw_path_cost(A, B) / min(len(A), len(B))


def dtw_distance(a: SignatureSample, b: SignatureSample) -> float:
    """DTW cost between two signatures divided by the shorter length."""
    return dtw_frames_distance(dtw_frames(a), dtw_frames(b))


@dataclass(frozen=True, eq=False)
class DTWModel:
    frames: tuple[np.ndarray, ...]
    denominator: float
    degenerate: bool


def dtw_enroll(frames: Sequence[np.ndarray]) -> DTWModel:
    frames = tuple(frames)
    if len(frames) < 2:
        raise TooFewSamples("DTW enrollment needs at least 2 samples")
    pair = [dtw_frames_distance(a, b) for a, b in combinations(frames, 2)]
    denom = math.fsum(pair) / len(pair)
    degenerate = denom <= DTW_DENOM_FLOOR
    return DTWModel(frames, max(denom, DTW_DENOM_FLOOR), degenerate)


def dtw_model_score(model: DTWModel, test: np.ndarray) -> float:
    num = math.fsum(dtw_frames_distance(e, test) for e in model.frames) / len(model.frames)
    return num / model.denominator


def dtw_score(enrolled: Sequence[SignatureSample], test: SignatureSample) -> float:
    """Mean DTW distance to the enrolled samples over their mean mutual distance."""
    model = dtw_enroll([dtw_frames(s) for s in enrolled])
    return dtw_model_score(model, dtw_frames(test))


# ---------------------------------------------------------------------------
# keystroke

def keystroke_score(template_mean, test) -> float:
    """Squared Euclidean distance between mean timing vector and a test vector."""
    t = np.asarray(template_mean, dtype=float)
    f = np.asarray(test.features if isinstance(test, KeystrokeSample) else test, dtype=float)
    if t.shape != f.shape:
        raise FeatureCountMismatch(f"template has {t.size} features, test {f.size}")
    return math.fsum((t - f) ** 2)


# ---------------------------------------------------------------------------
# verifier objects used by the evaluation protocol

class HistogramVerifier:
    kind = "histogram"
    modality = "signature"

    def __init__(self, spec: HistogramSpec = DEFAULT_SPEC, pressure_max: int = DEFAULT_PRESSURE_MAX,
                 include_pressure: bool = True, q_floor: float = Q_FLOOR):
        self.spec = spec
        self.pressure_max = pressure_max
        self.include_pressure = include_pressure
        self.q_floor = q_floor

    def prepare(self, sample: SignatureSample) -> FeatureVector:
        return extract_features(sample, self.spec, pressure_max=self.pressure_max)

    def enroll(self, prepared: Sequence[FeatureVector]) -> Template:
        return histogram_enroll(prepared, include_pressure=self.include_pressure, q_floor=self.q_floor)

    def score(self, model: Template, prepared: FeatureVector) -> float:
        return histogram_score(model, prepared)


class DTWVerifier:
    kind = "dtw"
    modality = "signature"

    def prepare(self, sample: SignatureSample) -> np.ndarray:
        return dtw_frames(sample)

    def enroll(self, prepared: Sequence[np.ndarray]) -> DTWModel:
        return dtw_enroll(prepared)

    def score(self, model: DTWModel, prepared: np.ndarray) -> float:
        return dtw_model_score(model, prepared)


class KeystrokeVerifier:
    kind = "keystroke_euclidean"
    modality = "keystroke"

    def prepare(self, sample: KeystrokeSample) -> np.ndarray:
        return np.asarray(sample.features, dtype=float)

    def enroll(self, prepared: Sequence[np.ndarray]) -> np.ndarray:
        if len(prepared) < 1:
            raise TooFewSamples("keystroke enrollment needs at least 1 sample")
        return np.mean(np.vstack(prepared), axis=0)

    def score(self, model: np.ndarray, prepared: np.ndarray) -> float:
        return keystroke_score(model, prepared)


VERIFIERS = {
    "histogram": HistogramVerifier,
    "dtw": DTWVerifier,
    "keystroke_euclidean": KeystrokeVerifier,
}


def make_verifier(kind: str, **kwargs):
    try:
        cls = VERIFIERS[kind]
    except KeyError:
        raise InvalidParam(f"unknown verifier {kind!r}; choose from {sorted(VERIFIERS)}") from None
    return cls(**kwargs)


# ---------------------------------------------------------------------------
# score matrix

ROLES = ("genuine", "validation", "random_forgery", "skilled_forgery")
IMPOSTER_ROLES = ("random_forgery", "skilled_forgery")


class ScoreRecord(NamedTuple):
    template: str
    target_user: str
    test_user: str
    test_session: int
    test_label: str
    role: str
    score: float


def template_id(user_id: str, repeat: int | None = None) -> str:
    return user_id if repeat is None else f"{user_id}@{repeat}"


def _role_for(test_label: str, test_user: str, target_user: str) -> str:
    if test_label == "skilled_forgery":
        return "skilled_forgery"
    if test_user != target_user:
        return "random_forgery"
    if test_label == "validation":
        return "validation"
    if test_label == "genuine":
        return "genuine"
    raise InvalidParam(f"unknown test label {test_label!r}")


class ScoreMatrix:
    """Long-form (template, test sample) -> score table.

    Roles: ``genuine`` (held-out genuine of the template's user),
    ``validation`` (genuines reserved for repeatability), ``random_forgery``
    (another user's genuine) and ``skilled_forgery`` (imitation of the
    template's user).

    CSV wire format, one row per score::

        test_user,test_session,test_label,target_user,score

    ``test_label`` is ``genuine``, ``validation`` or ``skilled_forgery``; a
    genuine of a different user is a random forgery. When several
    enrollments of the same user exist, ``target_user`` carries ``user@rep``.
    """

    CSV_HEADER = ("test_user", "test_session", "test_label", "target_user", "score")

    def __init__(self, records: Iterable[ScoreRecord] = ()):
        self.records: list[ScoreRecord] = list(records)
        self._index: dict[str, dict[str, list[float]]] | None = None

    def __len__(self) -> int:
        return len(self.records)

    def add(self, template: str, target_user: str, test_user: str, test_session: int,
            test_label: str, score: float, role: str | None = None) -> None:
        if not (score >= 0 and math.isfinite(score)):
            raise InvalidParam(f"scores must be finite and non-negative, got {score!r}")
        role = role or _role_for(test_label, test_user, target_user)
        self.records.append(ScoreRecord(template, target_user, test_user, int(test_session),
                                        test_label, role, float(score)))
        self._index = None

    def extend(self, other: ScoreMatrix) -> None:
        self.records.extend(other.records)
        self._index = None

    def _build(self) -> dict[str, dict[str, list[float]]]:
        if self._index is None:
            idx: dict[str, dict[str, list[float]]] = {}
            for r in self.records:
                idx.setdefault(r.template, {}).setdefault(r.role, []).append(r.score)
            self._index = idx
        return self._index

    def templates(self) -> list[str]:
        return list(self._build())

    def template_user(self, template: str) -> str:
        return template.split("@", 1)[0]

    def scores(self, template: str, *roles: str) -> np.ndarray:
        by_role = self._build().get(template, {})
        return np.array([s for role in roles for s in by_role.get(role, [])], dtype=float)

    def pooled(self, *roles: str) -> np.ndarray:
        return np.array([r.score for r in self.records if r.role in roles], dtype=float)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.CSV_HEADER)
        for r in self.records:
            w.writerow([r.test_user, r.test_session, r.test_label, r.template, repr(r.score)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> ScoreMatrix:
        reader = csv.reader(io.StringIO(text))
        header = tuple(c.strip() for c in next(reader, ()))
        if header != cls.CSV_HEADER:
            raise InvalidParam(f"score CSV header must be {','.join(cls.CSV_HEADER)}")
        out = cls()
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 5:
                raise InvalidParam(f"line {lineno}: expected 5 columns, got {len(row)}")
            test_user, session, label, target, score = (c.strip() for c in row)
            try:
                out.add(target, out.template_user(target), test_user, int(session), label, float(score))
            except ValueError as exc:
                raise InvalidParam(f"line {lineno}: {exc}") from None
        return out
