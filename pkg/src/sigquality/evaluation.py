"""Evaluation harness.

Protocol-driven score generation, FAR/FRR curves, EER/HTER, quality-quartile
trade-off curves, golden ranks with Spearman correlation, and template gating.

Scores are dissimilarities: a sample is accepted when ``score <= threshold``.
"""

from __future__ import annotations

import concurrent.futures as cf
import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.stats import rankdata

from .errors import (
    DegenerateInput,
    EmptyScores,
    InsufficientSamples,
    InvalidFraction,
    InvalidParam,
    KTooLarge,
    LengthMismatch,
    NoCrossing,
    OutOfRange,
    TooFewTemplates,
)
from .features import DEFAULT_SPEC, HistogramSpec, extract_features
from .ingest import Dataset
from .quality import (
    PopulationStats,
    assess,
    build_template,
    empirical_population_stats,
    generic_population_stats,
    repeatability,
)
from .verify import IMPOSTER_ROLES, ScoreMatrix, template_id

# ---------------------------------------------------------------------------
# protocol

SELECTIONS = ("random", "first_session", "ordered")
IMPOSTER_SOURCES = ("random_forgery", "skilled_forgery", "both")


@dataclass(frozen=True)
class Protocol:
    """How templates are enrolled and which samples are scored against them.

    ``selection="random"`` draws ``enroll_count`` genuines at random, once per
    repetition. ``selection="first_session"`` enrolls the first
    ``enroll_count`` samples of the first session (all of them when
    ``enroll_count`` is 0) and ignores ``repeat_times``. ``selection="ordered"``
    enrolls the first ``enroll_count`` genuines in session order, whatever
    session they belong to, and also ignores ``repeat_times``. In every case
    the next ``validation_count`` remaining genuines (session order) are kept
    for repeatability and the rest are genuine test samples.

    Random-forgery imposters are other users' genuines, ``imposters_per_user``
    of them drawn per other user (all when None).
    """

    enroll_count: int = 5
    selection: str = "random"
    validation_count: int = 0
    repeat_times: int = 1
    imposter_source: str = "random_forgery"
    imposters_per_user: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.selection not in SELECTIONS:
            raise InvalidParam(f"selection must be one of {SELECTIONS}")
        if self.imposter_source not in IMPOSTER_SOURCES:
            raise InvalidParam(f"imposter_source must be one of {IMPOSTER_SOURCES}")
        if self.enroll_count < 0 or self.validation_count < 0:
            raise InvalidParam("counts must be non-negative")
        if self.selection in ("random", "ordered") and self.enroll_count < 1:
            raise InvalidParam(f"{self.selection} selection needs enroll_count >= 1")
        if self.repeat_times < 1:
            raise InvalidParam("repeat_times must be >= 1")
        if self.imposters_per_user is not None and self.imposters_per_user < 1:
            raise InvalidParam("imposters_per_user must be >= 1")

    @property
    def repeats(self) -> int:
        return self.repeat_times if self.selection == "random" else 1


def _split(user, protocol: Protocol, rng: np.random.Generator):
    """Positions (into ``user.all_genuine()``) of enrolled, validation and test genuines."""
    pool = user.all_genuine()
    sessions = sorted(user.genuine)
    if protocol.selection == "first_session":
        n_first = len(user.genuine[sessions[0]])
        n_enroll = protocol.enroll_count or n_first
        if n_enroll > n_first:
            raise InsufficientSamples(
                f"user {user.user_id}: first session has {n_first} samples, {n_enroll} requested")
        enroll = list(range(n_enroll))
        rest = list(range(n_first, len(pool))) + list(range(n_enroll, n_first))
    elif protocol.selection == "ordered":
        if protocol.enroll_count > len(pool):
            raise InsufficientSamples(
                f"user {user.user_id}: {len(pool)} genuines, {protocol.enroll_count} requested")
        enroll = list(range(protocol.enroll_count))
        rest = list(range(protocol.enroll_count, len(pool)))
    else:
        if protocol.enroll_count + protocol.validation_count > len(pool):
            raise InsufficientSamples(
                f"user {user.user_id}: {len(pool)} genuines, "
                f"{protocol.enroll_count + protocol.validation_count} needed")
        enroll = sorted(rng.choice(len(pool), protocol.enroll_count, replace=False).tolist())
        chosen = set(enroll)
        rest = [i for i in range(len(pool)) if i not in chosen]
    if protocol.validation_count > len(rest):
        raise InsufficientSamples(f"user {user.user_id}: not enough samples left for validation")
    return enroll, rest[:protocol.validation_count], rest[protocol.validation_count:]


# per-process job state; set directly for serial runs, by the pool initializer otherwise
_STATE: dict = {}


def _init_worker(state):
    _STATE.clear()
    _STATE.update(state)


def _score_task(task) -> tuple[str, list[int], list[tuple]]:
    rep, ui = task
    dataset, protocol, verifier, prepared = (_STATE[k] for k in ("dataset", "protocol", "verifier", "prepared"))
    uids = list(dataset.users)
    uid = uids[ui]
    user = dataset.users[uid]
    genuine = user.all_genuine()
    own = prepared[ui]
    rng = np.random.default_rng([protocol.seed, rep, ui])
    enroll, validation, tests = _split(user, protocol, rng)
    model = verifier.enroll([own[0][i] for i in enroll])
    tid = template_id(uid, rep if protocol.repeats > 1 else None)

    rows = []
    for role, positions in (("validation", validation), ("genuine", tests)):
        for i in positions:
            rows.append((uid, genuine[i].session_id, role, role, verifier.score(model, own[0][i])))
    if protocol.imposter_source in ("random_forgery", "both"):
        for vi, vid in enumerate(uids):
            if vi == ui:
                continue
            other = dataset.users[vid].all_genuine()
            pick = range(len(other))
            if protocol.imposters_per_user is not None and protocol.imposters_per_user < len(other):
                pick = np.sort(rng.choice(len(other), protocol.imposters_per_user, replace=False)).tolist()
            for i in pick:
                rows.append((vid, other[i].session_id, "genuine", "random_forgery",
                             verifier.score(model, prepared[vi][0][i])))
    if protocol.imposter_source in ("skilled_forgery", "both"):
        for i, s in enumerate(user.forgeries):
            rows.append((uid, s.session_id, "skilled_forgery", "skilled_forgery",
                         verifier.score(model, own[1][i])))
    return tid, enroll, rows


def run_protocol(dataset: Dataset, protocol: Protocol, verifier, workers: int = 1) -> ScoreMatrix:
    """Enroll every user (per repetition) and score held-out and imposter samples.

    The result is identical for any ``workers`` value. The returned matrix has
    an ``enrollment`` attribute mapping template id to its enrolled samples.
    """
    if verifier.modality != dataset.modality:
        raise InvalidParam(f"{verifier.kind} verifier cannot score {dataset.modality} data")
    if len(dataset.users) < 2:
        raise InsufficientSamples("need at least 2 users")
    if protocol.imposter_source != "random_forgery" and dataset.modality == "keystroke":
        raise InvalidParam("keystroke data has no skilled forgeries")

    prepared = [([verifier.prepare(s) for s in u.all_genuine()],
                 [verifier.prepare(s) for s in u.forgeries]) for u in dataset.users.values()]
    state = {"dataset": dataset, "protocol": protocol, "verifier": verifier, "prepared": prepared}
    tasks = [(rep, ui) for rep in range(protocol.repeats) for ui in range(len(dataset.users))]

    if workers > 1:
        with cf.ProcessPoolExecutor(max_workers=workers, initializer=_init_worker,
                                    initargs=(state,)) as pool:
            results = list(pool.map(_score_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        _init_worker(state)
        try:
            results = [_score_task(t) for t in tasks]
        finally:
            _STATE.clear()

    matrix = ScoreMatrix()
    matrix.enrollment = {}
    uids = list(dataset.users)
    for (rep, ui), (tid, enroll, rows) in zip(tasks, results):
        genuine = dataset.users[uids[ui]].all_genuine()
        matrix.enrollment[tid] = [genuine[i] for i in enroll]
        for test_user, sess, label, role, score in rows:
            matrix.add(tid, uids[ui], test_user, sess, label, score, role=role)
    return matrix


# ---------------------------------------------------------------------------
# error rates

@dataclass(frozen=True, eq=False)
class ErrorCurve:
    thresholds: np.ndarray
    far: np.ndarray
    frr: np.ndarray


def threshold_grid(*score_sets) -> np.ndarray:
    """Every distinct score, the midpoints between neighbours, and one value below the minimum."""
    values = np.unique(np.concatenate([np.asarray(s, dtype=float).ravel() for s in score_sets]))
    if values.size == 0:
        raise EmptyScores("no scores")
    mids = (values[:-1] + values[1:]) / 2
    below = np.nextafter(values[0], -np.inf)
    return np.unique(np.concatenate([[below], values, mids]))


def _accept_rate(scores: np.ndarray, thresholds: np.ndarray) -> np.ndarray:
    s = np.sort(np.asarray(scores, dtype=float))
    return np.searchsorted(s, thresholds, side="right") / s.size


def _reject_rate(scores: np.ndarray, thresholds: np.ndarray) -> np.ndarray:
    # counted directly rather than as 1 - accept, which can be off by an ulp
    s = np.sort(np.asarray(scores, dtype=float))
    return (s.size - np.searchsorted(s, thresholds, side="right")) / s.size


def far_frr(genuine, imposter, thresholds=None) -> ErrorCurve:
    """FAR(t) = share of imposter scores <= t; FRR(t) = share of genuine scores > t."""
    genuine = np.asarray(genuine, dtype=float)
    imposter = np.asarray(imposter, dtype=float)
    if genuine.size == 0 or imposter.size == 0:
        raise EmptyScores("both genuine and imposter scores are required")
    t = threshold_grid(genuine, imposter) if thresholds is None else np.sort(np.asarray(thresholds, dtype=float))
    return ErrorCurve(t, _accept_rate(imposter, t), _reject_rate(genuine, t))


def eer(curve: ErrorCurve) -> tuple[float, float]:
    """Equal error rate by linear interpolation between the bracketing thresholds.

    Returns ``(threshold, rate)``.
    """
    diff = curve.far - curve.frr
    idx = np.flatnonzero(diff >= 0)
    if idx.size == 0:
        raise NoCrossing("FAR stays below FRR on the whole threshold grid")
    k = int(idx[0])
    if diff[k] == 0:
        return float(curve.thresholds[k]), float(curve.far[k])
    if k == 0:
        raise NoCrossing("FAR already exceeds FRR at the lowest threshold")
    d0, d1 = diff[k - 1], diff[k]
    a = -d0 / (d1 - d0)
    t = curve.thresholds[k - 1] + a * (curve.thresholds[k] - curve.thresholds[k - 1])
    rate = curve.far[k - 1] + a * (curve.far[k] - curve.far[k - 1])
    return float(t), float(rate)


def eer_from_scores(genuine, imposter) -> tuple[float, float]:
    return eer(far_frr(genuine, imposter))


def hter(far: float, frr: float) -> float:
    if not (0 <= far <= 1 and 0 <= frr <= 1):
        raise OutOfRange("rates must lie in [0, 1]")
    return (far + frr) / 2


def roc(genuine, imposter) -> list[tuple[float, float]]:
    """``(FAR, 1 - FRR)`` at a threshold below all scores and at every distinct score."""
    genuine = np.asarray(genuine, dtype=float)
    imposter = np.asarray(imposter, dtype=float)
    if genuine.size == 0 or imposter.size == 0:
        raise EmptyScores("both genuine and imposter scores are required")
    values = np.unique(np.concatenate([genuine, imposter]))
    t = np.concatenate([[np.nextafter(values[0], -np.inf)], values])
    far = _accept_rate(imposter, t)
    tar = _accept_rate(genuine, t)
    return list(zip(far.tolist(), tar.tolist()))


# ---------------------------------------------------------------------------
# per-template curves and quartiles

def template_rates(matrix: ScoreMatrix, templates: Sequence[str], roles: Sequence[str],
                   thresholds: np.ndarray, rate: str = "far") -> np.ndarray:
    """``(len(templates), len(thresholds))`` acceptance (far) or rejection (frr) rates.

    Templates without scores for ``roles`` get a NaN row.
    """
    out = np.full((len(templates), len(thresholds)), np.nan)
    for i, tid in enumerate(templates):
        s = matrix.scores(tid, *roles)
        if s.size:
            out[i] = _accept_rate(s, thresholds) if rate == "far" else _reject_rate(s, thresholds)
    return out


def quartile_groups(quality: Mapping[str, float]) -> tuple[list[list[str]], bool]:
    """Split templates into four groups at the quality quartiles.

    A template whose score equals a boundary joins the lower group. Returns the
    groups (lowest quality first) and whether ties collapsed any group.
    """
    if len(quality) < 4:
        raise TooFewTemplates("need at least 4 templates")
    ids = sorted(quality, key=lambda t: (quality[t], t))
    vals = np.array([quality[t] for t in ids], dtype=float)
    q1, q2, q3 = np.quantile(vals, [0.25, 0.5, 0.75])
    group = np.where(vals <= q1, 0, np.where(vals <= q2, 1, np.where(vals <= q3, 2, 3)))
    groups = [[t for t, g in zip(ids, group) if g == k] for k in range(4)]
    return groups, any(not g for g in groups)


@dataclass(frozen=True, eq=False)
class QuartileCurves:
    thresholds: np.ndarray
    groups: list[list[str]]
    curves: np.ndarray  # (4, n_thresholds), NaN rows for empty groups
    pooled: np.ndarray  # rate over all templates' pooled scores
    rate: str
    tied: bool


def quartile_curves(quality: Mapping[str, float], matrix: ScoreMatrix, rate: str = "far",
                    roles: Sequence[str] | None = None, thresholds=None) -> QuartileCurves:
    """Mean per-template FAR (or FRR) per quality quartile across thresholds.

    Each template counts equally within its group.
    """
    if rate not in ("far", "frr"):
        raise InvalidParam("rate must be 'far' or 'frr'")
    roles = tuple(roles or (("random_forgery",) if rate == "far" else ("genuine",)))
    groups, tied = quartile_groups(quality)
    pooled_scores = np.concatenate([matrix.scores(t, *roles) for t in quality])
    if pooled_scores.size == 0:
        raise EmptyScores(f"no {'/'.join(roles)} scores for these templates")
    t = threshold_grid(pooled_scores) if thresholds is None else np.asarray(thresholds, dtype=float)
    curves = np.full((4, t.size), np.nan)
    for k, g in enumerate(groups):
        if g:
            with np.errstate(all="ignore"):
                rows = template_rates(matrix, g, roles, t, rate)
                if np.any(~np.isnan(rows[:, 0])):
                    curves[k] = np.nanmean(rows, axis=0)
    pooled = _accept_rate(pooled_scores, t) if rate == "far" else _reject_rate(pooled_scores, t)
    return QuartileCurves(t, groups, curves, pooled, rate, tied)


# ---------------------------------------------------------------------------
# rank statistics

def spearman(x, y) -> float:
    """Spearman's rho ``1 - 6 sum d^2 / (n (n^2 - 1))`` on average ranks.

    With ties the formula is an approximation of the rank correlation.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise LengthMismatch("x and y must be 1-D and of equal length")
    n = x.size
    if n < 2:
        raise DegenerateInput("need at least 2 observations")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise DegenerateInput("values must be finite")
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise DegenerateInput("a constant variable has no ranking")
    d = rankdata(x) - rankdata(y)
    return 1.0 - 6.0 * float(np.sum(d * d)) / (n * (n * n - 1))


STATISTICS = ("mean_all", "min_score", "mean_k_lowest", "max_score", "mean_k_highest")


def score_statistic(scores, statistic: str, k: int | None = None) -> float:
    s = np.sort(np.asarray(scores, dtype=float))
    if s.size == 0:
        raise EmptyScores("no scores")
    if statistic == "mean_all":
        return float(s.mean())
    if statistic == "min_score":
        return float(s[0])
    if statistic == "max_score":
        return float(s[-1])
    if statistic in ("mean_k_lowest", "mean_k_highest"):
        if k is None or k < 1:
            raise InvalidParam(f"{statistic} needs k >= 1")
        if k > s.size:
            raise KTooLarge(f"k={k} exceeds the {s.size} available scores")
        part = s[:k] if statistic == "mean_k_lowest" else s[-k:]
        return float(part.mean())
    raise InvalidParam(f"unknown statistic {statistic!r}; choose from {STATISTICS}")


@dataclass(frozen=True, eq=False)
class GoldenRank:
    statistic: str
    templates: list[str]
    values: np.ndarray
    ranks: np.ndarray

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.templates, self.ranks.tolist()))


def golden_rank(matrix: ScoreMatrix, statistic: str = "mean_all", roles: Sequence[str] = ("random_forgery",),
                k: int | None = None, templates: Sequence[str] | None = None,
                descending: bool | None = None) -> GoldenRank:
    """Rank templates by a statistic of their scores (average ranks on ties).

    Rank 1 is the worst template. For imposter roles that is the lowest
    statistic (forgeries look most genuine); for genuine roles it is the
    highest (genuines look least genuine), unless ``descending`` overrides.
    """
    templates = list(templates if templates is not None else matrix.templates())
    if not templates:
        raise EmptyScores("no templates")
    vals = []
    for t in templates:
        s = matrix.scores(t, *roles)
        if s.size == 0:
            raise EmptyScores(f"template {t} has no {'/'.join(roles)} scores")
        vals.append(score_statistic(s, statistic, k))
    vals = np.array(vals)
    if descending is None:
        descending = not any(r in IMPOSTER_ROLES for r in roles)
    ranks = rankdata(-vals if descending else vals)
    return GoldenRank(statistic, templates, vals, ranks)


# ---------------------------------------------------------------------------
# gating

def _n_discard(fraction: float, n: int) -> int:
    if not 0 < fraction < 1:
        raise InvalidFraction("fraction must lie strictly between 0 and 1")
    # guard against 0.29 * 100 == 28.999...
    return int(math.floor(fraction * n + 1e-9))


def gate_templates(quality: Mapping[str, float], fraction: float = 0.1) -> tuple[list[str], list[str]]:
    """Discard the ``floor(fraction * n)`` lowest-quality templates.

    Ties are broken by template id. Returns ``(kept, discarded)``, each in
    ascending quality order.
    """
    order = sorted(quality, key=lambda t: (quality[t], t))
    n = _n_discard(fraction, len(order))
    return order[n:], order[:n]


def gate_combined(qualities: Mapping[str, Mapping[str, float]],
                  fraction: float = 0.1) -> tuple[list[str], list[str]]:
    """Keep templates that fall in none of the metrics' lowest fractions."""
    if not qualities:
        raise InvalidParam("no quality metrics given")
    discarded: set[str] = set()
    ids = None
    for q in qualities.values():
        ids = sorted(q) if ids is None else ids
        discarded.update(gate_templates(q, fraction)[1])
    return [t for t in ids if t not in discarded], sorted(discarded)


def rates_at(matrix: ScoreMatrix, templates: Sequence[str], threshold: float) -> dict[str, float]:
    """Mean per-template FAR-RF, FAR-SF and FRR at a fixed threshold."""
    t = np.array([threshold])
    out = {}
    for key, roles, rate in (("far_rf", ("random_forgery",), "far"),
                             ("far_sf", ("skilled_forgery",), "far"),
                             ("frr", ("genuine",), "frr")):
        r = template_rates(matrix, templates, roles, t, rate)[:, 0]
        r = r[~np.isnan(r)]
        out[key] = float(r.mean()) if r.size else None
    return out


def gating_table(matrix: ScoreMatrix, qualities: Mapping[str, Mapping[str, float]],
                 fraction: float = 0.1, threshold: float | None = None) -> dict:
    """Error rates before and after discarding low-quality templates.

    The decision threshold defaults to the random-forgery EER threshold over
    all templates' pooled scores and stays fixed for every row.
    """
    templates = matrix.templates()
    if threshold is None:
        threshold = eer_from_scores(matrix.pooled("genuine"), matrix.pooled("random_forgery"))[0]

    def row(name, kept):
        r = rates_at(matrix, kept, threshold)
        r["constraint"] = name
        r["n_templates"] = len(kept)
        for imp in ("rf", "sf"):
            far = r[f"far_{imp}"]
            r[f"hter_{imp}"] = None if far is None or r["frr"] is None else hter(far, r["frr"])
        return r

    rows = [row("none", templates)]
    discarded = {}
    for name, q in qualities.items():
        kept, dropped = gate_templates(q, fraction)
        discarded[name] = dropped
        rows.append(row(name, kept))
    combined = None
    if len(qualities) > 1:
        kept, dropped = gate_combined(qualities, fraction)
        discarded["combined"] = dropped
        combined = kept
        rows.append(row("combined", kept))
    return {"threshold": threshold, "fraction": fraction, "rows": rows,
            "discarded": discarded, "good_templates": combined}


# ---------------------------------------------------------------------------
# end-to-end experiment

@dataclass
class EvalReport:
    verifier: str
    protocol: dict
    n_templates: int
    eer: dict = field(default_factory=dict)
    quality: dict = field(default_factory=dict)
    spearman: dict = field(default_factory=dict)
    quartiles: dict = field(default_factory=dict)
    gating: dict | None = None
    roc: dict = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return _jsonable({
            "verifier": self.verifier, "protocol": self.protocol, "n_templates": self.n_templates,
            "eer": self.eer, "quality": self.quality, "spearman": self.spearman,
            "quartiles": {k: {"groups": v.groups, "tied": v.tied, "rate": v.rate,
                              "thresholds": v.thresholds, "curves": v.curves, "pooled": v.pooled}
                          for k, v in self.quartiles.items()},
            "gating": self.gating, "roc": self.roc, "warnings": self.warnings,
        })

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else (None if math.isnan(v) else ("inf" if v > 0 else "-inf"))
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def template_quality(matrix: ScoreMatrix, dataset: Dataset, spec: HistogramSpec = DEFAULT_SPEC,
                     population: str | PopulationStats = "generic", L_pop: int = 147,
                     include_pressure: bool = True) -> dict[str, dict]:
    """Quality reports (as dicts) for every template of a protocol run.

    Distinctiveness and complexity come from the enrolled samples' features;
    repeatability from the template's validation scores (absent when none).
    Keystroke templates only get repeatability.
    """
    out = {}
    if dataset.modality == "signature":
        feats = {}

        def fv(s):
            if id(s) not in feats:
                feats[id(s)] = extract_features(s, spec, pressure_max=dataset.pressure_max)
            return feats[id(s)]

        if isinstance(population, PopulationStats):
            pop = population
        elif population == "generic":
            use_p = include_pressure and all(s.has_pressure for u in dataset.users.values()
                                             for s in u.all_genuine())
            pop = generic_population_stats(spec, L_pop, with_pressure=use_p)
        elif population == "empirical":
            pop = empirical_population_stats(
                [fv(s) for u in dataset.users.values() for s in u.all_genuine()], include_pressure)
        else:
            raise InvalidParam("population must be 'generic', 'empirical' or PopulationStats")

    for tid in matrix.templates():
        val = matrix.scores(tid, "validation")
        if dataset.modality == "keystroke":
            out[tid] = {"repeatability": repeatability(val) if val.size else None}
            continue
        template = build_template([fv(s) for s in matrix.enrollment[tid]], tid,
                                  include_pressure=include_pressure)
        rep = assess(template, pop, val if val.size else None)
        d = rep.to_dict()
        d.pop("per_feature_d")
        out[tid] = d
    return out


def quality_metrics(quality: Mapping[str, Mapping]) -> dict[str, dict[str, float]]:
    """Per-metric ``{template: value}`` maps for metrics every template has a finite value for."""
    metrics = {}
    for name in ("distinctiveness", "complexity", "repeatability"):
        vals = {t: q.get(name) for t, q in quality.items()}
        if vals and all(isinstance(v, (int, float)) and math.isfinite(v) for v in vals.values()):
            metrics[name] = {t: float(v) for t, v in vals.items()}
    return metrics


# metric -> (score role it should predict, error rate)
METRIC_TARGETS = {
    "distinctiveness": ("random_forgery", "far"),
    "complexity": ("skilled_forgery", "far"),
    "repeatability": ("genuine", "frr"),
}


def analyse_scores(matrix: ScoreMatrix, metrics: Mapping[str, Mapping[str, float]] | None = None,
                   fraction: float = 0.1, report: EvalReport | None = None) -> EvalReport:
    """EERs, quartile curves, golden-rank correlations, gating and ROC for a score matrix.

    ``metrics`` maps metric name to per-template quality; analyses needing it
    are skipped when it is absent.
    """
    if report is None:
        report = EvalReport("external", {}, len(matrix.templates()))
    metrics = dict(metrics or {})
    gen = matrix.pooled("genuine")

    for imp in IMPOSTER_ROLES:
        scores = matrix.pooled(imp)
        if gen.size and scores.size:
            try:
                t, r = eer_from_scores(gen, scores)
                report.eer[imp] = {"threshold": t, "rate": r}
            except NoCrossing:
                report.warnings.append(f"no EER crossing for {imp}")

    for name, q in metrics.items():
        role, rate = METRIC_TARGETS[name]
        q = {t: v for t, v in q.items() if matrix.scores(t, role).size}
        if not q:
            continue
        try:
            report.quartiles[name] = quartile_curves(q, matrix, rate, (role,))
        except (TooFewTemplates, EmptyScores) as exc:
            report.warnings.append(f"quartiles for {name}: {exc}")
        if rate == "far":
            stats = [("mean_all", None), ("min_score", None), ("mean_k_lowest", 3)]
        else:
            stats = [("max_score", None), ("mean_k_highest", 5), ("mean_all", None)]
        table = {}
        for stat, k in stats:
            key = stat if k is None else f"{stat}_{k}"
            try:
                gr = golden_rank(matrix, stat, (role,), k=k, templates=list(q))
                table[key] = spearman([q[t] for t in gr.templates], gr.ranks)
            except (KTooLarge, EmptyScores, DegenerateInput) as exc:
                report.warnings.append(f"spearman {name}/{key}: {exc}")
        report.spearman[name] = table

    if metrics and matrix.pooled("random_forgery").size and gen.size:
        try:
            report.gating = gating_table(matrix, metrics, fraction)
        except (NoCrossing, InvalidFraction) as exc:
            report.warnings.append(f"gating: {exc}")
        good = report.gating["good_templates"] if report.gating else None
        if good is not None:
            bad = sorted(set(matrix.templates()) - set(good))
            for label, ids in (("good", good), ("bad", bad)):
                g = np.concatenate([matrix.scores(t, "genuine") for t in ids] or [np.array([])])
                i = np.concatenate([matrix.scores(t, "random_forgery") for t in ids] or [np.array([])])
                if g.size and i.size:
                    entry = {"points": roc(g, i)}
                    try:
                        entry["eer"] = eer_from_scores(g, i)[1]
                    except NoCrossing:
                        entry["eer"] = None
                        report.warnings.append(f"no EER crossing for {label} templates")
                    report.roc[label] = entry
    return report


def evaluate(dataset: Dataset, protocol: Protocol, verifier, *, spec: HistogramSpec = DEFAULT_SPEC,
             population: str = "generic", L_pop: int = 147, fraction: float = 0.1,
             workers: int = 1) -> tuple[EvalReport, ScoreMatrix]:
    """Run a protocol, score template quality, and analyse the scores."""
    matrix = run_protocol(dataset, protocol, verifier, workers=workers)
    report = EvalReport(verifier.kind, dict(protocol.__dict__), len(matrix.templates()))
    report.quality = template_quality(matrix, dataset, spec, population, L_pop)
    analyse_scores(matrix, quality_metrics(report.quality), fraction, report)
    return report, matrix


# ---------------------------------------------------------------------------
# CSV output

def curves_csv(quartiles: Mapping[str, QuartileCurves]) -> str:
    """Long format ``metric,rate,group,threshold,value``; group ``pooled`` is all templates."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["metric", "rate", "group", "threshold", "value"])
    for name, qc in quartiles.items():
        for g in range(4):
            for t, v in zip(qc.thresholds, qc.curves[g]):
                w.writerow([name, qc.rate, g + 1, repr(float(t)), "" if np.isnan(v) else repr(float(v))])
        for t, v in zip(qc.thresholds, qc.pooled):
            w.writerow([name, qc.rate, "pooled", repr(float(t)), repr(float(v))])
    return buf.getvalue()


def roc_csv(roc_sets: Mapping[str, dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["set", "far", "tar"])
    for name, entry in roc_sets.items():
        for far, tar in entry["points"]:
            w.writerow([name, repr(far), repr(tar)])
    return buf.getvalue()


def quality_csv(quality: Mapping[str, dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    cols = ["distinctiveness", "complexity", "emd", "inv_dispersion", "K", "repeatability"]
    w.writerow(["template", *cols, "flags"])
    for tid, q in quality.items():
        w.writerow([tid, *("" if q.get(c) is None else q.get(c) for c in cols),
                    ";".join(q.get("flags", []))])
    return buf.getvalue()


def gating_csv(gating: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    cols = ["constraint", "n_templates", "far_rf", "far_sf", "frr", "hter_rf", "hter_sf"]
    w.writerow(cols)
    for r in gating["rows"]:
        w.writerow(["" if r[c] is None else r[c] for c in cols])
    return buf.getvalue()
