"""Template quality: distinctiveness, complexity and repeatability.

All three measures work on fixed-length histogram features of the enrolled
samples (see :mod:`sigquality.features`); repeatability additionally needs the
dissimilarity scores a verifier assigns to validation genuines.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import (
    DegenerateSpread,
    EmptyValidationSet,
    FeatureCountMismatch,
    InvalidParam,
    NoEligibleFeatures,
    TooFewSamples,
)
from .features import DEFAULT_SPEC, FeatureVector, HistogramSpec, feature_matrix

DEFAULT_L_POP = 147
DISPERSION_CLAMP = 1e3
Q_FLOOR = 1e-6


@dataclass(frozen=True, eq=False)
class Template:
    """Statistics of a user's enrolled feature vectors.

    ``sigma`` and ``q`` use the sample standard deviation (divisor ``E - 1``);
    ``q`` is ``sigma`` floored at ``q_floor`` and is what the histogram
    verifier divides by. ``h_min`` is the bin-wise minimum of the enrolled
    speed-angle histograms, shape ``(2, M, N_a)``.
    """

    user_id: str
    enrolled: tuple[FeatureVector, ...]
    matrix: np.ndarray
    mu: np.ndarray
    sigma: np.ndarray
    h_min: np.ndarray
    q: np.ndarray
    has_pressure: bool
    sa_size: int

    @property
    def n_enrolled(self) -> int:
        return len(self.enrolled)

    @property
    def n_features(self) -> int:
        return self.mu.size


def build_template(features: Sequence[FeatureVector], user_id: str | None = None, *,
                   include_pressure: bool = True, q_floor: float = Q_FLOOR) -> Template:
    features = tuple(features)
    if len(features) < 2:
        raise TooFewSamples(f"a template needs at least 2 enrolled samples, got {len(features)}")
    X = feature_matrix(features, include_pressure=include_pressure)
    sigma = X.std(axis=0, ddof=1)
    h_min = np.min(np.stack([f.speed_angle() for f in features]), axis=0)
    has_p = include_pressure and all(f.has_pressure for f in features)
    X.setflags(write=False)
    return Template(
        user_id=features[0].user_id if user_id is None else user_id,
        enrolled=features, matrix=X, mu=X.mean(axis=0), sigma=sigma, h_min=h_min,
        q=np.maximum(sigma, q_floor), has_pressure=has_p, sa_size=features[0].sa_first.size,
    )


# ---------------------------------------------------------------------------
# distinctiveness

@dataclass(frozen=True, eq=False)
class PopulationStats:
    mu: np.ndarray
    sigma: np.ndarray
    L_pop: int | None
    source: str  # "generic_assumption" | "dataset_empirical"


def binomial_bin_stats(n_bins: int, L: int) -> tuple[float, float]:
    """Mean and std of one relative-frequency bin when ``L`` elements fall
    uniformly and independently into ``n_bins`` bins."""
    if L < 1:
        raise InvalidParam("L must be >= 1")
    if n_bins < 2:
        raise InvalidParam("a histogram needs at least 2 bins for a non-zero spread")
    mean = 1.0 / n_bins
    std = math.sqrt((1.0 / L) * (n_bins - 1) / n_bins ** 2)
    return mean, std


def generic_population_stats(spec: HistogramSpec = DEFAULT_SPEC, L_pop: int = DEFAULT_L_POP,
                             with_pressure: bool = True) -> PopulationStats:
    """Random-signature statistics under the uniform binomial assumption.

    Every bin of an ``N``-bin histogram gets mean ``1/N`` and standard
    deviation ``sqrt((N - 1) / (L_pop * N**2))``.
    """
    sa_mu, sa_sd = binomial_bin_stats(spec.sa_size, L_pop)
    mu = [np.full(2 * spec.sa_size, sa_mu)]
    sd = [np.full(2 * spec.sa_size, sa_sd)]
    if with_pressure:
        p_mu, p_sd = binomial_bin_stats(spec.pressure_bins, L_pop)
        mu.append(np.full(2 * spec.pressure_bins, p_mu))
        sd.append(np.full(2 * spec.pressure_bins, p_sd))
    return PopulationStats(np.concatenate(mu), np.concatenate(sd), L_pop, "generic_assumption")


def empirical_population_stats(features: Sequence[FeatureVector],
                               include_pressure: bool = True) -> PopulationStats:
    """Per-bin mean and sample std over a collection of real signatures."""
    X = feature_matrix(features, include_pressure=include_pressure)
    if X.shape[0] < 2:
        raise TooFewSamples("need at least 2 samples for empirical statistics")
    return PopulationStats(X.mean(axis=0), X.std(axis=0, ddof=1), None, "dataset_empirical")


def decidability(mu_t, sigma_t, mu_p, sigma_p):
    """Decidability index ``|mu_t - mu_p| / sqrt((sigma_t + sigma_p) / 2)``.

    Note the average is over standard deviations, not variances. Accepts
    scalars or arrays; raises :class:`DegenerateSpread` when a spread sum is 0.
    """
    mu_t, sigma_t, mu_p, sigma_p = np.broadcast_arrays(*(np.asarray(a, dtype=float)
                                                        for a in (mu_t, sigma_t, mu_p, sigma_p)))
    spread = sigma_t + sigma_p
    if np.any(spread <= 0):
        raise DegenerateSpread("sigma_t + sigma_p must be positive")
    d = np.abs(mu_t - mu_p) / np.sqrt(spread / 2)
    return float(d) if d.ndim == 0 else d


class Distinctiveness(NamedTuple):
    value: float
    per_feature: np.ndarray
    degenerate: np.ndarray  # indices of features skipped for zero spread


def _population_for(template: Template, pop: PopulationStats) -> tuple[np.ndarray, np.ndarray]:
    n = template.n_features
    if pop.mu.size == n:
        return pop.mu, pop.sigma
    # population carries pressure bins the template lacks: speed-angle bins come first
    if not template.has_pressure and pop.mu.size > n:
        return pop.mu[:n], pop.sigma[:n]
    raise FeatureCountMismatch(f"population covers {pop.mu.size} features, template has {n}")


def distinctiveness(template: Template, pop: PopulationStats) -> Distinctiveness:
    """Sum of per-bin decidability indices between template and population.

    Bins whose template and population spreads are both zero contribute 0 and
    are reported in ``degenerate``.
    """
    mu_p, sigma_p = _population_for(template, pop)
    spread = template.sigma + sigma_p
    ok = spread > 0
    d = np.zeros(template.n_features)
    d[ok] = decidability(template.mu[ok], template.sigma[ok], mu_p[ok], sigma_p[ok])
    return Distinctiveness(float(d.sum()), d, np.flatnonzero(~ok))


# ---------------------------------------------------------------------------
# complexity

class EMD(NamedTuple):
    value: float
    ref_bins: tuple[tuple[int, int], ...]  # basic drawing vector bin per half
    empty: bool


def emd_weights(shape: tuple[int, int], ref: tuple[int, int]) -> np.ndarray:
    """``w(i, j) = sqrt((i_ref - i)**2 / M + (j_ref - j)**2 / N)``."""
    M, N = shape
    i = np.arange(M)[:, None]
    j = np.arange(N)[None, :]
    return np.sqrt((ref[0] - i) ** 2 / M + (ref[1] - j) ** 2 / N)


def emd_complexity(template: Template) -> EMD:
    """Earth-moving cost from the min-pooled speed-angle histogram to a point mass.

    Per half, the reference bin is the most populated bin of the min-pooled
    histogram (lowest flat index on ties). The two halves' costs are summed.
    """
    terms = []
    refs = []
    for h in template.h_min:
        ref = np.unravel_index(int(np.argmax(h)), h.shape)
        refs.append((int(ref[0]), int(ref[1])))
        terms.append((h * emd_weights(h.shape, ref)).ravel())
    empty = not np.any(template.h_min > 0)
    return EMD(math.fsum(np.concatenate(terms)), tuple(refs), empty)


class InverseDispersion(NamedTuple):
    value: float
    K: int
    clamped: np.ndarray  # indices (into the speed-angle block) hitting the clamp


def inverse_dispersion(template: Template, clamp: float = DISPERSION_CLAMP) -> InverseDispersion:
    """Mean of ``mean / variance`` over speed-angle bins with a non-zero mean.

    Zero-variance bins (and any ratio above ``clamp``) count as ``clamp``.
    """
    X = template.matrix[:, :2 * template.sa_size]
    mu = X.mean(axis=0)
    var = X.var(axis=0, ddof=1)
    eligible = np.flatnonzero(mu > 0)
    if eligible.size == 0:
        raise NoEligibleFeatures("every speed-angle bin has zero mean")
    m, v = mu[eligible], var[eligible]
    with np.errstate(divide="ignore"):
        inv = np.where(v > 0, m / np.where(v > 0, v, 1.0), np.inf)
    hit = inv >= clamp
    inv = np.minimum(inv, clamp)
    return InverseDispersion(float(inv.mean()), int(eligible.size), eligible[hit])


def complexity(template: Template) -> float:
    return emd_complexity(template).value * inverse_dispersion(template).value


# ---------------------------------------------------------------------------
# repeatability

def repeatability(validation_scores: Sequence[float]) -> float:
    """``n / sum(scores)`` over validation genuines; ``inf`` when every score is 0."""
    s = np.asarray(validation_scores, dtype=float)
    if s.size == 0:
        raise EmptyValidationSet("no validation scores")
    if np.any(s < 0) or not np.all(np.isfinite(s)):
        raise InvalidParam("validation scores must be finite and non-negative")
    total = math.fsum(s)
    if total == 0:
        return math.inf
    return s.size / total


# ---------------------------------------------------------------------------
# report

@dataclass
class QualityReport:
    user_id: str
    distinctiveness: float
    complexity: float
    emd: float
    inv_dispersion: float
    K: int
    per_feature_d: np.ndarray
    repeatability: float | None = None
    flags: list[str] = field(default_factory=list)

    CSV_FIELDS = ("user_id", "distinctiveness", "complexity", "emd", "inv_dispersion", "K",
                  "repeatability", "flags")

    def to_dict(self) -> dict:
        r = self.repeatability
        return {
            "user_id": self.user_id,
            "distinctiveness": self.distinctiveness,
            "complexity": self.complexity,
            "emd": self.emd,
            "inv_dispersion": self.inv_dispersion,
            "K": self.K,
            "repeatability": None if r is None else (r if math.isfinite(r) else "inf"),
            "per_feature_d": [float(v) for v in self.per_feature_d],
            "flags": list(self.flags),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def csv_row(self) -> list[str]:
        r = "" if self.repeatability is None else repr(float(self.repeatability))
        return [self.user_id, repr(self.distinctiveness), repr(self.complexity), repr(self.emd),
                repr(self.inv_dispersion), str(self.K), r, ";".join(self.flags)]


def assess(template: Template, pop: PopulationStats,
           validation_scores: Sequence[float] | None = None) -> QualityReport:
    """All three measures for one template, with diagnostics in ``flags``."""
    flags = []
    dist = distinctiveness(template, pop)
    if dist.degenerate.size:
        flags.append(f"spread_degenerate:{dist.degenerate.size}")
    emd = emd_complexity(template)
    if emd.empty:
        flags.append("empty_min_histogram")
    try:
        inv = inverse_dispersion(template)
        inv_value, K = inv.value, inv.K
        if inv.clamped.size:
            flags.append(f"dispersion_clamped:{inv.clamped.size}")
    except NoEligibleFeatures:
        inv_value, K = 0.0, 0
        flags.append("no_eligible_dispersion_features")
    rep = None
    if validation_scores is not None:
        rep = repeatability(validation_scores)
        if math.isinf(rep):
            flags.append("zero_validation_scores")
    else:
        flags.append("repeatability_absent")
    return QualityReport(template.user_id, dist.value, emd.value * inv_value, emd.value,
                         inv_value, K, dist.per_feature, rep, flags)
