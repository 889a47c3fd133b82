"""Histogram features of online signatures.

A signature is reduced to its drawing vectors (displacements between
consecutive pen-down points of the same stroke). Each half of the vector
sequence yields a 2-D speed-angle histogram and, when the device reports it, a
pressure histogram. All histograms hold relative frequencies.

Feature order, used everywhere a flat vector is needed::

    speed-angle first half   (M * N_a, row-major: speed bin major)
    speed-angle second half  (M * N_a)
    pressure first half      (N_p)      only when pressure is present
    pressure second half     (N_p)
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import FeatureCountMismatch, InvalidParam, MissingPressure, SampleTooShort
from .ingest import DEFAULT_PRESSURE_MAX, Label, SignatureSample

# bin assignment is done on values rounded to this many decimals so that
# float noise (e.g. from a uniform rescaling) cannot move a value across an edge
_BIN_DECIMALS = 9


@dataclass(frozen=True)
class HistogramSpec:
    """Histogram layout.

    ``speed_edges`` are inner boundaries on relative speed; ``M`` is one more
    than their count. Angles use ``angle_bins`` uniform bins over [-pi, pi),
    pressure uses ``pressure_bins`` uniform bins over [0, 1] after division by
    the device maximum. With ``use_time`` set, displacements are divided by the
    sampling interval before normalisation.
    """

    speed_edges: tuple[float, ...] = (0.5, 1.0, 2.0)
    angle_bins: int = 16
    pressure_bins: int = 16
    use_time: bool = False

    def __post_init__(self):
        edges = tuple(float(e) for e in self.speed_edges)
        object.__setattr__(self, "speed_edges", edges)
        if len(edges) < 1:
            raise InvalidParam("need at least 2 speed bins")
        if any(b <= a for a, b in zip(edges, edges[1:])) or edges[0] <= 0:
            raise InvalidParam("speed edges must be positive and strictly increasing")
        if self.angle_bins < 4:
            raise InvalidParam("angle_bins must be >= 4")
        if self.pressure_bins < 2:
            raise InvalidParam("pressure_bins must be >= 2")

    @property
    def speed_bins(self) -> int:
        return len(self.speed_edges) + 1

    @property
    def sa_size(self) -> int:
        return self.speed_bins * self.angle_bins

    def n_features(self, with_pressure: bool) -> int:
        return 2 * self.sa_size + (2 * self.pressure_bins if with_pressure else 0)


DEFAULT_SPEC = HistogramSpec()


@dataclass(frozen=True)
class DrawingVector:
    dx: float
    dy: float
    speed: float
    angle: float


@dataclass(frozen=True, eq=False)
class DrawingVectors:
    """Column-wise drawing vectors of one sample.

    ``pressure`` holds the pressure at each vector's start point (or None).
    """

    dx: np.ndarray
    dy: np.ndarray
    speed: np.ndarray
    angle: np.ndarray
    pressure: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.dx)

    def __getitem__(self, i) -> DrawingVector:
        return DrawingVector(float(self.dx[i]), float(self.dy[i]),
                             float(self.speed[i]), float(self.angle[i]))

    def __iter__(self):
        return (self[i] for i in range(len(self)))


def drawing_vectors(sample: SignatureSample, use_time: bool = False) -> DrawingVectors:
    """Drawing vectors between consecutive pen-down points.

    No vector spans a pen lift. Speed is the displacement magnitude divided by
    the sample's mean non-zero displacement magnitude, which makes it
    independent of the device resolution and of the signature's size. Angles
    are ``atan2(dy, dx)`` folded into [-pi, pi).
    """
    down = np.asarray(sample.pen_down)
    if down.sum() < 2:
        raise SampleTooShort("need at least 2 pen-down points")
    # a vector i -> i+1 exists only when both ends touch the surface
    keep = down[:-1] & down[1:]
    if not keep.any():
        raise SampleTooShort("no two consecutive pen-down points")

    dx = np.diff(sample.x).astype(float)[keep]
    dy = np.diff(sample.y).astype(float)[keep]
    mag = np.hypot(dx, dy)
    if use_time:
        dt = np.diff(sample.t).astype(float)[keep]
        pos = dt[dt > 0]
        fill = float(np.median(pos)) if pos.size else 1.0
        mag = mag / np.where(dt > 0, dt, fill)
    nonzero = mag[mag > 0]
    speed = mag / nonzero.mean() if nonzero.size else np.zeros_like(mag)
    angle = np.arctan2(dy, dx)
    angle[angle >= np.pi] = -np.pi
    pressure = None
    if sample.has_pressure:
        pressure = np.asarray(sample.pressure)[:-1][keep]
    return DrawingVectors(dx, dy, speed, angle, pressure)


@dataclass(frozen=True, eq=False)
class FeatureVector:
    sa_first: np.ndarray
    sa_second: np.ndarray
    pr_first: np.ndarray | None = None
    pr_second: np.ndarray | None = None
    L_first: int = 0
    L_second: int = 0
    user_id: str = ""
    session_id: int = 0
    label: str = Label.GENUINE.value

    @property
    def has_pressure(self) -> bool:
        return self.pr_first is not None

    def as_array(self, include_pressure: bool = True) -> np.ndarray:
        parts = [self.sa_first.ravel(), self.sa_second.ravel()]
        if include_pressure and self.has_pressure:
            parts += [self.pr_first, self.pr_second]
        return np.concatenate(parts)

    def speed_angle(self) -> np.ndarray:
        """Both halves' speed-angle histograms stacked, shape ``(2, M, N_a)``."""
        return np.stack([self.sa_first, self.sa_second])

    def __eq__(self, other) -> bool:
        if not isinstance(other, FeatureVector):
            return NotImplemented
        if self.has_pressure != other.has_pressure:
            return False
        meta = (self.L_first, self.L_second, self.user_id, self.session_id, self.label)
        other_meta = (other.L_first, other.L_second, other.user_id, other.session_id, other.label)
        return meta == other_meta and np.array_equal(self.as_array(), other.as_array())

    __hash__ = None


def _relative(counts: np.ndarray) -> np.ndarray:
    total = counts.sum()
    return counts / total if total > 0 else counts.astype(float)


def speed_angle_bins(vectors: DrawingVectors, spec: HistogramSpec) -> np.ndarray:
    """Flat speed-angle bin index (``speed_bin * N_a + angle_bin``) of each vector."""
    speed = np.round(vectors.speed, _BIN_DECIMALS)
    s_bin = np.searchsorted(np.asarray(spec.speed_edges), speed, side="right")
    pos = np.round((vectors.angle + np.pi) * spec.angle_bins / (2 * np.pi), _BIN_DECIMALS)
    a_bin = np.floor(pos).astype(np.int64) % spec.angle_bins
    return s_bin * spec.angle_bins + a_bin


def pressure_bins(pressure: np.ndarray, spec: HistogramSpec,
                  pressure_max: int = DEFAULT_PRESSURE_MAX) -> np.ndarray:
    p = np.clip(np.asarray(pressure, dtype=np.int64), 0, pressure_max)
    # integer form of floor(p / pressure_max * N_p); p == pressure_max goes to the top bin
    return np.minimum((p * spec.pressure_bins) // pressure_max, spec.pressure_bins - 1)


def extract_features(sample: SignatureSample, spec: HistogramSpec = DEFAULT_SPEC, *,
                     pressure_max: int = DEFAULT_PRESSURE_MAX,
                     require_pressure: bool = False) -> FeatureVector:
    """Relative-frequency histograms for the two halves of a signature.

    The drawing-vector sequence is cut at ``len // 2``; each half gets an
    ``M x N_a`` speed-angle histogram and, when the sample carries pressure,
    an ``N_p`` pressure histogram of the vectors' start-point pressures.
    """
    if require_pressure and not sample.has_pressure:
        raise MissingPressure("sample has no pressure channel")
    vectors = drawing_vectors(sample, use_time=spec.use_time)
    n = len(vectors)
    if n < 2:
        raise SampleTooShort(f"need at least 2 drawing vectors, got {n}")
    half = n // 2

    flat = speed_angle_bins(vectors, spec)
    shape = (spec.speed_bins, spec.angle_bins)
    sa = [_relative(np.bincount(part, minlength=spec.sa_size).astype(float)).reshape(shape)
          for part in (flat[:half], flat[half:])]
    pr = [None, None]
    if vectors.pressure is not None:
        pb = pressure_bins(vectors.pressure, spec, pressure_max)
        pr = [_relative(np.bincount(part, minlength=spec.pressure_bins).astype(float))
              for part in (pb[:half], pb[half:])]
    return FeatureVector(sa[0], sa[1], pr[0], pr[1], half, n - half,
                         user_id=sample.user_id, session_id=sample.session_id,
                         label=sample.label.value)


def feature_matrix(features: Sequence[FeatureVector], include_pressure: bool = True) -> np.ndarray:
    """Stack flat feature vectors into an ``(n_samples, n_features)`` array."""
    if not features:
        raise InvalidParam("no feature vectors given")
    use_p = include_pressure and all(f.has_pressure for f in features)
    rows = [f.as_array(include_pressure=use_p) for f in features]
    if len({r.size for r in rows}) != 1:
        raise FeatureCountMismatch("feature vectors have different lengths")
    return np.vstack(rows)


# ---------------------------------------------------------------------------
# CSV

def feature_names(spec: HistogramSpec = DEFAULT_SPEC, with_pressure: bool = True) -> list[str]:
    names = [f"sa{h}_s{i}_a{j}" for h in (1, 2)
             for i in range(spec.speed_bins) for j in range(spec.angle_bins)]
    if with_pressure:
        names += [f"pr{h}_{k}" for h in (1, 2) for k in range(spec.pressure_bins)]
    return names


def render_features_csv(features: Iterable[FeatureVector], spec: HistogramSpec = DEFAULT_SPEC) -> str:
    """One row per sample: ``user_id,session,label,L_first,L_second`` then bins."""
    features = list(features)
    with_p = bool(features) and all(f.has_pressure for f in features)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["user_id", "session", "label", "L_first", "L_second", *feature_names(spec, with_p)])
    for f in features:
        w.writerow([f.user_id, f.session_id, f.label, f.L_first, f.L_second,
                    *(repr(float(v)) for v in f.as_array(include_pressure=with_p))])
    return buf.getvalue()


def parse_features_csv(text: str, spec: HistogramSpec = DEFAULT_SPEC) -> list[FeatureVector]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    n_bins = len(header) - 5
    if n_bins == spec.n_features(True):
        with_p = True
    elif n_bins == spec.n_features(False):
        with_p = False
    else:
        raise FeatureCountMismatch(f"{n_bins} bin columns do not match the histogram spec")
    shape = (spec.speed_bins, spec.angle_bins)
    k = spec.sa_size
    out = []
    for row in reader:
        if not row:
            continue
        v = np.array([float(c) for c in row[5:]])
        pr = (v[2 * k:2 * k + spec.pressure_bins], v[2 * k + spec.pressure_bins:]) if with_p else (None, None)
        out.append(FeatureVector(v[:k].reshape(shape), v[k:2 * k].reshape(shape), pr[0], pr[1],
                                 int(row[3]), int(row[4]), user_id=row[0],
                                 session_id=int(row[1]), label=row[2]))
    return out


__all__ = [
    "DEFAULT_SPEC", "DrawingVector", "DrawingVectors", "FeatureVector", "HistogramSpec",
    "drawing_vectors", "extract_features", "feature_matrix", "feature_names",
    "parse_features_csv", "pressure_bins", "render_features_csv", "speed_angle_bins",
]
