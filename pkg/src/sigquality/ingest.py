"""Raw data ingestion.

Readers and writers for the two on-disk formats the toolkit understands, the
JSON dataset manifest, and a seeded synthetic corpus generator that stands in
for licensed signature databases.

SVC pen data
------------
The first line holds the point count ``P``; each of the following ``P`` lines
has either 4 columns ``X Y T BUTTON`` or 7 columns
``X Y T BUTTON AZIMUTH ALTITUDE PRESSURE`` (whitespace separated integers).
Azimuth and altitude are read but not kept.

Keystroke CSV
-------------
Comma separated, header ``subject,sessionIndex,rep,<31 timing names>`` as in
the CMU keystroke benchmark.

Manifest
--------
``manifest.json`` at a dataset root::

    {
      "schema": 1,
      "modality": "signature",
      "pressure_max": 1023,
      "users": [
        {"user_id": "u000",
         "genuine": {"1": ["u000/g1_00.svc", ...], "2": [...]},
         "forgeries": ["u000/f_00.svc", ...]}
      ]
    }

For ``"modality": "keystroke"`` the manifest carries ``"csv": "<relative
path>"`` instead of ``users``; users and sessions come from the CSV rows.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    ColumnCountError,
    CountMismatch,
    InvalidParam,
    MalformedHeader,
    ManifestError,
    NonNumericTiming,
    RowArityError,
    SampleTooShort,
)

MANIFEST_SCHEMA = 1
DEFAULT_PRESSURE_MAX = 1023
N_KEYSTROKE_FEATURES = 31

CMU_FEATURE_NAMES = (
    "H.period", "DD.period.t", "UD.period.t", "H.t", "DD.t.i", "UD.t.i",
    "H.i", "DD.i.e", "UD.i.e", "H.e", "DD.e.five", "UD.e.five", "H.five",
    "DD.five.Shift.r", "UD.five.Shift.r", "H.Shift.r", "DD.Shift.r.o",
    "UD.Shift.r.o", "H.o", "DD.o.a", "UD.o.a", "H.a", "DD.a.n", "UD.a.n",
    "H.n", "DD.n.l", "UD.n.l", "H.l", "DD.l.Return", "UD.l.Return", "H.Return",
)


class Label(str, enum.Enum):
    GENUINE = "genuine"
    SKILLED_FORGERY = "skilled_forgery"
    RANDOM_FORGERY_POOL = "random_forgery_pool"


@dataclass(frozen=True)
class PenPoint:
    x: int
    y: int
    t: int
    pressure: int | None = None
    pen_down: bool = True


class SignatureSample:
    """One signing act stored column-wise.

    Parameters
    ----------
    x, y, t : array-like of int
        Device coordinates and timestamps in milliseconds (non-decreasing).
    pressure : array-like of int or None
        Pen pressure; either present for every point or absent.
    pen_down : array-like of bool, optional
        Defaults to all True.
    """

    __slots__ = ("x", "y", "t", "pressure", "pen_down", "user_id", "session_id", "label")

    def __init__(self, x, y, t, pressure=None, pen_down=None, *, user_id: str = "",
                 session_id: int = 0, label: Label | str = Label.GENUINE):
        x = np.asarray(x, dtype=np.int64)
        y = np.asarray(y, dtype=np.int64)
        t = np.asarray(t, dtype=np.int64)
        if not (x.ndim == y.ndim == t.ndim == 1 and len(x) == len(y) == len(t)):
            raise InvalidParam("x, y and t must be 1-D arrays of equal length")
        if len(x) < 2:
            raise SampleTooShort(f"a signature needs at least 2 points, got {len(x)}")
        if np.any(np.diff(t) < 0):
            raise InvalidParam("timestamps must be non-decreasing")
        if pressure is not None:
            pressure = np.asarray(pressure, dtype=np.int64)
            if pressure.shape != x.shape:
                raise InvalidParam("pressure must have one value per point")
            if np.any(pressure < 0):
                raise InvalidParam("pressure must be non-negative")
        if pen_down is None:
            pen_down = np.ones(len(x), dtype=bool)
        else:
            pen_down = np.asarray(pen_down, dtype=bool)
            if pen_down.shape != x.shape:
                raise InvalidParam("pen_down must have one value per point")
        for arr in (x, y, t, pressure, pen_down):
            if arr is not None:
                arr.setflags(write=False)
        self.x, self.y, self.t = x, y, t
        self.pressure = pressure
        self.pen_down = pen_down
        self.user_id = user_id
        self.session_id = int(session_id)
        self.label = Label(label)

    @classmethod
    def from_points(cls, points: Sequence[PenPoint], **meta) -> SignatureSample:
        has_p = {p.pressure is not None for p in points}
        if len(has_p) > 1:
            raise InvalidParam("all points must share pressure presence")
        pressure = [p.pressure for p in points] if has_p == {True} else None
        return cls([p.x for p in points], [p.y for p in points], [p.t for p in points],
                   pressure, [p.pen_down for p in points], **meta)

    @property
    def points(self) -> list[PenPoint]:
        p = self.pressure
        return [PenPoint(int(self.x[i]), int(self.y[i]), int(self.t[i]),
                         None if p is None else int(p[i]), bool(self.pen_down[i]))
                for i in range(len(self))]

    @property
    def has_pressure(self) -> bool:
        return self.pressure is not None

    def __len__(self) -> int:
        return len(self.x)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SignatureSample):
            return NotImplemented
        if (self.user_id, self.session_id, self.label) != (other.user_id, other.session_id, other.label):
            return False
        if self.has_pressure != other.has_pressure:
            return False
        same = (np.array_equal(self.x, other.x) and np.array_equal(self.y, other.y)
                and np.array_equal(self.t, other.t)
                and np.array_equal(self.pen_down, other.pen_down))
        return same and (not self.has_pressure or np.array_equal(self.pressure, other.pressure))

    __hash__ = None

    def __repr__(self) -> str:
        return (f"SignatureSample(user_id={self.user_id!r}, session_id={self.session_id}, "
                f"label={self.label.value!r}, n_points={len(self)}, pressure={self.has_pressure})")

    def transformed(self, dx: float = 0, dy: float = 0, scale: float = 1) -> SignatureSample:
        """Copy with coordinates mapped to ``scale * (x, y) + (dx, dy)``, rounded to ints."""
        x = np.rint(self.x * scale + dx).astype(np.int64)
        y = np.rint(self.y * scale + dy).astype(np.int64)
        return SignatureSample(x, y, self.t, self.pressure, self.pen_down,
                               user_id=self.user_id, session_id=self.session_id, label=self.label)


@dataclass(frozen=True, eq=False)
class KeystrokeSample:
    features: np.ndarray
    user_id: str
    session_id: int
    rep: int

    def __post_init__(self):
        f = np.array(self.features, dtype=float)
        if f.shape != (N_KEYSTROKE_FEATURES,):
            raise ColumnCountError(f"expected {N_KEYSTROKE_FEATURES} timing values, got {f.size}")
        if not np.all(np.isfinite(f)):
            raise NonNumericTiming("timing values must be finite")
        f.setflags(write=False)
        object.__setattr__(self, "features", f)

    def __eq__(self, other) -> bool:
        if not isinstance(other, KeystrokeSample):
            return NotImplemented
        return ((self.user_id, self.session_id, self.rep) == (other.user_id, other.session_id, other.rep)
                and np.array_equal(self.features, other.features))

    __hash__ = None


# ---------------------------------------------------------------------------
# SVC

def parse_svc(text: str, *, user_id: str = "", session_id: int = 0,
              label: Label | str = Label.GENUINE) -> SignatureSample:
    """Parse SVC pen data into a :class:`SignatureSample`.

    Blank lines are skipped; LF and CRLF endings are both accepted.
    """
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise MalformedHeader("empty input")
    try:
        count = int(lines[0])
    except ValueError:
        raise MalformedHeader(f"point count is not an integer: {lines[0]!r}") from None
    rows = lines[1:]
    if len(rows) != count:
        raise CountMismatch(f"header announces {count} points, found {len(rows)} rows")

    widths = set()
    values = []
    for lineno, row in enumerate(rows, start=2):
        parts = row.split()
        if len(parts) not in (4, 7):
            raise RowArityError(f"line {lineno}: expected 4 or 7 columns, got {len(parts)}")
        widths.add(len(parts))
        try:
            values.append([int(v) for v in parts])
        except ValueError:
            raise RowArityError(f"line {lineno}: non-integer value in {row!r}") from None
    if len(widths) > 1:
        raise RowArityError("rows mix 4- and 7-column layouts")
    if count < 2:
        raise SampleTooShort(f"a signature needs at least 2 points, got {count}")

    arr = np.array(values, dtype=np.int64)
    pressure = arr[:, 6] if arr.shape[1] == 7 else None
    return SignatureSample(arr[:, 0], arr[:, 1], arr[:, 2], pressure, arr[:, 3] != 0,
                           user_id=user_id, session_id=session_id, label=label)


def render_svc(sample: SignatureSample) -> str:
    """Inverse of :func:`parse_svc`; azimuth and altitude are written as 0."""
    out = [str(len(sample))]
    for i in range(len(sample)):
        row = f"{sample.x[i]} {sample.y[i]} {sample.t[i]} {int(sample.pen_down[i])}"
        if sample.has_pressure:
            row += f" 0 0 {sample.pressure[i]}"
        out.append(row)
    return "\n".join(out) + "\n"


def read_svc(path, **meta) -> SignatureSample:
    return parse_svc(Path(path).read_text(encoding="utf-8"), **meta)


# ---------------------------------------------------------------------------
# keystroke CSV

def parse_keystroke_csv(text: str) -> list[KeystrokeSample]:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ColumnCountError("missing header row") from None
    expected = 3 + N_KEYSTROKE_FEATURES
    if len(header) != expected:
        raise ColumnCountError(f"header has {len(header)} columns, expected {expected}")

    samples = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != expected:
            raise ColumnCountError(f"line {lineno}: {len(row)} columns, expected {expected}")
        try:
            session, rep = int(row[1]), int(row[2])
        except ValueError:
            raise NonNumericTiming(f"line {lineno}: non-integer session/rep") from None
        try:
            timings = [float(v) for v in row[3:]]
        except ValueError:
            raise NonNumericTiming(f"line {lineno}: non-numeric timing value") from None
        for name, v in zip(header[3:], timings):
            if not math.isfinite(v):
                raise NonNumericTiming(f"line {lineno}: {name} is not finite")
            if v < 0 and not name.strip().startswith("UD."):
                raise NonNumericTiming(f"line {lineno}: {name} is negative")
        samples.append(KeystrokeSample(np.array(timings), row[0].strip(), session, rep))
    return samples


def render_keystroke_csv(samples: Iterable[KeystrokeSample],
                         feature_names: Sequence[str] = CMU_FEATURE_NAMES) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["subject", "sessionIndex", "rep", *feature_names])
    for s in samples:
        writer.writerow([s.user_id, s.session_id, s.rep, *(repr(float(v)) for v in s.features)])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# manifest and dataset

@dataclass
class UserEntry:
    user_id: str
    genuine: dict[int, list[str]] = field(default_factory=dict)
    forgeries: list[str] = field(default_factory=list)


@dataclass
class DatasetManifest:
    modality: str = "signature"
    users: list[UserEntry] = field(default_factory=list)
    pressure_max: int | None = DEFAULT_PRESSURE_MAX
    csv: str | None = None

    def to_json(self) -> str:
        doc = {"schema": MANIFEST_SCHEMA, "modality": self.modality}
        if self.modality == "signature":
            doc["pressure_max"] = self.pressure_max
            doc["users"] = [
                {"user_id": u.user_id,
                 "genuine": {str(s): list(p) for s, p in sorted(u.genuine.items())},
                 "forgeries": list(u.forgeries)}
                for u in self.users
            ]
        else:
            doc["csv"] = self.csv
        return json.dumps(doc, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> DatasetManifest:
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ManifestError(f"manifest is not valid JSON: {exc}") from None
        if doc.get("schema") != MANIFEST_SCHEMA:
            raise ManifestError(f"unsupported manifest schema {doc.get('schema')!r}")
        modality = doc.get("modality")
        if modality == "keystroke":
            if not doc.get("csv"):
                raise ManifestError("keystroke manifest needs a 'csv' entry")
            return cls(modality="keystroke", csv=doc["csv"], pressure_max=None)
        if modality != "signature":
            raise ManifestError(f"unknown modality {modality!r}")
        users = []
        for u in doc.get("users", []):
            try:
                genuine = {int(k): list(v) for k, v in u["genuine"].items()}
                users.append(UserEntry(str(u["user_id"]), genuine, list(u.get("forgeries", []))))
            except (KeyError, TypeError, ValueError) as exc:
                raise ManifestError(f"bad user entry {u!r}: {exc}") from None
        return cls(modality="signature", users=users,
                   pressure_max=int(doc.get("pressure_max") or DEFAULT_PRESSURE_MAX))


@dataclass
class UserData:
    """All samples of one user: genuines keyed by session, plus skilled forgeries."""

    user_id: str
    genuine: dict[int, list] = field(default_factory=dict)
    forgeries: list = field(default_factory=list)

    def all_genuine(self) -> list:
        return [s for sess in sorted(self.genuine) for s in self.genuine[sess]]


@dataclass
class Dataset:
    manifest: DatasetManifest
    users: dict[str, UserData]

    @property
    def modality(self) -> str:
        return self.manifest.modality

    @property
    def pressure_max(self) -> int:
        return self.manifest.pressure_max or DEFAULT_PRESSURE_MAX

    def user_ids(self) -> list[str]:
        return list(self.users)


def load_dataset(manifest_path) -> Dataset:
    """Load every sample referenced by a manifest.

    Paths inside the manifest are relative to the manifest's directory.
    """
    manifest_path = Path(manifest_path)
    if not manifest_path.is_file():
        raise ManifestError(f"manifest not found: {manifest_path}")
    manifest = DatasetManifest.from_json(manifest_path.read_text(encoding="utf-8"))
    root = manifest_path.parent

    users: dict[str, UserData] = {}
    if manifest.modality == "keystroke":
        for s in parse_keystroke_csv((root / manifest.csv).read_text(encoding="utf-8")):
            u = users.setdefault(s.user_id, UserData(s.user_id))
            u.genuine.setdefault(s.session_id, []).append(s)
        for u in users.values():
            for sess in u.genuine.values():
                sess.sort(key=lambda s: s.rep)
            u.genuine = dict(sorted(u.genuine.items()))
        return Dataset(manifest, users)

    for entry in manifest.users:
        u = UserData(entry.user_id)
        for sess, paths in sorted(entry.genuine.items()):
            u.genuine[sess] = [read_svc(root / p, user_id=entry.user_id, session_id=sess)
                               for p in paths]
        u.forgeries = [read_svc(root / p, user_id=entry.user_id, label=Label.SKILLED_FORGERY)
                       for p in entry.forgeries]
        users[entry.user_id] = u
    return Dataset(manifest, users)


def write_dataset(dataset: Dataset, root) -> Path:
    """Write SVC files plus ``manifest.json`` under ``root``; returns the manifest path.

    The manifest stored on ``dataset`` supplies the relative file names.
    """
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    if dataset.modality == "keystroke":
        samples = [s for u in dataset.users.values() for s in u.all_genuine()]
        (root / dataset.manifest.csv).write_text(render_keystroke_csv(samples), encoding="utf-8")
    else:
        for entry in dataset.manifest.users:
            data = dataset.users[entry.user_id]
            pairs = [(p, s) for sess in sorted(entry.genuine)
                     for p, s in zip(entry.genuine[sess], data.genuine[sess])]
            pairs += list(zip(entry.forgeries, data.forgeries))
            for rel, sample in pairs:
                path = root / rel
                path.parent.mkdir(parents=True, exist_ok=True)
                path.write_text(render_svc(sample), encoding="utf-8")
    path = root / "manifest.json"
    path.write_text(dataset.manifest.to_json(), encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# synthetic corpus

def _session_sizes(total: int, sessions: int) -> list[int]:
    base, extra = divmod(total, sessions)
    return [base + (1 if i < extra else 0) for i in range(sessions)]


def _render_trajectory(shape: dict, n_points: int, amp_scale, phase_shift, warp: float,
                       warp_phase: float, rng_noise: np.ndarray, offset: tuple[float, float],
                       lifts: Sequence[float], p_noise: np.ndarray, **meta) -> SignatureSample:
    s = np.linspace(0.0, 1.0, n_points)
    s = s + warp * np.sin(2 * np.pi * s + warp_phase) / (2 * np.pi)
    x = shape["drift"] * s
    y = np.zeros_like(s)
    for h in range(len(shape["freq"])):
        arg = 2 * np.pi * shape["freq"][h] * s
        x = x + shape["ax"][h] * amp_scale[0, h] * np.sin(arg + shape["px"][h] + phase_shift[0, h])
        y = y + shape["ay"][h] * amp_scale[1, h] * np.sin(arg + shape["py"][h] + phase_shift[1, h])
    x = x + rng_noise[0] + offset[0]
    y = y + rng_noise[1] + offset[1]
    p = (shape["p0"] + shape["pamp"] * np.sin(2 * np.pi * shape["pfreq"] * s + shape["pphase"])
         + p_noise)
    p = np.clip(np.rint(p), 0, DEFAULT_PRESSURE_MAX)

    pen_down = np.ones(n_points, dtype=bool)
    for frac in lifts:
        k = int(frac * n_points)
        pen_down[k:k + 3] = False
    pen_down[0] = pen_down[-1] = True
    t = 10 * np.arange(n_points)
    return SignatureSample(np.rint(x), np.rint(y), t, p, pen_down, **meta)


def _user_shape(rng: np.random.Generator, complexity_knob: float) -> dict:
    n_harm = int(rng.integers(3, 7))
    freq = 1.0 + complexity_knob * (np.arange(n_harm) + rng.uniform(0, 1, n_harm))
    amp = 1000.0 * rng.uniform(0.3, 1.0, (2, n_harm)) / (1 + np.arange(n_harm))
    return {
        "freq": freq,
        "ax": amp[0], "ay": amp[1],
        "px": rng.uniform(-np.pi, np.pi, n_harm), "py": rng.uniform(-np.pi, np.pi, n_harm),
        "drift": 1000.0 * rng.uniform(1.0, 3.0),
        "p0": rng.uniform(300, 700), "pamp": rng.uniform(100, 300),
        "pfreq": 1.0 + complexity_knob * rng.uniform(0, 3), "pphase": rng.uniform(-np.pi, np.pi),
        "n_points": int(rng.integers(110, 190)),
        "lifts": sorted(rng.uniform(0.2, 0.8, int(rng.integers(0, 3)))),
    }


def synth_corpus(seed: int, n_users: int = 20, samples_per_user: int = 20, sessions: int = 2,
                 consistency: float | Sequence[float] = 0.8, complexity_knob: float = 1.0,
                 forgeries_per_user: int = 0) -> Dataset:
    """Generate a reproducible synthetic signature corpus.

    Each user signs a smooth trajectory made of 3 to 6 random-phase sinusoids
    per axis riding on a left-to-right drift. ``complexity_knob`` spreads the
    harmonic frequencies (0 collapses every harmonic onto one frequency, giving
    an ellipse-like scribble). Every sample gets amplitude, phase, time-warp,
    length and point jitter scaled by ``1 - consistency``; each session adds a
    drift of the same kind whose size is ``1 - consistency`` times a per-user
    factor, so cross-session repeatability varies between users.

    Parameters
    ----------
    consistency : float or sequence of float
        A single value in (0, 1] for every user, or a set of values from which
        each user's consistency is drawn.
    forgeries_per_user : int
        Skilled-forgery imitations generated per user (0 disables).

    Returns
    -------
    Dataset
        In-memory corpus whose manifest names the files :func:`write_dataset`
        would create.
    """
    choices = np.atleast_1d(np.asarray(consistency, dtype=float))
    if n_users < 2:
        raise InvalidParam("n_users must be >= 2")
    if samples_per_user < 6:
        raise InvalidParam("samples_per_user must be >= 6")
    if sessions < 1 or sessions > samples_per_user:
        raise InvalidParam("sessions must be between 1 and samples_per_user")
    if choices.size == 0 or np.any(choices <= 0) or np.any(choices > 1):
        raise InvalidParam("consistency must lie in (0, 1]")
    if complexity_knob < 0:
        raise InvalidParam("complexity_knob must be >= 0")
    if forgeries_per_user < 0:
        raise InvalidParam("forgeries_per_user must be >= 0")

    root_seq = np.random.SeedSequence(seed)
    manifest = DatasetManifest(modality="signature", pressure_max=DEFAULT_PRESSURE_MAX)
    users: dict[str, UserData] = {}
    width = max(3, len(str(n_users - 1)))

    for ui, user_seq in enumerate(root_seq.spawn(n_users)):
        rng = np.random.default_rng(user_seq)
        uid = f"u{ui:0{width}d}"
        cons = float(choices[rng.integers(choices.size)]) if choices.size > 1 else float(choices[0])
        jitter = 1.0 - cons
        drift = jitter * rng.uniform(0.0, 3.0)
        shape = _user_shape(rng, complexity_knob)
        n_h = len(shape["freq"])

        entry = UserEntry(uid)
        data = UserData(uid)
        for si, n_sess in enumerate(_session_sizes(samples_per_user, sessions), start=1):
            sess_amp = 1.0 + drift * 0.3 * rng.standard_normal((2, n_h))
            sess_phase = drift * 0.5 * rng.standard_normal((2, n_h))
            sess_len = drift * 20 * rng.standard_normal()
            for k in range(n_sess):
                amp = sess_amp * (1.0 + jitter * 0.3 * rng.standard_normal((2, n_h)))
                phase = sess_phase + jitter * 0.5 * rng.standard_normal((2, n_h))
                warp = jitter * 0.4 * rng.uniform(-1, 1)
                warp_phase = rng.uniform(-np.pi, np.pi)
                n_pts = max(20, shape["n_points"] + int(round(sess_len + jitter * 15 * rng.standard_normal())))
                noise = jitter * 4.0 * rng.standard_normal((2, n_pts))
                p_noise = jitter * 40.0 * rng.standard_normal(n_pts)
                offset = (5000 + jitter * 300 * rng.standard_normal(), 5000 + jitter * 300 * rng.standard_normal())
                s = _render_trajectory(shape, n_pts, amp, phase, warp, warp_phase, noise,
                                       offset, shape["lifts"], p_noise, user_id=uid, session_id=si)
                data.genuine.setdefault(si, []).append(s)
                entry.genuine.setdefault(si, []).append(f"{uid}/g{si}_{k:02d}.svc")

        for k in range(forgeries_per_user):
            # imitation: right shape, wrong dynamics
            skill = rng.uniform(0.15, 0.5)
            amp = 1.0 + skill * 0.6 * rng.standard_normal((2, n_h))
            phase = skill * 1.0 * rng.standard_normal((2, n_h))
            n_pts = int(shape["n_points"] * rng.uniform(1.2, 1.8))
            noise = 6.0 * rng.standard_normal((2, n_pts))
            p_noise = 80.0 * rng.standard_normal(n_pts)
            s = _render_trajectory(shape, n_pts, amp, phase, skill * rng.uniform(-1, 1),
                                   rng.uniform(-np.pi, np.pi), noise, (5000.0, 5000.0),
                                   shape["lifts"], p_noise, user_id=uid, label=Label.SKILLED_FORGERY)
            data.forgeries.append(s)
            entry.forgeries.append(f"{uid}/f_{k:02d}.svc")

        manifest.users.append(entry)
        users[uid] = data
    return Dataset(manifest, users)


def synth_keystroke_corpus(seed: int, n_users: int = 10, sessions: int = 4,
                           reps_per_session: int = 10) -> Dataset:
    """Seeded keystroke timings shaped like the CMU benchmark (31 columns, seconds).

    Users differ in mean rhythm and in how much their rhythm drifts across
    sessions, which makes repeatability vary from user to user.
    """
    if n_users < 2 or sessions < 1 or reps_per_session < 1:
        raise InvalidParam("need n_users >= 2, sessions >= 1 and reps_per_session >= 1")
    is_hold = np.array([n.startswith("H.") for n in CMU_FEATURE_NAMES])
    is_ud = np.array([n.startswith("UD.") for n in CMU_FEATURE_NAMES])
    users: dict[str, UserData] = {}
    width = max(3, len(str(n_users - 1)))
    for ui, seq in enumerate(np.random.SeedSequence(seed).spawn(n_users)):
        rng = np.random.default_rng(seq)
        uid = f"s{ui:0{width}d}"
        hold = rng.uniform(0.06, 0.14, N_KEYSTROKE_FEATURES)
        gap = rng.uniform(0.05, 0.35, N_KEYSTROKE_FEATURES)
        noise = rng.uniform(0.005, 0.03)
        drift = rng.uniform(0.0, 0.06)
        data = UserData(uid)
        for sess in range(1, sessions + 1):
            shift = drift * rng.standard_normal(N_KEYSTROKE_FEATURES)
            for rep in range(1, reps_per_session + 1):
                h = np.abs(hold + 0.3 * shift + noise * rng.standard_normal(N_KEYSTROKE_FEATURES))
                ud = gap + shift + noise * rng.standard_normal(N_KEYSTROKE_FEATURES)
                f = np.where(is_hold, h, np.where(is_ud, ud, np.abs(ud + h)))
                data.genuine.setdefault(sess, []).append(
                    KeystrokeSample(np.round(f, 4), uid, sess, rep))
        users[uid] = data
    manifest = DatasetManifest(modality="keystroke", csv="keystroke.csv", pressure_max=None)
    return Dataset(manifest, users)
