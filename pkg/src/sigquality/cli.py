"""Command line front end.

    sigquality synth   --out DIR [--seed 7 --n-users 20 ...]
    sigquality extract --manifest DIR/manifest.json --out FEATDIR
    sigquality quality --manifest ... --out QDIR
    sigquality eval    --manifest ... --out EVALDIR [--verifier dtw --workers 4]
    sigquality import-scores --scores scores.csv [--quality quality.csv] --out DIR

Every option can also come from a ``--config`` file of ``key = value`` lines
(``#`` starts a comment); flags given on the command line win. Exit status is
0 on success, 1 when some data-quality warning was raised, 2 on usage or
configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import sys
from pathlib import Path

import numpy as np

from .errors import InsufficientSamples, SigQualityError
from .evaluation import (
    EvalReport,
    Protocol,
    _split,
    analyse_scores,
    curves_csv,
    evaluate,
    gating_csv,
    quality_csv,
    quality_metrics,
    roc_csv,
)
from .features import HistogramSpec, extract_features, render_features_csv
from .ingest import DatasetManifest, load_dataset, read_svc, synth_corpus, write_dataset
from .quality import assess, build_template, empirical_population_stats, generic_population_stats
from .verify import ScoreMatrix, make_verifier

CONFIG_SCHEMA = 1
EXIT_OK, EXIT_WARN, EXIT_USAGE = 0, 1, 2


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in str(text).replace(",", " ").split())


def _bool(text) -> bool:
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt_int(text):
    return None if str(text).strip().lower() in ("", "none", "all") else int(text)


@dataclasses.dataclass
class RunConfig:
    schema: int = CONFIG_SCHEMA
    manifest: str | None = None
    out: str | None = None
    verifier: str = "histogram"
    seed: int = 0
    # histogram layout
    speed_edges: tuple[float, ...] = (0.5, 1.0, 2.0)
    angle_bins: int = 16
    pressure_bins: int = 16
    use_time: bool = False
    # protocol
    selection: str = "random"
    enroll_count: int = 5
    validation_count: int = 0
    repeat_times: int = 1
    imposter_source: str = "random_forgery"
    imposters_per_user: int | None = None
    # quality
    population: str = "generic"
    l_pop: int = 147
    metrics: tuple[str, ...] = ("distinctiveness", "complexity", "repeatability")
    fraction: float = 0.1
    workers: int = 1
    # synth
    n_users: int = 20
    samples_per_user: int = 20
    sessions: int = 2
    consistency: tuple[float, ...] = (0.8,)
    complexity_knob: float = 1.0
    forgeries_per_user: int = 0
    # import-scores
    scores: str | None = None
    quality: str | None = None

    def histogram_spec(self) -> HistogramSpec:
        return HistogramSpec(self.speed_edges, self.angle_bins, self.pressure_bins, self.use_time)

    def protocol(self) -> Protocol:
        return Protocol(self.enroll_count, self.selection, self.validation_count, self.repeat_times,
                        self.imposter_source, self.imposters_per_user, self.seed)


_CONVERTERS = {
    "speed_edges": _floats, "consistency": _floats, "use_time": _bool,
    "imposters_per_user": _opt_int,
    "metrics": lambda s: tuple(m for m in str(s).replace(",", " ").split()),
}


def _convert(key: str, value):
    fields = {f.name: f for f in dataclasses.fields(RunConfig)}
    if key not in fields:
        raise ValueError(f"unknown config key {key!r}")
    if key in _CONVERTERS:
        return _CONVERTERS[key](value)
    default = fields[key].default
    if isinstance(default, bool):
        return _bool(value)
    if isinstance(default, int):
        return int(value)
    if isinstance(default, float):
        return float(value)
    return str(value)


def parse_config(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        key = key.replace("-", "_")
        out[key] = _convert(key, value)
    if out.get("schema", CONFIG_SCHEMA) != CONFIG_SCHEMA:
        raise ValueError(f"unsupported config schema {out['schema']}")
    return out


def build_config(args: argparse.Namespace) -> RunConfig:
    values = {}
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise ValueError(f"config file not found: {path}")
        values.update(parse_config(path.read_text(encoding="utf-8")))
    for f in dataclasses.fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = _convert(f.name, v)
    cfg = RunConfig(**values)
    unknown = set(cfg.metrics) - {"distinctiveness", "complexity", "repeatability"}
    if unknown:
        raise ValueError(f"unknown metrics: {sorted(unknown)}")
    if not 0 < cfg.fraction < 1:
        raise ValueError("fraction must lie strictly between 0 and 1")
    if cfg.workers < 1:
        raise ValueError("workers must be >= 1")
    return cfg


def _need(cfg: RunConfig, *keys: str) -> None:
    for k in keys:
        if getattr(cfg, k) in (None, ""):
            raise ValueError(f"--{k.replace('_', '-')} is required")


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _manifest_path(cfg: RunConfig) -> Path:
    _need(cfg, "manifest")
    path = Path(cfg.manifest)
    if path.is_dir():
        path = path / "manifest.json"
    if not path.is_file():
        raise ValueError(f"manifest not found: {path}")
    return path


# ---------------------------------------------------------------------------
# commands

def cmd_synth(cfg: RunConfig) -> int:
    _need(cfg, "out")
    ds = synth_corpus(cfg.seed, cfg.n_users, cfg.samples_per_user, cfg.sessions,
                      cfg.consistency if len(cfg.consistency) > 1 else cfg.consistency[0],
                      cfg.complexity_knob, cfg.forgeries_per_user)
    path = write_dataset(ds, cfg.out)
    print(f"wrote {len(ds.users)} users to {path.parent}")
    return EXIT_OK


def cmd_extract(cfg: RunConfig) -> int:
    _need(cfg, "out")
    mpath = _manifest_path(cfg)
    manifest = DatasetManifest.from_json(mpath.read_text(encoding="utf-8"))
    if manifest.modality != "signature":
        raise ValueError("extract works on signature datasets only")
    spec = cfg.histogram_spec()
    status = EXIT_OK
    out = Path(cfg.out)
    for entry in manifest.users:
        feats = []
        refs = [(sess, p, "genuine") for sess, paths in sorted(entry.genuine.items()) for p in paths]
        refs += [(0, p, "skilled_forgery") for p in entry.forgeries]
        for sess, rel, label in refs:
            try:
                sample = read_svc(mpath.parent / rel, user_id=entry.user_id, session_id=sess, label=label)
                feats.append(extract_features(sample, spec, pressure_max=manifest.pressure_max))
            except (OSError, SigQualityError) as exc:
                print(f"error: {rel}: {exc}", file=sys.stderr)
                status = EXIT_WARN
        _write(out / f"{entry.user_id}.csv", render_features_csv(feats, spec))
    print(f"wrote features for {len(manifest.users)} users to {out}")
    return status


def cmd_quality(cfg: RunConfig) -> int:
    _need(cfg, "out")
    ds = load_dataset(_manifest_path(cfg))
    if ds.modality != "signature":
        raise ValueError("quality works on signature datasets only")
    spec = cfg.histogram_spec()
    protocol = cfg.protocol()
    verifier = make_verifier(cfg.verifier, **({"spec": spec, "pressure_max": ds.pressure_max}
                                              if cfg.verifier == "histogram" else {}))
    all_feats = {id(s): extract_features(s, spec, pressure_max=ds.pressure_max)
                 for u in ds.users.values() for s in u.all_genuine()}
    if len(ds.users) < 2:
        raise ValueError("need at least 2 users")
    with_p = all(f.has_pressure for f in all_feats.values())
    if cfg.population == "empirical":
        pop = empirical_population_stats(list(all_feats.values()))
    else:
        pop = generic_population_stats(spec, cfg.l_pop, with_pressure=with_p)

    status = EXIT_OK
    rows = {}
    for ui, (uid, user) in enumerate(ds.users.items()):
        rng = np.random.default_rng([protocol.seed, 0, ui])
        genuine = user.all_genuine()
        try:
            try:
                enroll, validation, _ = _split(user, protocol, rng)
            except InsufficientSamples:
                if protocol.validation_count == 0:
                    raise
                rng = np.random.default_rng([protocol.seed, 0, ui])
                enroll, validation, _ = _split(user, dataclasses.replace(protocol, validation_count=0), rng)
            template = build_template([all_feats[id(genuine[i])] for i in enroll], uid)
            # repeatability needs genuines from sessions the template never saw
            enrolled_sessions = {genuine[i].session_id for i in enroll}
            validation = [i for i in validation if genuine[i].session_id not in enrolled_sessions]
            scores = None
            if validation and "repeatability" in cfg.metrics:
                model = verifier.enroll([verifier.prepare(genuine[i]) for i in enroll])
                scores = [verifier.score(model, verifier.prepare(genuine[i])) for i in validation]
            report = assess(template, pop, scores).to_dict()
            report.pop("per_feature_d")
            for m in ("distinctiveness", "complexity", "repeatability"):
                if m not in cfg.metrics:
                    report[m] = None
            if "repeatability" in cfg.metrics and report["repeatability"] is None:
                status = EXIT_WARN
        except SigQualityError as exc:
            print(f"warning: user {uid}: {exc}", file=sys.stderr)
            report = {"flags": [f"error:{type(exc).__name__}"]}
            status = EXIT_WARN
        rows[uid] = report
    out = Path(cfg.out)
    _write(out / "quality.csv", quality_csv(rows))
    _write(out / "quality.json", json.dumps(rows, indent=1, sort_keys=True) + "\n")
    print(f"wrote quality for {len(rows)} templates to {out}")
    return status


def _write_report(out: Path, report: EvalReport) -> None:
    _write(out / "report.json", report.to_json())
    _write(out / "curves.csv", curves_csv(report.quartiles))
    if report.roc:
        _write(out / "roc.csv", roc_csv(report.roc))
    if report.gating:
        _write(out / "gating.csv", gating_csv(report.gating))
    if report.quality:
        _write(out / "quality.csv", quality_csv(report.quality))


def cmd_eval(cfg: RunConfig) -> int:
    _need(cfg, "out")
    ds = load_dataset(_manifest_path(cfg))
    kwargs = {}
    if cfg.verifier == "histogram":
        kwargs = {"spec": cfg.histogram_spec(), "pressure_max": ds.pressure_max}
    verifier = make_verifier(cfg.verifier, **kwargs)
    report, matrix = evaluate(ds, cfg.protocol(), verifier, spec=cfg.histogram_spec(),
                              population=cfg.population, L_pop=cfg.l_pop, fraction=cfg.fraction,
                              workers=cfg.workers)
    out = Path(cfg.out)
    _write(out / "scores.csv", matrix.to_csv())
    _write_report(out, report)
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(f"wrote evaluation of {report.n_templates} templates to {out}")
    return EXIT_WARN if report.warnings else EXIT_OK


def parse_quality_csv(text: str) -> dict[str, dict]:
    """Read the ``quality.csv`` written by ``quality``/``eval`` back into per-template dicts."""
    reader = csv.DictReader(io.StringIO(text))
    key = "template" if "template" in (reader.fieldnames or []) else None
    if key is None:
        raise ValueError("quality CSV needs a 'template' column")
    out = {}
    for row in reader:
        entry = {}
        for name in ("distinctiveness", "complexity", "repeatability"):
            v = row.get(name, "")
            entry[name] = float(v) if v not in ("", None) else None
        out[row[key]] = entry
    return out


def cmd_import_scores(cfg: RunConfig) -> int:
    _need(cfg, "scores", "out")
    path = Path(cfg.scores)
    if not path.is_file():
        raise ValueError(f"score file not found: {path}")
    matrix = ScoreMatrix.from_csv(path.read_text(encoding="utf-8"))
    metrics = {}
    if cfg.quality:
        qpath = Path(cfg.quality)
        if not qpath.is_file():
            raise ValueError(f"quality file not found: {qpath}")
        quality = parse_quality_csv(qpath.read_text(encoding="utf-8"))
        metrics = {m: v for m, v in quality_metrics(quality).items() if m in cfg.metrics}
    report = analyse_scores(matrix, metrics, cfg.fraction)
    _write_report(Path(cfg.out), report)
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(f"analysed {len(matrix)} external scores over {report.n_templates} templates")
    return EXIT_WARN if report.warnings else EXIT_OK


COMMANDS = {
    "synth": cmd_synth,
    "extract": cmd_extract,
    "quality": cmd_quality,
    "eval": cmd_eval,
    "import-scores": cmd_import_scores,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sigquality", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value config file; flags override it")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int)

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--manifest", help="dataset manifest.json (or its directory)")
    data.add_argument("--speed-edges", dest="speed_edges", help="comma separated relative-speed edges")
    data.add_argument("--angle-bins", dest="angle_bins", type=int)
    data.add_argument("--pressure-bins", dest="pressure_bins", type=int)
    data.add_argument("--use-time", dest="use_time", choices=["true", "false"])

    proto = argparse.ArgumentParser(add_help=False)
    proto.add_argument("--verifier", choices=["histogram", "dtw", "keystroke_euclidean"])
    proto.add_argument("--selection", choices=["random", "first_session", "ordered"])
    proto.add_argument("--enroll-count", dest="enroll_count", type=int)
    proto.add_argument("--validation-count", dest="validation_count", type=int)
    proto.add_argument("--repeat-times", dest="repeat_times", type=int)
    proto.add_argument("--imposter-source", dest="imposter_source",
                       choices=["random_forgery", "skilled_forgery", "both"])
    proto.add_argument("--imposters-per-user", dest="imposters_per_user")
    proto.add_argument("--population", choices=["generic", "empirical"])
    proto.add_argument("--l-pop", dest="l_pop", type=int, help="random-signature length (default 147)")
    proto.add_argument("--metrics", help="comma separated subset of distinctiveness,complexity,repeatability")

    gate = argparse.ArgumentParser(add_help=False)
    gate.add_argument("--fraction", type=float, help="share of templates discarded by gating")
    gate.add_argument("--workers", type=int, help="worker processes (output does not depend on it)")

    p = sub.add_parser("synth", parents=[common], help="write a seeded synthetic corpus")
    p.add_argument("--n-users", dest="n_users", type=int)
    p.add_argument("--samples-per-user", dest="samples_per_user", type=int)
    p.add_argument("--sessions", type=int)
    p.add_argument("--consistency", help="value, or comma separated values drawn per user")
    p.add_argument("--complexity-knob", dest="complexity_knob", type=float)
    p.add_argument("--forgeries-per-user", dest="forgeries_per_user", type=int)

    sub.add_parser("extract", parents=[common, data], help="write per-user feature CSVs")
    sub.add_parser("quality", parents=[common, data, proto], help="score template quality")
    sub.add_parser("eval", parents=[common, data, proto, gate], help="run the evaluation protocol")
    p = sub.add_parser("import-scores", parents=[common, gate], help="analyse an external score CSV")
    p.add_argument("--scores", help="CSV: test_user,test_session,test_label,target_user,score")
    p.add_argument("--quality", help="quality.csv with per-template metrics")
    p.add_argument("--metrics", help="comma separated metrics to use from --quality")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = build_config(args)
        return COMMANDS[args.command](cfg)
    except (SigQualityError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
