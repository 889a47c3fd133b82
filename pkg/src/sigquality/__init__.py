"""Quality measures for online signature (and keystroke) templates.

Distinctiveness, complexity and repeatability of a user's enrolled samples,
the verifiers used to validate them, and the evaluation harness around both.
"""

from .errors import SigQualityError
from .evaluation import (
    ErrorCurve,
    EvalReport,
    GoldenRank,
    Protocol,
    QuartileCurves,
    eer,
    eer_from_scores,
    evaluate,
    far_frr,
    gate_combined,
    gate_templates,
    gating_table,
    golden_rank,
    hter,
    quartile_curves,
    roc,
    run_protocol,
    spearman,
)
from .features import (
    DEFAULT_SPEC,
    FeatureVector,
    HistogramSpec,
    drawing_vectors,
    extract_features,
)
from .ingest import (
    Dataset,
    DatasetManifest,
    KeystrokeSample,
    Label,
    PenPoint,
    SignatureSample,
    load_dataset,
    parse_keystroke_csv,
    parse_svc,
    render_keystroke_csv,
    render_svc,
    synth_corpus,
    synth_keystroke_corpus,
    write_dataset,
)
from .quality import (
    PopulationStats,
    QualityReport,
    Template,
    assess,
    build_template,
    complexity,
    decidability,
    distinctiveness,
    emd_complexity,
    empirical_population_stats,
    generic_population_stats,
    inverse_dispersion,
    repeatability,
)
from .verify import (
    DTWVerifier,
    HistogramVerifier,
    KeystrokeVerifier,
    ScoreMatrix,
    dtw_distance,
    dtw_score,
    histogram_enroll,
    histogram_score,
    keystroke_score,
    make_verifier,
)

__version__ = "0.1.0"
