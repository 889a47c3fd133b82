"""Analyse scores produced by some other verifier.

Any system that writes one row per (test sample, template) comparison can be
analysed without rerunning it. Quality values are optional; without them
only the error rates are computed.

    python demos/import_external_scores.py
"""

import numpy as np

from sigquality import ScoreMatrix
from sigquality.evaluation import analyse_scores

rng = np.random.default_rng(0)
users = [f"u{k:02d}" for k in range(12)]
spread = {u: rng.uniform(0.5, 2.0) for u in users}  # some users are harder to verify

lines = [",".join(ScoreMatrix.CSV_HEADER)]
for target in users:
    for test in users:
        label = "genuine"
        for k in range(6):
            if test == target:
                score = abs(rng.normal(1.0, 0.3 * spread[target]))
            else:
                score = abs(rng.normal(4.0 / spread[target], 0.8))
            lines.append(f"{test},{1 + k // 3},{label},{target},{score:.6f}")
matrix = ScoreMatrix.from_csv("\n".join(lines) + "\n")

# pretend a quality tool rated the users; here it knows the true spread
quality = {"distinctiveness": {u: 1.0 / spread[u] for u in users}}
report = analyse_scores(matrix, quality)

print(f"{len(matrix)} scores over {report.n_templates} templates")
print(f"random-forgery EER: {report.eer['random_forgery']['rate']:.2%}")
print("Spearman(distinctiveness, golden rank):",
      {k: round(v, 3) for k, v in report.spearman["distinctiveness"].items()})
for r in report.gating["rows"]:
    print(f"  {r['constraint']:15s} n={r['n_templates']:2d} FAR-RF={r['far_rf']:.2%} FRR={r['frr']:.2%}")
