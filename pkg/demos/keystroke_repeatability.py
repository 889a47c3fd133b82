"""Repeatability on keystroke timings.

Only repeatability applies to keystroke templates: it needs nothing but a
dissimilarity score. Here each user's first 20 typings form the template,
the next 10 measure repeatability, and the rest are genuine tests.

    python demos/keystroke_repeatability.py
"""

from sigquality import Protocol, evaluate, make_verifier, synth_keystroke_corpus

ds = synth_keystroke_corpus(seed=3, n_users=15, sessions=4, reps_per_session=15)
proto = Protocol(enroll_count=20, selection="ordered", validation_count=10)
report, matrix = evaluate(ds, proto, make_verifier("keystroke_euclidean"))

threshold = report.eer["random_forgery"]["threshold"]
rows = []
for tid, q in report.quality.items():
    genuine = matrix.scores(tid, "genuine")
    rows.append((q["repeatability"], float((genuine > threshold).mean()), tid))

print(f"EER threshold {threshold:.4f}; templates sorted by repeatability")
print(f"{'template':>9} {'repeat.':>9} {'FRR':>7}")
for rep, frr, tid in sorted(rows):
    print(f"{tid:>9} {rep:9.2f} {frr:7.2%}")
print(f"\nSpearman(repeatability, max genuine score rank): "
      f"{report.spearman['repeatability']['max_score']:+.2f}")
