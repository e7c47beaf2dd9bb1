"""Simulate a blind human-evaluation session and print the reports.

Two fake systems are rated by three raters; 20% of the tasks are assigned
to two raters so Cohen's kappa can be computed on the overlap.

Run: python3 demos/03_human_eval_session.py
"""

import random

from fec.evalservice import EvalService, Rating, create_batch

systems = {
    "evidence_fill": [
        {"claim": f"claim {i}", "evidence_texts": [f"evidence {i}"], "correction": f"good fix {i}"}
        for i in range(30)
    ],
    "copy_baseline": [
        {"claim": f"claim {i}", "evidence_texts": [f"evidence {i}"], "correction": f"claim {i}"}
        for i in range(30)
    ],
}

tasks = create_batch(systems, raters=["ann", "ben", "cass"], double_ratio=0.2, seed=3)
service = EvalService(tasks)

# simulate raters: the fill system is usually judged improved, the copy
# baseline supported but uncorrected
rng = random.Random(12)
for task in service.tasks.values():
    good_system = task.correction.startswith("good")
    for rater in task.raters:
        q1 = rng.random() < 0.95
        q2 = q1 and rng.random() < (0.9 if good_system else 0.7)
        if q2 and good_system and rng.random() < 0.85:
            q3 = "improved"
        elif q2 and not good_system:
            q3 = "no_correction_needed"
        else:
            q3 = "unrelated_added"
        service.submit_rating(Rating(task.task_id, rater, q1, q2, q3))

print("aggregate scores (% of tasks):")
for system, row in service.aggregate().items():
    print(
        f"  {system:<14} intelligible {row['intelligible']:5.1f}  "
        f"supported {row['supported']:5.1f}  corrected {row['corrected']:5.1f}  (n={row['n']})"
    )

print()
print("inter-rater agreement on the double-rated subset:")
for question, row in service.agreement().items():
    print(f"  {question}: kappa {row['kappa']:.3f} over {row['overlap']} tasks")
