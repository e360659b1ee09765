#!/usr/bin/env python3
"""Training-choice ablations on one seeded task.

Variant names follow {stage-2 sampling}+{stage-3 sampling}, R random and C
class-balanced; the default scheme is R+C with the classifier trained on
labeled data only. Runs five full trainings, a minute or so on a laptop CPU.
"""

from altsample.data import exponential_profile, synth_gaussian_task
from altsample.metrics import comparison_grid
from altsample.training import TrainConfig, ablation_variant, alternate_learn

profile = exponential_profile(10, 500, 100)
task = synth_gaussian_task(profile, d_in=16, unlabeled_factor=5, class_sep=3.5,
                           noise_sigma=1.5, test_per_class=200, seed=1)
cfg = TrainConfig(init_embed_epochs=60, init_classifier_epochs=10, loops=5,
                  stage2_epochs=15, stage3_epochs=5, batch_size=32,
                  widths=(64, 64), seed=1)

rows = []
_, trace = alternate_learn(task.labeled, task.unlabeled, cfg, test=task.test, splits=task.splits)
rows.append(("default R+C", trace.rows[-1].test))

for variant in ("R+R", "C+R", "C+C", "classifier_on_union"):
    _, rep = ablation_variant(task.labeled, task.unlabeled, cfg, variant,
                              test=task.test, splits=task.splits)
    rows.append((variant, rep))

print(comparison_grid(rows))
print("R+R and C+R train the classifier under random sampling and collapse on "
      "the tail. C+C balances stage 2 on pseudo labels, which amplifies their "
      "errors; on this small task it lands close to the default (averaged over "
      "seeds it stays behind).")
