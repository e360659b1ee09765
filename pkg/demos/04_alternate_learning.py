#!/usr/bin/env python3
"""End-to-end alternate learning on a seeded synthetic long-tailed task.

Prints the loop-by-loop pseudo-label accuracy table (watch the few-shot
column climb while overall barely moves: the unlabeled pool is long-tailed,
so head classes dominate the overall number) and compares the final model
against the decoupled initialization and the fixed-pseudo-label baseline.

Takes roughly ten seconds on a laptop CPU.
"""

import numpy as np

from altsample.data import exponential_profile, synth_gaussian_task
from altsample.training import TrainConfig, alternate_learn, baseline_pseudo_label

profile = exponential_profile(10, 500, 100)
task = synth_gaussian_task(profile, d_in=16, unlabeled_factor=5, class_sep=3.5,
                           noise_sigma=1.5, test_per_class=200, seed=1)
cfg = TrainConfig(init_embed_epochs=60, init_classifier_epochs=10, loops=5,
                  stage2_epochs=15, stage3_epochs=5, batch_size=32,
                  widths=(64, 64), seed=1)

print(f"labeled N={len(task.labeled)}, unlabeled M={len(task.unlabeled)}, "
      f"counts {task.labeled.class_counts.tolist()}")

model, trace = alternate_learn(task.labeled, task.unlabeled, cfg,
                               test=task.test, splits=task.splits)

print("\npseudo-label accuracy on the unlabeled subset:")
print(f"{'loop':>4} {'overall':>8} {'many':>8} {'medium':>8} {'few':>8}")
for row in trace.rows:
    p = row.pseudo
    print(f"{row.loop:>4} {p.overall:>8.3f} {p.split_acc['many']:>8.3f} "
          f"{p.split_acc['medium']:>8.3f} {p.split_acc['few']:>8.3f}")

print("\nbalanced test accuracy:")
print(f"{'model':<16} {'overall':>8} {'many':>8} {'medium':>8} {'few':>8}")


def show(name, rep):
    print(f"{name:<16} {rep.overall:>8.3f} {rep.split_acc['many']:>8.3f} "
          f"{rep.split_acc['medium']:>8.3f} {rep.split_acc['few']:>8.3f}")


show("initialization", trace.init_test)
show("alternate", trace.rows[-1].test)

_, base_rep = baseline_pseudo_label(task.labeled, task.unlabeled, cfg,
                                    test=task.test, splits=task.splits)
show("pseudo-baseline", base_rep)

print(f"\nembedding epochs spent: {trace.embedding_epochs} "
      f"(init {cfg.init_embed_epochs} + {cfg.loops} loops x {cfg.stage2_epochs}); "
      f"the baseline consumes the same budget in one long fine-tune")
