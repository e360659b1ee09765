#!/usr/bin/env python3
"""Build long-tailed class-count profiles and tag many/medium/few splits.

Shows the exponential profile used for the 10-class benchmarks, the two Lomax
variants for the 1000-class setting, and both split-assignment modes.
"""

import numpy as np

from altsample.data import (
    CountThresholds,
    RankBuckets,
    assign_splits,
    exponential_profile,
    lomax_profile,
    lomax_shape_profile,
)

# Exponential decay from 500 down to 500/imbalance. Class 0 is the head.
for imbalance in (10, 100, 1000):
    prof = exponential_profile(10, 500, imbalance)
    print(f"exponential imb={imbalance:<5} counts={prof.counts.tolist()}  N={prof.total}")

print()

# Rank buckets: most populated 3 classes are many-shot, next 3 medium, rest few.
prof = exponential_profile(10, 500, 100)
spec = assign_splits(prof, RankBuckets(3, 3))
for split in ("many", "medium", "few"):
    classes = spec.classes(split)
    print(f"{split:>7}: classes {classes.tolist()} with counts {prof.counts[classes].tolist()}")

print()

# Count thresholds (the 1000-class convention): many n>100, medium 10<n<=100, few n<=10.
shaped = lomax_shape_profile(1000, alpha=6.0, scale=1000.0, n_max=250, floor=2)
spec = assign_splits(shaped, CountThresholds(hi=100, lo=10))
sizes = {s: len(spec.classes(s)) for s in ("many", "medium", "few")}
print(f"lomax-shaped profile: total={shaped.total} max={shaped.counts[0]} min={shaped.counts[-1]}")
print(f"split sizes under (100, 10] thresholds: {sizes}")

print()

# Randomly drawn Lomax counts, clamped into [2, 250] and sorted.
drawn = lomax_profile(1000, alpha=6.0, scale=1000.0, cap=250, floor=2, seed=0)
print(f"lomax random draws:   total={drawn.total} "
      f"head counts={drawn.counts[:5].tolist()} tail counts={drawn.counts[-5:].tolist()}")
print("(the drawn variant has a much heavier body; the shaped variant pins the "
      "head at n_max and tapers to the floor)")
