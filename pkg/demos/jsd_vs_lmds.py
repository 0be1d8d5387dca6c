"""Jensen-Shannon data has no vector coordinates to project.

PCA and random projection do not apply, but nSimplex and landmark MDS only
need distances. This compares their Kruskal stress on 100-d probability
vectors at a few target dimensions.
"""
from nsimplex import experiments as ex

cfg = ex.ExperimentConfig(metric="jsd", methods="zen,lmds", dims="80,20,5", profile_recall=False, pairs=20_000)
cells, _ = ex.run_profile(cfg)
for c in cells:
    print(f"{c.method:>5} k={c.k:<3} kruskal={c.report.kruskal:.4f}")
