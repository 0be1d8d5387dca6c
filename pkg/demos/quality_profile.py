"""A small quality profile: zen against PCA and random projection.

Each method is fitted on a 1000-object witness set and evaluated on pairs
drawn from a separate 10^4-object sample. Kruskal stress is printed for a few
target dimensions; lower is better.
"""
from nsimplex import experiments as ex

cfg = ex.ExperimentConfig(methods="zen,pca,rp", dims="80,20,5,2", profile_recall=False, pairs=20_000)
cells, q_max = ex.run_profile(cfg)

print("method    k  kruskal  spearman")
for c in cells:
    r = c.report
    print(f"{c.method:>6} {c.k:>4}  {r.kruskal:.4f}   {r.spearman:.4f}")
