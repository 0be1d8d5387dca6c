"""How the three nSimplex estimators bracket the true distance.

Fit a transform on 20 reference points of 100-d uniform data, map a batch of
fresh pairs, and compare lwb / zen / upb against the original distances.
The implied rotation angle between the two apexes sits close to a right
angle, which is why zen is the better single guess.
"""
import numpy as np

import nsimplex as ns

rng = np.random.default_rng(0)
X = rng.random((2020, 100))
metric = ns.Metric("euclidean")
t = ns.fit(X[:20], metric)

A, B = X[20::2], X[21::2]
d = metric.paired(A, B)
lwb, zen, upb = ns.estimates(t.transform(A), t.transform(B))

print(f"pairs: {d.size}")
print(f"lwb <= d <= upb on every pair: {bool(np.all(lwb <= d + 1e-9) and np.all(d <= upb + 1e-9))}")
for name, e in (("lwb", lwb), ("zen", zen), ("upb", upb)):
    print(f"  {name}: mean |e - d| = {np.mean(np.abs(e - d)):.4f}")

YA, YB = t.transform(A[:500]), t.transform(B[:500])
theta = np.arccos([ns.implied_cos_theta(a, b, dd) for a, b, dd in zip(YA, YB, d[:500])])
print(f"implied apex angle: mean {theta.mean():.3f} rad, sd {theta.std():.3f} (pi/2 = {np.pi / 2:.3f})")
