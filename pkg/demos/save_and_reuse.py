"""Fit once, save the transform, and apply it later to new data."""
import os
import tempfile

import numpy as np

import nsimplex as ns

rng = np.random.default_rng(1)
refs = rng.random((10, 50))
t = ns.fit(refs, ns.Metric("cosine"))

path = os.path.join(tempfile.mkdtemp(), "zen-10.nsxf")
ns.save_transform(path, t)
print(f"saved {os.path.getsize(path)} bytes to {path}")

u = ns.load_transform(path)
new = rng.random((5, 50))
print("reloaded transform gives identical output:", np.array_equal(u.transform(new), t.transform(new)))
print(u.transform(new)[:, :4].round(4))
