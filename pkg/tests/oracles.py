"""Independent reference implementations used only by the tests.

Written as plain scalar loops or brute force so they share no code path with
the library.
"""
import itertools
import math


def euclid(u, v):
    s = 0.0
    for a, b in zip(u, v):
        s += (a - b) * (a - b)
    return math.sqrt(s)


def jsd(u, v):
    def h(x):
        return 0.0 if x == 0 else -x * math.log2(x)

    s = 0.0
    for a, b in zip(u, v):
        s += h(a) + h(b) - h(a + b)
    return math.sqrt(max(1.0 - 0.5 * s, 0.0))


def triangular(u, v):
    s = 0.0
    for a, b in zip(u, v):
        if a + b > 0:
            s += (a - b) ** 2 / (a + b)
    return math.sqrt(0.5 * s)


def quadratic_form(M, u, v):
    d = [a - b for a, b in zip(u, v)]
    s = 0.0
    for i in range(len(d)):
        for j in range(len(d)):
            s += d[i] * M[i][j] * d[j]
    return math.sqrt(max(s, 0.0))


def chord(u, v):
    nu = math.sqrt(sum(a * a for a in u))
    nv = math.sqrt(sum(b * b for b in v))
    c = sum(a * b for a, b in zip(u, v)) / (nu * nv)
    theta = math.acos(max(-1.0, min(1.0, c)))
    return 2.0 * math.sin(theta / 2.0)


def distance_matrix(points, d=euclid):
    n = len(points)
    return [[d(points[i], points[j]) for j in range(n)] for i in range(n)]


def padded_row_distance(a, b):
    w = max(len(a), len(b))
    a = list(a) + [0.0] * (w - len(a))
    b = list(b) + [0.0] * (w - len(b))
    return euclid(a, b)


def isotonic_maxmin(y, w=None):
    """d*_i = max_{j<=i} min_{k>=i} weighted mean(y[j..k])."""
    n = len(y)
    w = [1.0] * n if w is None else list(w)
    out = []
    for i in range(n):
        best = -math.inf
        for j in range(i + 1):
            worst = math.inf
            for k in range(i, n):
                m = sum(y[t] * w[t] for t in range(j, k + 1)) / sum(w[j : k + 1])
                worst = min(worst, m)
            best = max(best, worst)
        out.append(best)
    return out


def isotonic_by_key(key, y):
    """Fit of y non-decreasing in key, ties in key pooled first; input order."""
    groups = {}
    for k, v in zip(key, y):
        groups.setdefault(k, []).append(v)
    keys = sorted(groups)
    means = [sum(groups[k]) / len(groups[k]) for k in keys]
    weights = [len(groups[k]) for k in keys]
    fitted = dict(zip(keys, isotonic_maxmin(means, weights)))
    return [fitted[k] for k in key]


def kruskal(delta, zeta):
    dstar = isotonic_by_key(list(delta), list(zeta))
    num = sum((z - d) ** 2 for z, d in zip(zeta, dstar))
    den = sum(z * z for z in zeta)
    return math.sqrt(num / den)


def average_ranks(x):
    order = sorted(range(len(x)), key=lambda i: x[i])
    ranks = [0.0] * len(x)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and x[order[j + 1]] == x[order[i]]:
            j += 1
        r = (i + j) / 2.0 + 1.0
        for t in range(i, j + 1):
            ranks[order[t]] = r
        i = j + 1
    return ranks


def spearman(a, b):
    ra, rb = average_ranks(a), average_ranks(b)
    T = len(a)
    return 1.0 - 6.0 * sum((x - y) ** 2 for x, y in zip(ra, rb)) / (T**3 - T)


def relevance(i):
    return 1.0 - 1.0 / (1.0 + math.exp(-(i - 500) / 100))


def dcg(true_nn, reduced_nn):
    pos = {v: i for i, v in enumerate(true_nn)}
    total = 0.0
    for i, v in enumerate(reduced_nn, start=1):
        rel = relevance(pos[v]) if v in pos else 0.0
        total += (2.0**rel - 1.0) / math.log2(i + 1)
    return total


def knn_fullsort(points, q, K, d=euclid, exclude=None):
    cand = [(d(points[q] if exclude is not None else q, p), i) for i, p in enumerate(points) if i != exclude]
    cand.sort()
    return [i for _, i in cand[:K]]


def apex_trace(base, dists):
    """Algorithm trace with lists, zero-padded base rows."""
    n = len(base)
    out = [dists[0]] + [0.0] * (n - 1)
    for i in range(1, n):
        row = list(base[i]) + [0.0] * (n - 1 - len(base[i]))
        l = euclid(row[:i], out[:i])
        x = row[i - 1]
        y = out[i - 1]
        out[i - 1] = y - (dists[i] ** 2 - l**2) / (2 * x)
        out[i] = math.sqrt(max(y * y - out[i - 1] ** 2, 0.0))
    return out


def all_pairs(n):
    return list(itertools.combinations(range(n), 2))
