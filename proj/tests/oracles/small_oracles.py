"""Brute-force references for the small fixtures frozen in the unit tests.

    python3 tests/oracles/small_oracles.py
"""

import itertools
import math
import random


def fmt(values):
    return ", ".join(f"{v:.17g}" for v in values)


# 2x2 symmetric eigendecomposition in closed form.
def pca_2x2():
    rows = [(1.0, 0.1), (-1.0, -0.1), (0.2, 1.0), (-0.2, -1.0)]
    n = len(rows)
    mx = sum(r[0] for r in rows) / n
    my = sum(r[1] for r in rows) / n
    a = sum((r[0] - mx) ** 2 for r in rows) / n
    b = sum((r[0] - mx) * (r[1] - my) for r in rows) / n
    c = sum((r[1] - my) ** 2 for r in rows) / n
    mid = (a + c) / 2
    rad = math.sqrt(((a - c) / 2) ** 2 + b * b)
    l1, l2 = mid + rad, mid - rad
    comps = []
    for lam in (l1, l2):
        v = (b, lam - a) if abs(b) > 1e-15 else ((1.0, 0.0) if abs(lam - a) < abs(lam - c) else (0.0, 1.0))
        norm = math.hypot(*v)
        v = (v[0] / norm, v[1] / norm)
        first = next(x for x in v if abs(x) > 1e-12)
        if first < 0:
            v = (-v[0], -v[1])
        comps.append(v)
    trace = a + c
    print("// pca 2x2: components then weights")
    print("kPcaComponents = {", fmt(comps[0] + comps[1]), "}")
    print("kPcaWeights = {", fmt((l1 / trace, l2 / trace)), "}")


# Soft projection expanded term by term.
def gram_soft():
    h = (1.0, 2.0, 3.0)
    g1 = (1 / 3, 2 / 3, 2 / 3)
    g2 = (2 / 3, 1 / 3, -2 / 3)
    v = (0.7, 0.2)
    c1 = sum(x * y for x, y in zip(h, g1))
    c2 = sum(x * y for x, y in zip(h, g2))
    out = [h[i] - v[0] * c1 * g1[i] - v[1] * c2 * g2[i] for i in range(3)]
    print("kGramSoft = {", fmt(out), "}")


def avg_ranks(xs):
    order = sorted(range(len(xs)), key=lambda i: xs[i])
    ranks = [0.0] * len(xs)
    i = 0
    while i < len(xs):
        j = i
        while j + 1 < len(xs) and xs[order[j + 1]] == xs[order[i]]:
            j += 1
        for k in range(i, j + 1):
            ranks[order[k]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def pearson(a, b):
    ma, mb = sum(a) / len(a), sum(b) / len(b)
    num = sum((x - ma) * (y - mb) for x, y in zip(a, b))
    den = math.sqrt(sum((x - ma) ** 2 for x in a) * sum((y - mb) ** 2 for y in b))
    return num / den


def spearman_perm(x, y):
    rho = pearson(avg_ranks(x), avg_ranks(y))
    hits = total = 0
    for perm in itertools.permutations(y):
        r = pearson(avg_ranks(x), avg_ranks(list(perm)))
        hits += abs(r) >= abs(rho) - 1e-12
        total += 1
    return rho, hits / total, total


def spearman_fixtures():
    x, y = [1.0, 2.0, 2.0, 4.0, 5.0], [3.0, 1.0, 4.0, 4.0, 5.0]
    rho, p, total = spearman_perm(x, y)
    print(f"// n=5 with ties, {total} orderings")
    print(f"kTiesRho = {rho:.17g}; kTiesP = {p:.17g};")
    s = [0.3, 0.1, 0.5, 0.2, 0.25, 0.9]
    eta = [0.05, 0.2, 0.01, 0.3, 0.1, 0.02]
    rho, p, total = spearman_perm(s, eta)
    print(f"// 6-row report, {total} orderings")
    print(f"kReportRho = {rho:.17g}; kReportP = {p:.17g};")


def top_mean(values, ids, frac):
    k = math.ceil(frac * len(values) - 1e-9)
    order = sorted(range(len(values)), key=lambda i: (-values[i], ids[i]))
    return sum(values[i] for i in order[:k]) / k


def metric_fixture():
    rng = random.Random(11)
    rows = [[round(rng.random(), 4) for _ in range(6)] for _ in range(20)]
    rows[7] = list(rows[3])  # tie at the top
    print("// 20 pairs: p_stereo, p_anti, p_unr, p_stereo_gs, p_anti_gs, p_unr_gs")
    print("kPairs = {")
    for r in rows:
        print("    {", fmt(r), "},")
    print("}")
    ids = [f"p{i:02d}" for i in range(20)]
    s = [r[0] - r[1] - r[4] + r[3] for r in rows]
    d = [abs(r[2] - r[5]) for r in rows]
    for frac in (0.1, 0.15, 0.25, 1.0):
        print(f"top_frac {frac}: S = {top_mean(s, ids, frac):.17g}, D = {top_mean(d, ids, frac):.17g}")


def best_fixture():
    rows = [
        ("none", 0.40, 0.30, 0.10, True),
        ("sent(0)", 0.35, 0.25, 0.12, True),
        ("sent(1)", 0.35, 0.20, 0.15, False),
        ("final(0,0,0)", 0.30, 0.28, 0.05, True),
        ("final(0,1,1)", 0.20, 0.28, 0.30, False),
        ("final(1,1,0)", 0.25, 0.10, 0.20, True),
        ("penult(0,0,0,0,0)", 0.50, 0.05, 0.01, True),
        ("penult(1,0,1,0,1)", 0.10, 0.05, 0.40, False),
        ("penult(1,1,1,1,1)", 0.15, 0.30, 0.25, True),
        ("penult_attn(0,0,0,0,0)", 0.05, 0.50, 0.50, False),
        ("penult_attn(0,1,0,1,0)", 0.05, 0.40, 0.45, False),
    ]
    print("// best per level: (level, min_S, min_D, max_eta) row indices, -1 when absent")
    for level in ("none", "sent", "final", "penult", "penult_attn"):
        idx = [i for i, r in enumerate(rows) if r[0].split("(")[0] == level]
        min_s = min(idx, key=lambda i: (rows[i][1], i))
        min_d = min(idx, key=lambda i: (rows[i][2], i))
        viable = [i for i in idx if rows[i][4]]
        max_eta = min(viable, key=lambda i: (-rows[i][3], i)) if viable else -1
        print(f"  {{Level::?, {min_s}, {min_d}, {max_eta}}},  // {level}")


if __name__ == "__main__":
    pca_2x2()
    gram_soft()
    spearman_fixtures()
    metric_fixture()
    best_fixture()
