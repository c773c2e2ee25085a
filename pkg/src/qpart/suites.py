"""Randomised verification suites shared by ``qpart verify`` and the tests.

Each suite returns a plain dict with an ``ok`` flag, summary numbers and,
when something fails, the first failing case as a machine-readable witness.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .classify import (
    Partition,
    audit_smoothness,
    cover_lp,
    harmonic,
    is_q_partitioning,
    price_lp,
)
from .concent import (
    ProductSpace,
    check_self_bounding,
    mc_tail,
    median_mean_bound_qpart,
    tail_bound_qpart,
    tail_bound_schechtman,
    verify_isoperimetric,
)
from .costshare import coalition_violations, greedy_prices
from .posted import verify_minimax_step
from .setfn import Valuation, gen_random_subadditive, gen_threshold, gen_xos, popcount

SUITES = ("smoothness", "duality", "greedy", "selfbounding", "iso", "tails", "minimax")


def random_xos(m: int, rng: np.random.Generator, clauses: int = 3, denom: int = 4) -> Valuation:
    """XOS with clause weights in {0, 1/denom, ..., 1}, hence 1-Lipschitz."""
    w = rng.integers(0, denom + 1, size=(clauses, m))
    return gen_xos(m, [[Fraction(int(x), denom) for x in row] for row in w])


def random_partition(S: int, k: int, rng: np.random.Generator) -> Partition:
    """Uniform item labels in range(k), relabelled until every block is used."""
    its = [i for i in range(S.bit_length()) if S >> i & 1]
    if not 1 <= k <= len(its):
        raise ValueError("need 1 <= k <= |S|")
    while True:
        lab = rng.integers(0, k, size=len(its))
        if len(set(lab.tolist())) == k:
            break
    blocks = [0] * k
    for i, b in zip(its, lab):
        blocks[b] |= 1 << i
    return Partition(S, tuple(blocks))


def random_iso_config(rng: np.random.Generator, max_n: int = 4, max_q: int = 3):
    """Binary product space with N <= max_n coordinates and q nonempty sets."""
    N = int(rng.integers(1, max_n + 1))
    q = int(rng.integers(2, max_q + 1))
    probs = []
    for _ in range(N):
        p = float(rng.uniform(0.05, 0.95))
        probs.append((1 - p, p))
    sp = ProductSpace.of(probs)
    pts = sp.points()
    As = []
    for _ in range(q):
        size = int(rng.integers(1, len(pts) + 1))
        idx = rng.choice(len(pts), size=size, replace=False)
        As.append([pts[i] for i in sorted(idx)])
    return sp, As


def _fail(rep: dict, witness: dict) -> dict:
    rep["ok"] = False
    rep.setdefault("witness", witness)
    return rep


def suite_smoothness(m: int = 5, q: int = 4, seeds: int = 8) -> dict:
    """Threshold instance plus random subadditive instances that land in
    Q(q): each must be (q-1)/q-close to Q(q+1)."""
    cands = [gen_threshold(m, Fraction(q, q - 1))]
    cands += [gen_random_subadditive(m, seed) for seed in range(seeds)]
    members = [v for v in cands if is_q_partitioning(v, q)[0]]
    audit = audit_smoothness(m, q, members)
    rep = {
        "suite": "smoothness", "m": m, "q": q, "instances": len(members),
        "bound": str(audit.bound), "min_gamma": str(audit.min_gamma), "ok": audit.ok,
    }
    if audit.failures:
        rep["witness"] = {"values": [str(x) for x in members[audit.failures[0]].values]}
    return rep


def suite_duality(m: int = 5, count: int = 200, seed: int = 0) -> dict:
    """Cover LP and price LP optima coincide as rationals."""
    rng = np.random.default_rng(seed)
    rep = {"suite": "duality", "m": m, "cases": count, "ok": True}
    for c in range(count):
        v = gen_random_subadditive(m, int(rng.integers(1 << 30)))
        S = int(rng.integers(1, 1 << m))
        while popcount(S) < 2:
            S = int(rng.integers(1, 1 << m))
        part = random_partition(S, int(rng.integers(2, popcount(S) + 1)), rng)
        a, b = cover_lp(v, part).value, price_lp(v, part).value
        if a != b:
            return _fail(rep, {"case": c, "S": S, "blocks": list(part.blocks),
                               "primal": str(a), "dual": str(b)})
    return rep


def suite_greedy(m: int = 6, count: int = 50, seed: int = 0, qmax: int = 5) -> dict:
    """Greedy prices respect every coalition and recover g(S) / H_{q-1}."""
    rng = np.random.default_rng(seed)
    rep = {"suite": "greedy", "m": m, "cases": count, "ok": True}
    for c in range(count):
        g = gen_random_subadditive(m, int(rng.integers(1 << 30)))
        q = int(rng.integers(2, min(qmax, m) + 1))
        S = int(rng.integers(1, 1 << m))
        while popcount(S) < q:
            S = int(rng.integers(1, 1 << m))
        part = random_partition(S, q, rng)
        pv = greedy_prices(g, part)
        bad = coalition_violations(g, part, pv.prices)
        need = g.values[S] / harmonic(q - 1)
        if bad or pv.total < need:
            return _fail(rep, {"case": c, "S": S, "blocks": list(part.blocks),
                               "prices": [str(p) for p in pv.prices], "violations": bad,
                               "total": str(pv.total), "needed": str(need)})
    return rep


def suite_selfbounding(m: int = 6, q: int = 3, seeds: int = 10) -> dict:
    """1-Lipschitz members of Q(q) are (ceil(m/q), 0)-self-bounding."""
    rng = np.random.default_rng(0)
    cands = [gen_threshold(m, Fraction(q, q - 1))] + [random_xos(m, rng) for _ in range(seeds)]
    a = math.ceil(m / q)
    rep = {"suite": "selfbounding", "m": m, "q": q, "a": a, "instances": 0, "ok": True}
    for idx, v in enumerate(cands):
        if not is_q_partitioning(v, min(q, m))[0]:
            continue
        rep["instances"] += 1
        ok, wit = check_self_bounding(v, a, 0)
        if not ok:
            return _fail(rep, {"instance": idx, **wit})
    return rep


def suite_iso(count: int = 200, seed: int = 0) -> dict:
    """Random binary product spaces: the t, z and tau variants all hold."""
    rng = np.random.default_rng(seed)
    rep = {"suite": "iso", "cases": count, "ok": True, "max_ratio": 0.0}
    for c in range(count):
        sp, As = random_iso_config(rng)
        q = len(As)
        s = int(rng.integers(1, q))
        alpha = 1.0 / s + float(rng.uniform(0, 2))
        for variant, a in (("t", alpha), ("z", alpha), ("tau", 1.0 / q)):
            r = verify_isoperimetric(sp, As, a, s, variant)
            rep["max_ratio"] = max(rep["max_ratio"], r.lhs / r.rhs)
            if not r.holds:
                return _fail(rep, {"case": c, "variant": variant, "alpha": a, "s": s,
                                   "lhs": r.lhs, "rhs": r.rhs})
    return rep


def tail_curve(v: Valuation, pi, q: int, n: int, seed: int, threads: int = 1, points: int = 41):
    """Empirical survival against both bound families on a grid of x.

    The q-partitioning column takes the best (r, s) with alpha = 1/s and the
    median as a; the second column is the subadditive bound with q = 2.
    Returns (MCResult, rows) with rows (x, empirical, bound_qpart, bound_sa).
    """
    res = mc_tail(v, pi, seed, n, threads)
    med = res.median
    top = float(v.values[v.full])
    xs = np.linspace(0.0, top, points)
    pairs = [(r, s) for r in range(2, int(math.log2(q) + 1e-9) + 1) for s in range(1, r)]
    rows = []
    for x in xs:
        bq = 1.0
        for r, s in pairs:
            k = x - r / s * med
            if k >= 0:
                bq = min(bq, tail_bound_qpart(med, k, r, s, q, 1.0 / s))
        k2 = x - 2 * med
        bs = min(1.0, tail_bound_schechtman(med, k2, 2)) if k2 >= 0 else 1.0
        rows.append((float(x), float(res.survival(x)), bq, bs))
    return res, rows


def check_tail_rows(rows, n: int) -> list:
    """Grid points where the empirical survival beats a bound by more than
    four binomial standard deviations."""
    bad = []
    for x, emp, bq, bs in rows:
        for name, b in (("qpart", bq), ("schechtman", bs)):
            if emp > b + 4 * math.sqrt(b * (1 - b) / n):
                bad.append({"x": x, "bound": name, "empirical": emp, "value": b})
    return bad


def suite_tails(m: int = 10, q: int = 4, n: int = 100_000, seed: int = 7, threads: int = 1) -> dict:
    v = gen_threshold(m, Fraction(q, q - 1))
    res, rows = tail_curve(v, 0.5, q, n, seed, threads)
    bad = check_tail_rows(rows, n)
    mm = median_mean_bound_qpart(res.median, q)
    se = float(np.std(res.sample) / math.sqrt(n))
    rep = {"suite": "tails", "m": m, "q": q, "n": n, "median": res.median, "mean": res.mean,
           "mean_bound": mm, "ok": not bad and res.mean <= mm + 4 * se}
    if bad:
        rep["witness"] = bad[0]
    return rep


def suite_minimax(m: int = 3, q: int = 4, count: int = 5, seed: int = 0, p: float = 1 / 16) -> dict:
    rng = np.random.default_rng(seed)
    rep = {"suite": "minimax", "m": m, "q": q, "p": p, "cases": count, "ok": True}
    for c in range(count):
        v = random_xos(m, rng)
        r = verify_minimax_step(v, p, q)
        if not (r.holds and r.chernoff_ok and r.telescoping_ok):
            return _fail(rep, {"case": c, "values": [str(x) for x in v.values], **r.to_json()})
    return rep


def run_suite(name: str, m: int | None = None, q: int | None = None, threads: int = 1) -> dict:
    kw = {}
    if m is not None:
        kw["m"] = m
    if q is not None:
        kw["q"] = q
    if name == "smoothness":
        return suite_smoothness(**kw)
    if name == "duality":
        return suite_duality(**{k: v for k, v in kw.items() if k == "m"})
    if name == "greedy":
        return suite_greedy(**{k: v for k, v in kw.items() if k == "m"})
    if name == "selfbounding":
        return suite_selfbounding(**kw)
    if name == "iso":
        return suite_iso()
    if name == "tails":
        return suite_tails(**kw, threads=threads)
    if name == "minimax":
        return suite_minimax(**kw)
    raise ValueError(f"unknown suite {name!r}")
