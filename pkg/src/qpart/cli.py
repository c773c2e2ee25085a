"""``qpart`` command line.

Exit codes: 0 on success, 1 when a check fails (a witness is printed as
JSON), 2 on bad input (the message names the offending field).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from . import suites
from .classify import (
    MAX_CLASSIFY_ITEMS,
    Partition,
    closeness,
    is_q_partitioning,
    partition_level,
)
from .concent import ProductSpace, solve_t, solve_t_min, verify_isoperimetric
from .costshare import gamma_citycore_prices, greedy_prices
from .mph import NotPartitioning, mph_witness, verify_mph
from .posted import (
    MarketInstance,
    brute_opt_welfare,
    f_value,
    g_value,
    simulate_mechanism,
    verify_minimax_step,
    worst_order_welfare,
)
from .setfn import (
    MAX_ITEMS,
    Valuation,
    gen_binomial_floor,
    gen_random_subadditive,
    gen_setcover_f2,
    gen_threshold,
    gen_xos,
)


class InputError(ValueError):
    def __init__(self, field: str, msg: str):
        super().__init__(f"{field}: {msg}")
        self.field = field


class CheckFailed(Exception):
    def __init__(self, witness: dict):
        super().__init__("verification failed")
        self.witness = witness


# ------------------------------------------------------------------ I/O


def parse_rational(text, field: str) -> Fraction:
    if isinstance(text, bool) or not isinstance(text, (str, int)):
        raise InputError(field, f"expected a fraction string, got {text!r}")
    try:
        return Fraction(text)
    except ZeroDivisionError:
        raise InputError(field, f"zero denominator in {text!r}") from None
    except ValueError:
        raise InputError(field, f"malformed rational {text!r}") from None


def _int(data: dict, key: str, where: str) -> int:
    if key not in data:
        raise InputError(f"{where}.{key}", "missing")
    val = data[key]
    if isinstance(val, bool) or not isinstance(val, int):
        raise InputError(f"{where}.{key}", f"expected an integer, got {val!r}")
    return val


GENERATORS = ("threshold", "setcover_f2", "xos_clauses", "binomial_floor", "random_subadditive")


def expand_generator(params: dict, where: str = "generator") -> Valuation:
    if not isinstance(params, dict):
        raise InputError(where, "expected an object")
    kind = params.get("variant")
    try:
        if kind == "threshold":
            return gen_threshold(_int(params, "m", where), parse_rational(params.get("top"), f"{where}.top"))
        if kind == "setcover_f2":
            return gen_setcover_f2(_int(params, "a", where))
        if kind == "xos_clauses":
            m = _int(params, "m", where)
            clauses = params.get("clauses")
            if not isinstance(clauses, list):
                raise InputError(f"{where}.clauses", "expected a list of weight lists")
            rows = [
                [parse_rational(w, f"{where}.clauses[{c}][{i}]") for i, w in enumerate(row)]
                for c, row in enumerate(clauses)
            ]
            return gen_xos(m, rows)
        if kind == "binomial_floor":
            return gen_binomial_floor(_int(params, "m", where), _int(params, "k", where))
        if kind == "random_subadditive":
            return gen_random_subadditive(
                _int(params, "m", where),
                _int(params, "seed", where),
                params.get("clauses", 3),
                params.get("denom", 4),
            )
    except InputError:
        raise
    except ValueError as e:
        raise InputError(where, str(e)) from None
    raise InputError(f"{where}.variant", f"expected one of {', '.join(GENERATORS)}, got {kind!r}")


def valuation_from_json(data, where: str = "$") -> Valuation:
    if not isinstance(data, dict):
        raise InputError(where, "expected an object")
    if "generator" in data:
        return expand_generator(data["generator"], f"{where}.generator")
    m = _int(data, "m", where)
    if not 1 <= m <= MAX_ITEMS:
        raise InputError(f"{where}.m", f"must lie in [1, {MAX_ITEMS}]")
    values = data.get("values")
    if not isinstance(values, list):
        raise InputError(f"{where}.values", "expected a list")
    if len(values) != 1 << m:
        raise InputError(f"{where}.values", f"expected {1 << m} entries, got {len(values)}")
    table = tuple(parse_rational(x, f"{where}.values[{i}]") for i, x in enumerate(values))
    if table[0] != 0:
        raise InputError(f"{where}.values[0]", "v(empty set) must be 0")
    if any(x < 0 for x in table):
        i = next(i for i, x in enumerate(table) if x < 0)
        raise InputError(f"{where}.values[{i}]", "values must be nonnegative")
    return Valuation(m, table)


def valuation_to_json(v: Valuation) -> dict:
    return {"m": v.m, "values": [str(x) for x in v.values]}


def _read_json(path, field: str):
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise InputError(field, f"no such file {path}") from None
    except json.JSONDecodeError as e:
        raise InputError(field, f"malformed JSON in {path}: {e}") from None


def load_valuation(path, field: str = "--in") -> Valuation:
    return valuation_from_json(_read_json(path, field), field)


def save_valuation(v: Valuation, path) -> None:
    Path(path).write_text(json.dumps(valuation_to_json(v)) + "\n")


def save_report(report, path, fmt: str = "json") -> None:
    """json: one object; csv: an iterable of rows whose first row is the
    header; text: str(report)."""
    path = Path(path)
    if fmt == "json":
        path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    elif fmt == "csv":
        with path.open("w", newline="") as fh:
            csv.writer(fh, lineterminator="\n").writerows(report)
    elif fmt == "text":
        path.write_text(f"{report}\n")
    else:
        raise ValueError(f"unknown format {fmt!r}")


def parse_blocks(text: str, m: int) -> Partition:
    """"1,2|3|4,5" with 1-based items into a Partition."""
    blocks = []
    for j, chunk in enumerate(text.split("|")):
        mask = 0
        for tok in chunk.split(","):
            tok = tok.strip()
            if not tok.isdigit():
                raise InputError("--blocks", f"bad item {tok!r} in block {j + 1}")
            i = int(tok)
            if not 1 <= i <= m:
                raise InputError("--blocks", f"item {i} outside 1..{m}")
            if mask >> (i - 1) & 1:
                raise InputError("--blocks", f"item {i} repeated")
            mask |= 1 << (i - 1)
        blocks.append(mask)
    try:
        return Partition.of(blocks)
    except ValueError as e:
        raise InputError("--blocks", str(e)) from None


def _emit(obj) -> None:
    print(json.dumps(obj, sort_keys=True))


# ------------------------------------------------------------- commands


@dataclass
class RunConfig:
    args: argparse.Namespace
    threads: int


def cmd_classify(cfg: RunConfig) -> int:
    a = cfg.args
    v = load_valuation(a.input)
    if v.m > MAX_CLASSIFY_ITEMS:
        raise InputError("--in.m", f"classification is capped at m={MAX_CLASSIFY_ITEMS}")
    if a.level:
        print(partition_level(v))
        return 0
    if a.q is None:
        raise InputError("--q", "give --q K or --level")
    if not 2 <= a.q <= max(v.m, 2):
        raise InputError("--q", f"must lie in [2, {v.m}]")
    ok, wit = is_q_partitioning(v, a.q)
    if ok:
        print("true")
        return 0
    if a.witness:
        save_report(wit.to_json(), a.witness)
    raise CheckFailed(wit.to_json())


def cmd_closeness(cfg: RunConfig) -> int:
    v = load_valuation(cfg.args.input)
    if v.m > MAX_CLASSIFY_ITEMS:
        raise InputError("--in.m", f"classification is capped at m={MAX_CLASSIFY_ITEMS}")
    if not 2 <= cfg.args.q <= max(v.m, 2):
        raise InputError("--q", f"must lie in [2, {v.m}]")
    print(closeness(v, cfg.args.q))
    return 0


def cmd_prices(cfg: RunConfig) -> int:
    a = cfg.args
    c = load_valuation(a.input)
    part = parse_blocks(a.blocks, c.m)
    if a.greedy:
        if part.k < 2:
            raise InputError("--blocks", "greedy prices need at least two blocks")
        pv = greedy_prices(c, part)
    else:
        gamma = parse_rational(a.gamma, "--gamma") if a.gamma is not None else Fraction(1)
        if not 0 < gamma <= 1:
            raise InputError("--gamma", "must lie in (0, 1]")
        pv = gamma_citycore_prices(c, part, gamma)
    _emit(pv.to_json())
    return 0


def cmd_mph(cfg: RunConfig) -> int:
    a = cfg.args
    v = load_valuation(a.input)
    if not 1 <= a.q <= max(v.m, 1):
        raise InputError("--q", f"must lie in [1, {v.m}]")
    try:
        rep = mph_witness(v, a.q)
    except NotPartitioning as e:
        raise CheckFailed({"S": e.S, "blocks": list(e.partition.blocks),
                           "lp_value": str(e.lp_value), "target": str(e.target)}) from None
    ok, T = verify_mph(rep, v)
    if not ok:
        raise CheckFailed({"mismatch_at": T})
    save_report(rep.to_json(), a.out)
    _emit({"k": rep.k, "clauses": len(rep.clauses), "max_edge": rep.max_edge})
    return 0


def cmd_roots(cfg: RunConfig) -> int:
    a = cfg.args
    try:
        t = solve_t_min(a.alpha, a.q, a.s) if a.tmin else solve_t(a.alpha, a.q, a.s)
    except ValueError as e:
        raise InputError("--alpha/--q/--s", str(e)) from None
    print(repr(t))
    return 0


def cmd_iso(cfg: RunConfig) -> int:
    a = cfg.args
    sp_data = _read_json(a.space, "--space")
    sets = _read_json(a.sets, "--sets")
    try:
        sp = ProductSpace.of(sp_data["probs"] if isinstance(sp_data, dict) else sp_data)
    except (KeyError, TypeError, ValueError) as e:
        raise InputError("--space", str(e)) from None
    if not isinstance(sets, list) or not sets:
        raise InputError("--sets", "expected a nonempty list of point lists")
    As = []
    for j, A in enumerate(sets):
        pts = [tuple(x) for x in A]
        for x in pts:
            if len(x) != sp.N or any(not 0 <= xi < len(sp.probs[i]) for i, xi in enumerate(x)):
                raise InputError(f"--sets[{j}]", f"point {list(x)} outside the space")
        As.append(pts)
    try:
        r = verify_isoperimetric(sp, As, a.alpha, a.s, a.variant)
    except ValueError as e:
        raise InputError("--alpha/--s", str(e)) from None
    out = {"lhs": r.lhs, "rhs": r.rhs, "holds": r.holds, "base": r.base}
    if not r.holds:
        raise CheckFailed(out)
    _emit(out)
    return 0


def cmd_tails(cfg: RunConfig) -> int:
    a = cfg.args
    v = load_valuation(a.input)
    if not 0 <= a.pi <= 1:
        raise InputError("--pi", "must lie in [0, 1]")
    if a.n < 1:
        raise InputError("--n", "must be positive")
    res, rows = suites.tail_curve(v, a.pi, a.q, a.n, a.seed, cfg.threads)
    header = ("x", "empirical_survival", "bound_qpart", "bound_schechtman")
    save_report([header] + [tuple(repr(x) for x in row) for row in rows], a.out, "csv")
    _emit({"median": res.median, "mean": res.mean, "n": res.n})
    bad = suites.check_tail_rows(rows, a.n)
    if bad:
        raise CheckFailed(bad[0])
    return 0


def cmd_minimax(cfg: RunConfig) -> int:
    a = cfg.args
    v = load_valuation(a.input)
    if v.m > 4:
        raise InputError("--in.m", "minimax LPs are capped at m=4")
    if a.q is None:
        g, _ = g_value(v, a.p)
        f, _ = f_value(v, a.p)
        _emit({"p": a.p, "g": g, "f": f})
        return 0
    try:
        r = verify_minimax_step(v, a.p, a.q)
    except ValueError as e:
        raise InputError("--p/--q", str(e)) from None
    out = r.to_json()
    if not (r.holds and r.chernoff_ok and r.telescoping_ok):
        raise CheckFailed(out)
    _emit(out)
    return 0


def load_market(path) -> MarketInstance:
    data = _read_json(path, "--market")
    if not isinstance(data, dict):
        raise InputError("--market", "expected an object")
    buyers = data.get("buyers")
    if not isinstance(buyers, list) or not buyers:
        raise InputError("--market.buyers", "expected a nonempty list")
    vals = []
    for i, b in enumerate(buyers):
        where = f"--market.buyers[{i}]"
        if isinstance(b, str):
            ref = Path(path).parent / b
            vals.append(load_valuation(ref, where))
        else:
            vals.append(valuation_from_json(b, where))
    prices = data.get("prices")
    if not isinstance(prices, list):
        raise InputError("--market.prices", "expected a list")
    prices = [parse_rational(p, f"--market.prices[{j}]") for j, p in enumerate(prices)]
    try:
        return MarketInstance(vals, prices, data.get("order"))
    except ValueError as e:
        raise InputError("--market", str(e)) from None


def cmd_simulate(cfg: RunConfig) -> int:
    inst = load_market(cfg.args.market)
    out = simulate_mechanism(inst)
    _, opt = brute_opt_welfare(inst.buyers)
    report = {
        "allocation": out.allocation,
        "welfare": str(out.welfare),
        "revenue": str(out.revenue),
        "utilities": [str(u) for u in out.utilities],
        "optimum": str(opt),
    }
    if len(inst.buyers) <= 6:
        order, w = worst_order_welfare(inst.buyers, inst.prices)
        report["worst_order"] = order
        report["worst_welfare"] = str(w)
    if out.welfare != out.revenue + sum(out.utilities, Fraction(0)):
        raise CheckFailed(report)
    _emit(report)
    return 0


def cmd_verify(cfg: RunConfig) -> int:
    a = cfg.args
    rep = suites.run_suite(a.suite, a.m, a.q, cfg.threads)
    if not rep["ok"]:
        raise CheckFailed(rep)
    _emit(rep)
    return 0


# --------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qpart", description="q-partitioning valuation toolkit")
    p.add_argument("--threads", type=int, default=None, help="worker threads (default: $QPART_THREADS or 1)")
    sub = p.add_subparsers(dest="cmd", required=True)

    s = sub.add_parser("classify", help="membership in Q(q) or the partition level")
    s.add_argument("--in", dest="input", required=True)
    g = s.add_mutually_exclusive_group()
    g.add_argument("--q", type=int)
    g.add_argument("--level", action="store_true")
    s.add_argument("--witness")
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("closeness", help="largest gamma for covers over <= q blocks")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--q", type=int, required=True)
    s.set_defaults(func=cmd_closeness)

    s = sub.add_parser("prices", help="city prices for a partition")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--blocks", required=True, help='1-based items, e.g. "1,2|3|4,5"')
    g = s.add_mutually_exclusive_group()
    g.add_argument("--greedy", action="store_true")
    g.add_argument("--gamma")
    s.set_defaults(func=cmd_prices)

    s = sub.add_parser("mph", help="MPH-k witness for a q-partitioning valuation")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--q", type=int, required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_mph)

    s = sub.add_parser("roots", help="isoperimetric base t(alpha, q, s)")
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--q", type=int, required=True)
    s.add_argument("--s", type=int, required=True)
    s.add_argument("--tmin", action="store_true")
    s.set_defaults(func=cmd_roots)

    s = sub.add_parser("iso", help="exhaustive isoperimetric check")
    s.add_argument("--space", required=True)
    s.add_argument("--sets", required=True)
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--s", type=int, required=True)
    s.add_argument("--variant", choices=("t", "tmin", "z", "tau"), default="t")
    s.set_defaults(func=cmd_iso)

    s = sub.add_parser("tails", help="Monte Carlo survival curve against tail bounds")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--pi", type=float, default=0.5)
    s.add_argument("--q", type=int, required=True)
    s.add_argument("--n", type=int, default=100_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_tails)

    s = sub.add_parser("minimax", help="f(p), g(p) and the minimax step")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--p", type=float, required=True)
    s.add_argument("--q", type=int)
    s.set_defaults(func=cmd_minimax)

    s = sub.add_parser("simulate", help="sequential posted-price mechanism")
    s.add_argument("--market", required=True)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("verify", help="randomised verification suites")
    s.add_argument("--suite", choices=suites.SUITES, required=True)
    s.add_argument("--m", type=int)
    s.add_argument("--q", type=int)
    s.set_defaults(func=cmd_verify)
    return p


def _threads(arg: int | None) -> int:
    if arg is not None:
        val, field = arg, "--threads"
    else:
        raw = os.environ.get("QPART_THREADS", "1")
        field = "QPART_THREADS"
        try:
            val = int(raw)
        except ValueError:
            raise InputError(field, f"expected an integer, got {raw!r}") from None
    if val < 1:
        raise InputError(field, "must be at least 1")
    return val


def dispatch(cfg: RunConfig) -> int:
    return cfg.args.func(cfg)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return dispatch(RunConfig(args, _threads(args.threads)))
    except InputError as e:
        print(f"qpart: input error: {e}", file=sys.stderr)
        return 2
    except CheckFailed as e:
        print(json.dumps(e.witness, sort_keys=True))
        print("qpart: verification failed", file=sys.stderr)
        return 1
    except ValueError as e:
        # preconditions rejected inside the library
        print(f"qpart: input error: {args.cmd}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
