"""Exact rational linear programming.

Dense two-phase tableau simplex with Bland's anti-cycling rule. Pivoting runs
on GMP rationals (``gmpy2.mpq``); inputs and results are
:class:`fractions.Fraction`. Problems here are small (a few hundred rows at
most), so exactness wins over speed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from gmpy2 import mpq

LE, EQ, GE = "<=", "==", ">="

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass
class LinearProgram:
    """``sense`` c.x subject to rows, with x >= lower (default 0)."""

    n_vars: int
    objective: list
    sense: str = "max"
    constraints: list = field(default_factory=list)
    lower: list | None = None

    def add(self, row: Sequence, rel: str, rhs) -> None:
        if len(row) != self.n_vars:
            raise ValueError(f"row has {len(row)} entries, expected {self.n_vars}")
        if rel not in (LE, EQ, GE):
            raise ValueError(f"unknown relation {rel!r}")
        self.constraints.append(([Fraction(a) for a in row], rel, Fraction(rhs)))


@dataclass
class LPResult:
    status: str
    value: Fraction | None = None
    solution: list | None = None
    duals: list | None = None

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


_ZERO = mpq(0)


def _q(x) -> mpq:
    if isinstance(x, Fraction):
        return mpq(x.numerator, x.denominator)
    return mpq(x)


def _f(x: mpq) -> Fraction:
    return Fraction(int(x.numerator), int(x.denominator))


class _Tableau:
    # rows: constraint rows followed by nothing; objective kept separately as
    # reduced-cost row for a minimisation problem.
    def __init__(self, rows, rhs, basis):
        self.rows = rows
        self.rhs = rhs
        self.basis = basis

    def pivot(self, r, c):
        row = self.rows[r]
        piv = row[c]
        if piv != 1:
            inv = 1 / piv
            self.rows[r] = row = [a * inv for a in row]
            self.rhs[r] *= inv
        for i, other in enumerate(self.rows):
            if i == r:
                continue
            f = other[c]
            if f:
                self.rows[i] = [a - f * b if b else a for a, b in zip(other, row)]
                self.rhs[i] -= f * self.rhs[r]
        self.basis[r] = c

    def reduced(self, cost):
        """Reduced costs and objective for a minimisation cost vector."""
        red = list(cost)
        obj = _ZERO
        for i, b in enumerate(self.basis):
            cb = cost[b]
            if cb:
                row = self.rows[i]
                red = [a - cb * x if x else a for a, x in zip(red, row)]
                obj += cb * self.rhs[i]
        return red, obj

    def run(self, cost, allowed):
        """Minimise cost over the current basis; Bland's rule. Returns status."""
        red, _ = self.reduced(cost)
        while True:
            enter = next((j for j in allowed if red[j] < 0), None)
            if enter is None:
                return OPTIMAL
            best = None
            for i, row in enumerate(self.rows):
                a = row[enter]
                if a > 0:
                    ratio = self.rhs[i] / a
                    key = (ratio, self.basis[i])
                    if best is None or key < best[0]:
                        best = (key, i)
            if best is None:
                return UNBOUNDED
            r = best[1]
            self.pivot(r, enter)
            f = red[enter]
            row = self.rows[r]
            red = [a - f * x if x else a for a, x in zip(red, row)]


def solve(lp: LinearProgram) -> LPResult:
    """Solve ``lp`` exactly. Never raises on infeasible or unbounded input."""
    n = lp.n_vars
    lower = [_q(x) for x in (lp.lower or [0] * n)]
    obj = [_q(c) for c in lp.objective]
    if len(obj) != n:
        raise ValueError("objective length does not match n_vars")
    cost = [-c for c in obj] if lp.sense == "max" else list(obj)

    # shift x = y + lower so that y >= 0; split equalities into two rows
    rows = []
    origin = []
    for k, (row, rel, rhs) in enumerate(lp.constraints):
        row = [_q(a) for a in row]
        b = _q(rhs) - sum((a * l for a, l in zip(row, lower)), _ZERO)
        if rel in (LE, EQ):
            rows.append((row, LE, b))
            origin.append(k)
        if rel in (GE, EQ):
            rows.append((row, GE, b))
            origin.append(k)

    m = len(rows)
    n_slack = m
    art_rows = []
    norm = []
    flipped = []
    for i, (row, rel, b) in enumerate(rows):
        sign = 1 if rel == LE else -1
        # slack for <=, surplus for >=; written as row.y + sign*s = b
        coeffs = list(row)
        flipped.append(b < 0)
        if b < 0:
            coeffs = [-a for a in coeffs]
            b = -b
            sign = -sign
        norm.append((coeffs, sign, b))
        if sign < 0:
            art_rows.append(i)

    n_art = len(art_rows)
    width = n + n_slack + n_art
    tab_rows, tab_rhs, basis = [], [], []
    art_col = {}
    for k, i in enumerate(art_rows):
        art_col[i] = n + n_slack + k
    for i, (coeffs, sign, b) in enumerate(norm):
        full = coeffs + [_ZERO] * (n_slack + n_art)
        full[n + i] = mpq(sign)
        if sign > 0:
            basis.append(n + i)
        else:
            full[art_col[i]] = mpq(1)
            basis.append(art_col[i])
        tab_rows.append(full)
        tab_rhs.append(b)

    tab = _Tableau(tab_rows, tab_rhs, basis)
    if n_art:
        phase1 = [_ZERO] * width
        for c in art_col.values():
            phase1[c] = mpq(1)
        tab.run(phase1, range(width))
        _, infeas = tab.reduced(phase1)
        if infeas > 0:
            return LPResult(INFEASIBLE)
        # drive artificials out of the basis where possible
        arts = set(art_col.values())
        for r, b in enumerate(tab.basis):
            if b in arts:
                col = next((j for j in range(n + n_slack) if tab.rows[r][j] != 0), None)
                if col is not None:
                    tab.pivot(r, col)
        keep = [r for r, b in enumerate(tab.basis) if b not in arts]
        tab.rows = [tab.rows[r][: n + n_slack] for r in keep]
        tab.rhs = [tab.rhs[r] for r in keep]
        tab.basis = [tab.basis[r] for r in keep]
        width = n + n_slack

    full_cost = cost + [_ZERO] * (width - n)
    status = tab.run(full_cost, range(width))
    if status == UNBOUNDED:
        return LPResult(UNBOUNDED)
    y = [_ZERO] * width
    for r, b in enumerate(tab.basis):
        y[b] = tab.rhs[r]
    x = [y[j] + lower[j] for j in range(n)]
    value = sum((c * xi for c, xi in zip(obj, x)), _ZERO)

    # shadow prices from the slack columns' reduced costs
    red, _ = tab.reduced(full_cost)
    duals = [_ZERO] * len(lp.constraints)
    for i, (_, sign, _) in enumerate(norm):
        yi = -red[n + i] * sign
        if flipped[i]:
            yi = -yi
        if lp.sense == "max":
            yi = -yi
        duals[origin[i]] += yi
    return LPResult(OPTIMAL, _f(value), [_f(a) for a in x], [_f(a) for a in duals])


def check_solution(lp: LinearProgram, x: Sequence) -> bool:
    """Exact substitution check of every constraint and bound."""
    lower = lp.lower or [0] * lp.n_vars
    if any(xi < l for xi, l in zip(x, lower)):
        return False
    for row, rel, rhs in lp.constraints:
        lhs = sum(a * xi for a, xi in zip(row, x))
        if rel == LE and lhs > rhs or rel == GE and lhs < rhs or rel == EQ and lhs != rhs:
            return False
    return True


def dump(lp: LinearProgram) -> str:
    """Plain-text rendering for triage."""
    lines = [f"{lp.sense} " + " ".join(str(c) for c in lp.objective)]
    for row, rel, rhs in lp.constraints:
        lines.append(" ".join(str(a) for a in row) + f" {rel} {rhs}")
    return "\n".join(lines)
