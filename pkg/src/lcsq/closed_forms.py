"""Closed-form predictions for N_2 and N_3 of Z<x1, x2>/(x1^m, x2^n) and a table diff harness.

Cells are compared up to group isomorphism (same rank, same multiset of
prime-power elementary divisors), since printed torsion such as "(3 . 4)"
and the invariant-factor chain Z/12 describe the same group.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import gcd
from typing import Iterable

from .exact_linalg import GroupInvariants, is_prime
from .lcs_engine import BigradedTable, Ring, Z, all_degrees


class UnsupportedRegimeError(ValueError):
    pass


def f_func(k: int) -> int:
    """k for odd k, k/2 for even k."""
    if k < 1:
        raise ValueError("f is defined on positive integers")
    return k // gcd(k, 2)


@dataclass(frozen=True)
class PredictedCell:
    rank: int = 0
    torsion: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "torsion", tuple(sorted(t for t in self.torsion if t != 1)))
        if any(t < 2 for t in self.torsion):
            raise ValueError("cyclic orders must be positive")

    def invariants(self) -> GroupInvariants:
        return GroupInvariants.from_cyclic_orders(self.rank, self.torsion)


def _cell(rank: int = 0, *orders: int) -> GroupInvariants:
    return PredictedCell(rank, orders).invariants()


def _predicted_table(m: int, n: int, rule, label: str, bound: int) -> BigradedTable:
    cells = {d: rule(*d) for d in all_degrees(2, bound)}
    return BigradedTable(2, bound, cells, Z, None, None, label)


def predict_n2(m: int, n: int, bound: int | None = None) -> BigradedTable:
    """Predicted N_2 table for Z<x1, x2>/(x1^m, x2^n) over total degree <= bound."""
    if m < 1 or n < 1:
        raise UnsupportedRegimeError("m and n must be at least 1")

    def rule(a: int, b: int) -> GroupInvariants:
        if 1 <= a <= m - 1 and 1 <= b <= n - 1:
            return _cell(1)
        if a == m and 1 <= b <= n - 1:
            return _cell(0, m)
        if 1 <= a <= m - 1 and b == n:
            return _cell(0, n)
        if (a, b) == (m, n):
            return _cell(0, gcd(m, n))
        return _cell()

    return _predicted_table(m, n, rule, f"N2 prediction (m,n)=({m},{n})", m + n if bound is None else bound)


def predict_n3(m: int, n: int, bound: int | None = None) -> BigradedTable:
    """Predicted N_3 table for Z<x1, x2>/(x1^m, x2^n); needs m, n >= 3."""
    if m < 3 or n < 3:
        raise UnsupportedRegimeError(f"N3 closed form needs m, n >= 3, got ({m}, {n})")
    fm, fn, g = f_func(m), f_func(n), gcd(m, n)

    def row_cell(a: int, b: int) -> GroupInvariants | None:
        # rows 1..m+1 read straight off the table, columns 1..n+1
        if a == 1:
            if b == 1:
                return _cell()
            if 2 <= b <= n:
                return _cell(1)
            if b == n + 1:
                return _cell(0, fn)
        elif 2 <= a <= m - 1:
            if b == 1:
                return _cell(1)
            if 2 <= b <= n - 1:
                return _cell(3)
            if b == n:
                return _cell(2, n)
            if b == n + 1:
                return _cell(0, n, fn)
        elif a == m:
            if b == 1:
                return _cell(1)
            if 2 <= b <= n - 1:
                return _cell(2, m)
            if b == n:
                return _cell(0, m, n)
            if b == n + 1:
                return _cell(0, fn, g)
        elif a == m + 1:
            if b == 1:
                return _cell(0, fm)
            if 2 <= b <= n - 1:
                return _cell(0, m, fm)
            if b == n:
                return _cell(0, fm, g)
            if b == n + 1:
                return _cell(0, g)
        return None

    def rule(a: int, b: int) -> GroupInvariants:
        cell = row_cell(a, b)
        return _cell() if cell is None else cell

    return _predicted_table(m, n, rule, f"N3 prediction (m,n)=({m},{n})", m + n + 2 if bound is None else bound)


@dataclass
class DiffReport:
    matches: list = field(default_factory=list)
    mismatches: dict = field(default_factory=dict)
    not_computed: list = field(default_factory=list)
    label: str = ""

    @property
    def ok(self) -> bool:
        return not self.mismatches

    def status(self, d) -> str:
        d = tuple(d)
        if d in self.mismatches:
            return "mismatch"
        if d in self.not_computed:
            return "not-computed"
        if d in self.matches:
            return "match"
        raise KeyError(d)

    def summary(self) -> dict[str, int]:
        return {
            "match": len(self.matches),
            "mismatch": len(self.mismatches),
            "not-computed": len(self.not_computed),
        }

    def render(self, fmt_cell=str) -> str:
        s = self.summary()
        lines = [
            f"{self.label}: {s['match']} match, {s['mismatch']} mismatch, {s['not-computed']} not computed"
        ]
        for d in sorted(self.mismatches):
            pred, comp = self.mismatches[d]
            lines.append(f"  mismatch at {d}: predicted {fmt_cell(pred)}, computed {fmt_cell(comp)}")
        return "\n".join(lines)


def _same(pred, comp) -> bool:
    if isinstance(pred, GroupInvariants) and isinstance(comp, GroupInvariants):
        return pred.is_isomorphic(comp)
    if isinstance(pred, GroupInvariants) or isinstance(comp, GroupInvariants):
        raise TypeError("cannot compare a group cell with a dimension cell")
    return int(pred) == int(comp)


def diff_tables(computed: BigradedTable, predicted: BigradedTable, label: str = "") -> DiffReport:
    """Cell-by-cell comparison over the predicted table's cells; never raises on mismatch."""
    report = DiffReport(label=label or predicted.label or "diff")
    for d in predicted.degrees():
        pred = predicted.get(d)
        comp = computed.get(d)
        if comp is None:
            report.not_computed.append(d)
        elif _same(pred, comp):
            report.matches.append(d)
        else:
            report.mismatches[d] = (pred, comp)
    return report


def predict_fp_from_z(z_table: BigradedTable, p: int) -> BigradedTable:
    """F_p dimensions guessed from a Z table: free rank plus one per elementary divisor sharing a factor with p."""
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    cells = {}
    for d, cell in z_table.cells.items():
        cells[d] = cell.rank + sum(1 for q in cell.elementary_divisors() if gcd(p, q) > 1)
    return BigradedTable(z_table.k, z_table.bound, cells, Ring(p), z_table.i, None,
                         f"F_{p} prediction from Z table")


def transpose_cells(cells: Iterable) -> list:
    return sorted((b, a) for a, b in cells)
