"""Table emitters: plain text grid, CSV, and LaTeX tabular in the published cell style.

A trivial computed cell shows a small zero; an uncomputed cell is blank.  A
non-trivial cell is the free rank followed by the torsion in parentheses,
written as prime powers with repeated factors collapsed into exponents
(``Z/3 + Z/3`` is ``(3^2)``).
"""

from __future__ import annotations

import csv
import io
import re
from collections import Counter

from .exact_linalg import GroupInvariants
from .lcs_engine import BigradedTable, Cell, Ring, all_degrees


def torsion_parts(cell: GroupInvariants) -> list[tuple[int, int]]:
    """(prime power, multiplicity) pairs in increasing order."""
    return sorted(Counter(cell.elementary_divisors()).items())


def format_cell_text(cell: Cell | None) -> str:
    if cell is None:
        return ""
    if not isinstance(cell, GroupInvariants):
        return str(int(cell))
    if not cell.factors:
        return str(cell.rank)
    tors = "·".join(f"{q}^{m}" if m > 1 else str(q) for q, m in torsion_parts(cell))
    return f"{cell.rank} ({tors})"


def format_cell_latex(cell: Cell | None) -> str:
    if cell is None:
        return ""
    rank = cell.rank if isinstance(cell, GroupInvariants) else int(cell)
    head = r"{\tiny $0$ }" if rank == 0 else f"${rank}$"
    if not isinstance(cell, GroupInvariants) or not cell.factors:
        return head
    tors = r" \cdot ".join(f"{q}^{{{m}}}" if m > 1 else str(q) for q, m in torsion_parts(cell))
    return head + "{  $(" + tors + ")$}"


def _grid_cell(table: BigradedTable, a: int, b: int, fmt) -> str:
    if a + b > table.bound:
        return ""
    return fmt(table.get((a, b)))


def _title(table: BigradedTable) -> str:
    i = "?" if table.i is None else table.i
    what = str(table.presentation) if table.presentation is not None else (table.label or str(table.ring))
    return f"N_{i} of {what}, total degree <= {table.bound}"


def emit_text(table: BigradedTable) -> str:
    lines = [_title(table)]
    if table.k != 2:
        for d in all_degrees(table.k, table.bound):
            lines.append(f"{d}: {format_cell_text(table.get(d))}")
        return "\n".join(lines) + "\n"
    size = table.bound + 1
    rows = [["x1\\x2"] + [str(b) for b in range(size)]]
    for a in range(size):
        rows.append([str(a)] + [_grid_cell(table, a, b, format_cell_text) for b in range(size)])
    widths = [max(len(r[c]) for r in rows) for c in range(size + 1)]
    for r in rows:
        lines.append("  ".join(s.rjust(w) for s, w in zip(r, widths)).rstrip())
    return "\n".join(lines) + "\n"


def emit_csv(table: BigradedTable) -> str:
    """One row per degree inside the bound; blank rank means not computed."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"deg_x{g}" for g in range(1, table.k + 1)] + ["rank", "torsion"])
    for d in all_degrees(table.k, table.bound):
        cell = table.get(d)
        if cell is None:
            w.writerow(list(d) + ["", ""])
        elif isinstance(cell, GroupInvariants):
            w.writerow(list(d) + [cell.rank, ";".join(str(q) for q in cell.elementary_divisors())])
        else:
            w.writerow(list(d) + [int(cell), ""])
    return buf.getvalue()


def parse_csv(text: str, ring: Ring, i: int | None = None, presentation=None) -> BigradedTable:
    """Inverse of :func:`emit_csv`; the bound is the largest total degree listed."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise ValueError("empty CSV")
    header = rows[0]
    k = len(header) - 2
    if k < 1 or header[-2:] != ["rank", "torsion"] or header[:k] != [f"deg_x{g}" for g in range(1, k + 1)]:
        raise ValueError(f"unexpected CSV header {header}")
    cells: dict = {}
    bound = 0
    for n, row in enumerate(rows[1:], start=2):
        if len(row) != k + 2:
            raise ValueError(f"line {n}: expected {k + 2} fields, got {len(row)}")
        d = tuple(int(x) for x in row[:k])
        bound = max(bound, sum(d))
        rank, tors = row[k], row[k + 1]
        if rank == "":
            continue
        if ring.is_integral:
            orders = [int(q) for q in tors.split(";")] if tors else []
            cells[d] = GroupInvariants.from_cyclic_orders(int(rank), orders)
        else:
            if tors:
                raise ValueError(f"line {n}: F_p cells carry no torsion")
            cells[d] = int(rank)
    return BigradedTable(k, bound, cells, ring, i, presentation)


def _latex_ring(ring: Ring) -> str:
    return r"\mathbb{Z}" if ring.is_integral else rf"\mathbb{{Z}}_{{{ring.p}}}"


def _latex_relation(text: str) -> str:
    text = re.sub(r"x(\d+)", r"x_{\1}", text)
    text = re.sub(r"\^(\d+)", r"^{\1}", text)
    return text.replace("*", " ")


def emit_latex(table: BigradedTable, caption_extra: str = "") -> str:
    if table.k != 2:
        raise ValueError("LaTeX tables need exactly two generators")
    size = table.bound + 1
    i = "?" if table.i is None else table.i
    if table.presentation is not None:
        rels = ", ".join(_latex_relation(r) for r in table.presentation.relation_strings())
        title = rf"$N_{{{i}}}:\ {_latex_ring(table.ring)} \langle x_1,x_2\rangle /({rels})$"
    else:
        title = rf"$N_{{{i}}}$"
    if caption_extra:
        title += ", " + caption_extra
    out = [
        r"\begin{table} [H]",
        r"\footnotesize",
        rf"\caption{{{title}}}",
        r"\begin{tabular} {|l||" + "l|" * size + "}",
        r"\hline",
        "$(m,n)$ & " + " & ".join(f"${b}$" for b in range(size)) + r" \\ \hline \hline",
    ]
    for a in range(size):
        cells = [_grid_cell(table, a, b, format_cell_latex) for b in range(size)]
        out.append(f"${a}$ &" + " & ".join(cells) + r" \\ \hline")
    out += [r"\end{tabular}", r"\end{table}"]
    return "\n".join(out) + "\n"


def latex_cells(text: str) -> dict[tuple[int, int], str]:
    """Cell contents of a tabular in the format above, whitespace-normalized."""
    cells = {}
    for line in text.splitlines():
        m = re.match(r"\s*\$(\d+)\$\s*&(.*)\\\\\s*\\hline\s*$", line)
        if not m:
            continue
        a = int(m.group(1))
        for b, raw in enumerate(m.group(2).split("&")):
            cells[(a, b)] = re.sub(r"\s+", "", raw)
    return cells
