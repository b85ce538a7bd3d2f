import re
from functools import lru_cache
from pathlib import Path

from lcsq.exact_linalg import GroupInvariants
from lcsq.lcs_engine import AlgebraPresentation, n_table

DATA = Path(__file__).parent / "data"


@lru_cache(maxsize=None)
def table(ring: str, relations: str, i: int, bound: int, k: int = 2):
    """Computed N_i table, shared across test modules."""
    return n_table(AlgebraPresentation.from_strings(k, ring, relations), i, bound)


def parse_latex_cell(raw: str, integral: bool):
    """A reference cell like ``{\\tiny $0$ }{  $(2 \\cdot 3^{2})$}`` as a group or a dimension."""
    s = re.sub(r"\s+", "", raw)
    if not s:
        return None
    m = re.match(r"^(?:\{\\tiny\$(\d+)\$\}|\$(\d+)\$)(?:\{\$\((.*)\)\$\})?$", s)
    if not m:
        raise ValueError(f"unrecognized cell {raw!r}")
    rank = int(m.group(1) or m.group(2))
    orders = []
    if m.group(3):
        for part in m.group(3).split(r"\cdot"):
            pm = re.match(r"^(\d+)(?:\^\{(\d+)\})?$", part)
            orders += [int(pm.group(1))] * int(pm.group(2) or 1)
    if not integral:
        assert not orders
        return rank
    return GroupInvariants.from_cyclic_orders(rank, orders)


@lru_cache(maxsize=None)
def reference_table(name: str) -> dict:
    """Cells of a stored reference tabular, keyed by bidegree; blank cells omitted."""
    text = (DATA / "reference_tables.tex").read_text()
    block = text.split(f"%% {name}\n", 1)[1].split("\\end{tabular}", 1)[0]
    integral = name.split()[1] == "Z"
    cells = {}
    for line in block.splitlines():
        m = re.match(r"\s*\$(\d+)\$\s*&(.*)\\\\\s*\\hline\s*$", line)
        if not m:
            continue
        a = int(m.group(1))
        for b, raw in enumerate(m.group(2).split("&")):
            cell = parse_latex_cell(raw, integral)
            if cell is not None:
                cells[(a, b)] = cell
    return cells


def same_cell(x, y) -> bool:
    if isinstance(x, GroupInvariants):
        return isinstance(y, GroupInvariants) and x.is_isomorphic(y)
    return int(x) == int(y)


def reference_mismatches(computed, name: str) -> dict:
    """Cells within the computed bound that differ from the reference (missing counts as a mismatch)."""
    bad = {}
    for d, want in reference_table(name).items():
        if sum(d) > computed.bound:
            continue
        got = computed.get(d)
        if got is None or not same_cell(want, got):
            bad[d] = (want, got)
    return bad


# -- acceptance summary ---------------------------------------------------------------

_criteria: dict = {}
_markers: dict = {}


def pytest_runtest_logreport(report):
    if report.when == "call" or report.failed:
        mark = _markers.get(report.nodeid)
        if mark is not None:
            number, title = mark
            entry = _criteria.setdefault(number, {"title": title, "passed": True, "tests": []})
            entry["tests"].append((report.nodeid.split("::")[-1], report.outcome))
            if report.failed:
                entry["passed"] = False


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            _markers[item.nodeid] = (m.args[0], m.args[1])


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        entry = _criteria[number]
        status = "PASS" if entry["passed"] else "FAIL"
        terminalreporter.write_line(f"criterion {number:>2}: {status}  {entry['title']}")
        for name, outcome in entry["tests"]:
            if outcome != "passed":
                terminalreporter.write_line(f"              {outcome}: {name}")
