"""Divided-power Weyl operators on truncated polynomial modules over F_p.

Operators are realized as explicit matrices on F_p[x]/(x^size) with columns
indexed by exponents, so every operator identity is checked entrywise and
exactly.  The module also holds the numeric checks on N_i tables that follow
from the action of these operators: total dimension divisibility and
divisibility of Hilbert series.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import groupby, product
from math import comb, factorial, prod
from typing import Sequence

import numpy as np

from .exact_linalg import is_prime
from .lcs_engine import BigradedTable, IncompleteTableError, all_degrees, hilbert_series


def base_digits(a: int, p: int) -> list[int]:
    """Base-p digits of a, least significant first."""
    out = []
    while a:
        a, r = divmod(a, p)
        out.append(r)
    return out or [0]


def lucas_binomial(m: int, r: int, p: int) -> int:
    """binom(m, r) mod p as the product of digitwise binomials."""
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    if m < 0 or r < 0:
        raise ValueError("arguments must be non-negative")
    out = 1
    while m or r:
        m, mi = divmod(m, p)
        r, ri = divmod(r, p)
        if ri > mi:
            return 0
        out = out * comb(mi, ri) % p
    return out


@dataclass(frozen=True)
class TruncatedPoly:
    """Element of F_p[x]/(x^(p^n)); ``coeffs[a]`` is the coefficient of x^a."""

    p: int
    n: int
    coeffs: tuple[int, ...]

    def __post_init__(self):
        if not is_prime(self.p):
            raise ValueError(f"{self.p} is not prime")
        size = self.p**self.n
        coeffs = tuple(int(c) % self.p for c in self.coeffs)
        if len(coeffs) != size:
            raise ValueError(f"need {size} coefficients, got {len(coeffs)}")
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def monomial(cls, a: int, p: int, n: int, c: int = 1) -> "TruncatedPoly":
        coeffs = [0] * p**n
        coeffs[a] = c
        return cls(p, n, tuple(coeffs))

    @property
    def size(self) -> int:
        return self.p**self.n

    def vector(self) -> np.ndarray:
        return np.array(self.coeffs, dtype=np.int64)


@dataclass(frozen=True)
class DividedPowerOp:
    """One of: multiplication by x^power ("x"), the divided power D_j ("D"),
    or a composite applied right to left (``parts[-1]`` acts first)."""

    kind: str
    j: int = 1
    parts: tuple["DividedPowerOp", ...] = ()

    def __post_init__(self):
        if self.kind not in ("x", "D", "compose"):
            raise ValueError(f"unknown operator kind {self.kind!r}")
        if self.j < 0:
            raise ValueError("index must be non-negative")

    @classmethod
    def x(cls, power: int = 1) -> "DividedPowerOp":
        return cls("x", power)

    @classmethod
    def D(cls, j: int) -> "DividedPowerOp":
        return cls("D", j)

    def __matmul__(self, other: "DividedPowerOp") -> "DividedPowerOp":
        left = self.parts if self.kind == "compose" else (self,)
        right = other.parts if other.kind == "compose" else (other,)
        return DividedPowerOp("compose", 0, left + right)

    def __pow__(self, e: int) -> "DividedPowerOp":
        if e < 1:
            raise ValueError("use a positive power")
        out = self
        for _ in range(e - 1):
            out = out @ self
        return out

    def max_index(self) -> int:
        if self.kind == "compose":
            return max((op.max_index() for op in self.parts), default=0)
        return self.j if self.kind == "D" else 0

    def __str__(self) -> str:
        if self.kind == "x":
            return "x" if self.j == 1 else f"x^{self.j}"
        if self.kind == "D":
            return f"D_{self.j}"
        return "".join(str(op) for op in self.parts)


class InvalidOperatorError(ValueError):
    pass


def operator_matrix(op: DividedPowerOp, size: int, p: int) -> np.ndarray:
    """Matrix of ``op`` on F_p[x]/(x^size); column a is the image of x^a."""
    if op.kind == "compose":
        out = np.identity(size, dtype=np.int64)
        for part in reversed(op.parts):
            out = operator_matrix(part, size, p).dot(out) % p
        return out
    mat = np.zeros((size, size), dtype=np.int64)
    if op.kind == "x":
        for a in range(size - op.j):
            mat[a + op.j, a] = 1
    else:
        if op.j >= size:
            raise InvalidOperatorError(f"D_{op.j} is outside W_n for a module of size {size}")
        for a in range(op.j, size):
            mat[a - op.j, a] = comb(a, op.j) % p
    return mat


def apply(op: DividedPowerOp, v: TruncatedPoly) -> TruncatedPoly:
    if op.max_index() >= v.size:
        raise InvalidOperatorError(f"{op} does not act on F_{v.p}[x]/(x^{v.size}) within W_{v.n}")
    out = operator_matrix(op, v.size, v.p).dot(v.vector()) % v.p
    return TruncatedPoly(v.p, v.n, tuple(int(c) for c in out))


@dataclass
class CheckReport:
    name: str
    passed: bool
    details: dict = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.passed

    def line(self) -> str:
        extra = ", ".join(f"{k}={v}" for k, v in self.details.items())
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}" + (f" ({extra})" if extra else "")


def _check_prime(p: int) -> None:
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")


def verify_composition(j: int, r: int, p: int, n: int) -> CheckReport:
    """D_j D_r == binom(j+r, j) D_{j+r} on F_p[x]/(x^(p^n))."""
    _check_prime(p)
    size = p**n
    lhs = operator_matrix(DividedPowerOp.D(j) @ DividedPowerOp.D(r), size, p)
    if j + r < size:
        rhs = comb(j + r, j) * operator_matrix(DividedPowerOp.D(j + r), size, p) % p
    else:
        rhs = np.zeros_like(lhs)
    return CheckReport(
        f"D_{j} D_{r} = binom({j + r},{j}) D_{j + r} over F_{p}, size {size}",
        bool(np.array_equal(lhs, rhs)),
        {"binom_mod_p": comb(j + r, j) % p},
    )


def verify_decomposition(a: int, p: int, n: int) -> CheckReport:
    """C * D_a == prod_s (D_{p^s})^{a_s} with C = prod_s a_s! (a_s the base-p digits)."""
    _check_prime(p)
    size = p**n
    if not 0 <= a < size:
        raise ValueError(f"need 0 <= a < p^n = {size}")
    digits = base_digits(a, p)
    C = prod(factorial(d) for d in digits)
    # the D_{p^s} commute, so digit order is as good as any
    rhs = np.identity(size, dtype=np.int64)
    for s, d in enumerate(digits):
        for _ in range(d):
            rhs = operator_matrix(DividedPowerOp.D(p**s), size, p).dot(rhs) % p
    lhs = C * operator_matrix(DividedPowerOp.D(a), size, p) % p
    return CheckReport(
        f"{C}*D_{a} = prod (D_(p^s))^(a_s) over F_{p}, size {size}",
        bool(np.array_equal(lhs, rhs)) and C % p != 0,
        {"digits": digits, "C_mod_p": C % p},
    )


def verify_nilpotent(j: int, p: int, n: int) -> CheckReport:
    """(D_j)^p == 0 on F_p[x]/(x^(p^n)) for 1 <= j < p^n."""
    _check_prime(p)
    size = p**n
    if j < 1:
        raise ValueError("D_0 is the identity; nilpotence is claimed for j >= 1")
    if j >= size:
        raise ValueError(f"need j < p^n = {size}")
    mat = operator_matrix(DividedPowerOp.D(j) ** p, size, p)
    return CheckReport(f"(D_{j})^{p} = 0 over F_{p}, size {size}", not mat.any())


def commutator_vanishes(a: DividedPowerOp, b: DividedPowerOp, size: int, p: int) -> bool:
    ma = operator_matrix(a, size, p)
    mb = operator_matrix(b, size, p)
    return not ((ma.dot(mb) - mb.dot(ma)) % p).any()


def verify_central(p: int, n: int) -> CheckReport:
    """[D_{p^i}, x^{p^n}] == 0 for all i < n, on F_p[x]/(x^(p^(n+1))).

    The larger module is needed: on F_p[x]/(x^(p^n)) the power x^(p^n) is
    already zero and the check would be empty.
    """
    _check_prime(p)
    size = p ** (n + 1)
    xp = DividedPowerOp.x(p**n)
    failing = [i for i in range(n) if not commutator_vanishes(DividedPowerOp.D(p**i), xp, size, p)]
    return CheckReport(
        f"x^{p**n} central against D_(p^i), i<{n}, over F_{p}, size {size}",
        not failing,
        {"failing_i": failing} if failing else {},
    )


def weyl_suite(p: int, n: int) -> list[CheckReport]:
    """Every operator identity for one (p, n)."""
    size = p**n
    out = []
    for j in range(size):
        for r in range(size - j):
            out.append(verify_composition(j, r, p, n))
    for a in range(size):
        out.append(verify_decomposition(a, p, n))
    for j in range(1, size):
        out.append(verify_nilpotent(j, p, n))
    out.append(verify_central(p, n))
    return out


# -- consequences for N_i tables ------------------------------------------------------


def relation_in_powers(rel, exps: Sequence[int], p: int) -> bool:
    """True if every maximal run of x_j in every word has length divisible by p^(n_j)."""
    for word, _ in rel.items():
        for g, run in groupby(word):
            if len(list(run)) % p ** exps[g - 1]:
                return False
    return True


def pure_power_support(table: BigradedTable) -> list[int] | None:
    """Degree box outside which N_i vanishes, for relations x_j^(m_j) only.

    Uses the bound m_j + i - 2 in each variable, which holds for N_1, N_2 and
    N_3 of two-generator monomial quotients; callers check it against the
    computed cells with :func:`check_support`.
    """
    pres = table.presentation
    if pres is None or table.i is None:
        return None
    powers = {}
    for rel in pres.relations:
        if len(rel) != 1:
            return None
        (word, _), = rel.items()
        if len(set(word)) != 1:
            return None
        g = word[0]
        powers[g] = min(powers.get(g, len(word)), len(word))
    if len(powers) != table.k:
        return None
    return [powers[g] + table.i - 2 for g in range(1, table.k + 1)]


def _inside(d, box) -> bool:
    return all(e <= b for e, b in zip(d, box))


def check_support(table: BigradedTable, support: Sequence[int]) -> None:
    """Raise if a computed cell outside the support box is nonzero."""
    for d, cell in table.cells.items():
        if cell and not _inside(d, support):
            raise ValueError(f"component {d} is nonzero but lies outside the support box {list(support)}")


def _check_complete(table: BigradedTable, support: Sequence[int] | None) -> None:
    if support is not None:
        check_support(table, support)
        missing = [d for d in all_degrees(table.k, sum(support)) if _inside(d, support) and not table.is_computed(d)]
        if missing:
            raise IncompleteTableError(
                f"{len(missing)} components inside the support box were not computed, e.g. {missing[0]}")
        return
    if table.skipped():
        raise IncompleteTableError(f"{len(table.skipped())} components inside the bound were not computed")
    edge = [d for d in all_degrees(table.k, table.bound) if sum(d) == table.bound]
    if any(table.get(d) for d in edge):
        raise IncompleteTableError(
            f"components of total degree {table.bound} are nonzero; raise the bound to reach the vanishing region"
        )


def _require_fp(table: BigradedTable, exps: Sequence[int]) -> tuple[int, list[int]]:
    if table.ring.is_integral:
        raise TypeError("divisibility checks need an F_p table")
    p = table.ring.p
    exps = list(exps)
    if len(exps) != table.k or any(e < 0 for e in exps):
        raise ValueError(f"need {table.k} non-negative exponents, got {exps}")
    if table.presentation is not None:
        for rel in table.presentation.relations:
            if not relation_in_powers(rel, exps, p):
                raise ValueError("relations are not polynomials in the declared powers x_j^(p^n_j)")
    return p, exps


def _valuation(m: int, p: int) -> int:
    e = 0
    while m % p == 0:
        m //= p
        e += 1
    return e


def default_exps(table: BigradedTable) -> list[int]:
    """Largest n_j with every relation a polynomial in the x_j^(p^n_j).

    A generator that appears in no relation gets 0.
    """
    p = table.ring.p
    rels = table.presentation.relations if table.presentation is not None else ()
    runs: dict[int, list[int]] = {}
    for rel in rels:
        for word, _ in rel.items():
            for g, run in groupby(word):
                runs.setdefault(g, []).append(len(list(run)))
    return [min((_valuation(r, p) for r in runs[g]), default=0) if g in runs else 0
            for g in range(1, table.k + 1)]


def check_dim_divisibility(
    table: BigradedTable, exps: Sequence[int], support: Sequence[int] | None = None
) -> CheckReport:
    """Total dimension of an F_p table is divisible by p^(sum exps).

    Every relation must be a polynomial in the powers x_j^(p^(n_j)).  The
    nonzero part of the table must be fully computed: either inside the given
    ``support`` box, or, without one, up to a top total degree that is all zero.
    """
    p, exps = _require_fp(table, exps)
    _check_complete(table, support)
    if support is None:
        total = table.total_dimension()
    else:
        total = sum(v for d, v in table.cells.items() if _inside(d, support))
    modulus = p ** sum(exps)
    q, r = divmod(total, modulus)
    details = {"total": total, "modulus": modulus}
    if not r:
        details["quotient"] = q
    return CheckReport(f"total dim of N_{table.i} divisible by {p}^{sum(exps)}", not r, details)


@dataclass
class SeriesDivision:
    success: bool
    quotient: list[int]
    remainder: list[int]


def series_divide(
    series: Sequence[int],
    p: int,
    exps: Sequence[int] | int,
    variable: int = 1,
    truncated: bool = False,
) -> SeriesDivision:
    """Divide a Hilbert series by 1 + X + ... + X^(p^(n_v) - 1).

    With ``truncated=False`` the series is a polynomial and the division must
    be exact.  With ``truncated=True`` it is a prefix of a power series and
    only the quotient coefficients up to the same degree are produced.
    Success also needs every quotient coefficient to be non-negative.
    """
    if isinstance(exps, int):
        e = exps
    else:
        e = list(exps)[variable - 1]
    width = p**e
    c = [int(v) for v in series]
    while c and c[-1] == 0 and not truncated:
        c.pop()
    if not c:
        return SeriesDivision(True, [], [])
    if truncated:
        qlen = len(c)
    else:
        qlen = max(len(c) - (width - 1), 0)
    q = []
    for a in range(qlen):
        v = c[a] - sum(q[a - t] for t in range(1, width) if a - t >= 0)
        q.append(v)
    if truncated:
        rem = []
    else:
        product_ = [0] * (qlen + width - 1)
        for a, qa in enumerate(q):
            for t in range(width):
                product_[a + t] += qa
        rem = [x - y for x, y in zip(c + [0] * (len(product_) - len(c)), product_ + [0] * (len(c) - len(product_)))]
        while rem and rem[-1] == 0:
            rem.pop()
    ok = not rem and all(v >= 0 for v in q)
    while q and q[-1] == 0:
        q.pop()
    return SeriesDivision(ok, q, rem)


def _complete_prefix(table: BigradedTable, variable: int, support: Sequence[int], fixed: dict[int, int]) -> tuple[list[int], bool]:
    """Longest prefix of the series whose coefficients are all fully computed.

    Returns the prefix and whether it covers the whole support.
    """
    v = variable - 1
    out = []
    for a in range(support[v] + 1):
        try:
            c = hilbert_series(table, variable, max_degree=a, support=support, fixed=fixed)
        except IncompleteTableError:
            return out, False
        c = c + [0] * (a + 1 - len(c))
        out.append(c[a])
    return out, True


def check_hilbert_divisibility(
    table: BigradedTable,
    variable: int,
    exps: Sequence[int],
    support: Sequence[int],
) -> CheckReport:
    """Hilbert series in one variable divides by 1 + X + ... + X^(p^(n_v) - 1).

    Checked for the full series and for every slice with the other degrees
    held fixed (each slice is itself a module over the divided-power operators
    in that variable).  A series known up to the support edge must divide
    exactly; one cut short by the computed range is checked as a truncated
    power series, which still forces non-negative quotient coefficients.
    """
    p, exps = _require_fp(table, exps)
    check_support(table, support)
    k = table.k
    series, full = _complete_prefix(table, variable, support, {})
    results = []
    res = series_divide(series, p, exps, variable, truncated=not full)
    results.append(res)
    others = [j for j in range(1, k + 1) if j != variable]
    n_exact = n_trunc = 0
    for vals in product(*(range(support[j - 1] + 1) for j in others)):
        fixed = dict(zip(others, vals))
        sl, sl_full = _complete_prefix(table, variable, support, fixed)
        if not sl:
            continue
        r = series_divide(sl, p, exps, variable, truncated=not sl_full)
        results.append(r)
        if sl_full:
            n_exact += 1
        else:
            n_trunc += 1
    passed = all(r.success for r in results)
    details = {
        "series": series,
        "quotient": res.quotient,
        "mode": "exact" if full else "truncated",
        "slices_exact": n_exact,
        "slices_truncated": n_trunc,
    }
    failing = sum(1 for r in results[1:] if not r.success)
    if failing:
        details["failing_slices"] = failing
    width = p ** exps[variable - 1]
    return CheckReport(f"x{variable}-series of N_{table.i} divisible by 1+...+X^{width - 1}", passed, details)
