"""Exact integer linear algebra: Hermite and Smith normal forms, lattice quotients, ranks mod p.

Matrices are numpy arrays.  Work starts in int64 and moves to Python-int
object arrays as soon as a tracked entry bound could overflow, so results
are always exact.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from math import gcd, isqrt
from typing import Iterable, Sequence

import numpy as np

# entries are kept below this in int64 mode so that q * row cannot overflow
_SAFE = 1 << 62
_RECHECK = 1 << 40


class ContainmentError(ValueError):
    """Raised when the sublattice generators are not inside the ambient lattice."""


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    if p % 2 == 0:
        return p == 2
    for f in range(3, isqrt(p) + 1, 2):
        if p % f == 0:
            return False
    return True


def factorize(n: int) -> Counter:
    n = abs(n)
    out: Counter = Counter()
    f = 2
    while f * f <= n:
        while n % f == 0:
            out[f] += 1
            n //= f
        f += 1 if f == 2 else 2
    if n > 1:
        out[n] += 1
    return out


@dataclass(frozen=True)
class GroupInvariants:
    """Z^rank + Z/d1 + ... + Z/dr with d1 | d2 | ... | dr and every di > 1."""

    rank: int = 0
    factors: tuple[int, ...] = ()

    def __post_init__(self):
        if self.rank < 0:
            raise ValueError("rank must be non-negative")
        factors = tuple(int(f) for f in self.factors)
        object.__setattr__(self, "factors", factors)
        for i, f in enumerate(factors):
            if f <= 1:
                raise ValueError(f"invariant factor {f} must exceed 1")
            if i and f % factors[i - 1]:
                raise ValueError(f"factors {factors} do not form a divisibility chain")

    @classmethod
    def from_cyclic_orders(cls, rank: int, orders: Iterable[int]) -> "GroupInvariants":
        """Normalize any list of cyclic orders (0 meaning Z) to invariant factors."""
        rank = int(rank)
        powers: dict[int, list[int]] = {}
        for o in orders:
            o = abs(int(o))
            if o == 0:
                rank += 1
                continue
            for prime, e in factorize(o).items():
                powers.setdefault(prime, []).append(prime**e)
        return cls(rank, _chain_from_prime_powers(powers))

    def elementary_divisors(self) -> tuple[int, ...]:
        """Torsion as a sorted tuple of prime powers."""
        out = []
        for f in self.factors:
            for prime, e in factorize(f).items():
                out.append(prime**e)
        return tuple(sorted(out))

    def is_isomorphic(self, other: "GroupInvariants") -> bool:
        return self.rank == other.rank and self.elementary_divisors() == other.elementary_divisors()

    @property
    def torsion_order(self) -> int:
        out = 1
        for f in self.factors:
            out *= f
        return out

    @property
    def is_zero(self) -> bool:
        return self.rank == 0 and not self.factors

    def __bool__(self) -> bool:
        return not self.is_zero

    def dim_mod_p(self, p: int) -> int:
        """Dimension of this group tensored with F_p."""
        return self.rank + sum(1 for f in self.factors if f % p == 0)

    def __str__(self) -> str:
        parts = []
        if self.rank:
            parts.append("Z" if self.rank == 1 else f"Z^{self.rank}")
        parts.extend(f"Z/{f}" for f in self.factors)
        return " + ".join(parts) if parts else "0"


def _chain_from_prime_powers(powers: dict[int, list[int]]) -> tuple[int, ...]:
    if not powers:
        return ()
    length = max(len(v) for v in powers.values())
    chain = [1] * length
    for prime, vals in powers.items():
        vals = sorted(vals)
        # largest powers go to the end of the chain
        for i, v in enumerate(reversed(vals)):
            chain[length - 1 - i] *= v
    return tuple(chain)


def as_matrix(M, cols: int | None = None) -> np.ndarray:
    """Copy ``M`` into a 2-D object array of Python ints."""
    if isinstance(M, np.ndarray) and M.ndim == 2:
        return M.astype(object)
    rows = [list(r) for r in M]
    if not rows:
        return np.zeros((0, cols or 0), dtype=object)
    out = np.empty((len(rows), len(rows[0])), dtype=object)
    for i, r in enumerate(rows):
        if len(r) != out.shape[1]:
            raise ValueError("ragged matrix")
        for j, v in enumerate(r):
            out[i, j] = int(v)
    return out


class _Work:
    """Integer matrix under row operations, promoted to object dtype on demand."""

    def __init__(self, a: np.ndarray):
        a = np.asarray(a)
        if a.dtype != object:
            a = a.astype(np.int64)
            self.bound = int(np.abs(a).max()) if a.size else 0
            if self.bound >= _SAFE:
                a = a.astype(object)
        else:
            self.bound = 0
        self.a = a

    @property
    def exact(self) -> bool:
        return self.a.dtype == object

    def promote(self) -> None:
        if not self.exact:
            self.a = self.a.astype(object)

    def _grow(self, extra: int) -> None:
        if self.exact:
            return
        self.bound += extra
        if self.bound >= _RECHECK:
            self.bound = int(np.abs(self.a).max()) + extra if self.a.size else extra
            if self.bound >= _SAFE:
                self.promote()

    def sub_outer(self, rows: np.ndarray, q: np.ndarray, src: int) -> None:
        """a[rows] -= q * a[src] (outer product)."""
        if not self.exact:
            qmax = int(np.abs(q).max()) if q.size else 0
            rmax = int(np.abs(self.a[src]).max())
            self._grow(qmax * rmax)
            if not self.exact and self.bound >= _SAFE:
                self.promote()
        if self.exact:
            q = q.astype(object)
        self.a[rows] -= np.outer(q, self.a[src])

    def swap(self, i: int, j: int) -> None:
        if i != j:
            self.a[[i, j]] = self.a[[j, i]]


def _echelon(work: _Work, ncols: int | None = None, reduce_above: bool = False) -> list[int]:
    """In-place integer row echelon form on the first ``ncols`` columns.

    Pivots are made positive.  Returns the pivot columns; rows past
    ``len(pivots)`` are zero on those columns.
    """
    m = work.a.shape[0]
    n = work.a.shape[1] if ncols is None else ncols
    pivots: list[int] = []
    r = 0
    for c in range(n):
        if r == m:
            break
        found = False
        while True:
            col = work.a[r:, c]
            nz = np.flatnonzero(col)
            if nz.size == 0:
                break
            found = True
            best = nz[np.argmin(np.abs(col[nz]))] + r
            work.swap(r, best)
            if nz.size == 1:
                break
            others = np.flatnonzero(work.a[r + 1 :, c]) + r + 1
            piv = work.a[r, c]
            q = work.a[others, c] // piv
            work.sub_outer(others, q, r)
        if found:
            if work.a[r, c] < 0:
                work.a[r] = -work.a[r]
            pivots.append(c)
            r += 1
    if reduce_above:
        for i, c in enumerate(pivots):
            if i == 0:
                continue
            above = np.arange(i)
            q = work.a[above, c] // work.a[i, c]
            nzq = np.flatnonzero(q)
            if nzq.size:
                work.sub_outer(above[nzq], q[nzq], i)
    return pivots


def echelon_basis(M) -> tuple[np.ndarray, list[int]]:
    """Row echelon basis of the Z-row-span of ``M`` plus its pivot columns.

    The returned rows form a lattice basis (not reduced above the pivots).
    """
    a = np.asarray(M)
    if a.ndim != 2:
        a = as_matrix(M)
    if a.shape[0] == 0:
        return a.reshape(0, a.shape[1]), []
    work = _Work(a.copy())
    pivots = _echelon(work)
    return work.a[: len(pivots)].copy(), pivots


def hermite_normal_form(M) -> tuple[np.ndarray, np.ndarray]:
    """Row Hermite normal form H and unimodular U with U @ M == H.

    H is in row echelon form with positive pivots and entries above each
    pivot reduced into [0, pivot).  Zero rows sit at the bottom.
    """
    a = as_matrix(M)
    m, n = a.shape
    aug = np.concatenate([a, np.identity(m, dtype=np.int64).astype(object)], axis=1)
    work = _Work(aug)
    work.promote()
    _echelon(work, ncols=n, reduce_above=True)
    return work.a[:, :n].copy(), work.a[:, n:].copy()


def _is_diagonal(a: np.ndarray) -> bool:
    m, n = a.shape
    k = min(m, n)
    off = a.copy()
    idx = np.arange(k)
    off[idx, idx] = 0
    return not np.any(off != 0)


def _normalize_chain(diag: Sequence[int]) -> list[int]:
    """Turn positive diagonal entries into a divisibility chain (same group)."""
    ones = [d for d in diag if d == 1]
    rest = sorted(int(d) for d in diag if d != 1)
    for i in range(len(rest)):
        for j in range(i + 1, len(rest)):
            a, b = rest[i], rest[j]
            if b % a:
                g = gcd(a, b)
                rest[i], rest[j] = g, a // g * b
    rest.sort()
    # gcd steps can create new units
    units = sum(1 for d in rest if d == 1)
    rest = [d for d in rest if d != 1]
    return [1] * (len(ones) + units) + rest


def smith_normal_form(M) -> list[int]:
    """Nonzero invariant factors d1 | d2 | ... of ``M`` (units included).

    The rank deficit is not reported; callers compare ``len`` of the result
    with the matrix shape.
    """
    a = np.asarray(M)
    if a.ndim != 2:
        a = as_matrix(M)
    if a.size == 0:
        return []
    b, _ = echelon_basis(a)
    while b.size and not _is_diagonal(b):
        b, _ = echelon_basis(b.T.copy())
    k = min(b.shape) if b.size else 0
    diag = [abs(int(b[i, i])) for i in range(k) if b[i, i] != 0]
    return _normalize_chain(diag)


def smith_form(M) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return (D, P, Q) with P @ M @ Q == D, D diagonal in divisibility chain order.

    P and Q are unimodular.  Slower than :func:`smith_normal_form`; meant for
    small matrices and verification.
    """
    a = as_matrix(M)
    m, n = a.shape
    P = np.identity(m, dtype=np.int64).astype(object)
    Q = np.identity(n, dtype=np.int64).astype(object)
    D = a.copy()
    t = 0
    while t < min(m, n):
        sub = D[t:, t:]
        nz = np.argwhere(sub != 0)
        if nz.size == 0:
            break
        vals = np.array([abs(sub[i, j]) for i, j in nz], dtype=object)
        i, j = nz[int(np.argmin(vals))]
        i += t
        j += t
        D[[t, i]] = D[[i, t]]
        P[[t, i]] = P[[i, t]]
        D[:, [t, j]] = D[:, [j, t]]
        Q[:, [t, j]] = Q[:, [j, t]]
        clean = True
        piv = D[t, t]
        for r in range(t + 1, m):
            if D[r, t]:
                q = D[r, t] // piv
                D[r] -= q * D[t]
                P[r] -= q * P[t]
                if D[r, t]:
                    clean = False
        for c in range(t + 1, n):
            if D[t, c]:
                q = D[t, c] // piv
                D[:, c] -= q * D[:, t]
                Q[:, c] -= q * Q[:, t]
                if D[t, c]:
                    clean = False
        if not clean:
            continue
        # pivot must divide the remaining block
        bad = None
        for r in range(t + 1, m):
            for c in range(t + 1, n):
                if D[r, c] % piv:
                    bad = r
                    break
            if bad is not None:
                break
        if bad is not None:
            D[t] += D[bad]
            P[t] += P[bad]
            continue
        if D[t, t] < 0:
            D[t] = -D[t]
            P[t] = -P[t]
        t += 1
    return D, P, Q


def express_in_basis(basis: np.ndarray, pivots: Sequence[int], vectors) -> np.ndarray:
    """Integer coordinates of ``vectors`` rows in an echelon ``basis``.

    Raises :class:`ContainmentError` if some row is not in the Z-span.
    """
    v = np.asarray(vectors)
    r = len(pivots)
    if v.shape[0] == 0:
        return np.zeros((0, r), dtype=np.int64)
    work = _Work(v.copy())
    bwork = _Work(np.asarray(basis))
    if bwork.exact or bwork.bound >= (1 << 31):
        work.promote()
    coords = np.zeros((v.shape[0], r), dtype=object if work.exact else np.int64)
    for j, c in enumerate(pivots):
        piv = basis[j, c]
        col = work.a[:, c]
        nz = np.flatnonzero(col)
        if nz.size == 0:
            continue
        vals = col[nz]
        q = vals // piv
        if np.any(vals - q * piv != 0):
            raise ContainmentError(f"vector not in lattice (pivot column {c})")
        if not work.exact:
            qmax = int(np.abs(q).max())
            work._grow(qmax * bwork.bound)
        if work.exact:
            q = q.astype(object)
            if coords.dtype != object:
                coords = coords.astype(object)
            work.a[nz] -= np.outer(q, np.asarray(basis[j], dtype=object))
        else:
            work.a[nz] -= np.outer(q, basis[j])
        coords[nz, j] = q
    if np.any(work.a != 0):
        raise ContainmentError("vector not in the span of the basis")
    return coords


def lattice_quotient(U_gens, V_gens) -> GroupInvariants:
    """Structure of span_Z(U rows) / span_Z(V rows); V must lie inside U."""
    U = np.asarray(U_gens) if isinstance(U_gens, np.ndarray) else as_matrix(U_gens)
    V = np.asarray(V_gens) if isinstance(V_gens, np.ndarray) else as_matrix(V_gens, U.shape[1])
    if U.ndim != 2 or (V.size and V.shape[1] != U.shape[1]):
        raise ValueError("generator matrices must share the ambient dimension")
    basis, pivots = echelon_basis(U)
    r = len(pivots)
    if V.shape[0] == 0:
        return GroupInvariants(r, ())
    coords = express_in_basis(basis, pivots, V)
    factors = smith_normal_form(coords) if r else []
    return GroupInvariants(r - len(factors), tuple(f for f in factors if f > 1))


def echelon_mod_p(M, p: int) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon basis of the row space of ``M`` over F_p."""
    a = np.asarray(M)
    if a.dtype == object:
        a = np.mod(a, p).astype(np.int64)
    else:
        a = np.mod(a.astype(np.int64), p)
    m, n = a.shape
    pivots: list[int] = []
    r = 0
    for c in range(n):
        if r == m:
            break
        nz = np.flatnonzero(a[r:, c])
        if nz.size == 0:
            continue
        i = nz[0] + r
        if i != r:
            a[[r, i]] = a[[i, r]]
        inv = pow(int(a[r, c]), -1, p)
        if inv != 1:
            a[r] = (a[r] * inv) % p
        rows = np.flatnonzero(a[:, c])
        rows = rows[rows != r]
        if rows.size:
            a[rows] = (a[rows] - np.outer(a[rows, c], a[r])) % p
        pivots.append(c)
        r += 1
    return a[:r].copy(), pivots


def rank_mod_p(M, p: int) -> int:
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    a = np.asarray(M)
    if a.ndim != 2:
        a = as_matrix(M)
    if a.size == 0:
        return 0
    return len(echelon_mod_p(a, p)[1])
