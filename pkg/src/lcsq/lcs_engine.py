"""Lower central series quotients N_i = M_i / M_{i+1} of finitely presented graded algebras.

Each multigraded component is computed in free-algebra coordinates as the
lattice quotient (M_i(A_n) + I) / (M_{i+1}(A_n) + I), where I is the
relation ideal.  The heavy lifting happens in :class:`LCSEngine`, which
works modulo I and builds ideal bases degree by degree:

    M_i(d) = L_i(d) + sum_g x_g M_i(d - e_g) + sum_g M_i(d - e_g) x_g

so no component ever needs the full u * l * v product set.
"""

from __future__ import annotations

import logging
from itertools import product
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Iterator, Sequence, Union

import numpy as np

from .exact_linalg import (
    GroupInvariants,
    echelon_basis,
    echelon_mod_p,
    is_prime,
    lattice_quotient,
)
from .free_algebra import (
    Element,
    MultiDegree,
    Word,
    add_degrees,
    bracket,
    degrees_below,
    monomial_index,
    monomials_of_multidegree,
    multinomial,
    multiply,
    parse_relations,
    render,
    sub_degrees,
)

log = logging.getLogger(__name__)

Cell = Union[GroupInvariants, int]

DEFAULT_MAX_DIM = 4096
# bump whenever a change could alter computed cells; cached tables carry it
ENGINE_VERSION = "1"


class IncompleteTableError(ValueError):
    pass


@dataclass(frozen=True)
class Ring:
    """Coefficient ring: the integers (``p is None``) or the prime field F_p."""

    p: int | None = None

    def __post_init__(self):
        if self.p is not None and not is_prime(self.p):
            raise ValueError(f"F_p needs a prime, got {self.p}")

    @classmethod
    def parse(cls, text: str) -> "Ring":
        text = text.strip()
        if text in ("Z", "ZZ"):
            return cls(None)
        for prefix in ("Fp:", "F", "GF"):
            if text.startswith(prefix) and text[len(prefix):].isdigit():
                return cls(int(text[len(prefix):]))
        raise ValueError(f"unsupported ring {text!r}; use Z or Fp:<prime>")

    @property
    def is_integral(self) -> bool:
        return self.p is None

    def __str__(self) -> str:
        return "Z" if self.p is None else f"Fp:{self.p}"


Z = Ring()


@dataclass(frozen=True)
class AlgebraPresentation:
    k: int
    ring: Ring = Z
    relations: tuple[Element, ...] = ()

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("need at least one generator")
        object.__setattr__(self, "relations", tuple(self.relations))
        for rel in self.relations:
            if rel.k != self.k:
                raise ValueError(f"relation {render(rel)} is over {rel.k} generators, not {self.k}")

    @classmethod
    def from_strings(cls, k: int, ring: Ring | str = Z, relations: str | Iterable[str] = ()) -> "AlgebraPresentation":
        if isinstance(ring, str):
            ring = Ring.parse(ring)
        if isinstance(relations, str):
            rels = parse_relations(relations, k)
        else:
            rels = []
            for r in relations:
                rels.extend(parse_relations(r, k))
        return cls(k, ring, tuple(r for r in rels if r))

    def relation_strings(self) -> list[str]:
        return sorted(render(r) for r in self.relations)

    def with_ring(self, ring: Ring) -> "AlgebraPresentation":
        return AlgebraPresentation(self.k, ring, self.relations)

    def __str__(self) -> str:
        gens = ",".join(f"x{g}" for g in range(1, self.k + 1))
        rels = ", ".join(self.relation_strings())
        return f"{self.ring}<{gens}>/({rels})"


@dataclass
class SpanningSet:
    degree: MultiDegree
    vectors: list[Element]
    basis_order: tuple[Word, ...]

    def matrix(self) -> np.ndarray:
        n = len(self.basis_order)
        out = np.zeros((len(self.vectors), n), dtype=object)
        for i, v in enumerate(self.vectors):
            out[i] = v.coordinates() if v else [0] * n
        return out


# -- literal spanning sets in free-algebra coordinates ----------------------------


def _proper_splits(d: MultiDegree) -> Iterator[tuple[MultiDegree, MultiDegree]]:
    for a in degrees_below(d):
        if sum(a) == 0 or a == tuple(d):
            continue
        yield a, sub_degrees(d, a)


def _words_as_elements(k: int, d: MultiDegree) -> list[Element]:
    return [Element.word(w, k) for w in monomials_of_multidegree(k, d)]


@lru_cache(maxsize=None)
def _l_basis_free(i: int, d: MultiDegree, k: int) -> tuple[Element, ...]:
    span = l_spanning_set(i, d, k)
    if not span.vectors:
        return ()
    basis, _ = echelon_basis(span.matrix())
    return tuple(Element.from_coordinates(row, k, d) for row in basis)


def l_spanning_set(i: int, d: MultiDegree, k: int) -> SpanningSet:
    """Spanning vectors of L_i in degree d of the free algebra on k generators.

    L_1 is all monomials; L_i is spanned by [m, l] with m a monomial and l
    running over a Z-basis of L_{i-1} in the complementary degree.
    """
    d = tuple(d)
    if i < 1:
        raise ValueError("i must be positive")
    words = monomials_of_multidegree(k, d)
    if i == 1:
        return SpanningSet(d, _words_as_elements(k, d), words)
    vectors = []
    for dm, dl in _proper_splits(d):
        lower = _l_basis_free(i - 1, dl, k)
        if not lower:
            continue
        for w in monomials_of_multidegree(k, dm):
            m = Element.word(w, k)
            for ell in lower:
                vectors.append(bracket(m, ell))
    return SpanningSet(d, vectors, words)


def m_spanning_set(i: int, d: MultiDegree, k: int) -> SpanningSet:
    """All u * l * v with u, v monomials and l from L_i, summed over degree splits."""
    d = tuple(d)
    vectors = []
    for du in degrees_below(d):
        rest = sub_degrees(d, du)
        for dv in degrees_below(rest):
            dl = sub_degrees(rest, dv)
            if sum(dl) < i:
                continue
            lower = _l_basis_free(i, dl, k)
            if not lower:
                continue
            for u in monomials_of_multidegree(k, du):
                ue = Element.word(u, k)
                for v in monomials_of_multidegree(k, dv):
                    ve = Element.word(v, k)
                    for ell in lower:
                        vectors.append(multiply(multiply(ue, ell), ve))
    return SpanningSet(d, vectors, monomials_of_multidegree(k, d))


def ideal_spanning_set(relations: Sequence[Element], d: MultiDegree, k: int) -> SpanningSet:
    """All u * f * v for monomials u, v and relations f of fitting degree."""
    d = tuple(d)
    vectors = []
    for f in relations:
        if not f:
            continue
        rest = sub_degrees(d, f.degree)
        if any(e < 0 for e in rest):
            continue
        for du in degrees_below(rest):
            dv = sub_degrees(rest, du)
            for u in monomials_of_multidegree(k, du):
                ue = Element.word(u, k)
                for v in monomials_of_multidegree(k, dv):
                    vectors.append(multiply(multiply(ue, f), Element.word(v, k)))
    return SpanningSet(d, vectors, monomials_of_multidegree(k, d))


# -- the engine -------------------------------------------------------------------


def _unit(k: int, g: int) -> MultiDegree:
    return tuple(1 if j == g else 0 for j in range(k))


def _dedupe(rows: np.ndarray) -> np.ndarray:
    if rows.shape[0] <= 1:
        return rows
    nz = np.any(rows != 0, axis=1)
    rows = rows[nz]
    if rows.dtype != object and rows.shape[0] > 1:
        rows = np.unique(rows, axis=0)
    return rows


class _Ambient:
    """Coordinates of A(d) = A_n(d) / I(d).

    Over Z, columns that carry a unit pivot of the ideal basis are eliminated;
    ideal rows with non-unit pivots survive as ``extra`` rows that must be
    added to every lattice.  Over F_p every pivot is a unit.
    """

    def __init__(self, k: int, d: MultiDegree, ideal_basis: np.ndarray, pivots: list[int], p: int | None):
        self.k = k
        self.d = d
        self.words = monomials_of_multidegree(k, d)
        self.n = len(self.words)
        n = self.n
        if p is None:
            unit = [j for j, c in enumerate(pivots) if ideal_basis[j, c] == 1]
        else:
            unit = list(range(len(pivots)))
        dropped = [pivots[j] for j in unit]
        dropped_set = set(dropped)
        self.kept = np.array([c for c in range(n) if c not in dropped_set], dtype=np.intp)
        self.selection = True
        self.reducer = None
        if unit:
            rows = ideal_basis[unit]
            if np.any(np.count_nonzero(rows, axis=1) != 1):
                self.selection = False
                self.reducer = self._build_reducer(rows, dropped, p)
        extra = [j for j in range(len(pivots)) if j not in set(unit)]
        if extra:
            self.extra = self.reduce(np.asarray(ideal_basis[extra]))
        else:
            self.extra = np.zeros((0, len(self.kept)), dtype=np.int64)
        self.p = p

    def _build_reducer(self, rows: np.ndarray, dropped: list[int], p: int | None) -> np.ndarray:
        # image of each basis word in kept coordinates
        n = self.n
        dtype = object if rows.dtype == object else np.int64
        R = np.identity(n, dtype=np.int64).astype(dtype)
        order = np.argsort(dropped)
        for j in order:
            c = dropped[j]
            col = R[:, c].copy()
            nz = np.flatnonzero(col)
            if nz.size:
                R[nz] -= np.outer(col[nz], rows[j])
                if p is not None:
                    R[nz] %= p
        return R[:, self.kept]

    @property
    def dim(self) -> int:
        return len(self.kept)

    def reduce(self, full: np.ndarray) -> np.ndarray:
        """Full free-algebra coordinates -> kept coordinates modulo the ideal."""
        if self.selection:
            out = full[:, self.kept]
        else:
            out = full.dot(self.reducer)
        if self.p is not None:
            out = np.mod(out, self.p)
        return out

    def lift(self, kept: np.ndarray) -> np.ndarray:
        out = np.zeros((kept.shape[0], self.n), dtype=kept.dtype)
        out[:, self.kept] = kept
        return out


class LCSEngine:
    """Per-presentation cache of ideal, L_i and M_i bases by multidegree."""

    def __init__(self, pres: AlgebraPresentation):
        self.pres = pres
        self.k = pres.k
        self.p = pres.ring.p
        self._ideal: dict[MultiDegree, tuple[np.ndarray, list[int]]] = {}
        self._ambient: dict[MultiDegree, _Ambient] = {}
        self._l: dict[tuple[int, MultiDegree], np.ndarray] = {}
        self._m: dict[tuple[int, MultiDegree], np.ndarray] = {}
        self._shift: dict[tuple[Word, MultiDegree, str], np.ndarray] = {}
        self._rel_rows: dict[MultiDegree, list[list[int]]] = {}
        for rel in pres.relations:
            self._rel_rows.setdefault(rel.degree, []).append(rel.coordinates())

    # linear algebra over the presentation's ring
    def _basis(self, rows: np.ndarray) -> tuple[np.ndarray, list[int]]:
        if rows.shape[0] == 0:
            return rows, []
        if self.p is None:
            return echelon_basis(_dedupe(rows))
        return echelon_mod_p(_dedupe(np.mod(rows, self.p)), self.p)

    def _shift_index(self, word: Word, d: MultiDegree, side: str) -> np.ndarray:
        """Positions of word*w (side 'L') or w*word (side 'R') for w of degree d."""
        key = (word, d, side)
        idx = self._shift.get(key)
        if idx is None:
            target = monomial_index(self.k, add_degrees(d, _word_degree(word, self.k)))
            if side == "L":
                idx = np.array([target[word + w] for w in monomials_of_multidegree(self.k, d)], dtype=np.intp)
            else:
                idx = np.array([target[w + word] for w in monomials_of_multidegree(self.k, d)], dtype=np.intp)
            self._shift[key] = idx
        return idx

    def ideal_basis(self, d: MultiDegree) -> tuple[np.ndarray, list[int]]:
        d = tuple(d)
        hit = self._ideal.get(d)
        if hit is not None:
            return hit
        n = multinomial(d)
        blocks = []
        if d in self._rel_rows:
            blocks.append(np.array(self._rel_rows[d], dtype=object))
        for g in range(self.k):
            if d[g] == 0:
                continue
            lower = tuple(e - (1 if j == g else 0) for j, e in enumerate(d))
            basis, _ = self.ideal_basis(lower)
            if basis.shape[0] == 0:
                continue
            for side in "LR":
                idx = self._shift_index((g + 1,), lower, side)
                out = np.zeros((basis.shape[0], n), dtype=basis.dtype)
                out[:, idx] = basis
                blocks.append(out)
        rows = _stack(blocks, n)
        result = self._basis(rows)
        self._ideal[d] = result
        return result

    def ambient(self, d: MultiDegree) -> _Ambient:
        d = tuple(d)
        amb = self._ambient.get(d)
        if amb is None:
            basis, pivots = self.ideal_basis(d)
            amb = _Ambient(self.k, d, basis, pivots, self.p)
            self._ambient[d] = amb
        return amb

    def _products(self, word: Word, lower: np.ndarray, dl: MultiDegree, commutator: bool) -> np.ndarray:
        """word * l (or [word, l]) for rows l in kept coordinates of degree dl."""
        amb_l = self.ambient(dl)
        target = add_degrees(dl, _word_degree(word, self.k))
        n = multinomial(target)
        out = np.zeros((lower.shape[0], n), dtype=lower.dtype)
        left = self._shift_index(word, dl, "L")[amb_l.kept]
        out[:, left] += lower
        right = self._shift_index(word, dl, "R")[amb_l.kept]
        if commutator:
            out[:, right] -= lower
        return out

    def l_basis(self, i: int, d: MultiDegree) -> np.ndarray:
        """Basis (kept coordinates) of the image of L_i(d) in A(d)."""
        d = tuple(d)
        key = (i, d)
        hit = self._l.get(key)
        if hit is not None:
            return hit
        amb = self.ambient(d)
        if i == 1:
            basis = np.identity(amb.dim, dtype=np.int64)
        elif sum(d) < i:
            basis = np.zeros((0, amb.dim), dtype=np.int64)
        else:
            blocks = []
            for dm, dl in _proper_splits(d):
                lower = self.l_basis(i - 1, dl)
                if lower.shape[0] == 0:
                    continue
                amb_m = self.ambient(dm)
                for c in amb_m.kept:
                    word = amb_m.words[c]
                    blocks.append(self._products(word, lower, dl, commutator=True))
            basis = self._reduced_basis(amb, blocks)
        self._l[key] = basis
        return basis

    def _reduced_basis(self, amb: _Ambient, blocks: list[np.ndarray]) -> np.ndarray:
        full = _stack(blocks, amb.n)
        if full.shape[0] == 0:
            return np.zeros((0, amb.dim), dtype=np.int64)
        basis, _ = self._basis(amb.reduce(full))
        return basis

    def m_basis(self, i: int, d: MultiDegree) -> np.ndarray:
        """Basis (kept coordinates) of the image of M_i(d) = (A L_i A)(d) in A(d)."""
        d = tuple(d)
        key = (i, d)
        hit = self._m.get(key)
        if hit is not None:
            return hit
        amb = self.ambient(d)
        if i == 1:
            basis = np.identity(amb.dim, dtype=np.int64)
        elif sum(d) < i:
            basis = np.zeros((0, amb.dim), dtype=np.int64)
        else:
            blocks = []
            # L_i(d) enters only through its ideal generators [x_g, L_{i-1}]
            for g in range(self.k):
                if d[g] == 0:
                    continue
                dl = tuple(e - (1 if j == g else 0) for j, e in enumerate(d))
                lower = self.l_basis(i - 1, dl)
                if lower.shape[0]:
                    blocks.append(self._products((g + 1,), lower, dl, commutator=True))
                inner = self.m_basis(i, dl)
                if inner.shape[0]:
                    amb_l = self.ambient(dl)
                    n = amb.n
                    for side in "LR":
                        idx = self._shift_index((g + 1,), dl, side)[amb_l.kept]
                        out = np.zeros((inner.shape[0], n), dtype=inner.dtype)
                        out[:, idx] = inner
                        blocks.append(out)
            basis = self._reduced_basis(amb, blocks)
        self._m[key] = basis
        return basis

    def component_dim(self, d: MultiDegree) -> int:
        return len(self.ambient(d).kept)

    def n_component(self, i: int, d: MultiDegree) -> Cell:
        d = tuple(d)
        if len(d) != self.k:
            raise ValueError(f"degree {d} does not have {self.k} entries")
        upper = self.m_basis(i, d)
        lower = self.m_basis(i + 1, d)
        if self.p is not None:
            return upper.shape[0] - lower.shape[0]
        amb = self.ambient(d)
        U = _stack([upper, amb.extra], amb.dim)
        V = _stack([lower, amb.extra], amb.dim)
        if U.shape[0] == 0:
            return GroupInvariants()
        return lattice_quotient(U, V)


def _word_degree(word: Word, k: int) -> MultiDegree:
    deg = [0] * k
    for g in word:
        deg[g - 1] += 1
    return tuple(deg)


def _stack(blocks: list[np.ndarray], n: int) -> np.ndarray:
    blocks = [b for b in blocks if b.shape[0]]
    if not blocks:
        return np.zeros((0, n), dtype=np.int64)
    if any(b.dtype == object for b in blocks):
        blocks = [b.astype(object) for b in blocks]
    return np.concatenate(blocks, axis=0)


# -- tables -----------------------------------------------------------------------


@dataclass
class BigradedTable:
    """Multigraded table of N_i components.

    ``cells`` holds computed components only; a degree inside ``bound`` that is
    missing from ``cells`` was skipped (resource guard) and renders blank, as
    does anything outside the bound.
    """

    k: int
    bound: int
    cells: dict[MultiDegree, Cell] = field(default_factory=dict)
    ring: Ring = Z
    i: int | None = None
    presentation: AlgebraPresentation | None = None
    label: str = ""

    def get(self, d: MultiDegree) -> Cell | None:
        return self.cells.get(tuple(d))

    def is_computed(self, d: MultiDegree) -> bool:
        return tuple(d) in self.cells

    def in_bounds(self, d: MultiDegree) -> bool:
        return sum(d) <= self.bound and all(e >= 0 for e in d)

    def degrees(self) -> list[MultiDegree]:
        return sorted(self.cells, key=lambda d: (sum(d), d))

    def skipped(self) -> list[MultiDegree]:
        return [d for d in all_degrees(self.k, self.bound) if d not in self.cells]

    @property
    def is_dimension_table(self) -> bool:
        return not self.ring.is_integral

    def transpose(self) -> "BigradedTable":
        if self.k != 2:
            raise ValueError("transpose needs exactly two generators")
        cells = {(b, a): v for (a, b), v in self.cells.items()}
        return BigradedTable(self.k, self.bound, cells, self.ring, self.i, None, self.label)

    def total_dimension(self) -> int:
        if not self.is_dimension_table:
            raise TypeError("total dimension is defined for F_p tables")
        return sum(self.cells.values())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BigradedTable):
            return NotImplemented
        return (self.k, self.bound, self.ring, self.i, self.cells) == (
            other.k, other.bound, other.ring, other.i, other.cells)


def all_degrees(k: int, bound: int) -> list[MultiDegree]:
    out = []

    def rec(prefix: list[int], left: int) -> None:
        if len(prefix) == k:
            out.append(tuple(prefix))
            return
        for e in range(left + 1):
            prefix.append(e)
            rec(prefix, left - e)
            prefix.pop()

    rec([], bound)
    return sorted(out, key=lambda d: (sum(d), d))


_ENGINES: dict[AlgebraPresentation, LCSEngine] = {}


def engine_for(pres: AlgebraPresentation) -> LCSEngine:
    eng = _ENGINES.get(pres)
    if eng is None:
        eng = LCSEngine(pres)
        _ENGINES[pres] = eng
    return eng


def n_component(pres: AlgebraPresentation, i: int, d: MultiDegree) -> Cell:
    """Group (ring Z) or F_p-dimension of the degree-d part of N_i(A)."""
    if i < 1:
        raise ValueError("i must be positive")
    return engine_for(pres).n_component(i, tuple(d))


def n_table(pres: AlgebraPresentation, i: int, bound: int, max_dim: int | None = DEFAULT_MAX_DIM) -> BigradedTable:
    """All components of N_i with total degree <= bound.

    Components whose free-algebra dimension exceeds ``max_dim`` are skipped
    with a warning and stay blank.
    """
    if i < 1:
        raise ValueError("i must be positive")
    eng = engine_for(pres)
    table = BigradedTable(pres.k, bound, {}, pres.ring, i, pres)
    skipped = 0
    for d in all_degrees(pres.k, bound):
        if max_dim is not None and multinomial(d) > max_dim:
            skipped += 1
            continue
        table.cells[d] = eng.n_component(i, d)
    if skipped:
        log.warning("skipped %d components above the %d-monomial cap", skipped, max_dim)
    return table


def cell_dimension(cell: Cell) -> int:
    if isinstance(cell, GroupInvariants):
        raise TypeError("integral cells have no dimension; use an F_p table")
    return int(cell)


def hilbert_series(
    table: BigradedTable,
    variable: int,
    max_degree: int | None = None,
    support: Sequence[int] | None = None,
    fixed: dict[int, int] | None = None,
) -> list[int]:
    """Coefficients c_a = sum of cell dimensions with degree[variable] == a.

    ``variable`` is 1-based.  The table only covers a triangle, so a
    coefficient is trusted only when every cell it sums over was computed:
    ``support`` bounds the degrees that can be nonzero (cells outside it are
    taken as zero), and ``fixed`` pins other variables to one slice.  Raises
    :class:`IncompleteTableError` if a needed cell is missing.
    """
    if not table.is_dimension_table:
        raise TypeError("Hilbert series needs an F_p (dimension) table")
    v = variable - 1
    if not 0 <= v < table.k:
        raise ValueError(f"variable must be in 1..{table.k}")
    fixed = {g - 1: e for g, e in (fixed or {}).items()}
    if not table.cells:
        return []
    if support is None:
        box = [table.bound] * table.k
    else:
        box = list(support)
    top = box[v] if max_degree is None else max_degree
    coeffs = [0] * (top + 1)
    for a in range(top + 1):
        ranges = []
        for j in range(table.k):
            if j == v:
                ranges.append([a])
            elif j in fixed:
                ranges.append([fixed[j]])
            else:
                ranges.append(range(box[j] + 1))
        for d in product(*ranges):
            cell = table.get(d)
            if cell is None:
                raise IncompleteTableError(f"component {d} needed for X^{a} was not computed")
            coeffs[a] += cell_dimension(cell)
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    return coeffs
