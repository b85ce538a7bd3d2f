from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import table
from lcsq.exact_linalg import GroupInvariants, echelon_basis, hermite_normal_form, lattice_quotient, rank_mod_p
from lcsq.free_algebra import Element, bracket, monomials_of_multidegree, multiply
from lcsq.lcs_engine import (
    AlgebraPresentation,
    BigradedTable,
    IncompleteTableError,
    Ring,
    Z,
    all_degrees,
    hilbert_series,
    ideal_spanning_set,
    l_spanning_set,
    m_spanning_set,
    n_component,
    n_table,
)


def lattice(rows, n):
    """Canonical form of a Z-span: the nonzero rows of its HNF."""
    M = np.asarray(rows, dtype=object).reshape(-1, n)
    if M.shape[0] == 0:
        return ()
    H, _ = hermite_normal_form(M)
    return tuple(tuple(int(x) for x in r) for r in H if np.any(r != 0))


def rank(span):
    M = span.matrix()
    return 0 if M.shape[0] == 0 else len(echelon_basis(M)[1])


def pres(rels, ring="Z", k=2):
    return AlgebraPresentation.from_strings(k, ring, rels)


# -- presentations --------------------------------------------------------------------


def test_ring_parse():
    assert Ring.parse("Z") == Z and str(Ring.parse("Fp:7")) == "Fp:7"
    for bad in ("Q", "Fp:4", "Fp:", "Fp:x"):
        with pytest.raises(ValueError):
            Ring.parse(bad)


def test_presentation_rendering():
    p = pres("x1^3, x2^7")
    assert str(p) == "Z<x1,x2>/(x1^3, x2^7)"
    assert p.relation_strings() == ["x1^3", "x2^7"]
    assert p.with_ring(Ring(3)).ring.p == 3


# -- spanning sets -------------------------------------------------------------------


def test_l2_at_11_is_the_commutator():
    y = bracket(Element.generator(1, 2), Element.generator(2, 2))
    span = l_spanning_set(2, (1, 1), 2)
    assert lattice(span.matrix(), 2) == lattice([y.coordinates()], 2)


def test_l2_at_20_is_zero():
    assert rank(l_spanning_set(2, (2, 0), 2)) == 0


def all_bracketings(i, d, k):
    """Every [m, l] with l a spanning vector (not a basis vector) of the level below."""
    if i == 1:
        return [Element.word(w, k) for w in monomials_of_multidegree(k, d)]
    out = []
    for dm in product(*(range(e + 1) for e in d)):
        dl = tuple(a - b for a, b in zip(d, dm))
        if sum(dm) == 0 or sum(dl) == 0:
            continue
        for w in monomials_of_multidegree(k, dm):
            for ell in all_bracketings(i - 1, dl, k):
                out.append(bracket(Element.word(w, k), ell))
    return out


@pytest.mark.parametrize("i,d", [(2, (2, 1)), (3, (2, 1)), (3, (2, 2)), (3, (3, 1)), (4, (2, 2)), (3, (1, 1, 1))])
def test_l_spanning_set_matches_all_bracketings(i, d):
    k = len(d)
    n = len(monomials_of_multidegree(k, d))
    brute = [e.coordinates() for e in all_bracketings(i, d, k) if not e.is_zero]
    assert lattice(l_spanning_set(i, d, k).matrix(), n) == lattice(brute, n)


def test_l3_at_21_is_spanned_by_z1():
    x1, x2 = Element.generator(1, 2), Element.generator(2, 2)
    z1 = bracket(x1, bracket(x1, x2))
    assert lattice(l_spanning_set(3, (2, 1), 2).matrix(), 3) == lattice([z1.coordinates()], 3)


def test_m_spanning_set_examples():
    assert lattice(m_spanning_set(2, (1, 1), 2).matrix(), 2) == lattice(l_spanning_set(2, (1, 1), 2).matrix(), 2)
    assert rank(m_spanning_set(2, (2, 1), 2)) == 2
    assert m_spanning_set(3, (1, 1), 2).vectors == []


def test_ideal_spanning_set_examples():
    x13 = [Element.word((1, 1, 1), 2)]
    assert rank(ideal_spanning_set(x13, (3, 0), 2)) == 1
    assert ideal_spanning_set(x13, (2, 0), 2).vectors == []
    rels = [Element.word((1, 1, 1), 2), Element.word((2, 2, 2, 2), 2)]
    assert rank(ideal_spanning_set(rels, (3, 1), 2)) == 2


@pytest.mark.parametrize("j", [1, 2, 3])
def test_m3_times_mj_lies_in_mj_plus_2(j):
    k = 2
    for d in all_degrees(k, 7):
        if sum(d) < j + 3:
            continue
        n = len(monomials_of_multidegree(k, d))
        target = m_spanning_set(j + 2, d, k).matrix()
        prods = []
        for d1 in product(*(range(e + 1) for e in d)):
            d2 = tuple(a - b for a, b in zip(d, d1))
            if sum(d1) < 3 or sum(d2) < j:
                continue
            left = [v for v in m_spanning_set(3, d1, k).vectors if not v.is_zero]
            right = [v for v in m_spanning_set(j, d2, k).vectors if not v.is_zero]
            prods += [multiply(a, b).coordinates() for a in left for b in right]
        if not prods:
            continue
        both = np.concatenate([target, np.asarray(prods, dtype=object).reshape(-1, n)])
        assert lattice(both, n) == lattice(target, n), d


# -- components ----------------------------------------------------------------------


def test_component_examples():
    assert n_component(pres("x1^3,x2^7"), 2, (3, 1)) == GroupInvariants(0, (3,))
    assert n_component(pres("x1^4,x2^6"), 2, (4, 6)) == GroupInvariants(0, (2,))
    assert n_component(pres("x1^3,x2^4"), 3, (3, 4)).is_isomorphic(GroupInvariants.from_cyclic_orders(1, [3, 4]))
    assert n_component(pres("x1^3,x2^4", "Fp:3"), 3, (3, 2)) == 3


@pytest.mark.parametrize("rels", ["x1^3,x2^7", "x1^2", ""])
def test_pure_degree_components_of_n2_vanish(rels):
    for j in range(6):
        assert n_component(pres(rels), 2, (0, j)).is_zero
        assert n_component(pres(rels), 2, (j, 0)).is_zero


def test_component_rejects_bad_index():
    with pytest.raises(ValueError):
        n_component(pres("x1^3"), 0, (1, 1))


def literal_component(p, i, d):
    """Group or dimension straight from the literal spanning sets."""
    I = ideal_spanning_set(p.relations, d, p.k).matrix()
    U = np.concatenate([m_spanning_set(i, d, p.k).matrix(), I])
    V = np.concatenate([m_spanning_set(i + 1, d, p.k).matrix(), I])
    if p.ring.is_integral:
        return lattice_quotient(U, V)
    return rank_mod_p(U, p.ring.p) - rank_mod_p(V, p.ring.p)


CASES = [
    ("x1^3,x2^4", "Z", 2), ("x1^3,x2^4", "Z", 3), ("x1^2,x2^2", "Z", 3), ("x1^3,x2^4", "Fp:3", 3),
    ("x1^2*x2 - x2*x1^2", "Z", 2), ("x1*x2 + x2*x1", "Z", 3), ("x1^2,x2^2", "Fp:2", 4), ("", "Z", 3),
]


@pytest.mark.parametrize("rels,ring,i", CASES)
def test_engine_agrees_with_literal_spanning_sets(rels, ring, i):
    p = pres(rels, ring)
    for d in all_degrees(2, 6):
        assert literal_component(p, i, d) == n_component(p, i, d), d


def test_engine_agrees_with_literal_spanning_sets_three_generators():
    p = pres("x1^2, x2*x3 - x3*x2", k=3)
    for d in all_degrees(3, 4):
        assert literal_component(p, 2, d) == n_component(p, 2, d), d
        assert literal_component(p, 3, d) == n_component(p, 3, d), d


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 5), st.integers(2, 5), st.integers(2, 3))
def test_swapping_generators_transposes_the_table(m, n, i):
    a = n_table(pres(f"x1^{m},x2^{n}"), i, 6)
    b = n_table(pres(f"x1^{n},x2^{m}"), i, 6)
    assert a.transpose().cells == b.cells


@pytest.mark.parametrize("m,n", [(2, 3), (3, 4), (4, 3), (3, 3)])
def test_support_cutoff(m, n):
    n2 = table("Z", f"x1^{m},x2^{n}", 2, m + n + 2)
    for (a, b), cell in n2.cells.items():
        if a > m or b > n:
            assert cell.is_zero, (a, b)
    n3 = table("Z", f"x1^{m},x2^{n}", 3, m + n + 3)
    for (a, b), cell in n3.cells.items():
        if a > m + 1 or b > n + 1:
            assert cell.is_zero, (a, b)


@pytest.mark.parametrize("p", [2, 3])
def test_fp_dimension_at_least_integral_rank(p):
    z = table("Z", "x1^3,x2^4", 3, 8)
    fp = table(f"Fp:{p}", "x1^3,x2^4", 3, 8)
    for d, cell in z.cells.items():
        assert fp.get(d) >= cell.rank


def test_fp_dimension_can_drop_below_integral_rank():
    # in characteristic 2, [x,[x,y]] = x^2 y + y x^2 already lies in the ideal
    z = table("Z", "x1^2,x2^2", 3, 4)
    f2 = table("Fp:2", "x1^2,x2^2", 3, 4)
    assert z.get((1, 2)) == GroupInvariants(1, ()) and f2.get((1, 2)) == 0
    assert literal_component(pres("x1^2,x2^2", "Fp:2"), 3, (1, 2)) == 0


def test_one_generator_table_is_zero():
    t = n_table(pres("", k=1), 2, 5)
    assert len(t.cells) == 6 and all(c.is_zero for c in t.cells.values())


# -- tables --------------------------------------------------------------------------


def test_table_cells_and_skips():
    t = n_table(pres("x1^3,x2^4"), 2, 6, max_dim=10)
    assert t.get((1, 1)) == GroupInvariants(1)
    assert (3, 3) in t.skipped() and t.get((3, 3)) is None and not t.is_computed((3, 3))
    assert t.get((0, 9)) is None and not t.in_bounds((0, 9))


def test_hilbert_series_rows():
    t = table("Fp:3", "x1^3,x2^4", 3, 9)
    assert hilbert_series(t, 1, support=[4, 5]) == [0, 3, 9, 9, 6]
    assert sum(hilbert_series(t, 2, support=[4, 5])) == t.total_dimension() == 27


def test_hilbert_series_f7_rows_divisible_by_7():
    t = table("Fp:7", "x1^7,x2^7", 3, 11)
    coeffs = []
    for a in range(12):
        try:
            coeffs = hilbert_series(t, 1, max_degree=a, support=[8, 8])
        except IncompleteTableError:
            break
    assert len(coeffs) >= 3
    assert all(c % 7 == 0 for c in coeffs)


def test_hilbert_series_edge_cases():
    assert hilbert_series(BigradedTable(2, 3, {}, Ring(3)), 1) == []
    with pytest.raises(TypeError):
        hilbert_series(table("Z", "x1^3,x2^4", 3, 9), 1)
    with pytest.raises(IncompleteTableError):
        hilbert_series(table("Fp:3", "x1^3,x2^4", 3, 9), 1, support=[8, 8])
