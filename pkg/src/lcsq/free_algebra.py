"""Free associative algebra Z<x1, ..., xk>: words, homogeneous elements, brackets.

Words are tuples of 1-based generator indices.  Elements are always
homogeneous in the multidegree, which is what makes the per-degree linear
algebra in :mod:`lcsq.lcs_engine` valid.
"""

from __future__ import annotations

import re
from functools import lru_cache
from itertools import groupby
from math import factorial
from typing import Iterable, Iterator, Mapping

Word = tuple[int, ...]
MultiDegree = tuple[int, ...]


class ParseError(ValueError):
    """Malformed relation string; ``pos`` is the 0-based offending offset."""

    def __init__(self, message: str, pos: int, src: str = ""):
        self.pos = pos
        self.src = src
        super().__init__(f"{message} at position {pos}")


class InhomogeneousError(ValueError):
    pass


class UnknownGeneratorError(ValueError):
    pass


def word_degree(word: Word, k: int) -> MultiDegree:
    deg = [0] * k
    for letter in word:
        deg[letter - 1] += 1
    return tuple(deg)


def multinomial(d: Iterable[int]) -> int:
    d = tuple(d)
    out = factorial(sum(d))
    for e in d:
        out //= factorial(e)
    return out


@lru_cache(maxsize=None)
def monomials_of_multidegree(k: int, d: MultiDegree) -> tuple[Word, ...]:
    """All words with letter counts ``d``, in lexicographic order (x1 < x2 < ...).

    The position of a word in this tuple is its coordinate index everywhere
    else in the package.
    """
    d = tuple(d)
    if len(d) != k:
        raise ValueError(f"multidegree {d} has {len(d)} entries, expected {k}")
    if any(e < 0 for e in d):
        raise ValueError(f"negative entry in multidegree {d}")

    out: list[Word] = []
    remaining = list(d)
    prefix: list[int] = []
    total = sum(d)

    def rec() -> None:
        if len(prefix) == total:
            out.append(tuple(prefix))
            return
        for g in range(k):
            if remaining[g]:
                remaining[g] -= 1
                prefix.append(g + 1)
                rec()
                prefix.pop()
                remaining[g] += 1

    rec()
    return tuple(out)


@lru_cache(maxsize=None)
def monomial_index(k: int, d: MultiDegree) -> dict[Word, int]:
    return {w: i for i, w in enumerate(monomials_of_multidegree(k, d))}


def add_degrees(a: MultiDegree, b: MultiDegree) -> MultiDegree:
    return tuple(x + y for x, y in zip(a, b))


def sub_degrees(a: MultiDegree, b: MultiDegree) -> MultiDegree:
    return tuple(x - y for x, y in zip(a, b))


def degrees_below(d: MultiDegree) -> Iterator[MultiDegree]:
    """Every e with 0 <= e <= d componentwise."""
    if not d:
        yield ()
        return
    for head in range(d[0] + 1):
        for tail in degrees_below(d[1:]):
            yield (head,) + tail


class Element:
    """Homogeneous Z-linear combination of words.

    Instances are immutable; arithmetic returns new elements.  Zero
    coefficients are never stored.
    """

    __slots__ = ("_terms", "_degree", "_hash")

    def __init__(self, terms: Mapping[Word, int], degree: MultiDegree):
        degree = tuple(degree)
        clean = {}
        k = len(degree)
        for w, c in terms.items():
            if c:
                w = tuple(w)
                if word_degree(w, k) != degree:
                    raise InhomogeneousError(
                        f"word {w} has degree {word_degree(w, k)}, element degree is {degree}"
                    )
                clean[w] = int(c)
        self._terms = clean
        self._degree = degree
        self._hash = None

    @classmethod
    def _trusted(cls, terms: dict[Word, int], degree: MultiDegree) -> "Element":
        obj = cls.__new__(cls)
        obj._terms = terms
        obj._degree = degree
        obj._hash = None
        return obj

    @classmethod
    def word(cls, word: Iterable[int], k: int, coeff: int = 1) -> "Element":
        w = tuple(word)
        if any(not 1 <= g <= k for g in w):
            raise UnknownGeneratorError(f"word {w} uses a generator outside x1..x{k}")
        return cls({w: coeff}, word_degree(w, k))

    @classmethod
    def generator(cls, g: int, k: int) -> "Element":
        return cls.word((g,), k)

    @classmethod
    def zero(cls, degree: MultiDegree) -> "Element":
        return cls._trusted({}, tuple(degree))

    @property
    def terms(self) -> Mapping[Word, int]:
        return dict(self._terms)

    @property
    def degree(self) -> MultiDegree:
        return self._degree

    @property
    def k(self) -> int:
        return len(self._degree)

    def items(self):
        return self._terms.items()

    @property
    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Element):
            return NotImplemented
        if not self._terms and not other._terms:
            return len(self._degree) == len(other._degree)
        return self._degree == other._degree and self._terms == other._terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self._degree, frozenset(self._terms.items())))
        return self._hash

    def _check_same_degree(self, other: "Element") -> None:
        if self._terms and other._terms and self._degree != other._degree:
            raise InhomogeneousError(
                f"cannot add elements of degrees {self._degree} and {other._degree}"
            )

    def __add__(self, other: "Element") -> "Element":
        self._check_same_degree(other)
        out = dict(self._terms)
        for w, c in other._terms.items():
            v = out.get(w, 0) + c
            if v:
                out[w] = v
            else:
                out.pop(w, None)
        degree = self._degree if self._terms else other._degree
        return Element._trusted(out, degree)

    def __neg__(self) -> "Element":
        return Element._trusted({w: -c for w, c in self._terms.items()}, self._degree)

    def __sub__(self, other: "Element") -> "Element":
        return self + (-other)

    def scale(self, c: int) -> "Element":
        if not c:
            return Element.zero(self._degree)
        return Element._trusted({w: c * v for w, v in self._terms.items()}, self._degree)

    def __rmul__(self, c: int) -> "Element":
        if isinstance(c, int):
            return self.scale(c)
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, Element):
            return multiply(self, other)
        if isinstance(other, int):
            return self.scale(other)
        return NotImplemented

    def coordinates(self) -> list[int]:
        """Coefficient vector in the lex monomial basis of ``self.degree``."""
        index = monomial_index(self.k, self._degree)
        vec = [0] * len(index)
        for w, c in self._terms.items():
            vec[index[w]] = c
        return vec

    @classmethod
    def from_coordinates(cls, vec: Iterable[int], k: int, degree: MultiDegree) -> "Element":
        words = monomials_of_multidegree(k, tuple(degree))
        terms = {words[i]: int(c) for i, c in enumerate(vec) if c}
        return cls._trusted(terms, tuple(degree))

    def __repr__(self) -> str:
        return f"Element({render(self)!r}, degree={self._degree})"

    def __str__(self) -> str:
        return render(self)


def multiply(a: Element, b: Element) -> Element:
    """Concatenation product, extended bilinearly."""
    if len(a.degree) != len(b.degree):
        raise ValueError("elements live in free algebras with different generator counts")
    out: dict[Word, int] = {}
    for u, c in a._terms.items():
        for v, e in b._terms.items():
            w = u + v
            s = out.get(w, 0) + c * e
            if s:
                out[w] = s
            else:
                del out[w]
    return Element._trusted(out, add_degrees(a.degree, b.degree))


def bracket(a: Element, b: Element) -> Element:
    """Commutator ab - ba."""
    if len(a.degree) != len(b.degree):
        raise ValueError("elements live in free algebras with different generator counts")
    out: dict[Word, int] = {}
    for u, c in a._terms.items():
        for v, e in b._terms.items():
            ce = c * e
            w = u + v
            s = out.get(w, 0) + ce
            if s:
                out[w] = s
            else:
                del out[w]
            w = v + u
            s = out.get(w, 0) - ce
            if s:
                out[w] = s
            else:
                del out[w]
    return Element._trusted(out, add_degrees(a.degree, b.degree))


def render_word(word: Word) -> str:
    if not word:
        return "1"
    parts = []
    for g, run in groupby(word):
        e = len(list(run))
        parts.append(f"x{g}" if e == 1 else f"x{g}^{e}")
    return "*".join(parts)


def render(elem: Element) -> str:
    """Canonical text form: lex-ordered terms, ``x<i>^<e>`` factors joined by ``*``."""
    if not elem._terms:
        return "0"
    chunks = []
    for w in sorted(elem._terms):
        c = elem._terms[w]
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        if not w:
            body = str(mag)
        elif mag == 1:
            body = render_word(w)
        else:
            body = f"{mag}*{render_word(w)}"
        chunks.append((sign, body))
    head_sign, head = chunks[0]
    out = ("-" if head_sign == "-" else "") + head
    for sign, body in chunks[1:]:
        out += f" {sign} {body}"
    return out


_TOKEN = re.compile(r"\s*(?:(?P<num>\d+)|(?P<gen>x(?P<idx>\d+))|(?P<op>[-+*^]))")


def _tokenize(src: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(src):
        if src[pos:].strip() == "":
            break
        m = _TOKEN.match(src, pos)
        if not m:
            bad = pos + (len(src[pos:]) - len(src[pos:].lstrip()))
            raise ParseError(f"unexpected character {src[bad]!r}", bad, src)
        start = m.start(m.lastgroup) if m.lastgroup != "idx" else m.start("gen")
        if m.group("num") is not None:
            tokens.append(("num", m.group("num"), m.start("num")))
        elif m.group("gen") is not None:
            tokens.append(("gen", m.group("idx"), m.start("gen")))
        else:
            tokens.append(("op", m.group("op"), start))
        pos = m.end()
    return tokens


def parse_element(src: str, k: int) -> Element:
    """Parse a homogeneous relation such as ``"x1^2*x2 - x2*x1^2"``.

    Grammar: signed terms joined by ``+``/``-``; each term is an optional
    integer coefficient followed by generator factors ``x<i>`` with optional
    ``^<e>``, separated by ``*`` or juxtaposed.
    """
    tokens = _tokenize(src)
    if not tokens:
        raise ParseError("empty expression", 0, src)
    pos = 0
    terms: list[tuple[int, Word, int]] = []

    def peek():
        return tokens[pos] if pos < len(tokens) else None

    while pos < len(tokens):
        sign = 1
        tok = peek()
        if tok[0] == "op" and tok[1] in "+-":
            if tok[1] == "-":
                sign = -1
            pos += 1
        elif terms:
            raise ParseError("expected '+' or '-'", tok[2], src)
        term_start = tokens[pos][2] if pos < len(tokens) else len(src)
        coeff = 1
        letters: list[int] = []
        saw_factor = False
        expect_factor = False
        while pos < len(tokens):
            tok = peek()
            kind, text, at = tok
            if kind == "num" and not saw_factor and not expect_factor:
                coeff = int(text)
                saw_factor = True
                pos += 1
            elif kind == "gen":
                g = int(text)
                if not 1 <= g <= k:
                    raise UnknownGeneratorError(
                        f"generator x{g} at position {at} is outside x1..x{k}"
                    )
                pos += 1
                e = 1
                nxt = peek()
                if nxt is not None and nxt[0] == "op" and nxt[1] == "^":
                    pos += 1
                    num = peek()
                    if num is None or num[0] != "num":
                        where = num[2] if num is not None else len(src)
                        raise ParseError("expected exponent after '^'", where, src)
                    e = int(num[1])
                    pos += 1
                letters.extend([g] * e)
                saw_factor = True
                expect_factor = False
            elif kind == "op" and text == "*":
                if not saw_factor or expect_factor:
                    raise ParseError("unexpected '*'", at, src)
                expect_factor = True
                pos += 1
            elif kind == "op" and text in "+-":
                break
            else:
                raise ParseError(f"unexpected {text!r}", at, src)
        if expect_factor:
            raise ParseError("expression ends after '*'", len(src), src)
        if not saw_factor:
            raise ParseError("missing term", term_start, src)
        terms.append((sign * coeff, tuple(letters), term_start))

    degree = None
    out: dict[Word, int] = {}
    for c, w, at in terms:
        d = word_degree(w, k)
        if degree is None:
            degree = d
        elif d != degree and c:
            raise InhomogeneousError(
                f"term at position {at} has degree {d}, expected {degree}"
            )
        v = out.get(w, 0) + c
        if v:
            out[w] = v
        else:
            out.pop(w, None)
    return Element._trusted(out, degree)


def parse_relations(src: str, k: int) -> list[Element]:
    """Comma-separated relation list; blank input means no relations."""
    out = []
    offset = 0
    for chunk in src.split(","):
        if chunk.strip():
            try:
                out.append(parse_element(chunk, k))
            except ParseError as exc:
                raise ParseError(str(exc).rsplit(" at position", 1)[0], offset + exc.pos, src) from None
        offset += len(chunk) + 1
    return out
