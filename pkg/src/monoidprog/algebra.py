"""Finite monoids as dense multiplication tables.

Elements are the integers ``0 .. size-1``.  Every derived structure (Green's
relations, idempotent power, variety membership, division) is computed from
the table by brute force, which is exact and cheap at the sizes this package
targets (a few dozen elements).
"""

from __future__ import annotations

import enum
import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .config import DEFAULT_LIMITS, Limits
from .errors import InputError, ResourceError

Table = Tuple[Tuple[int, ...], ...]


@dataclass(frozen=True, eq=False)
class FiniteMonoid:
    """A finite monoid given by its multiplication table.

    ``table[a][b]`` is the product ``a·b``.  ``names`` are display labels;
    they default to the element indices.
    """

    table: Table
    identity: int = 0
    names: Tuple[str, ...] = ()

    def __post_init__(self):
        table = tuple(tuple(int(x) for x in row) for row in self.table)
        n = len(table)
        if n == 0:
            raise InputError("a monoid needs at least one element")
        for row in table:
            if len(row) != n:
                raise InputError("multiplication table must be square")
            for x in row:
                if not 0 <= x < n:
                    raise InputError(f"table entry {x} out of range [0, {n})")
        if not 0 <= self.identity < n:
            raise InputError(f"identity {self.identity} out of range")
        e = self.identity
        for a in range(n):
            if table[e][a] != a or table[a][e] != a:
                raise InputError(f"identity law fails for element {a}")
        names = tuple(str(x) for x in self.names) if self.names else tuple(str(i) for i in range(n))
        if len(names) != n:
            raise InputError("names must have one entry per element")
        object.__setattr__(self, "table", table)
        object.__setattr__(self, "names", names)

    @property
    def size(self) -> int:
        return len(self.table)

    def __len__(self) -> int:
        return len(self.table)

    def __eq__(self, other):
        if not isinstance(other, FiniteMonoid):
            return NotImplemented
        return self.table == other.table and self.identity == other.identity

    def __hash__(self):
        return hash((self.table, self.identity))

    def __repr__(self):
        return f"FiniteMonoid(size={self.size}, identity={self.identity})"

    @property
    def elements(self) -> range:
        return range(self.size)

    def mul(self, a: int, b: int) -> int:
        return self.table[a][b]

    def product(self, xs: Iterable[int]) -> int:
        acc = self.identity
        t = self.table
        for x in xs:
            acc = t[acc][x]
        return acc

    def power(self, x: int, k: int) -> int:
        result, base = self.identity, x
        while k:
            if k & 1:
                result = self.table[result][base]
            base = self.table[base][base]
            k >>= 1
        return result

    def is_idempotent(self, x: int) -> bool:
        return self.table[x][x] == x

    @cached_property
    def idempotents(self) -> Tuple[int, ...]:
        return tuple(x for x in self.elements if self.table[x][x] == x)

    @cached_property
    def omega(self) -> int:
        return idempotent_power(self)

    @cached_property
    def green(self) -> "GreenData":
        return green(self)

    def is_associative(self) -> bool:
        t = self.table
        n = self.size
        return all(t[t[a][b]][c] == t[a][t[b][c]]
                   for a in range(n) for b in range(n) for c in range(n))

    def to_dict(self) -> dict:
        return {"size": self.size, "identity": self.identity,
                "table": [list(r) for r in self.table], "names": list(self.names)}

    @classmethod
    def from_dict(cls, data: dict) -> "FiniteMonoid":
        table = data["table"]
        if "size" in data and data["size"] != len(table):
            raise InputError("'size' disagrees with the table")
        return cls(tuple(tuple(r) for r in table), data.get("identity", 0),
                   tuple(data.get("names") or ()))


def multiply(M: FiniteMonoid, a: int, b: int) -> int:
    if not (0 <= a < M.size and 0 <= b < M.size):
        raise InputError(f"element index out of range for a monoid of size {M.size}")
    return M.table[a][b]


# -- small named monoids ---------------------------------------------------

def trivial_monoid() -> FiniteMonoid:
    return FiniteMonoid(((0,),), 0, ("1",))


def cyclic_group(n: int) -> FiniteMonoid:
    """Z_n in additive notation; element ``i`` is the residue ``i``."""
    if n < 1:
        raise InputError("cyclic group order must be positive")
    return FiniteMonoid(tuple(tuple((a + b) % n for b in range(n)) for a in range(n)), 0)


def u1() -> FiniteMonoid:
    """The two-element monoid {1, 0} with a zero."""
    return FiniteMonoid(((0, 1), (1, 1)), 0, ("1", "0"))


def left_zero_monoid(k: int) -> FiniteMonoid:
    """``k`` left zeros plus an adjoined identity (element 0)."""
    n = k + 1
    return FiniteMonoid(tuple(tuple(b if a == 0 else a for b in range(n)) for a in range(n)), 0,
                        ("1",) + tuple(f"z{i}" for i in range(1, n)))


def monoid_from_function(elements: Sequence, op, identity) -> FiniteMonoid:
    """Tabulate ``op`` over ``elements``; ``identity`` must be one of them."""
    index = {e: i for i, e in enumerate(elements)}
    table = tuple(tuple(index[op(a, b)] for b in elements) for a in elements)
    return FiniteMonoid(table, index[identity], tuple(str(e) for e in elements))


# -- idempotent power --------------------------------------------------------

def _index_and_period(M: FiniteMonoid, x: int) -> Tuple[int, int]:
    seen: Dict[int, int] = {}
    p, k = x, 1
    while p not in seen:
        seen[p] = k
        p = M.table[p][x]
        k += 1
    first = seen[p]
    return first, k - first


def idempotent_power(M: FiniteMonoid) -> int:
    """Least ``t >= 1`` such that ``s**t`` is idempotent for every ``s``."""
    max_index, period = 1, 1
    for x in M.elements:
        idx, per = _index_and_period(M, x)
        max_index = max(max_index, idx)
        period = period * per // math.gcd(period, per)
    return -(-max_index // period) * period


# -- varieties ------------------------------------------------------------------

class VarietyId(str, enum.Enum):
    TRIVIAL = "I"
    COM = "Com"
    J = "J"
    DA = "DA"
    A = "A"

    @classmethod
    def parse(cls, text) -> "VarietyId":
        if isinstance(text, cls):
            return text
        aliases = {"trivial": cls.TRIVIAL, "trivial-i": cls.TRIVIAL, "i": cls.TRIVIAL,
                   "com": cls.COM, "j": cls.J, "da": cls.DA, "a": cls.A,
                   "aperiodic": cls.A, "aperiodic-a": cls.A}
        try:
            return aliases[str(text).strip().lower()]
        except KeyError:
            raise InputError(f"unknown variety {text!r}") from None


# identity name -> (variables, description)
VARIETY_IDENTITIES: Dict[VarietyId, Tuple[str, ...]] = {
    VarietyId.TRIVIAL: ("x = 1",),
    VarietyId.COM: ("xy = yx",),
    VarietyId.J: ("(xy)^w = (xy)^w x", "(xy)^w = y(xy)^w"),
    VarietyId.DA: ("(xy)^w = (xy)^w x (xy)^w",),
    VarietyId.A: ("x^w = x^(w+1)",),
}


@dataclass(frozen=True)
class IdentityViolation:
    identity: str
    x: int
    y: Optional[int]
    left: int
    right: int


def _identity_sides(M: FiniteMonoid, identity: str, x: int, y: int) -> Tuple[int, int]:
    t = M.table
    w = M.omega
    if identity == "x = 1":
        return x, M.identity
    if identity == "xy = yx":
        return t[x][y], t[y][x]
    if identity == "x^w = x^(w+1)":
        xw = M.power(x, w)
        return xw, t[xw][x]
    e = M.power(t[x][y], w)
    if identity == "(xy)^w = (xy)^w x":
        return e, t[e][x]
    if identity == "(xy)^w = y(xy)^w":
        return e, t[y][e]
    if identity == "(xy)^w = (xy)^w x (xy)^w":
        return e, t[t[e][x]][e]
    raise InputError(f"unknown identity {identity!r}")


_ONE_VARIABLE = {"x = 1", "x^w = x^(w+1)"}


def variety_violation(M: FiniteMonoid, V) -> Optional[IdentityViolation]:
    """First assignment (in index order) violating an identity of ``V``."""
    V = VarietyId.parse(V)
    for identity in VARIETY_IDENTITIES[V]:
        if identity in _ONE_VARIABLE:
            for x in M.elements:
                left, right = _identity_sides(M, identity, x, x)
                if left != right:
                    return IdentityViolation(identity, x, None, left, right)
        else:
            for x in M.elements:
                for y in M.elements:
                    left, right = _identity_sides(M, identity, x, y)
                    if left != right:
                        return IdentityViolation(identity, x, y, left, right)
    return None


def satisfies_variety(M: FiniteMonoid, V) -> bool:
    return variety_violation(M, V) is None


def is_aperiodic(M: FiniteMonoid) -> bool:
    return satisfies_variety(M, VarietyId.A)


# -- Green's relations -------------------------------------------------------------

def _closure_table(rows: List[set]) -> Tuple[Tuple[bool, ...], ...]:
    n = len(rows)
    return tuple(tuple(v in rows[u] for v in range(n)) for u in range(n))


@dataclass(frozen=True)
class GreenData:
    """Green's preorders with the convention ``u <=_R u'`` iff ``u' ∈ uM``.

    Under this ordering an element sits *below* its right multiples, so
    ``leq_r[u][u*r]`` always holds.
    """

    leq_r: Tuple[Tuple[bool, ...], ...]
    leq_l: Tuple[Tuple[bool, ...], ...]
    leq_j: Tuple[Tuple[bool, ...], ...]

    @property
    def size(self) -> int:
        return len(self.leq_r)

    def sim_r(self, u: int, v: int) -> bool:
        return self.leq_r[u][v] and self.leq_r[v][u]

    def sim_l(self, u: int, v: int) -> bool:
        return self.leq_l[u][v] and self.leq_l[v][u]

    def sim_j(self, u: int, v: int) -> bool:
        return self.leq_j[u][v] and self.leq_j[v][u]

    def sim_h(self, u: int, v: int) -> bool:
        return self.sim_r(u, v) and self.sim_l(u, v)

    def _classes(self, sim) -> List[Tuple[int, ...]]:
        seen, out = set(), []
        for u in range(self.size):
            if u in seen:
                continue
            cls = tuple(v for v in range(self.size) if sim(u, v))
            seen.update(cls)
            out.append(cls)
        return out

    def r_classes(self):
        return self._classes(self.sim_r)

    def l_classes(self):
        return self._classes(self.sim_l)

    def j_classes(self):
        return self._classes(self.sim_j)

    def h_classes(self):
        return self._classes(self.sim_h)


def green(M: FiniteMonoid) -> GreenData:
    t = M.table
    n = M.size
    right = [set(t[u]) for u in range(n)]
    left = [{t[v][u] for v in range(n)} for u in range(n)]
    two = [{t[t[a][u]][b] for a in range(n) for b in range(n)} for u in range(n)]
    return GreenData(_closure_table(right), _closure_table(left), _closure_table(two))


def is_r_bad(M: FiniteMonoid, u: int, r: int) -> bool:
    """Whether ``u <_R u·r`` strictly, i.e. right multiplication by ``r`` leaves u's R-class."""
    return not M.green.leq_r[M.table[u][r]][u]


def is_l_bad(M: FiniteMonoid, v: int, r: int) -> bool:
    """Whether ``v <_L r·v`` strictly."""
    return not M.green.leq_l[M.table[r][v]][v]


# -- constructions ----------------------------------------------------------------

def direct_product(M: FiniteMonoid, N: FiniteMonoid, limits: Limits = DEFAULT_LIMITS) -> FiniteMonoid:
    """Componentwise product; the pair ``(i, j)`` has index ``i*|N| + j``."""
    size = M.size * N.size
    if size > limits.product_cap:
        raise ResourceError(f"direct product of size {size} exceeds product_cap={limits.product_cap}")
    m, nn = M.table, N.table
    k = N.size
    table = tuple(
        tuple(m[a // k][b // k] * k + nn[a % k][b % k] for b in range(size))
        for a in range(size))
    names = tuple(f"({x},{y})" for x in M.names for y in N.names)
    return FiniteMonoid(table, M.identity * k + N.identity, names)


def closure(M: FiniteMonoid, gens: Iterable[int]) -> List[int]:
    """Elements of the submonoid generated by ``gens``, in breadth-first order."""
    gens = sorted(set(gens))
    order = [M.identity]
    seen = {M.identity}
    queue = deque(order)
    while queue:
        e = queue.popleft()
        for g in gens:
            p = M.table[e][g]
            if p not in seen:
                seen.add(p)
                order.append(p)
                queue.append(p)
    return order


def restrict(M: FiniteMonoid, elements: Sequence[int]) -> Tuple[FiniteMonoid, Tuple[int, ...]]:
    """Reindex a product-closed subset containing the identity as a monoid."""
    elements = list(elements)
    index = {e: i for i, e in enumerate(elements)}
    if M.identity not in index:
        raise InputError("a submonoid must contain the identity")
    try:
        table = tuple(tuple(index[M.table[a][b]] for b in elements) for a in elements)
    except KeyError:
        raise InputError("subset is not closed under the product") from None
    names = tuple(M.names[e] for e in elements)
    return FiniteMonoid(table, index[M.identity], names), tuple(elements)


def generated_submonoid(M: FiniteMonoid, gens: Iterable[int]) -> Tuple[FiniteMonoid, Tuple[int, ...]]:
    """The submonoid generated by ``gens`` and its embedding (new index -> old index)."""
    gens = list(gens)
    for g in gens:
        if not 0 <= g < M.size:
            raise InputError(f"generator {g} out of range")
    return restrict(M, closure(M, gens))


def generating_set(M: FiniteMonoid) -> List[int]:
    """A small (irredundant, not necessarily minimum) generating set."""
    gens: List[int] = []
    covered = {M.identity}
    # elements in decreasing J-height are tried first; they are the ones nobody else reaches
    order = sorted(M.elements, key=lambda x: -sum(M.green.leq_j[x]))
    for x in order:
        if x not in covered:
            gens.append(x)
            covered = set(closure(M, gens))
    return gens


def submonoids(M: FiniteMonoid) -> List[frozenset]:
    """All submonoids of ``M`` as element sets."""
    start = frozenset(closure(M, []))
    found = {start}
    queue = deque([start])
    while queue:
        X = queue.popleft()
        for e in M.elements:
            if e not in X:
                Y = frozenset(closure(M, list(X) + [e]))
                if Y not in found:
                    found.add(Y)
                    queue.append(Y)
    return sorted(found, key=lambda s: (len(s), sorted(s)))


def _morphisms_from(S: FiniteMonoid, T: FiniteMonoid, *, surjective: bool, injective: bool):
    """Yield monoid morphisms ``S -> T`` (as tuples) by backtracking on generator images."""
    gens = generating_set(S)
    s, t = S.table, T.table
    ids = set(S.idempotents)

    def extend(h: Dict[int, int], assigned: List[int], g: int, img: int):
        h = dict(h)
        if g in h:
            return h if h[g] == img else None
        h[g] = img
        gs = assigned + [g]
        queue = deque(h.keys())
        while queue:
            e = queue.popleft()
            for x in gs:
                p = s[e][x]
                expected = t[h[e]][h[x]]
                if p in h:
                    if h[p] != expected:
                        return None
                else:
                    h[p] = expected
                    queue.append(p)
            # the new generator must also be composed on the left of old elements
        for e in list(h):
            p = s[e][g]
            if h.get(p) != t[h[e]][img]:
                return None
        return h

    def rec(i: int, h: Dict[int, int]):
        if i == len(gens):
            images = tuple(h[x] for x in range(S.size))
            if surjective and len(set(images)) != T.size:
                return
            if injective and len(set(images)) != S.size:
                return
            yield images
            return
        g = gens[i]
        for img in T.elements:
            if g in ids and t[img][img] != img:
                continue
            h2 = extend(h, gens[:i], g, img)
            if h2 is not None:
                if injective and len(set(h2.values())) != len(h2):
                    continue
                yield from rec(i + 1, h2)

    yield from rec(0, {S.identity: T.identity})


def find_isomorphism(M: FiniteMonoid, N: FiniteMonoid) -> Optional[Tuple[int, ...]]:
    """An isomorphism ``M -> N`` as an index map, or ``None``."""
    if M.size != N.size or len(M.idempotents) != len(N.idempotents):
        return None
    for h in _morphisms_from(M, N, surjective=True, injective=True):
        return h
    return None


def is_isomorphic(M: FiniteMonoid, N: FiniteMonoid) -> bool:
    return find_isomorphism(M, N) is not None


def find_division(T: FiniteMonoid, S: FiniteMonoid, limits: Limits = DEFAULT_LIMITS):
    """A witness ``(submonoid elements of S, surjection onto T)`` that T divides S, or None."""
    if S.size > limits.division_cap:
        raise ResourceError(
            f"division test on a monoid of size {S.size} exceeds division_cap={limits.division_cap}")
    if T.size == 1:
        return (S.identity,), (T.identity,)
    for X in submonoids(S):
        limits.checkpoint()
        if len(X) < T.size:
            continue
        sub, emb = restrict(S, closure(S, X))
        for h in _morphisms_from(sub, T, surjective=True, injective=False):
            return emb, h
    return None


def divides(T: FiniteMonoid, S: FiniteMonoid, limits: Limits = DEFAULT_LIMITS) -> bool:
    """Whether T is a morphic image of a submonoid of S."""
    return find_division(T, S, limits) is not None


# -- DA obstructions -------------------------------------------------------------------

@dataclass(frozen=True)
class DaObstruction:
    """Why a monoid lies outside DA.

    ``kind`` is ``"NotAperiodic"`` (with ``element`` and the minimal
    ``period`` k >= 2 such that x^(w+k) = x^w), ``"DividedByB2"``,
    ``"DividedByU"`` or ``"DividedByA2"``.  The last covers aperiodic
    monoids such as the syntactic monoid of ``(b+ab)*`` that lie outside DA
    but are too small to be divided by U.
    """

    kind: str
    element: Optional[int] = None
    period: Optional[int] = None
    division: Optional[tuple] = field(default=None, compare=False)


def find_da_obstruction(M: FiniteMonoid, limits: Limits = DEFAULT_LIMITS) -> DaObstruction:
    if satisfies_variety(M, VarietyId.DA):
        raise InputError("monoid is in DA; there is no obstruction")
    w = M.omega
    for x in M.elements:
        xw = M.power(x, w)
        if M.table[xw][x] != xw:
            k, p = 1, M.table[xw][x]
            while p != xw:
                p = M.table[p][x]
                k += 1
            return DaObstruction("NotAperiodic", element=x, period=k)
    from .reglang import a2_monoid, b2_monoid, u_monoid

    if M.size > limits.division_cap:
        raise ResourceError(
            f"division test on a monoid of size {M.size} exceeds division_cap={limits.division_cap}")
    # A2 divides U, so U dividing M is only reported when B2 does not
    for kind, W in (("DividedByB2", b2_monoid()), ("DividedByU", u_monoid()),
                    ("DividedByA2", a2_monoid())):
        witness = find_division(W, M, limits)
        if witness is not None:
            return DaObstruction(kind, division=witness)
    raise AssertionError("aperiodic monoid outside DA divided by neither B2 nor A2")


# -- eggbox export ------------------------------------------------------------------------

def eggbox_dot(M: FiniteMonoid, name: str = "eggbox") -> str:
    """Graphviz source drawing each J-class as a box of R-rows and L-columns."""
    G = M.green
    lines = [f"digraph {name} {{", "  node [shape=plaintext];"]
    jclasses = G.j_classes()
    for idx, J in enumerate(jclasses):
        rows = [R for R in G.r_classes() if R[0] in J]
        cols = [L for L in G.l_classes() if L[0] in J]
        cells = []
        for R in rows:
            tds = []
            for L in cols:
                h = [x for x in R if x in L]
                star = "*" if any(M.is_idempotent(x) for x in h) else ""
                label = ",".join(M.names[x] for x in h)
                tds.append(f"<td>{star}{_html(label)}</td>")
            cells.append("<tr>" + "".join(tds) + "</tr>")
        table = '<table border="0" cellborder="1" cellspacing="0">' + "".join(cells) + "</table>"
        lines.append(f"  J{idx} [label=<{table}>];")
    for a, A in enumerate(jclasses):
        for b, B in enumerate(jclasses):
            if a == b or not G.leq_j[A[0]][B[0]]:
                continue
            # keep only covering edges of the J-order
            if any(c not in (a, b) and G.leq_j[A[0]][C[0]] and G.leq_j[C[0]][B[0]]
                   and not G.sim_j(C[0], A[0]) and not G.sim_j(C[0], B[0])
                   for c, C in enumerate(jclasses)):
                continue
            lines.append(f"  J{b} -> J{a};")
    lines.append("}")
    return "\n".join(lines)


def _html(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
