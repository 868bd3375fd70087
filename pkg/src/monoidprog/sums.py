"""Strongly unambiguous monomials (SUM expressions) and program compression.

A SUM expression is either ``Star(A)`` (all words over ``A``) or
``Split(left, a, right, side)`` denoting ``left · a · right`` where the
marker ``a`` never occurs in ``left`` (side ``"L"``) or never in ``right``
(side ``"R"``).  The split of a word is therefore forced: at the first
occurrence of ``a`` for side ``"L"``, at the last for side ``"R"``.

Every SUM language is nonempty, so the letters occurring in an expression
are exactly the letters used by its language.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

from .algebra import FiniteMonoid
from .config import DEFAULT_LIMITS, Limits
from .errors import CertificateError, InputError, ResourceError
from .programs import Program, subprogram
from .reglang import (Concat, Dfa, Epsilon, Letter, Stamp, Sym, Union, Word, minimize,
                      regex_to_dfa, syntactic_stamp)
from .reglang import Star as RStar


@dataclass(frozen=True)
class Star:
    letters: FrozenSet[Letter]

    def __init__(self, letters: Iterable[Letter]):
        object.__setattr__(self, "letters", frozenset(letters))


@dataclass(frozen=True)
class Split:
    left: "SumExpr"
    marker: Letter
    right: "SumExpr"
    side: str = "L"

    def __post_init__(self):
        if self.side not in ("L", "R"):
            raise InputError("split side must be 'L' (left avoids marker) or 'R'")
        avoid = self.left if self.side == "L" else self.right
        if self.marker in sum_letters(avoid):
            which = "left" if self.side == "L" else "right"
            raise InputError(f"marker {self.marker!r} occurs in the {which} operand")


SumExpr = object  # Star | Split


def sum_letters(e) -> FrozenSet[Letter]:
    if isinstance(e, Star):
        return e.letters
    if isinstance(e, Split):
        return sum_letters(e.left) | {e.marker} | sum_letters(e.right)
    raise InputError(f"not a SUM expression: {e!r}")


def sum_level(e) -> int:
    if isinstance(e, Star):
        return 0
    if isinstance(e, Split):
        return sum_level(e.left) + sum_level(e.right) + 1
    raise InputError(f"not a SUM expression: {e!r}")


def mirror(e):
    """Expression for the reversed language."""
    if isinstance(e, Star):
        return e
    return Split(mirror(e.right), e.marker, mirror(e.left), "R" if e.side == "L" else "L")


def _letter_key(a):
    return (type(a).__name__, a)


def to_regex(e):
    if isinstance(e, Star):
        letters = sorted(e.letters, key=_letter_key)
        if not letters:
            return Epsilon()
        inner = Sym(letters[0]) if len(letters) == 1 else Union(tuple(Sym(a) for a in letters))
        return RStar(inner)
    return Concat((to_regex(e.left), Sym(e.marker), to_regex(e.right)))


@lru_cache(maxsize=4096)
def _sum_dfa_cached(e, alphabet: Tuple[Letter, ...]) -> Dfa:
    return minimize(regex_to_dfa(to_regex(e), alphabet))


def sum_dfa(e, alphabet: Optional[Sequence[Letter]] = None) -> Dfa:
    """Minimal DFA of ``e`` over ``alphabet`` (default: the expression's letters)."""
    if alphabet is None:
        alphabet = sorted(sum_letters(e), key=_letter_key)
    return _sum_dfa_cached(e, tuple(alphabet))


def sum_member(e, word: Word) -> bool:
    letters = sum_letters(e)
    if any(a not in letters for a in word):
        return False
    return sum_dfa(e).accepts(word)


def sum_to_text(e) -> str:
    if isinstance(e, Star):
        return "STAR{" + ",".join(str(a) for a in sorted(e.letters, key=_letter_key)) + "}"
    return f"SPLIT({sum_to_text(e.left)}, '{e.marker}', {sum_to_text(e.right)}, {e.side})"


def parse_sum(text: str, letter: Callable[[str], Letter] = str):
    """Parse ``STAR{a,b}`` and ``SPLIT(left, 'a', right, L|R)``."""
    pos = 0

    def skip():
        nonlocal pos
        while pos < len(text) and text[pos].isspace():
            pos += 1

    def expect(tok: str):
        nonlocal pos
        skip()
        if not text.startswith(tok, pos):
            raise InputError(f"SUM syntax error at position {pos}: expected {tok!r}")
        pos += len(tok)

    def expr():
        nonlocal pos
        skip()
        if text.startswith("STAR", pos):
            pos += 4
            expect("{")
            end = text.find("}", pos)
            if end < 0:
                raise InputError("SUM syntax error: unterminated STAR{")
            body = text[pos:end].strip()
            pos = end + 1
            return Star(letter(x.strip()) for x in body.split(",") if x.strip())
        if text.startswith("SPLIT", pos):
            pos += 5
            expect("(")
            left = expr()
            expect(",")
            expect("'")
            end = text.find("'", pos)
            if end < 0:
                raise InputError("SUM syntax error: unterminated marker")
            marker = letter(text[pos:end])
            pos = end + 1
            expect(",")
            right = expr()
            expect(",")
            skip()
            side = text[pos:pos + 1]
            pos += 1
            expect(")")
            return Split(left, marker, right, side)
        raise InputError(f"SUM syntax error at position {pos}")

    e = expr()
    skip()
    if pos != len(text):
        raise InputError(f"SUM syntax error at position {pos}: trailing input")
    return e


# -- closure constructions -------------------------------------------------------

def _dedupe(exprs: Iterable) -> List:
    out, seen = [], set()
    for x in exprs:
        if x not in seen:
            seen.add(x)
            out.append(x)
    return out


def _split_first(u: Sequence[Letter], a: Letter):
    i = list(u).index(a)
    return tuple(u[:i]), tuple(u[i + 1:])


def left_quotient(e, u: Word) -> List:
    """Expressions whose union is ``u^{-1} L(e)``."""
    u = tuple(u)
    if isinstance(e, Star):
        return [e] if all(a in e.letters for a in u) else []
    if e.side == "R":
        return [mirror(x) for x in right_quotient(mirror(e), u[::-1])]
    a = e.marker
    if a not in u:
        return _dedupe(Split(l1, a, e.right, "L") for l1 in left_quotient(e.left, u))
    u1, u2 = _split_first(u, a)
    if not sum_member(e.left, u1):
        return []
    return left_quotient(e.right, u2)


def right_quotient(e, u: Word) -> List:
    """Expressions whose union is ``L(e) u^{-1}``."""
    u = tuple(u)
    if isinstance(e, Star):
        return [e] if all(a in e.letters for a in u) else []
    if e.side == "R":
        return [mirror(x) for x in left_quotient(mirror(e), u[::-1])]
    a = e.marker
    out = [Split(e.left, a, r2, "L") for r2 in right_quotient(e.right, u)]
    if a in u:
        u1, u2 = _split_first(u, a)
        if sum_member(e.right, u2):
            out.extend(right_quotient(e.left, u1))
    return _dedupe(out)


def sum_quotient(e, u: Word, side: str = "left", v: Optional[Word] = None) -> List:
    """``u^{-1}L`` (side ``"left"``), ``L u^{-1}`` (``"right"``), or ``u^{-1} L v^{-1}`` (``"both"``)."""
    if side == "left":
        return left_quotient(e, u)
    if side == "right":
        return right_quotient(e, u)
    if side == "both":
        return _dedupe(r for l in left_quotient(e, u) for r in right_quotient(l, v or ()))
    raise InputError("side must be 'left', 'right' or 'both'")


def sum_inverse_morphism(e, images: Dict[Letter, Word]) -> List:
    """Expressions over the domain alphabet whose union is ``μ^{-1}(L(e))``."""
    gamma = list(images)
    images = {b: tuple(images[b]) for b in gamma}
    if isinstance(e, Star):
        return [Star(b for b in gamma if all(a in e.letters for a in images[b]))]
    if e.side == "R":
        rev = {b: w[::-1] for b, w in images.items()}
        return _dedupe(mirror(x) for x in sum_inverse_morphism(mirror(e), rev))
    a = e.marker
    out = []
    for b in gamma:
        if a not in images[b]:
            continue
        u1, u2 = _split_first(images[b], a)
        lefts = _dedupe(x for q in right_quotient(e.left, u1) for x in sum_inverse_morphism(q, images))
        rights = _dedupe(x for q in left_quotient(e.right, u2) for x in sum_inverse_morphism(q, images))
        for l in lefts:
            for r in rights:
                out.append(Split(l, b, r, "L"))
    return _dedupe(out)


# -- Boolean combinations --------------------------------------------------------------

@dataclass(frozen=True)
class Leaf:
    expr: object


@dataclass(frozen=True)
class Not:
    arg: object


@dataclass(frozen=True)
class And:
    args: Tuple[object, ...]


@dataclass(frozen=True)
class Or:
    args: Tuple[object, ...]


@dataclass(frozen=True)
class Const:
    value: bool


def combo_leaves(c) -> List:
    out: List = []

    def walk(x):
        if isinstance(x, Leaf):
            out.append(x.expr)
        elif isinstance(x, Not):
            walk(x.arg)
        elif isinstance(x, (And, Or)):
            for y in x.args:
                walk(y)

    walk(c)
    return _dedupe(out)


def combo_eval(c, word: Word, memo: Optional[dict] = None) -> bool:
    memo = {} if memo is None else memo
    if isinstance(c, Leaf):
        if c.expr not in memo:
            memo[c.expr] = sum_member(c.expr, word)
        return memo[c.expr]
    if isinstance(c, Not):
        return not combo_eval(c.arg, word, memo)
    if isinstance(c, And):
        return all(combo_eval(x, word, memo) for x in c.args)
    if isinstance(c, Or):
        return any(combo_eval(x, word, memo) for x in c.args)
    if isinstance(c, Const):
        return c.value
    raise InputError(f"not a Boolean combination: {c!r}")


def compile_combo(c) -> Callable[[Word], bool]:
    """Evaluator for a Boolean combination with every leaf compiled to a DFA once."""
    leaves = combo_leaves(c)
    slot = {e: i for i, e in enumerate(leaves)}
    machines = []
    for e in leaves:
        D = sum_dfa(e)
        machines.append((D.letter_index, D.delta, D.initial, D.accepting))

    def run(i: int, word) -> bool:
        idx, delta, q, acc = machines[i]
        for a in word:
            j = idx.get(a)
            if j is None:
                return False
            q = delta[q][j]
        return q in acc

    def build(x):
        if isinstance(x, Leaf):
            i = slot[x.expr]
            return lambda w, memo: memo[i] if memo[i] is not None else memo.__setitem__(i, run(i, w)) or memo[i]
        if isinstance(x, Not):
            f = build(x.arg)
            return lambda w, memo: not f(w, memo)
        if isinstance(x, And):
            fs = [build(y) for y in x.args]
            return lambda w, memo: all(f(w, memo) for f in fs)
        if isinstance(x, Or):
            fs = [build(y) for y in x.args]
            return lambda w, memo: any(f(w, memo) for f in fs)
        if isinstance(x, Const):
            return lambda w, memo: x.value
        raise InputError(f"not a Boolean combination: {x!r}")

    top = build(c)
    return lambda word: top(tuple(word), [None] * len(leaves))


def union_of(exprs: Sequence) -> object:
    if not exprs:
        return Const(False)
    return Or(tuple(Leaf(x) for x in exprs)) if len(exprs) > 1 else Leaf(exprs[0])


# -- k-sets and the Z_k family ------------------------------------------------------------

@dataclass(frozen=True)
class KSet:
    n: int
    k: int
    tuples: FrozenSet[Tuple[int, ...]]

    def __init__(self, n: int, k: int, tuples: Iterable[Sequence[int]]):
        ts = frozenset(tuple(int(x) for x in t) for t in tuples)
        for t in ts:
            if len(t) != k or len(set(t)) != k or any(not 1 <= x <= n for x in t):
                raise InputError(f"{t!r} is not an ordered {k}-tuple of distinct positions in [1, {n}]")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "tuples", ts)

    def restrict(self, j: int) -> "KSet":
        """Tails of the tuples starting with ``j``."""
        return KSet(self.n, self.k - 1, (t[1:] for t in self.tuples if t[0] == j))

    def to_dict(self) -> dict:
        return {"n": self.n, "k": self.k, "tuples": [list(t) for t in sorted(self.tuples)]}

    @classmethod
    def from_dict(cls, data: dict) -> "KSet":
        return cls(data["n"], data["k"], data["tuples"])

    @classmethod
    def random(cls, n: int, k: int, rng, density: float = 0.5) -> "KSet":
        all_t = list(itertools.permutations(range(1, n + 1), k))
        return cls(n, k, (t for t in all_t if rng.random() < density))


def first_ones(word: Word, k: int) -> Optional[Tuple[int, ...]]:
    pos = tuple(i + 1 for i, a in enumerate(word) if a in ("1", 1))
    return pos[:k] if len(pos) >= k else None


def k_language_member(S: KSet, word: Word) -> bool:
    if len(word) != S.n:
        return False
    t = first_ones(word, S.k)
    return t is not None and t in S.tuples


def k_language(n: int, S) -> Dfa:
    """DFA over ``{0, 1}`` for the length-``n`` words whose first ``k`` ones form a tuple of ``S``."""
    if not isinstance(S, KSet):
        raise InputError("k_language needs a KSet")
    if S.n != n:
        raise InputError("k-set range differs from n")
    k = S.k
    prefixes = {t[:j] for t in S.tuples for j in range(k + 1)}
    # states: ("p", i, seen) while fewer than k ones; ("free", i) after success; "dead"
    index: Dict[object, int] = {}
    delta: List[List[int]] = []
    order: List[object] = []

    def sid(s):
        if s not in index:
            index[s] = len(order)
            order.append(s)
            delta.append([0, 0])
        return index[s]

    sid(("p", 0, ()))
    dead = sid("dead")
    i = 0
    while i < len(order):
        s = order[i]
        if s == "dead":
            delta[i] = [dead, dead]
        elif s[0] == "free":
            pos = s[1]
            nxt = sid(("free", pos + 1)) if pos < n else dead
            delta[i] = [nxt, nxt]
        else:
            _, pos, seen = s
            if pos >= n:
                delta[i] = [dead, dead]
            else:
                zero = sid(("p", pos + 1, seen))
                grown = seen + (pos + 1,)
                if grown not in prefixes:
                    one = dead
                elif len(grown) == k:
                    one = sid(("free", pos + 1))
                else:
                    one = sid(("p", pos + 1, grown))
                delta[i] = [zero, one]
        i += 1
    acc = {index[s] for s in order if s != "dead" and s[0] == "free" and s[1] == n}
    if k == 0 and () in S.tuples:
        acc |= {index[s] for s in order if s != "dead" and s[0] == "p" and s[1] == n}
    return minimize(Dfa(("0", "1"), delta, 0, frozenset(acc)))


def zk_alphabet(k: int) -> Tuple[str, ...]:
    return tuple(x for l in range(1, k + 1) for x in (f"⊥{l}", f"⊤{l}"))


def zk_expr(k: int):
    """``Y_{k-1}* ⊤_k Y_{k-2}* ⊤_{k-1} … Y_0* ⊤_1 Y_k*`` with ``Y_0* = {ε}``, nested to the right."""
    if k < 1:
        raise InputError("k must be at least 1")
    expr = Star(zk_alphabet(k))
    for l in range(1, k + 1):
        expr = Split(Star(zk_alphabet(l - 1)), f"⊤{l}", expr, "L")
    return expr


@lru_cache(maxsize=None)
def _mk_stamp_cached(k: int, cap: int):
    D = sum_dfa(zk_expr(k), zk_alphabet(k))
    return syntactic_stamp(D, Limits(monoid_cap=cap))


def mk_stamp(k: int, limits: Limits = DEFAULT_LIMITS) -> Tuple[Stamp, frozenset]:
    """Syntactic stamp of ``Z_k`` onto ``M_k`` with the acceptance set."""
    return _mk_stamp_cached(k, limits.monoid_cap)


# -- compression ---------------------------------------------------------------------------

def _first_by(P: Program, idx: Sequence[int], last: bool = False, want=None) -> List[int]:
    """First (or last) instruction index per ``(position, letter, output)``."""
    chosen: Dict[tuple, int] = {}
    seq = reversed(idx) if last else idx
    for i in seq:
        p, f = P.instructions[i]
        for a, x in enumerate(f):
            if want is not None and x != want:
                continue
            key = (p, a) if want is not None else (p, a, x)
            chosen.setdefault(key, i)
    return sorted(set(chosen.values()))


def _compress(P: Program, idx: List[int], K) -> set:
    if not idx:
        return set()
    if isinstance(K, Star):
        return set(_first_by(P, idx))
    if isinstance(K.left, Star) and isinstance(K.right, Star):
        return set(_first_by(P, idx)) | set(_first_by(P, idx, last=True))
    last = K.side == "R"
    markers = _first_by(P, idx, last=last, want=K.marker)
    out = set(markers)
    pos = {i: j for j, i in enumerate(idx)}
    for i in markers:
        j = pos[i]
        out |= _compress(P, idx[:j], K.left)
        out |= _compress(P, idx[j + 1:], K.right)
    return out


def compress_for_sum(P: Program, K) -> List[int]:
    """Instruction indices ``I`` such that every ``I' ⊇ I`` keeps trace membership in ``K``.

    Trace letters are monoid element indices, so ``K`` is an expression over
    those integers.
    """
    letters = sum_letters(K)
    bad = [a for a in letters if not (isinstance(a, int) and 0 <= a < P.monoid.size)]
    if bad:
        raise InputError(f"SUM letters {bad!r} are not elements of the program's monoid")
    return sorted(_compress(P, list(range(P.length)), K))


@dataclass(frozen=True)
class CompressionResult:
    program: Program
    indices: Tuple[int, ...]
    verified: str  # "exhaustive" or "sampled"
    checked: int


def compress_program(P: Program, F: Iterable[int], certificate, limits: Limits = DEFAULT_LIMITS,
                     samples: int = 2000) -> CompressionResult:
    """Subprogram keeping only the instructions every certificate leaf needs.

    ``certificate`` is a Boolean combination of SUM expressions over the
    monoid elements describing the words over ``M`` whose product lies in
    ``F``.  The result is checked against the input program exhaustively
    when the input space fits the enumeration cap and on a seeded sample
    otherwise; any disagreement raises :class:`CertificateError`.
    """
    import random

    F = frozenset(F)
    I = set()
    for leaf in combo_leaves(certificate):
        I |= set(compress_for_sum(P, leaf))
    Q = subprogram(P, I)
    total = len(P.alphabet) ** P.n
    if total <= limits.enumeration_cap:
        words = itertools.product(range(len(P.alphabet)), repeat=P.n)
        mode = "exhaustive"
    else:
        rng = random.Random(limits.seed)
        words = (tuple(rng.randrange(len(P.alphabet)) for _ in range(P.n)) for _ in range(samples))
        mode = "sampled"
    count = 0
    holds = compile_combo(certificate)
    for codes in words:
        if count % 4096 == 0:
            limits.checkpoint()
        word = tuple(P.alphabet[c] for c in codes)
        full_trace = tuple(f[codes[p - 1]] for p, f in P.instructions)
        accepted = P.monoid.product(full_trace) in F
        if holds(full_trace) != accepted:
            raise CertificateError("certificate disagrees with the acceptance set", witness=word)
        if (Q.eval_encoded(codes) in F) != accepted:
            raise CertificateError("compressed program disagrees with the input program", witness=word)
        count += 1
    return CompressionResult(Q, tuple(sorted(I)), mode, count)


def mk_certificate(k: int, F: Iterable[int], limits: Limits = DEFAULT_LIMITS):
    """Boolean combination over ``M_k`` elements for ``{x ∈ M_k* : product(x) ∈ F}``.

    Each class ``η^{-1}(m)`` of the syntactic morphism of ``Z_k`` is the
    intersection over contexts ``(x, y)`` of the two-sided quotients of
    ``Z_k`` (or their complements); pulling back along ``m ↦ ρ(m)``, a
    shortest word for ``m``, turns those into SUM expressions over the
    elements themselves.
    """
    stamp, FZ = mk_stamp(k, limits)
    M = stamp.monoid
    t = M.table
    Z = zk_expr(k)
    rho = {m: tuple(stamp.shortest_words[m]) for m in M.elements}
    pulled: Dict[Tuple[int, int], object] = {}
    for x in M.elements:
        for y in M.elements:
            quotients = sum_quotient(Z, rho[x], "both", rho[y])
            leaves = _dedupe(e for q in quotients for e in sum_inverse_morphism(q, rho))
            pulled[(x, y)] = union_of(leaves)
    classes = []
    for m in sorted(set(F)):
        if not 0 <= m < M.size:
            raise InputError(f"element {m} not in M_{k}")
        conj = []
        for x in M.elements:
            for y in M.elements:
                member = t[t[x][m]][y] in FZ
                conj.append(pulled[(x, y)] if member else Not(pulled[(x, y)]))
        classes.append(And(tuple(conj)))
    if not classes:
        return Const(False)
    return Or(tuple(classes)) if len(classes) > 1 else classes[0]


# -- counting -------------------------------------------------------------------------------

def count_bound(i: int, n: int, l: int) -> int:
    """``i^(i²) · 2^i · (n·i²)^l``: languages of ``{0,1}^n`` from ≤ l instructions over size-i monoids."""
    if i < 0 or n < 0 or l < 0:
        raise InputError("count_bound takes nonnegative arguments")
    return i ** (i * i) * 2 ** i * (n * i * i) ** l


def enumerate_program_languages(M: FiniteMonoid, n: int, l: int,
                                limits: Limits = DEFAULT_LIMITS) -> set:
    """All languages of ``{0,1}^n`` recognized by programs over ``M`` with exactly ``l`` instructions."""
    choices = [(p, (a, b)) for p in range(1, n + 1) for a in M.elements for b in M.elements]
    total = len(choices) ** l
    if total * (2 ** M.size) > limits.enumeration_cap:
        raise ResourceError(f"{total} programs exceed the enumeration cap")
    words = list(itertools.product(("0", "1"), repeat=n))
    langs = set()
    for instrs in itertools.product(choices, repeat=l):
        P = Program(n, ("0", "1"), M, instrs)
        outs = [P.eval(w) for w in words]
        for r in range(M.size + 1):
            for F in itertools.combinations(M.elements, r):
                Fs = set(F)
                langs.add(frozenset(w for w, o in zip(words, outs) if o in Fs))
    return langs
