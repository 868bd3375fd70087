"""Regular languages, minimal automata and stamps.

Words are sequences of letters.  When every letter is a one-character
string, a plain ``str`` is a word; otherwise use a tuple or list of letters.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Dict, FrozenSet, Hashable, Iterable, List, Optional, Sequence, Tuple

from .algebra import (FiniteMonoid, IdentityViolation, VarietyId, restrict,
                      satisfies_variety, variety_violation)
from .config import DEFAULT_LIMITS, Limits
from .errors import InputError, ResourceError

Letter = Hashable
Word = Sequence


def join_word(word: Word) -> str:
    """Display form of a word: letters concatenated, ``ε`` when empty."""
    if len(word) == 0:
        return "ε"
    if isinstance(word, str):
        return word
    return "".join(letter_text(a) for a in word)


def letter_text(a: Letter) -> str:
    if isinstance(a, tuple):
        return "".join(letter_text(x) for x in a)
    return str(a)


# -- regular expressions ---------------------------------------------------------

@dataclass(frozen=True)
class Empty:
    pass


@dataclass(frozen=True)
class Epsilon:
    pass


@dataclass(frozen=True)
class Sym:
    letter: str


@dataclass(frozen=True)
class Union:
    parts: Tuple["Regex", ...]


@dataclass(frozen=True)
class Concat:
    parts: Tuple["Regex", ...]


@dataclass(frozen=True)
class Star:
    inner: "Regex"


@dataclass(frozen=True)
class Plus:
    inner: "Regex"


Regex = object  # one of the node classes above


def regex_letters(r) -> List[str]:
    out: List[str] = []

    def walk(node):
        if isinstance(node, Sym):
            if node.letter not in out:
                out.append(node.letter)
        elif isinstance(node, (Union, Concat)):
            for p in node.parts:
                walk(p)
        elif isinstance(node, (Star, Plus)):
            walk(node.inner)

    walk(r)
    return sorted(out)


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, msg: str):
        raise InputError(f"regex syntax error at position {self.pos}: {msg}")

    def peek(self) -> Optional[str]:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1
        return self.text[self.pos] if self.pos < len(self.text) else None

    def parse(self):
        node = self.union()
        if self.peek() is not None:
            self.error(f"unexpected {self.text[self.pos]!r}")
        return node

    def union(self):
        parts = [self.concat()]
        while self.peek() == "+":
            self.pos += 1
            parts.append(self.concat())
        return parts[0] if len(parts) == 1 else Union(tuple(parts))

    def concat(self):
        parts = []
        while True:
            c = self.peek()
            if c is None or c in "+)":
                break
            parts.append(self.postfix())
        if not parts:
            self.error("empty operand")
        return parts[0] if len(parts) == 1 else Concat(tuple(parts))

    def postfix(self):
        node = self.atom()
        while self.peek() in ("*", "~"):
            op = self.text[self.pos]
            self.pos += 1
            node = Star(node) if op == "*" else Plus(node)
        return node

    def atom(self):
        c = self.peek()
        if c == "(":
            self.pos += 1
            node = self.union()
            if self.peek() != ")":
                self.error("expected ')'")
            self.pos += 1
            return node
        if c == "<":
            end = self.text.find(">", self.pos)
            if end < 0:
                self.error("unterminated <token>")
            tok = self.text[self.pos + 1:end]
            if not tok:
                self.error("empty <token>")
            self.pos = end + 1
            return Sym(tok)
        if c in ("∅",):
            self.pos += 1
            return Empty()
        if c in ("ε",):
            self.pos += 1
            return Epsilon()
        if c is not None and c.isalnum():
            self.pos += 1
            return Sym(c)
        self.error(f"unexpected {c!r}" if c else "unexpected end of input")


def parse_regex(text: str):
    """Parse ``+`` (union), juxtaposition, ``*``, ``~`` (plus) and parentheses."""
    return _Parser(text).parse()


def regex_to_text(r) -> str:
    def fmt(node, prec: int) -> str:
        # prec: 0 union context, 1 concat context, 2 postfix operand
        if isinstance(node, Empty):
            return "∅"
        if isinstance(node, Epsilon):
            return "ε"
        if isinstance(node, Sym):
            return node.letter if len(node.letter) == 1 and node.letter.isalnum() else f"<{node.letter}>"
        if isinstance(node, Union):
            s = "+".join(fmt(p, 0) for p in node.parts)
            return f"({s})" if prec > 0 else s
        if isinstance(node, Concat):
            s = "".join(fmt(p, 1) for p in node.parts)
            return f"({s})" if prec > 1 else s
        if isinstance(node, Star):
            return fmt(node.inner, 2) + "*"
        if isinstance(node, Plus):
            return fmt(node.inner, 2) + "~"
        raise InputError(f"not a regex node: {node!r}")

    return fmt(r, 0)


# -- automata -----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Dfa:
    """A complete deterministic automaton; ``delta[q][i]`` reads ``alphabet[i]``."""

    alphabet: Tuple[Letter, ...]
    delta: Tuple[Tuple[int, ...], ...]
    initial: int
    accepting: FrozenSet[int]

    def __post_init__(self):
        object.__setattr__(self, "alphabet", tuple(self.alphabet))
        object.__setattr__(self, "delta", tuple(tuple(r) for r in self.delta))
        object.__setattr__(self, "accepting", frozenset(self.accepting))
        n = len(self.delta)
        if len(set(self.alphabet)) != len(self.alphabet):
            raise InputError("duplicate letters in alphabet")
        if not 0 <= self.initial < max(n, 1) or n == 0:
            raise InputError("initial state out of range")
        for row in self.delta:
            if len(row) != len(self.alphabet) or any(not 0 <= q < n for q in row):
                raise InputError("transition table is not total over the alphabet")
        if any(not 0 <= q < n for q in self.accepting):
            raise InputError("accepting state out of range")

    @property
    def num_states(self) -> int:
        return len(self.delta)

    @cached_property
    def letter_index(self) -> Dict[Letter, int]:
        return {a: i for i, a in enumerate(self.alphabet)}

    def step(self, q: int, a: Letter) -> int:
        try:
            return self.delta[q][self.letter_index[a]]
        except KeyError:
            raise InputError(f"letter {a!r} not in alphabet") from None

    def run(self, word: Word, start: Optional[int] = None) -> int:
        q = self.initial if start is None else start
        idx = self.letter_index
        d = self.delta
        try:
            for a in word:
                q = d[q][idx[a]]
        except KeyError as exc:
            raise InputError(f"letter {exc.args[0]!r} not in alphabet") from None
        return q

    def accepts(self, word: Word) -> bool:
        return self.run(word) in self.accepting

    __contains__ = accepts

    def minimize(self) -> "Dfa":
        return minimize(self)

    def complement(self) -> "Dfa":
        return Dfa(self.alphabet, self.delta, self.initial,
                   frozenset(range(self.num_states)) - self.accepting)

    def intersect(self, other: "Dfa") -> "Dfa":
        return product_dfa(self, other, lambda x, y: x and y)

    def union(self, other: "Dfa") -> "Dfa":
        return product_dfa(self, other, lambda x, y: x or y)

    def left_quotient(self, u: Word) -> "Dfa":
        """Language ``{w : u·w ∈ L}``."""
        return Dfa(self.alphabet, self.delta, self.run(u), self.accepting)

    def right_quotient(self, u: Word) -> "Dfa":
        """Language ``{w : w·u ∈ L}``."""
        acc = frozenset(q for q in range(self.num_states) if self.run(u, q) in self.accepting)
        return Dfa(self.alphabet, self.delta, self.initial, acc)

    def inverse_morphism(self, images: Dict[Letter, Word]) -> "Dfa":
        """Language ``{w : μ(w) ∈ L}`` for the morphism given by letter images."""
        alphabet = tuple(images)
        delta = tuple(tuple(self.run(images[b], q) for b in alphabet)
                      for q in range(self.num_states))
        return Dfa(alphabet, delta, self.initial, self.accepting)

    def is_empty(self) -> bool:
        return not (reachable_states(self) & self.accepting)

    def equivalent(self, other: "Dfa") -> bool:
        if set(self.alphabet) != set(other.alphabet):
            return False
        return product_dfa(self, other, lambda x, y: x != y).is_empty()

    def words(self, length: int) -> Iterable[Tuple[Letter, ...]]:
        """Accepted words of exactly ``length`` letters, in lexicographic alphabet order."""
        # prune with distances to acceptance
        alive = [set() for _ in range(length + 1)]
        alive[0] = set(self.accepting)
        for k in range(1, length + 1):
            alive[k] = {q for q in range(self.num_states)
                        if any(r in alive[k - 1] for r in self.delta[q])}

        def rec(q, k, prefix):
            if k == 0:
                yield tuple(prefix)
                return
            for i, a in enumerate(self.alphabet):
                r = self.delta[q][i]
                if r in alive[k - 1]:
                    prefix.append(a)
                    yield from rec(r, k - 1, prefix)
                    prefix.pop()

        if self.initial in alive[length]:
            yield from rec(self.initial, length, [])

    def to_dict(self) -> dict:
        return {"alphabet": list(self.alphabet), "delta": [list(r) for r in self.delta],
                "initial": self.initial, "accepting": sorted(self.accepting)}


def reachable_states(D: Dfa) -> set:
    seen = {D.initial}
    queue = deque([D.initial])
    while queue:
        q = queue.popleft()
        for r in D.delta[q]:
            if r not in seen:
                seen.add(r)
                queue.append(r)
    return seen


def _align(D: Dfa, alphabet: Tuple[Letter, ...]) -> Dfa:
    """Extend ``D`` to a larger alphabet; new letters go to a rejecting sink."""
    if D.alphabet == alphabet:
        return D
    missing = [a for a in D.alphabet if a not in alphabet]
    if missing:
        raise InputError(f"letters {missing!r} missing from target alphabet")
    sink = D.num_states
    delta = []
    for q in range(D.num_states):
        delta.append(tuple(D.delta[q][D.letter_index[a]] if a in D.letter_index else sink
                           for a in alphabet))
    delta.append(tuple(sink for _ in alphabet))
    return Dfa(alphabet, delta, D.initial, D.accepting)


def product_dfa(A: Dfa, B: Dfa, combine) -> Dfa:
    alphabet = A.alphabet + tuple(b for b in B.alphabet if b not in A.letter_index)
    A, B = _align(A, alphabet), _align(B, alphabet)
    index: Dict[Tuple[int, int], int] = {(A.initial, B.initial): 0}
    order = [(A.initial, B.initial)]
    delta = []
    i = 0
    while i < len(order):
        p, q = order[i]
        row = []
        for k in range(len(alphabet)):
            nxt = (A.delta[p][k], B.delta[q][k])
            if nxt not in index:
                index[nxt] = len(order)
                order.append(nxt)
            row.append(index[nxt])
        delta.append(tuple(row))
        i += 1
    acc = frozenset(i for i, (p, q) in enumerate(order)
                    if combine(p in A.accepting, q in B.accepting))
    return minimize(Dfa(alphabet, delta, 0, acc))


def minimize(D: Dfa) -> Dfa:
    """Minimal complete DFA, states numbered in breadth-first order from the initial state."""
    reach = sorted(reachable_states(D))
    block = {q: (1 if q in D.accepting else 0) for q in reach}
    nblocks = len(set(block.values()))
    while True:
        sigs = {}
        new_block = {}
        for q in reach:
            sig = (block[q],) + tuple(block[r] for r in D.delta[q])
            new_block[q] = sigs.setdefault(sig, len(sigs))
        block = new_block
        if len(sigs) == nblocks:
            break
        nblocks = len(sigs)
    # canonical renumbering
    order = {block[D.initial]: 0}
    rep = {}
    for q in reach:
        rep.setdefault(block[q], q)
    queue = deque([block[D.initial]])
    while queue:
        b = queue.popleft()
        for r in D.delta[rep[b]]:
            if block[r] not in order:
                order[block[r]] = len(order)
                queue.append(block[r])
    delta = [None] * len(order)
    for b, i in order.items():
        delta[i] = tuple(order[block[r]] for r in D.delta[rep[b]])
    acc = frozenset(order[block[q]] for q in reach if q in D.accepting)
    return Dfa(D.alphabet, delta, 0, acc)


def _thompson(r, alphabet_index: Dict[str, int]):
    """Epsilon-NFA as (num_states, eps edges, letter edges, start, final)."""
    eps: List[List[int]] = []
    edges: List[List[Tuple[int, int]]] = []

    def new() -> int:
        eps.append([])
        edges.append([])
        return len(eps) - 1

    def build(node) -> Tuple[int, int]:
        s, f = new(), new()
        if isinstance(node, Empty):
            pass
        elif isinstance(node, Epsilon):
            eps[s].append(f)
        elif isinstance(node, Sym):
            edges[s].append((alphabet_index[node.letter], f))
        elif isinstance(node, Union):
            for p in node.parts:
                a, b = build(p)
                eps[s].append(a)
                eps[b].append(f)
        elif isinstance(node, Concat):
            cur = s
            for p in node.parts:
                a, b = build(p)
                eps[cur].append(a)
                cur = b
            eps[cur].append(f)
        elif isinstance(node, (Star, Plus)):
            a, b = build(node.inner)
            eps[s].append(a)
            eps[b].append(f)
            eps[b].append(a)
            if isinstance(node, Star):
                eps[s].append(f)
        else:
            raise InputError(f"not a regex node: {node!r}")
        return s, f

    start, final = build(r)
    return eps, edges, start, final


def regex_to_dfa(r, alphabet: Optional[Sequence[Letter]] = None) -> Dfa:
    letters = regex_letters(r)
    if alphabet is None:
        alphabet = tuple(letters)
    else:
        alphabet = tuple(alphabet)
        missing = [a for a in letters if a not in alphabet]
        if missing:
            raise InputError(f"regex letters {missing!r} not in the given alphabet")
    aidx = {a: i for i, a in enumerate(alphabet)}
    eps, edges, start, final = _thompson(r, aidx)

    def eclose(states) -> FrozenSet[int]:
        out = set(states)
        stack = list(states)
        while stack:
            q = stack.pop()
            for r2 in eps[q]:
                if r2 not in out:
                    out.add(r2)
                    stack.append(r2)
        return frozenset(out)

    init = eclose([start])
    index = {init: 0}
    order = [init]
    delta = []
    i = 0
    while i < len(order):
        S = order[i]
        row = []
        for k in range(len(alphabet)):
            T = eclose([t for q in S for (a, t) in edges[q] if a == k])
            if T not in index:
                index[T] = len(order)
                order.append(T)
            row.append(index[T])
        delta.append(tuple(row))
        i += 1
    acc = frozenset(i for i, S in enumerate(order) if final in S)
    return Dfa(alphabet, delta, 0, acc)


def compile_min_dfa(r, alphabet: Optional[Sequence[Letter]] = None) -> Dfa:
    """Minimal complete DFA of a regex (given as text or as a parsed tree)."""
    if isinstance(r, str):
        r = parse_regex(r)
    return minimize(regex_to_dfa(r, alphabet))


def scattered_subword_dfa(pattern: Word, alphabet: Sequence[Letter]) -> Dfa:
    """Words containing ``pattern`` as a scattered subword (letters in order, gaps allowed)."""
    alphabet = tuple(alphabet)
    k = len(pattern)
    delta = []
    for q in range(k + 1):
        delta.append(tuple(q + 1 if q < k and a == pattern[q] else q for a in alphabet))
    return minimize(Dfa(alphabet, delta, 0, frozenset([k])))


# -- stamps ----------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Stamp:
    """A surjective morphism from words over ``alphabet`` onto ``monoid``."""

    alphabet: Tuple[Letter, ...]
    monoid: FiniteMonoid
    images: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "alphabet", tuple(self.alphabet))
        object.__setattr__(self, "images", tuple(int(x) for x in self.images))
        if not self.alphabet:
            raise InputError("a stamp needs a nonempty alphabet")
        if len(set(self.alphabet)) != len(self.alphabet):
            raise InputError("duplicate letters in alphabet")
        if len(self.images) != len(self.alphabet):
            raise InputError("one image per letter required")
        if any(not 0 <= x < self.monoid.size for x in self.images):
            raise InputError("letter image out of range")
        from .algebra import closure
        if len(closure(self.monoid, self.images)) != self.monoid.size:
            raise InputError("letter images do not generate the monoid (stamp must be onto)")

    @cached_property
    def letter_index(self) -> Dict[Letter, int]:
        return {a: i for i, a in enumerate(self.alphabet)}

    @cached_property
    def image_map(self) -> Dict[Letter, int]:
        return dict(zip(self.alphabet, self.images))

    def image(self, a: Letter) -> int:
        try:
            return self.image_map[a]
        except KeyError:
            raise InputError(f"letter {a!r} not in alphabet") from None

    def eval(self, word: Word) -> int:
        t = self.monoid.table
        acc = self.monoid.identity
        m = self.image_map
        try:
            for a in word:
                acc = t[acc][m[a]]
        except KeyError as exc:
            raise InputError(f"letter {exc.args[0]!r} not in alphabet") from None
        return acc

    __call__ = eval

    @cached_property
    def shortest_words(self) -> Tuple[Tuple[Letter, ...], ...]:
        """A shortest (then lexicographically least) word for every element."""
        words: List[Optional[Tuple[Letter, ...]]] = [None] * self.monoid.size
        words[self.monoid.identity] = ()
        queue = deque([self.monoid.identity])
        while queue:
            m = queue.popleft()
            for a, x in zip(self.alphabet, self.images):
                p = self.monoid.table[m][x]
                if words[p] is None:
                    words[p] = words[m] + (a,)
                    queue.append(p)
        return tuple(words)

    def to_dict(self) -> dict:
        return {"alphabet": [letter_text(a) for a in self.alphabet],
                "monoid": self.monoid.to_dict(),
                "images": {letter_text(a): x for a, x in zip(self.alphabet, self.images)}}

    @classmethod
    def from_dict(cls, data: dict) -> "Stamp":
        alphabet = tuple(data["alphabet"])
        images = data["images"]
        return cls(alphabet, FiniteMonoid.from_dict(data["monoid"]), tuple(images[a] for a in alphabet))


def _word_name(word: Sequence[Letter]) -> str:
    return join_word(word)


def syntactic_stamp(D: Dfa, limits: Limits = DEFAULT_LIMITS) -> Tuple[Stamp, FrozenSet[int]]:
    """Transition monoid of the minimal DFA with the acceptance set.

    Element 0 is the identity; the rest follow in shortlex order of their
    shortest representative words, which also serve as names.
    """
    D = minimize(D)
    if not D.alphabet:
        raise InputError("the automaton has an empty alphabet")
    n = D.num_states
    ident = tuple(range(n))
    letter_maps = [tuple(D.delta[q][i] for q in range(n)) for i in range(len(D.alphabet))]
    index = {ident: 0}
    elems = [ident]
    words: List[Tuple[Letter, ...]] = [()]
    i = 0
    while i < len(elems):
        t = elems[i]
        for k, f in enumerate(letter_maps):
            u = tuple(f[t[q]] for q in range(n))
            if u not in index:
                if len(elems) >= limits.monoid_cap:
                    raise ResourceError(
                        f"syntactic monoid exceeds monoid_cap={limits.monoid_cap}")
                index[u] = len(elems)
                elems.append(u)
                words.append(words[i] + (D.alphabet[k],))
        i += 1
        limits.checkpoint()
    size = len(elems)
    table = tuple(tuple(index[tuple(t2[t1[q]] for q in range(n))] for t2 in elems) for t1 in elems)
    names = tuple(_word_name(w) for w in words)
    M = FiniteMonoid(table, 0, names)
    images = tuple(index[f] for f in letter_maps)
    F = frozenset(i for i, t in enumerate(elems) if t[D.initial] in D.accepting)
    return Stamp(D.alphabet, M, images), F


def syntactic_stamp_of(regex, alphabet=None, limits: Limits = DEFAULT_LIMITS):
    return syntactic_stamp(compile_min_dfa(regex, alphabet), limits)


def stamp_recognizes(phi: Stamp, F: Iterable[int], word: Word) -> bool:
    return phi.eval(word) in set(F)


def stamp_language_dfa(phi: Stamp, F: Iterable[int]) -> Dfa:
    """The automaton whose states are monoid elements."""
    M = phi.monoid
    delta = tuple(tuple(M.table[m][x] for x in phi.images) for m in M.elements)
    return minimize(Dfa(phi.alphabet, delta, M.identity, frozenset(F)))


# -- stability ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StampAnalysis:
    stability_index: int
    stable_semigroup: FrozenSet[int]
    stable_monoid: FiniteMonoid
    embedding: Tuple[int, ...]
    # A_k for k = 1 .. (2s - 1); ``powers[k-1]`` is A_k
    powers: Tuple[FrozenSet[int], ...] = field(repr=False, default=())

    @property
    def s(self) -> int:
        return self.stability_index


def _image_sets(phi: Stamp):
    """The sets A_k = φ(Σ^k) as a preperiod list plus period."""
    t = phi.monoid.table
    A1 = frozenset(phi.images)
    seq = [A1]
    seen = {A1: 0}
    while True:
        nxt = frozenset(t[a][x] for a in seq[-1] for x in A1)
        if nxt in seen:
            return seq, seen[nxt], len(seq) - seen[nxt]
        seen[nxt] = len(seq)
        seq.append(nxt)


def _power_set(seq, start: int, period: int, k: int) -> FrozenSet[int]:
    i = k - 1
    if i >= len(seq):
        i = start + (i - start) % period
    return seq[i]


def stability_index(phi: Stamp) -> StampAnalysis:
    seq, start, period = _image_sets(phi)
    k = 1
    while _power_set(seq, start, period, 2 * k) != _power_set(seq, start, period, k):
        k += 1
    stable = _power_set(seq, start, period, k)
    M = phi.monoid
    elements = [M.identity] + sorted(x for x in stable if x != M.identity)
    N, emb = restrict(M, elements)
    powers = tuple(_power_set(seq, start, period, j) for j in range(1, 2 * k))
    return StampAnalysis(k, frozenset(stable), N, emb, powers)


def stable_stamp(phi: Stamp, limits: Limits = DEFAULT_LIMITS) -> Stamp:
    """The stamp reading blocks of ``s`` letters into the stable monoid."""
    an = stability_index(phi)
    s = an.s
    count = len(phi.alphabet) ** s
    if count > limits.alphabet_cap:
        raise ResourceError(f"stable alphabet of {count} letters exceeds alphabet_cap={limits.alphabet_cap}")
    back = {old: new for new, old in enumerate(an.embedding)}
    plain = all(isinstance(a, str) and len(a) == 1 for a in phi.alphabet)
    letters, images = [], []
    for block in itertools.product(phi.alphabet, repeat=s):
        letters.append("".join(block) if plain else tuple(block))
        images.append(back[phi.eval(block)])
    return Stamp(tuple(letters), an.stable_monoid, tuple(images))


def unblock(word: Sequence[Letter]) -> Tuple[Letter, ...]:
    """Flatten a word over a stable alphabet back into base letters."""
    out: List[Letter] = []
    for a in word:
        if isinstance(a, tuple) or (isinstance(a, str) and len(a) > 1):
            out.extend(a)
        else:
            out.append(a)
    return tuple(out)


# -- essentially-V -------------------------------------------------------------------------

def context_elements(phi: Stamp) -> FrozenSet[int]:
    """Images of all words of length at least ``s``: ``A_s ∪ ... ∪ A_{2s-1}``."""
    an = stability_index(phi)
    out = set()
    for k in range(an.s, 2 * an.s):
        out |= an.powers[k - 1]
    return frozenset(out)


@dataclass(frozen=True)
class ContextQuotient:
    monoid: FiniteMonoid
    projection: Tuple[int, ...]
    contexts: Tuple[int, ...]

    def stamp(self, phi: Stamp) -> Stamp:
        return Stamp(phi.alphabet, self.monoid, tuple(self.projection[x] for x in phi.images))


def context_quotient(phi: Stamp) -> ContextQuotient:
    """Quotient of the target by ``m ≡ m'`` iff ``a·m·b = a·m'·b`` for all long contexts.

    The contexts are the images of all words of length at least the
    stability index; this set is a two-sided ideal, so ``≡`` is a
    congruence.  The quotient is the coarsest stamp that determines the
    value of every word inside long contexts, so ``φ`` is essentially-V
    exactly when this quotient lies in V.
    """
    M = phi.monoid
    t = M.table
    C = sorted(context_elements(phi))
    classes: Dict[tuple, int] = {}
    proj = []
    reps = []
    for m in M.elements:
        sig = tuple(t[t[a][m]][b] for a in C for b in C)
        if sig not in classes:
            classes[sig] = len(classes)
            reps.append(m)
        proj.append(classes[sig])
    table = tuple(tuple(proj[t[a][b]] for b in reps) for a in reps)
    names = tuple(M.names[r] for r in reps)
    N = FiniteMonoid(table, proj[M.identity], names)
    return ContextQuotient(N, tuple(proj), tuple(C))


def _context_words(phi: Stamp, s: int) -> Dict[int, Tuple[Letter, ...]]:
    """For every context element, a shortlex-least word of length in ``[s, 2s-1]``."""
    t = phi.monoid.table
    layer: Dict[int, Tuple[Letter, ...]] = {phi.monoid.identity: ()}
    out: Dict[int, Tuple[Letter, ...]] = {}
    for k in range(1, 2 * s):
        nxt: Dict[int, Tuple[Letter, ...]] = {}
        for m in sorted(layer, key=lambda m: layer[m]):
            for a, x in zip(phi.alphabet, phi.images):
                p = t[m][x]
                w = layer[m] + (a,)
                if p not in nxt or _shortlex_key(phi, w) < _shortlex_key(phi, nxt[p]):
                    nxt[p] = w
        layer = nxt
        if k >= s:
            for p, w in layer.items():
                out.setdefault(p, w)
    return out


def _shortlex_key(phi: Stamp, w):
    idx = phi.letter_index
    return (len(w), tuple(idx[a] for a in w))


@dataclass(frozen=True)
class EssentialCertificate:
    """Evidence that a stamp is not essentially-V.

    ``left_word`` and ``right_word`` instantiate a violated identity of V
    (ω replaced by ``exponent``); for the contexts ``prefix``/``suffix`` the
    stamp separates them: ``φ(prefix·left·suffix) ≠ φ(prefix·right·suffix)``.
    """

    identity: str
    assignment: Dict[str, Tuple[Letter, ...]]
    exponent: int
    left_word: Tuple[Letter, ...]
    right_word: Tuple[Letter, ...]
    prefix: Tuple[Letter, ...]
    suffix: Tuple[Letter, ...]
    left_value: int
    right_value: int
    pumping: Optional[Dict[str, object]] = None

    def to_dict(self) -> dict:
        out = {
            "identity": self.identity,
            "assignment": {k: join_word(v) for k, v in self.assignment.items()},
            "exponent": self.exponent,
            "left": join_word(self.prefix) + " · " + join_word(self.left_word) + " · " + join_word(self.suffix),
            "right": join_word(self.prefix) + " · " + join_word(self.right_word) + " · " + join_word(self.suffix),
            "left_value": self.left_value,
            "right_value": self.right_value,
        }
        if self.pumping is not None:
            out["pumping"] = self.pumping
        return out


def _identity_words(identity: str, x, y, w: int):
    if identity == "x = 1":
        return x, ()
    if identity == "xy = yx":
        return x + y, y + x
    if identity == "x^w = x^(w+1)":
        return x * w, x * (w + 1)
    e = (x + y) * w
    if identity == "(xy)^w = (xy)^w x":
        return e, e + x
    if identity == "(xy)^w = y(xy)^w":
        return e, y + e
    if identity == "(xy)^w = (xy)^w x (xy)^w":
        return e, e + x + e
    raise InputError(f"unknown identity {identity!r}")


def essentially_v_certificate(phi: Stamp, V) -> Optional[EssentialCertificate]:
    """``None`` when ``φ`` is essentially-V, otherwise a separating certificate."""
    V = VarietyId.parse(V)
    Q = context_quotient(phi)
    violation = variety_violation(Q.monoid, V)
    if violation is None:
        return None
    return _lift_violation(phi, Q, violation)


def _lift_violation(phi: Stamp, Q: ContextQuotient, v: IdentityViolation) -> EssentialCertificate:
    M = phi.monoid
    t = M.table
    # the exponent must be idempotent for M; it is then idempotent in every quotient
    w = M.omega
    reps = phi.shortest_words
    rep_of_class = {}
    for m in M.elements:
        rep_of_class.setdefault(Q.projection[m], m)
    x = tuple(reps[rep_of_class[v.x]])
    y = tuple(reps[rep_of_class[v.y]]) if v.y is not None else ()
    left, right = _identity_words(v.identity, x, y, w)
    lv, rv = phi.eval(left), phi.eval(right)
    s = stability_index(phi).s
    ctx = _context_words(phi, s)
    order = sorted(ctx, key=lambda m: _shortlex_key(phi, ctx[m]))
    for a in order:
        for b in order:
            if t[t[a][lv]][b] != t[t[a][rv]][b]:
                assignment = {"x": x} if v.y is None else {"x": x, "y": y}
                pumping = None
                if v.identity == "(xy)^w = (xy)^w x":
                    pumping = _pumping_report(phi, ctx[a], x, y, ctx[b], w)
                return EssentialCertificate(
                    v.identity, assignment, w, left, right, ctx[a], ctx[b],
                    phi.eval(ctx[a] + left + ctx[b]), phi.eval(ctx[a] + right + ctx[b]),
                    pumping)
    raise AssertionError("quotient violation without separating contexts")


def _pumping_report(phi: Stamp, pre, u, v, suf, w: int) -> Dict[str, object]:
    """Compare ``pre (uv)^k suf`` with ``pre (uv)^k u suf`` for k = 1 .. 2|M|."""
    differing = []
    for k in range(1, 2 * phi.monoid.size + 1):
        if phi.eval(pre + (u + v) * k + suf) != phi.eval(pre + (u + v) * k + u + suf):
            differing.append(k)
    return {"prefix": join_word(pre), "u": join_word(u), "v": join_word(v),
            "suffix": join_word(suf), "differs_at_k": differing,
            "differs_at_all_multiples_of": w}


def is_essentially_v(phi: Stamp, V) -> bool:
    return satisfies_variety(context_quotient(phi).monoid, V)


def is_quasi_v(phi: Stamp, V) -> bool:
    return satisfies_variety(stability_index(phi).stable_monoid, V)


def is_quasi_essentially_v(phi: Stamp, V, limits: Limits = DEFAULT_LIMITS) -> bool:
    return is_essentially_v(stable_stamp(phi, limits), V)


def j_pumping_differs(phi: Stamp, prefix: Word, u: Word, v: Word, suffix: Word, k: int) -> bool:
    """Whether ``φ(prefix (uv)^k suffix) ≠ φ(prefix (uv)^k u suffix)``."""
    base = list(prefix)
    uv = list(u) + list(v)
    left = base + uv * k + list(suffix)
    right = base + uv * k + list(u) + list(suffix)
    return phi.eval(left) != phi.eval(right)


# -- commutative equations ---------------------------------------------------------------

def _require_stable(phi: Stamp) -> None:
    if stability_index(phi).s != 1:
        raise InputError("operation requires a stable stamp (stability index 1)")


def _idempotent_letters(phi: Stamp) -> List[Letter]:
    t = phi.monoid.table
    return [a for a, x in zip(phi.alphabet, phi.images) if t[x][x] == x]


def ecom_violation(phi: Stamp) -> Optional[Tuple[Letter, Letter, Letter, Letter]]:
    """A quadruple ``(e, x, y, f)`` with ``φ(exyf) ≠ φ(eyxf)``, or ``None``."""
    _require_stable(phi)
    ids = _idempotent_letters(phi)
    for e in ids:
        for f in ids:
            for x in phi.alphabet:
                for y in phi.alphabet:
                    if phi.eval((e, x, y, f)) != phi.eval((e, y, x, f)):
                        return e, x, y, f
    return None


def check_ecom_condition(phi: Stamp) -> bool:
    return ecom_violation(phi) is None


def com_equation_violation(phi: Stamp) -> Optional[Tuple[int, Tuple[Letter, ...]]]:
    """First violated equation (1, 2 or 3) with its letters, or ``None``."""
    _require_stable(phi)
    ids = _idempotent_letters(phi)
    A = phi.alphabet
    ev = phi.eval
    for e in ids:
        for f in ids:
            for g in ids:
                for x in A:
                    for y in A:
                        if ev((e, x, f, y, g)) != ev((e, y, f, x, g)):
                            return 1, (e, x, f, y, g)
    for e in ids:
        for f in ids:
            if ev((e, f, e, f)) != ev((e, f)):
                return 2, (e, f)
    for e in ids:
        for f in ids:
            for x in A:
                for y in A:
                    if ev((e, x, y, f)) != ev((e, y, e, f, x, f)):
                        return 3, (e, x, y, f)
    return None


def check_com_program_equations(phi: Stamp) -> bool:
    return com_equation_violation(phi) is None


def evaluation_stamp(M: FiniteMonoid) -> Stamp:
    """Letters are the element indices; each letter maps to itself."""
    return Stamp(tuple(M.elements), M, tuple(M.elements))


# -- named witness monoids ---------------------------------------------------------------------

def syntactic_semigroup_monoid(D: Dfa, limits: Limits = DEFAULT_LIMITS) -> FiniteMonoid:
    """Transition semigroup of nonempty words, as a monoid.

    When some nonempty word acts as a two-sided identity on this semigroup it
    serves as the identity; otherwise an identity is adjoined.  Element 0 is
    the identity either way.
    """
    stamp, _ = syntactic_stamp(D, limits)
    M = stamp.monoid
    plus = [m for m in M.elements if m != M.identity]
    # is the identity class reachable by a nonempty word?
    reach_one = any(M.table[m][x] == M.identity for m in M.elements for x in stamp.images)
    if reach_one:
        return M
    t = M.table
    for e in plus:
        if all(t[e][x] == x and t[x][e] == x for x in plus):
            elements = [e] + [x for x in plus if x != e]
            N, _ = restrict_semigroup(M, elements)
            return N
    return M


def restrict_semigroup(M: FiniteMonoid, elements: Sequence[int]) -> Tuple[FiniteMonoid, Tuple[int, ...]]:
    """Reindex a product-closed subset whose first element is a local identity."""
    index = {e: i for i, e in enumerate(elements)}
    table = tuple(tuple(index[M.table[a][b]] for b in elements) for a in elements)
    return FiniteMonoid(table, 0, tuple(M.names[e] for e in elements)), tuple(elements)


@lru_cache(maxsize=None)
def b2_monoid() -> FiniteMonoid:
    """The six-element monoid B2: syntactic semigroup of ``(c*ac*bc*)*``.

    The class of ``c`` is an identity for the nonempty words, so the
    semigroup is already a monoid.  The syntactic monoid of the same
    language has a seventh element because ``ε`` and ``c`` differ there.
    """
    return syntactic_semigroup_monoid(compile_min_dfa("(c*ac*bc*)*"))


@lru_cache(maxsize=None)
def u_monoid() -> FiniteMonoid:
    """The monoid U: syntactic semigroup of ``((b+c)*a(b+c)*b(b+c)*)*``."""
    return syntactic_semigroup_monoid(compile_min_dfa("((b+c)*a(b+c)*b(b+c)*)*"))


@lru_cache(maxsize=None)
def a2_monoid() -> FiniteMonoid:
    """A2 with an identity: syntactic monoid of ``(b+ab)*``, a proper divisor of U."""
    return syntactic_stamp_of("(b+ab)*")[0].monoid
