"""Masks, safe completions and the output-fixing procedure over DA monoids.

A mask is a tuple whose entries are letters (fixed positions) or ``None``
(free positions).  Positions are 1-based in every public function.

Given a program over a monoid in DA, :func:`fix_output` fixes a bounded
number of mask positions so that the program's output no longer depends on
the remaining safe positions.  :func:`fooling_pair` turns that into two
inputs with equal outputs, one inside and one outside a target language.
"""

from __future__ import annotations

import itertools
import random
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

from .algebra import FiniteMonoid, VarietyId, is_l_bad, is_r_bad, satisfies_variety
from .config import DEFAULT_LIMITS, Limits
from .errors import InputError
from .programs import Program
from .reglang import Concat, Dfa, Letter, Star, Sym, Union, minimize, regex_to_dfa

Mask = Tuple[Optional[Letter], ...]
FREE_SYMBOL = "⊥"


@dataclass(frozen=True)
class _Mark:
    """A free position about to be fixed to ``letter``."""

    letter: Letter


@dataclass(frozen=True)
class FoolingConfig:
    """The block set Δ (nonempty words) over ``alphabet``."""

    delta: Tuple[Tuple[Letter, ...], ...]
    alphabet: Tuple[Letter, ...] = ()

    def __post_init__(self):
        delta = tuple(tuple(d) for d in self.delta)
        if not delta:
            raise InputError("Δ must be nonempty")
        if any(len(d) == 0 for d in delta):
            raise InputError("Δ words must be nonempty")
        letters = {a for d in delta for a in d}
        alphabet = tuple(self.alphabet) if self.alphabet else tuple(sorted(letters))
        missing = letters - set(alphabet)
        if missing:
            raise InputError(f"Δ letters {sorted(missing)!r} not in alphabet")
        if FREE_SYMBOL in alphabet:
            raise InputError(f"{FREE_SYMBOL!r} is reserved for free positions")
        object.__setattr__(self, "delta", tuple(sorted(set(delta), key=lambda d: (len(d), d))))
        object.__setattr__(self, "alphabet", alphabet)

    @classmethod
    def parse(cls, text: str, alphabet: Sequence[Letter] = ()) -> "FoolingConfig":
        """``"c,ab"`` → Δ = {c, ab}."""
        return cls(tuple(tuple(w.strip()) for w in text.split(",") if w.strip()), tuple(alphabet))

    @property
    def l(self) -> int:
        return max(len(d) for d in self.delta)

    @cached_property
    def order(self) -> Dict[Letter, int]:
        return {a: i for i, a in enumerate(self.alphabet)}

    @cached_property
    def star_dfa(self) -> Dfa:
        """Minimal DFA of Δ* over the alphabet."""
        parts = tuple(Concat(tuple(Sym(a) for a in d)) if len(d) > 1 else Sym(d[0]) for d in self.delta)
        body = parts[0] if len(parts) == 1 else Union(parts)
        return minimize(regex_to_dfa(Star(body), self.alphabet))


def free_mask(n: int) -> Mask:
    return (None,) * n


def mask_text(mask: Mask) -> str:
    return "".join(FREE_SYMBOL if a is None else str(a) for a in mask)


def parse_mask(text: str) -> Mask:
    return tuple(None if c in (FREE_SYMBOL, "_", ".") else c for c in text)


def fixed_count(mask: Mask) -> int:
    return sum(a is not None for a in mask)


def is_submask(sub: Mask, mask: Mask) -> bool:
    return len(sub) == len(mask) and all(a is None or a == b for a, b in zip(mask, sub))


def set_position(mask: Mask, p: int, a: Letter) -> Mask:
    return mask[:p - 1] + (a,) + mask[p:]


def dangerous_positions(mask: Mask, cfg: FoolingConfig) -> FrozenSet[int]:
    """Positions within ``2l-2`` of a fixed position or among the first/last ``l``.

    The distance of position ``p`` from the beginning is ``p - 1``, so the
    boundary windows are ``1..l`` and ``n-l+1..n``.  Fixed positions are
    dangerous (distance 0 from themselves).
    """
    n = len(mask)
    l = cfg.l
    reach = 2 * l - 2
    out = set()
    for p in range(1, n + 1):
        if p <= l or p >= n - l + 1:
            out.add(p)
    for q in range(1, n + 1):
        if mask[q - 1] is not None:
            for p in range(max(1, q - reach), min(n, q + reach) + 1):
                out.add(p)
    return frozenset(out)


def safe_positions(mask: Mask, cfg: FoolingConfig) -> List[int]:
    bad = dangerous_positions(mask, cfg)
    return [p for p in range(1, len(mask) + 1) if p not in bad]


def _fits(mask: Mask, i: int, d: Sequence[Letter]) -> bool:
    for j, a in enumerate(d):
        b = mask[i + j]
        if b is not None and b != a:
            return False
    return True


def _reachable_suffixes(mask: Mask, cfg: FoolingConfig) -> List[bool]:
    n = len(mask)
    ok = [False] * (n + 1)
    ok[n] = True
    for i in range(n - 1, -1, -1):
        ok[i] = any(i + len(d) <= n and ok[i + len(d)] and _fits(mask, i, d) for d in cfg.delta)
    return ok


def delta_compatible(mask: Mask, cfg: FoolingConfig) -> bool:
    """Whether the mask has a completion in Δ*."""
    return _reachable_suffixes(tuple(mask), cfg)[0]


def least_completion(mask: Mask, cfg: FoolingConfig) -> Optional[Tuple[Letter, ...]]:
    """Lexicographically least completion in Δ* (alphabet order), or ``None``."""
    mask = tuple(mask)
    n = len(mask)
    ok = _reachable_suffixes(mask, cfg)
    if not ok[0]:
        return None
    key = cfg.order
    best: List[Optional[Tuple[Letter, ...]]] = [None] * (n + 1)
    best[n] = ()
    for i in range(n - 1, -1, -1):
        if not ok[i]:
            continue
        cands = [tuple(d) + best[i + len(d)] for d in cfg.delta
                 if i + len(d) <= n and ok[i + len(d)] and _fits(mask, i, d)]
        best[i] = min(cands, key=lambda w: [key[a] for a in w])
    return best[0]


def delta_completions(mask: Mask, cfg: FoolingConfig) -> Iterable[Tuple[Letter, ...]]:
    """Every completion of the mask in Δ* (each word once)."""
    mask = tuple(mask)
    n = len(mask)
    ok = _reachable_suffixes(mask, cfg)
    seen: Set[Tuple[Letter, ...]] = set()

    def rec(i: int, prefix: Tuple[Letter, ...]):
        if i == n:
            if prefix not in seen:
                seen.add(prefix)
                yield prefix
            return
        for d in cfg.delta:
            if i + len(d) <= n and ok[i + len(d)] and _fits(mask, i, d):
                yield from rec(i + len(d), prefix + tuple(d))

    if ok[0]:
        yield from rec(0, ())


def is_safe_completion(mask: Mask, word: Sequence[Letter], cfg: FoolingConfig) -> bool:
    """``word`` matches the mask and agrees with some Δ*-completion on every dangerous position."""
    mask = tuple(mask)
    if len(word) != len(mask):
        return False
    if any(a is not None and a != b for a, b in zip(mask, word)):
        return False
    pinned = list(mask)
    for p in dangerous_positions(mask, cfg):
        pinned[p - 1] = word[p - 1]
    return delta_compatible(tuple(pinned), cfg)


def safe_completions(mask: Mask, cfg: FoolingConfig) -> Iterable[Tuple[Letter, ...]]:
    """All safe completions of the mask (exponential; for small lengths)."""
    mask = tuple(mask)
    danger = sorted(p for p in dangerous_positions(mask, cfg) if mask[p - 1] is None)
    safe = safe_positions(mask, cfg)
    heads = {tuple(w[p - 1] for p in danger) for w in delta_completions(mask, cfg)}
    for head in sorted(heads, key=lambda h: [cfg.order[a] for a in h]):
        base = list(mask)
        for p, a in zip(danger, head):
            base[p - 1] = a
        for tail in itertools.product(cfg.alphabet, repeat=len(safe)):
            w = list(base)
            for p, a in zip(safe, tail):
                w[p - 1] = a
            yield tuple(w)


# -- safety of Δ ------------------------------------------------------------------

@dataclass(frozen=True)
class SafetyReport:
    safe: bool
    n_max: int
    method: str
    witness: Optional[Tuple[Mask, int, Letter]] = None
    holds_for_all_lengths: Optional[bool] = None

    def __bool__(self) -> bool:
        return self.safe


def _mask_compat_dfa(cfg: FoolingConfig) -> Dfa:
    """DFA over ``Σ ∪ {⊥}`` accepting the Δ-compatible masks."""
    D = cfg.star_dfa
    letters = cfg.alphabet + (FREE_SYMBOL,)
    start = frozenset([D.initial])
    index = {start: 0}
    order = [start]
    delta = []
    i = 0
    while i < len(order):
        S = order[i]
        row = []
        for a in letters:
            if a == FREE_SYMBOL:
                T = frozenset(D.delta[q][k] for q in S for k in range(len(D.alphabet)))
            else:
                T = frozenset(D.delta[q][D.letter_index[a]] for q in S)
            if T not in index:
                index[T] = len(order)
                order.append(T)
            row.append(index[T])
        delta.append(tuple(row))
        i += 1
    acc = frozenset(i for i, S in enumerate(order) if S & D.accepting)
    return minimize(Dfa(letters, delta, 0, acc))


def _safety_counterexamples(cfg: FoolingConfig) -> Dfa:
    """Masks with one marked free position ``(a,)`` that is safe yet breaks compatibility.

    Letters: ``Σ``, ``⊥`` and one :class:`_Mark` per letter.
    """
    sigma = cfg.alphabet
    marks = tuple(_Mark(a) for a in sigma)
    letters = sigma + (FREE_SYMBOL,) + marks
    C = _mask_compat_dfa(cfg)
    before = C.inverse_morphism({x: ((FREE_SYMBOL,) if isinstance(x, _Mark) else (x,)) for x in letters})
    after = C.complement().inverse_morphism({x: ((x.letter,) if isinstance(x, _Mark) else (x,)) for x in letters})
    l = cfg.l
    reach = 2 * l - 2
    # a marked position p of n is safe iff p > l, p <= n-l and no fixed letter within distance reach
    # hand-built window DFA; "pre" states track (length, trailing free run), "post" states (length, -)
    cap0 = max(l, reach)
    states: Dict[object, int] = {}
    table: List[List[int]] = []
    order: List[object] = []

    def sid(s):
        if s not in states:
            states[s] = len(order)
            order.append(s)
            table.append([])
        return states[s]

    sid(("pre", 0, 0))
    dead = sid("dead")
    i = 0
    while i < len(order):
        s = order[i]
        row = []
        for x in letters:
            if s == "dead":
                row.append(dead)
                continue
            phase = s[0]
            if phase == "pre":
                _, cnt, run = s
                if isinstance(x, _Mark):
                    ok = cnt >= l and run >= min(reach, cnt)
                    row.append(sid(("post", 0, 0)) if ok else dead)
                elif x == FREE_SYMBOL:
                    row.append(sid(("pre", min(cnt + 1, cap0), min(run + 1, reach))))
                else:
                    row.append(sid(("pre", min(cnt + 1, cap0), 0)))
            else:
                _, cnt, _ = s
                if isinstance(x, _Mark):
                    row.append(dead)
                elif x != FREE_SYMBOL and cnt < reach:
                    row.append(dead)
                else:
                    row.append(sid(("post", min(cnt + 1, cap0), 0)))
        table[i] = row
        i += 1
    acc = frozenset(states[s] for s in order if s != "dead" and s[0] == "post" and s[1] >= l)
    window = minimize(Dfa(letters, table, 0, acc))
    return before.intersect(after).intersect(window)


def _shortest_word(D: Dfa) -> Optional[Tuple[Letter, ...]]:
    prev: Dict[int, Tuple[int, int]] = {D.initial: (-1, -1)}
    queue = deque([D.initial])
    while queue:
        q = queue.popleft()
        if q in D.accepting:
            out = []
            while prev[q][0] != -1:
                p, k = prev[q]
                out.append(D.alphabet[k])
                q = p
            return tuple(reversed(out))
        for k, r in enumerate(D.delta[q]):
            if r not in prev:
                prev[r] = (q, k)
                queue.append(r)
    return None


def check_safe_delta(cfg: FoolingConfig, n_max: int = 12) -> SafetyReport:
    """Decide whether fixing any letter at any safe position preserves Δ-compatibility.

    The counterexamples form a regular language over marked masks, so the
    check is exact: it inspects every mask of every length up to ``n_max``
    at once, and ``holds_for_all_lengths`` reports the unbounded answer.
    """
    D = _safety_counterexamples(cfg)
    w = _shortest_word(D)
    if w is None:
        return SafetyReport(True, n_max, "automaton", None, True)
    mark = next(i for i, x in enumerate(w) if isinstance(x, _Mark))
    mask = tuple(None if (x == FREE_SYMBOL or isinstance(x, _Mark)) else x for x in w)
    witness = (mask, mark + 1, w[mark].letter)
    return SafetyReport(len(w) > n_max, n_max, "automaton", witness, False)


def check_safe_delta_bruteforce(cfg: FoolingConfig, n_max: int, limits: Limits = DEFAULT_LIMITS,
                                samples: int = 20000) -> SafetyReport:
    """Direct enumeration of masks; switches to seeded sampling above ``safe_check_cap``."""
    symbols = cfg.alphabet + (None,)
    exhaustive = n_max <= limits.safe_check_cap
    rng = random.Random(limits.seed)
    for n in range(1, n_max + 1):
        if exhaustive:
            masks = itertools.product(symbols, repeat=n)
        else:
            masks = (tuple(rng.choice(symbols) for _ in range(n)) for _ in range(samples))
        for mask in masks:
            if not delta_compatible(mask, cfg):
                continue
            for p in safe_positions(mask, cfg):
                for a in cfg.alphabet:
                    if not delta_compatible(set_position(mask, p, a), cfg):
                        return SafetyReport(False, n_max, "exhaustive" if exhaustive else "sampled",
                                            (mask, p, a))
    return SafetyReport(True, n_max, "exhaustive" if exhaustive else "sampled")


# -- output fixing ---------------------------------------------------------------------

@dataclass(frozen=True)
class FixResult:
    mask: Mask
    output: int
    depth: int
    fixed: int
    bound: int
    cases: Tuple[int, ...] = field(default=(), compare=False)
    pinning: str = "dangerous"

    @property
    def within_bound(self) -> bool:
        return self.fixed <= self.bound


def fixed_count_bound(h: int, l: int, base_fixed: int) -> int:
    return (2 ** h * 6 * l) ** (2 ** h) * max(base_fixed, 1)


PINNING_POLICIES = ("dangerous", "read")


class _Fixer:
    def __init__(self, P: Program, cfg: FoolingConfig, pinning: str = "dangerous"):
        if pinning not in PINNING_POLICIES:
            raise InputError(f"unknown pinning policy {pinning!r}")
        self.P = P
        self.cfg = cfg
        self.pinning = pinning
        self.M = P.monoid
        self.t = P.monoid.table
        self.letter_code = {a: i for i, a in enumerate(P.alphabet)}
        self._compat: Dict[Mask, bool] = {}
        self.cases: List[int] = []

    def compatible(self, mask: Mask) -> bool:
        r = self._compat.get(mask)
        if r is None:
            r = self._compat[mask] = delta_compatible(mask, self.cfg)
        return r

    def candidates(self, mask: Mask, instrs: Sequence[int]):
        """``(instruction index, letter, image)`` where fixing the letter keeps compatibility."""
        for i in instrs:
            p, f = self.P.instructions[i]
            cur = mask[p - 1]
            for a in self.cfg.alphabet:
                if cur is not None and cur != a:
                    continue
                sub = mask if cur == a else set_position(mask, p, a)
                if self.compatible(sub):
                    yield i, a, f[self.letter_code[a]], sub

    def product(self, instrs: Sequence[int], word: Sequence[Letter]) -> int:
        acc = self.M.identity
        for i in instrs:
            p, f = self.P.instructions[i]
            acc = self.t[acc][f[self.letter_code[word[p - 1]]]]
        return acc

    def fix(self, mask: Mask, instrs: List[int], u: int, v: int) -> Tuple[Mask, int, int]:
        """Returns ``(mask', t, depth)`` with ``u·P(w)·v = t`` on safe completions of ``mask'``."""
        M, t = self.M, self.t
        # Case 1: an instruction whose output can leave u's R-class; take the first one
        for i, a, x, sub in self.candidates(mask, instrs):
            if is_r_bad(M, u, x):
                self.cases.append(1)
                j = instrs.index(i)
                m1, t1, d1 = self.fix(sub, instrs[:j], u, M.identity)
                m2, t2, d2 = self.fix(m1, instrs[j + 1:], t[t1][x], v)
                return m2, t2, 1 + max(d1, d2)
        # Case 2
        if is_r_bad(M, u, v):
            self.cases.append(2)
            m1, t1, d1 = self.fix(mask, instrs, u, M.identity)
            return m1, t[t1][v], 1 + d1
        # Case 3: mirror of case 1, so the last such instruction
        found = None
        for cand in self.candidates(mask, instrs):
            if is_l_bad(M, v, cand[2]):
                found = cand
        if found is not None:
            self.cases.append(3)
            i, a, x, sub = found
            j = instrs.index(i)
            m1, t1, d1 = self.fix(sub, instrs[j + 1:], M.identity, v)
            m2, t2, d2 = self.fix(m1, instrs[:j], u, t[x][t1])
            return m2, t2, 1 + max(d1, d2)
        # Case 4
        if is_l_bad(M, v, u):
            self.cases.append(4)
            m1, t1, d1 = self.fix(mask, instrs, M.identity, v)
            return m1, t[u][t1], 1 + d1
        # Case 5: pin every free dangerous position from the least Δ*-completion
        self.cases.append(5)
        w0 = least_completion(mask, self.cfg)
        if w0 is None:
            raise InputError("mask is not Δ-compatible")
        out = list(mask)
        pins = dangerous_positions(mask, self.cfg)
        if self.pinning == "read":
            pins = pins & {self.P.instructions[i][0] for i in instrs}
        for p in pins:
            if out[p - 1] is None:
                out[p - 1] = w0[p - 1]
        return tuple(out), t[t[u][self.product(instrs, w0)]][v], 0


def fix_output(mask: Mask, P: Program, u: Optional[int] = None, v: Optional[int] = None,
               cfg: Optional[FoolingConfig] = None, pinning: str = "dangerous") -> FixResult:
    """Fix few mask positions so that ``u·P(w)·v`` is constant on safe completions.

    ``pinning="dangerous"`` closes each leaf by fixing every free dangerous
    position.  ``pinning="read"`` fixes only the free dangerous positions read
    by the leaf's instructions; every other free position is either unread or
    safe, where any letter keeps the mask compatible, so the leaf's Green
    argument is unchanged while far fewer positions get fixed.
    """
    if cfg is None:
        raise InputError("a FoolingConfig is required")
    mask = tuple(mask)
    if len(mask) != P.n:
        raise InputError("mask length differs from the program range")
    if set(cfg.alphabet) - set(P.alphabet):
        raise InputError("program alphabet must contain the Δ alphabet")
    if not satisfies_variety(P.monoid, VarietyId.DA):
        raise InputError("output fixing needs a monoid in DA")
    if not delta_compatible(mask, cfg):
        raise InputError("mask is not Δ-compatible")
    e = P.monoid.identity
    u = e if u is None else u
    v = e if v is None else v
    fixer = _Fixer(P, cfg, pinning)
    new_mask, t, depth = fixer.fix(mask, list(range(P.length)), u, v)
    return FixResult(new_mask, t, depth, fixed_count(new_mask),
                     fixed_count_bound(depth, cfg.l, fixed_count(mask)), tuple(fixer.cases), pinning)


# -- fooling pairs -----------------------------------------------------------------------

@dataclass(frozen=True)
class FoolingPair:
    mask: Mask
    output: int
    inside: Tuple[Letter, ...]
    outside: Tuple[Letter, ...]
    fix: FixResult
    edits: int

    def to_dict(self, P: Program, target: Dfa) -> dict:
        return {
            "mask": mask_text(self.mask),
            "t": self.output,
            "w0": "".join(map(str, self.inside)),
            "w1": "".join(map(str, self.outside)),
            "outputs": [P.eval(self.inside), P.eval(self.outside)],
            "memberships": [target.accepts(self.inside), target.accepts(self.outside)],
            "fixed": self.fix.fixed,
            "depth": self.fix.depth,
            "edits": self.edits,
            "pinning": self.fix.pinning,
        }


@dataclass(frozen=True)
class InsufficientRange:
    reason: str
    fix: Optional[FixResult] = None

    def __bool__(self) -> bool:
        return False


def _split_by_edits(base, safe, cfg, target, max_edits):
    inside = base if target.accepts(base) else None
    outside = None if inside is not None else base
    used = 0
    for k in range(1, max_edits + 1):
        if inside is not None and outside is not None:
            break
        for ps in itertools.combinations(safe, k):
            for letters in itertools.product(cfg.alphabet, repeat=k):
                if any(base[p - 1] == a for p, a in zip(ps, letters)):
                    continue
                w = list(base)
                for p, a in zip(ps, letters):
                    w[p - 1] = a
                w = tuple(w)
                if target.accepts(w):
                    if inside is None:
                        inside, used = w, k
                elif outside is None:
                    outside, used = w, k
                if inside is not None and outside is not None:
                    return inside, outside, used
    if inside is None or outside is None:
        return None
    return inside, outside, used


def fooling_pair(P: Program, F: Iterable[int], cfg: FoolingConfig, target: Dfa,
                 max_edits: int = 2, pinnings: Sequence[str] = PINNING_POLICIES):
    """Two safe completions with equal output, one in ``target`` and one outside.

    The pinning policies are tried in order; the first that leaves a usable
    safe position wins.  Returns a :class:`FoolingPair`, verified before it
    is returned, or an :class:`InsufficientRange` explaining the failure.
    ``F`` plays no role: equal outputs fool every acceptance set.
    """
    reason, fix = "no pinning policy given", None
    for pinning in pinnings:
        fix = fix_output(free_mask(P.n), P, cfg=cfg, pinning=pinning)
        base = least_completion(fix.mask, cfg)
        safe = safe_positions(fix.mask, cfg)
        if not safe:
            reason = "no safe position left after fixing"
            continue
        found = _split_by_edits(base, safe, cfg, target, max_edits)
        if found is None:
            reason = f"no membership split within {max_edits} safe edits"
            continue
        inside, outside, used = found
        for w in (inside, outside):
            if not is_safe_completion(fix.mask, w, cfg):
                raise AssertionError("constructed word is not a safe completion")
            if P.eval(w) != fix.output:
                raise AssertionError("fixed output violated on a safe completion")
        return FoolingPair(fix.mask, fix.output, inside, outside, fix, used)
    return InsufficientRange(reason, fix)


def mod_language(k: int, letter: Letter = "a", other: Letter = "b") -> Dfa:
    """``b*((ab*)^k)*``: the number of ``a`` is divisible by ``k``."""
    delta = [(((q + 1) % k), q) for q in range(k)]
    return minimize(Dfa((letter, other), delta, 0, frozenset([0])))
