"""Programs over finite monoids.

A program of range ``n`` is a sequence of instructions ``(p, f)`` where the
position ``p`` is 1-based (``1 <= p <= n``) and ``f`` maps input letters to
monoid elements.  On an input word it outputs the product of ``f(w[p])``
over its instructions.  Instruction indices (used by ``subprogram`` and the
compression routines) are 0-based offsets into the instruction list.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

from .algebra import FiniteMonoid, VarietyId, direct_product, u1
from .config import DEFAULT_LIMITS, Limits
from .errors import InputError, ResourceError
from .reglang import (Dfa, Letter, Stamp, Word, compile_min_dfa, context_quotient,
                      is_essentially_v, letter_text, scattered_subword_dfa,
                      stability_index, syntactic_stamp)

Instruction = Tuple[int, Tuple[int, ...]]


@dataclass(frozen=True, eq=False)
class Program:
    """Instructions ``(position, images)``; ``images[i]`` is the element for ``alphabet[i]``."""

    n: int
    alphabet: Tuple[Letter, ...]
    monoid: FiniteMonoid
    instructions: Tuple[Instruction, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "alphabet", tuple(self.alphabet))
        instrs = []
        for p, f in self.instructions:
            if isinstance(f, dict):
                try:
                    f = tuple(f[a] for a in self.alphabet)
                except KeyError as exc:
                    raise InputError(f"instruction map misses letter {exc.args[0]!r}") from None
            f = tuple(int(x) for x in f)
            if not 1 <= p <= self.n:
                raise InputError(f"instruction position {p} outside [1, {self.n}]")
            if len(f) != len(self.alphabet):
                raise InputError("instruction map must cover the alphabet")
            if any(not 0 <= x < self.monoid.size for x in f):
                raise InputError("instruction image out of range")
            instrs.append((int(p), f))
        if self.n < 0:
            raise InputError("range must be nonnegative")
        if len(set(self.alphabet)) != len(self.alphabet):
            raise InputError("duplicate letters in alphabet")
        object.__setattr__(self, "instructions", tuple(instrs))

    def __len__(self) -> int:
        return len(self.instructions)

    @property
    def length(self) -> int:
        return len(self.instructions)

    @cached_property
    def letter_index(self) -> Dict[Letter, int]:
        return {a: i for i, a in enumerate(self.alphabet)}

    def encode(self, word: Word) -> Tuple[int, ...]:
        if len(word) != self.n:
            raise InputError(f"input length {len(word)} differs from range {self.n}")
        try:
            return tuple(self.letter_index[a] for a in word)
        except KeyError as exc:
            raise InputError(f"letter {exc.args[0]!r} not in alphabet") from None

    def eval_encoded(self, codes: Sequence[int]) -> int:
        t = self.monoid.table
        acc = self.monoid.identity
        for p, f in self.instructions:
            acc = t[acc][f[codes[p - 1]]]
        return acc

    def eval(self, word: Word) -> int:
        return self.eval_encoded(self.encode(word))

    __call__ = eval

    def trace(self, word: Word) -> Tuple[int, ...]:
        codes = self.encode(word)
        return tuple(f[codes[p - 1]] for p, f in self.instructions)

    def image_map(self, index: int) -> Dict[Letter, int]:
        return dict(zip(self.alphabet, self.instructions[index][1]))

    def with_instructions(self, instructions: Iterable[Instruction]) -> "Program":
        return Program(self.n, self.alphabet, self.monoid, tuple(instructions))

    def to_dict(self, accept: Optional[Iterable[int]] = None) -> dict:
        out = {
            "range": self.n,
            "alphabet": [letter_text(a) for a in self.alphabet],
            "monoid": self.monoid.to_dict(),
            "instructions": [[p, {letter_text(a): x for a, x in zip(self.alphabet, f)}]
                             for p, f in self.instructions],
        }
        if accept is not None:
            out["accept"] = sorted(accept)
        return out

    @classmethod
    def from_dict(cls, data: dict, monoid: Optional[FiniteMonoid] = None) -> "Program":
        if monoid is None:
            monoid = FiniteMonoid.from_dict(data["monoid"])
        alphabet = tuple(data["alphabet"])
        instrs = tuple((p, tuple(f[a] for a in alphabet)) for p, f in data["instructions"])
        return cls(int(data["range"]), alphabet, monoid, instrs)


def eval_program(P: Program, word: Word) -> int:
    return P.eval(word)


def trace(P: Program, word: Word) -> Tuple[int, ...]:
    return P.trace(word)


def subprogram(P: Program, indices: Iterable[int]) -> Program:
    """Instructions at the given 0-based indices, in original order."""
    idx = sorted(set(indices))
    if idx and (idx[0] < 0 or idx[-1] >= P.length):
        raise InputError("instruction index out of bounds")
    return P.with_instructions(P.instructions[i] for i in idx)


def all_words(alphabet: Sequence[Letter], n: int) -> Iterable[Tuple[Letter, ...]]:
    return itertools.product(alphabet, repeat=n)


@dataclass(frozen=True)
class RecognitionResult:
    ok: bool
    witness: Optional[Tuple[Letter, ...]] = None
    checked: int = 0

    def __bool__(self) -> bool:
        return self.ok


def recognizes_exhaustive(P: Program, F: Iterable[int], reference, n: Optional[int] = None,
                          limits: Limits = DEFAULT_LIMITS) -> RecognitionResult:
    """Compare ``P`` with a reference language on every word of length ``n``.

    ``reference`` is a :class:`Dfa` or a predicate on words.
    """
    n = P.n if n is None else n
    if n != P.n:
        raise InputError(f"program has range {P.n}, asked to check length {n}")
    total = len(P.alphabet) ** n
    if total > limits.enumeration_cap:
        raise ResourceError(f"{total} inputs exceed enumeration_cap={limits.enumeration_cap}")
    member = reference.accepts if isinstance(reference, Dfa) else reference
    F = frozenset(F)
    count = 0
    for codes in itertools.product(range(len(P.alphabet)), repeat=n):
        if count % 4096 == 0:
            limits.checkpoint()
        word = tuple(P.alphabet[c] for c in codes)
        if (P.eval_encoded(codes) in F) != bool(member(word)):
            return RecognitionResult(False, word, count + 1)
        count += 1
    return RecognitionResult(True, None, count)


def from_stamp(phi: Stamp, n: int) -> Program:
    """Read positions 1..n once each through the stamp."""
    return Program(n, phi.alphabet, phi.monoid, tuple((p, phi.images) for p in range(1, n + 1)))


# -- closure transformers -------------------------------------------------------

def product_combine(P1: Program, P2: Program, limits: Limits = DEFAULT_LIMITS) -> Program:
    """Program over ``M×N`` whose output is the pair of outputs.

    The pair ``(m, x)`` has index ``m*|N| + x`` as in :func:`direct_product`.
    """
    if P1.n != P2.n or P1.alphabet != P2.alphabet:
        raise InputError("product needs programs with equal range and alphabet")
    M, N = P1.monoid, P2.monoid
    MN = direct_product(M, N, limits)
    k = N.size
    left = [(p, tuple(x * k + N.identity for x in f)) for p, f in P1.instructions]
    right = [(p, tuple(M.identity * k + x for x in f)) for p, f in P2.instructions]
    return Program(P1.n, P1.alphabet, MN, tuple(left + right))


def pair_index(M: FiniteMonoid, N: FiniteMonoid, m: int, x: int) -> int:
    return m * N.size + x


def inverse_lm(P: Program, images: Dict[Letter, Word]) -> Program:
    """Compose with a length-multiplying morphism ``μ``: ``Q(w) = P(μ(w))``.

    Every ``μ(b)`` has the same length ``k`` and ``P.n`` must be divisible by ``k``.
    """
    if not images:
        raise InputError("morphism needs at least one letter")
    lengths = {len(v) for v in images.values()}
    if len(lengths) != 1:
        raise InputError("images of a length-multiplying morphism must share one length")
    k = lengths.pop()
    if k == 0:
        raise InputError("length-multiplying morphism must be non-erasing")
    if P.n % k:
        raise InputError(f"range {P.n} is not a multiple of {k}")
    gamma = tuple(images)
    idx = P.letter_index
    try:
        coded = {b: tuple(idx[a] for a in images[b]) for b in gamma}
    except KeyError as exc:
        raise InputError(f"image letter {exc.args[0]!r} not in the program alphabet") from None
    instrs = []
    for p, f in P.instructions:
        block, offset = (p - 1) // k + 1, (p - 1) % k
        instrs.append((block, tuple(f[coded[b][offset]] for b in gamma)))
    return Program(P.n // k, gamma, P.monoid, tuple(instrs))


def fix_boundary(P: Program, u: Word, v: Word) -> Program:
    """Program ``Q`` of range ``n-|u|-|v|`` with ``Q(w) = P(u·w·v)``.

    Instructions reading inside ``u`` or ``v`` become constants; each maximal
    run of constants is merged into one constant instruction at position 1.
    """
    m = P.n - len(u) - len(v)
    if m < 0:
        raise InputError("fixed prefix and suffix are longer than the range")
    idx = P.letter_index
    try:
        ucodes = [idx[a] for a in u]
        vcodes = [idx[a] for a in v]
    except KeyError as exc:
        raise InputError(f"letter {exc.args[0]!r} not in alphabet") from None
    t = P.monoid.table
    e = P.monoid.identity
    out: List[Instruction] = []
    pending = e

    def flush():
        nonlocal pending
        if pending != e:
            if m == 0:
                raise InputError("range-0 quotient cannot hold a non-identity constant")
            out.append((1, tuple(pending for _ in P.alphabet)))
        pending = e

    for p, f in P.instructions:
        if p <= len(u):
            pending = t[pending][f[ucodes[p - 1]]]
        elif p > len(u) + m:
            pending = t[pending][f[vcodes[p - len(u) - m - 1]]]
        else:
            flush()
            out.append((p - len(u), f))
    flush()
    return Program(m, P.alphabet, P.monoid, tuple(out))


# -- builders ---------------------------------------------------------------------

ZERO_OF_U1 = 1


def build_position_check(alphabet: Sequence[Letter], n: int, k: int, a: Letter,
                         side: str = "prefix",
                         monoid: Optional[FiniteMonoid] = None,
                         hit: Optional[int] = None) -> Tuple[Program, frozenset]:
    """Recognize ``Σ^{k-1} a Σ*`` (prefix) or ``Σ* a Σ^{k-1}`` (suffix) at length ``n``.

    Over the default monoid U1 = {1, 0}, the instruction maps ``a`` to 0 and
    every other letter to 1; the acceptance set is ``{0}``.
    """
    alphabet = tuple(alphabet)
    if a not in alphabet:
        raise InputError(f"letter {a!r} not in alphabet")
    if k < 1:
        raise InputError("position index k must be at least 1")
    M = u1() if monoid is None else monoid
    z = ZERO_OF_U1 if hit is None else hit
    if monoid is not None and (hit is None or hit == M.identity):
        raise InputError("a custom monoid needs a non-identity 'hit' element")
    if n < k:
        return Program(n, alphabet, M, ()), frozenset([z])
    p = k if side == "prefix" else n - k + 1
    if side not in ("prefix", "suffix"):
        raise InputError("side must be 'prefix' or 'suffix'")
    f = tuple(z if b == a else M.identity for b in alphabet)
    return Program(n, alphabet, M, ((p, f),)), frozenset([z])


def build_middle_scan(mu: Stamp, s: int, n: int) -> Program:
    """Read positions ``s+1 .. n-s`` through ``μ``; empty when ``n <= 2s``."""
    return Program(n, mu.alphabet, mu.monoid,
                   tuple((p, mu.images) for p in range(s + 1, n - s + 1)))


def combine_all(programs: Sequence[Program], limits: Limits = DEFAULT_LIMITS):
    """Fold :func:`product_combine`; returns the program and a decoder index -> component tuple."""
    if not programs:
        raise InputError("nothing to combine")
    size = 1
    for P in programs:
        size *= P.monoid.size
    if size > limits.product_cap:
        raise ResourceError(f"combined monoid of size {size} exceeds product_cap={limits.product_cap}")
    acc = programs[0]
    for P in programs[1:]:
        acc = product_combine(acc, P, limits)
    sizes = [P.monoid.size for P in programs]

    def decode(x: int) -> Tuple[int, ...]:
        comps = []
        for sz in reversed(sizes):
            comps.append(x % sz)
            x //= sz
        return tuple(reversed(comps))

    return acc, decode


@dataclass(frozen=True)
class EssentialProgram:
    program: Program
    accept: frozenset
    boundary_positions: Tuple[int, ...]
    middle: Optional[Stamp]


def build_essentially_v_program(phi: Stamp, F: Iterable[int], n: int, V=None,
                                limits: Limits = DEFAULT_LIMITS) -> EssentialProgram:
    """Recognize ``φ^{-1}(F) ∩ Σ^n`` with letter probes plus a middle scan.

    Boundary positions (the first and last ``s``, or all positions when
    ``n < 2s``) are identified by U1 probes, one per non-first letter.  The
    middle is read through the context quotient of ``φ``; when ``φ`` is
    essentially-V that quotient lies in V and the value of ``φ`` is
    determined by the boundary letters and the middle's image.
    """
    if V is not None and not is_essentially_v(phi, V):
        raise InputError(f"stamp is not essentially-{VarietyId.parse(V).value}")
    F = frozenset(F)
    s = stability_index(phi).s
    alphabet = phi.alphabet
    boundary = list(range(1, n + 1)) if n < 2 * s else \
        list(range(1, s + 1)) + list(range(n - s + 1, n + 1))
    probes: List[Program] = []
    probe_keys: List[Tuple[int, Letter]] = []
    for p in boundary:
        for a in alphabet[1:]:
            probes.append(build_position_check(alphabet, n, p, a, "prefix")[0])
            probe_keys.append((p, a))
    mu = None
    parts = list(probes)
    if n >= 2 * s:
        Q = context_quotient(phi)
        mu = Q.stamp(phi)
        parts.append(build_middle_scan(mu, s, n))
    if not parts:
        # n == 0: a single word, the empty one
        M = u1()
        accept = frozenset([M.identity]) if phi.monoid.identity in F else frozenset()
        return EssentialProgram(Program(0, alphabet, M, ()), accept, (), None)
    program, decode = combine_all(parts, limits)
    reps = mu.shortest_words if mu is not None else None
    accept = set()
    for x in program.monoid.elements:
        comps = decode(x)
        letters = {p: alphabet[0] for p in boundary}
        consistent = True
        for (p, a), c in zip(probe_keys, comps):
            if c == ZERO_OF_U1:
                if letters[p] != alphabet[0]:
                    consistent = False  # two letters claimed at one position
                letters[p] = a
        if not consistent:
            continue
        if mu is None:
            word = tuple(letters[p] for p in boundary)
        else:
            mid = tuple(reps[comps[-1]])
            word = tuple(letters[p] for p in boundary[:s]) + mid + tuple(letters[p] for p in boundary[s:])
        if phi.eval(word) in F:
            accept.add(x)
    return EssentialProgram(program, frozenset(accept), tuple(boundary), mu)


def j_trick_language(alphabet: Sequence[Letter] = ("a", "b", "c")) -> Dfa:
    """Words with ``ca`` as a scattered subword but none of ``cca``, ``caa``, ``cb``."""
    D = scattered_subword_dfa("ca", alphabet)
    for bad in ("cca", "caa", "cb"):
        D = D.intersect(scattered_subword_dfa(bad, alphabet).complement())
    return D.minimize()


def build_j_trick(n: int, limits: Limits = DEFAULT_LIMITS) -> Tuple[Program, frozenset]:
    """Instructions ``(2,φ)(1,φ)(3,φ)(2,φ)…(n,φ)(n-1,φ)`` over the J-monoid of the subword language."""
    if n < 2:
        raise InputError("the J-trick program needs range n >= 2")
    phi, F = syntactic_stamp(j_trick_language(), limits)
    instrs = []
    for i in range(1, n):
        instrs.append((i + 1, phi.images))
        instrs.append((i, phi.images))
    return Program(n, phi.alphabet, phi.monoid, tuple(instrs)), F


# -- P_k ---------------------------------------------------------------------------------

def _check_kset(n: int, k: int, tuples) -> Tuple[Tuple[int, ...], ...]:
    out = []
    for t in tuples:
        t = tuple(int(x) for x in t)
        if len(t) != k or len(set(t)) != k or any(not 1 <= x <= n for x in t):
            raise InputError(f"{t!r} is not an ordered {k}-tuple of distinct positions in [1, {n}]")
        out.append(t)
    return tuple(sorted(set(out)))


def pk_symbolic(n: int, k: int, S) -> List[Tuple[int, Tuple[str, str]]]:
    """``P_k(1, S)`` with outputs in ``Y_k ∪ {ε}``; each map is ``(image of 0, image of 1)``."""
    S = _check_kset(n, k, S)

    def rec(i: int, kk: int, T) -> List[Tuple[int, Tuple[str, str]]]:
        if kk == 0:
            return []
        out = []
        firsts = {t[0] for t in T}
        for j in range(i, n + 1):
            out.append((j, ("", f"⊤{kk}" if j in firsts else f"⊥{kk}")))
            out.extend(rec(j + 1, kk - 1, tuple(t[1:] for t in T if t[0] == j)))
            out.append((j, ("", f"⊥{kk}")))
        return out

    return rec(1, k, S)


def build_pk(n: int, k: int, S, limits: Limits = DEFAULT_LIMITS) -> Tuple[Program, frozenset]:
    """Program over ``M_k`` recognizing the length-``n`` words whose first ``k`` ones sit at a tuple of ``S``."""
    from .sums import mk_stamp

    if k < 1:
        raise InputError("k must be at least 1")
    tuples = S.tuples if hasattr(S, "tuples") else S
    sym = pk_symbolic(n, k, tuples)
    stamp, F = mk_stamp(k, limits)
    M = stamp.monoid

    def image(y: str) -> int:
        return M.identity if y == "" else stamp.image(y)

    instrs = tuple((p, (image(f0), image(f1))) for p, (f0, f1) in sym)
    return Program(n, ("0", "1"), M, instrs), F


# -- commutative normalization -------------------------------------------------------------

def single_scan_normalize(P: Program) -> Program:
    """Merge all instructions per position (valid because the monoid commutes)."""
    from .algebra import satisfies_variety

    if not satisfies_variety(P.monoid, VarietyId.COM):
        raise InputError("single-scan normalization needs a commutative monoid")
    t = P.monoid.table
    e = P.monoid.identity
    merged: Dict[int, List[int]] = {}
    for p, f in P.instructions:
        cur = merged.setdefault(p, [e] * len(P.alphabet))
        for i, x in enumerate(f):
            cur[i] = t[cur[i]][x]
    instrs = tuple((p, tuple(merged[p])) for p in sorted(merged)
                   if any(x != e for x in merged[p]))
    return P.with_instructions(instrs)


def random_program(alphabet: Sequence[Letter], M: FiniteMonoid, n: int, length: int, rng) -> Program:
    """Uniformly random positions and images (test and experiment helper)."""
    instrs = []
    for _ in range(length):
        p = rng.randint(1, n)
        instrs.append((p, tuple(rng.randrange(M.size) for _ in alphabet)))
    return Program(n, tuple(alphabet), M, tuple(instrs))
