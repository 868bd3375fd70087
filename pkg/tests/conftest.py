from __future__ import annotations

import itertools
from functools import lru_cache

import pytest

from monoidprog.algebra import (FiniteMonoid, cyclic_group, direct_product, left_zero_monoid,
                                trivial_monoid, u1)
from monoidprog.programs import j_trick_language
from monoidprog.reglang import a2_monoid, b2_monoid, context_quotient, syntactic_stamp, syntactic_stamp_of, u_monoid
from monoidprog.sums import mk_stamp

ZOO_REGEXES = (
    "a(a+b)*",
    "(a+b)*ac~",
    "a(a+b)*b(a+b)*a",
    "(c+ab)*",
    "(b+ab)*",
    "(a+b)*ab(a+b)*",
    "(aa)*",
    "((a+b)(a+b))*",
    "a*b*",
    "(ab)*",
    "b*a(a+b)*",
    "(a+b)*a(a+b)*b(a+b)*",
)

# acceptance criterion number -> (title, verdict); filled by test_acceptance.py
ACCEPTANCE_RESULTS: dict = {}


def brute_mul(M: FiniteMonoid, *xs: int) -> int:
    acc = M.identity
    for x in xs:
        acc = M.table[acc][x]
    return acc


def brute_power(M: FiniteMonoid, x: int, k: int) -> int:
    acc = M.identity
    for _ in range(k):
        acc = M.table[acc][x]
    return acc


def brute_omega(M: FiniteMonoid) -> int:
    """Least t >= 1 such that x^t is idempotent for every x."""
    t = 1
    while True:
        if all(brute_mul(M, brute_power(M, x, t), brute_power(M, x, t)) == brute_power(M, x, t)
               for x in range(M.size)):
            return t
        t += 1


def brute_identity_holds(M: FiniteMonoid, name: str) -> bool:
    """Evaluate a variety's defining identities with hand-written formulas."""
    w = brute_omega(M)
    E = range(M.size)
    m = lambda *xs: brute_mul(M, *xs)
    p = lambda x: brute_power(M, x, w)
    if name == "I":
        return all(x == M.identity for x in E)
    if name == "Com":
        return all(m(x, y) == m(y, x) for x in E for y in E)
    if name == "J":
        return all(p(m(x, y)) == m(p(m(x, y)), x) and p(m(x, y)) == m(y, p(m(x, y))) for x in E for y in E)
    if name == "DA":
        return all(p(m(x, y)) == m(p(m(x, y)), x, p(m(x, y))) for x in E for y in E)
    if name == "A":
        return all(p(x) == m(p(x), x) for x in E)
    raise ValueError(name)


def brute_isomorphic(M: FiniteMonoid, N: FiniteMonoid) -> bool:
    if M.size != N.size:
        return False
    for perm in itertools.permutations(range(N.size)):
        if perm[M.identity] != N.identity:
            continue
        if all(perm[M.table[x][y]] == N.table[perm[x]][perm[y]] for x in range(M.size) for y in range(M.size)):
            return True
    return False


@lru_cache(maxsize=None)
def monoid_zoo():
    """Every monoid the library constructs, keyed by a readable name."""
    zoo = {
        "trivial": trivial_monoid(),
        "U1": u1(),
        "B2": b2_monoid(),
        "U": u_monoid(),
        "A2^1": a2_monoid(),
        "M_1": mk_stamp(1)[0].monoid,
        "M_2": mk_stamp(2)[0].monoid,
        "J-trick": syntactic_stamp(j_trick_language())[0].monoid,
    }
    for n in range(2, 6):
        zoo[f"Z{n}"] = cyclic_group(n)
    for k in range(1, 4):
        zoo[f"LZ{k}"] = left_zero_monoid(k)
    for r in ZOO_REGEXES:
        phi, _ = syntactic_stamp_of(r)
        zoo[f"syn {r}"] = phi.monoid
        zoo[f"quotient {r}"] = context_quotient(phi).monoid
    zoo["U1xZ2"] = direct_product(u1(), cyclic_group(2))
    zoo["LZ2xU1"] = direct_product(left_zero_monoid(2), u1())
    return zoo


@pytest.fixture(scope="session")
def zoo():
    return monoid_zoo()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        title, verdict, detail = ACCEPTANCE_RESULTS[number]
        line = f"criterion {number:2d}: {'PASS' if verdict else 'FAIL'}  {title}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)
