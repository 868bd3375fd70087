from __future__ import annotations

import itertools
import random
import re

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from monoidprog.algebra import cyclic_group, direct_product, trivial_monoid, u1
from monoidprog.errors import InputError
from monoidprog.programs import Program, from_stamp, random_program
from monoidprog.reglang import compile_min_dfa, syntactic_stamp_of
from monoidprog.fooling import (FoolingConfig, FoolingPair, InsufficientRange, PINNING_POLICIES,
                                check_safe_delta, check_safe_delta_bruteforce, dangerous_positions,
                                delta_compatible, delta_completions, fix_output, fixed_count,
                                fixed_count_bound, fooling_pair, free_mask, is_safe_completion, is_submask,
                                least_completion, mask_text, mod_language, parse_mask, safe_completions,
                                safe_positions, set_position)

C_AB = FoolingConfig.parse("c,ab")
B_AB = FoolingConfig.parse("b,ab")
A_B = FoolingConfig.parse("a,b")


def star_regex(cfg: FoolingConfig) -> re.Pattern:
    return re.compile("(?:" + "|".join("".join(d) for d in cfg.delta) + ")*")


def brute_completions(mask, cfg):
    pattern = star_regex(cfg)
    free = [i for i, a in enumerate(mask) if a is None]
    for letters in itertools.product(cfg.alphabet, repeat=len(free)):
        w = list(mask)
        for i, a in zip(free, letters):
            w[i] = a
        if pattern.fullmatch("".join(w)):
            yield tuple(w)


def brute_compatible(mask, cfg) -> bool:
    return next(brute_completions(mask, cfg), None) is not None


def brute_safe_completion(mask, w, cfg) -> bool:
    if any(a is not None and a != b for a, b in zip(mask, w)):
        return False
    danger = dangerous_positions(mask, cfg)
    return any(all(w0[p - 1] == w[p - 1] for p in danger) for w0 in brute_completions(mask, cfg))


def masks(cfg, max_len=7):
    return st.lists(st.sampled_from(cfg.alphabet + (None,)), max_size=max_len).map(tuple)


# -- configuration and masks -------------------------------------------------------------

def test_config_parsing_and_validation():
    assert C_AB.delta == (("c",), ("a", "b")) and C_AB.l == 2 and C_AB.alphabet == ("a", "b", "c")
    assert FoolingConfig.parse("ab", "abc").alphabet == ("a", "b", "c")
    for bad in ("", ","):
        with pytest.raises(InputError):
            FoolingConfig.parse(bad)
    with pytest.raises(InputError):
        FoolingConfig.parse("ab", "a")
    with pytest.raises(InputError):
        FoolingConfig((("a",),), ("a", "⊥"))


def test_mask_helpers():
    m = parse_mask("⊥b⊥")
    assert m == (None, "b", None) and mask_text(m) == "⊥b⊥"
    assert parse_mask("_a.") == (None, "a", None)
    assert fixed_count(m) == 1 and fixed_count(free_mask(4)) == 0
    assert set_position(m, 1, "a") == ("a", "b", None)
    assert is_submask(("a", "b", None), m) and not is_submask(m, ("a", "b", None))
    assert not is_submask(("a", "c", None), m)


def test_dangerous_positions_examples():
    assert dangerous_positions(free_mask(10), C_AB) == {1, 2, 9, 10}
    assert dangerous_positions(free_mask(10), A_B) == {1, 10}
    m = set_position(free_mask(12), 6, "c")
    assert dangerous_positions(m, C_AB) == {1, 2, 4, 5, 6, 7, 8, 11, 12}
    assert safe_positions(m, C_AB) == [3, 9, 10]
    assert dangerous_positions((), C_AB) == frozenset()


@settings(max_examples=100, deadline=None)
@given(masks(C_AB, 12))
def test_dangerous_positions_match_definition(mask):
    n = len(mask)
    l = C_AB.l
    fixed = [q for q in range(1, n + 1) if mask[q - 1] is not None]
    expected = {p for p in range(1, n + 1)
                if p - 1 <= l - 1 or n - p <= l - 1 or any(abs(p - q) <= 2 * l - 2 for q in fixed)}
    assert dangerous_positions(mask, C_AB) == expected


# -- compatibility and completions ---------------------------------------------------------

def test_compatibility_examples():
    assert delta_compatible(free_mask(6), C_AB)
    assert delta_compatible(parse_mask("⊥b⊥"), C_AB)
    assert not delta_compatible(parse_mask("b⊥⊥"), C_AB)
    assert least_completion(parse_mask("⊥b⊥"), C_AB) == ("a", "b", "c")
    assert least_completion(parse_mask("b⊥⊥"), C_AB) is None
    assert least_completion(free_mask(3), C_AB) == ("a", "b", "c")
    assert delta_compatible((), C_AB)


@settings(max_examples=150, deadline=None)
@pytest.mark.parametrize("cfg", [C_AB, B_AB, A_B, FoolingConfig.parse("ab")], ids=lambda c: ",".join(map("".join, c.delta)))
@given(data=st.data())
def test_compatibility_matches_brute_force(cfg, data):
    mask = data.draw(masks(cfg))
    expected = sorted(brute_completions(mask, cfg))
    assert delta_compatible(mask, cfg) == bool(expected)
    assert sorted(delta_completions(mask, cfg)) == expected
    if expected:
        assert least_completion(mask, cfg) == min(expected, key=lambda w: [cfg.order[a] for a in w])


@settings(max_examples=80, deadline=None)
@given(masks(C_AB, 7), st.data())
def test_safe_completion_matches_brute_force(mask, data):
    w = tuple(data.draw(st.lists(st.sampled_from(C_AB.alphabet), min_size=len(mask), max_size=len(mask))))
    assert is_safe_completion(mask, w, C_AB) == brute_safe_completion(mask, w, C_AB)
    listed = set(safe_completions(mask, C_AB))
    assert (w in listed) == brute_safe_completion(mask, w, C_AB)


# -- safety of Δ ----------------------------------------------------------------------------

@pytest.mark.parametrize("cfg", [C_AB, B_AB, A_B])
def test_targeted_deltas_are_safe(cfg):
    report = check_safe_delta(cfg, 12)
    assert report.safe and report.holds_for_all_lengths and report.method == "automaton"
    assert check_safe_delta_bruteforce(cfg, 7).safe


def test_ab_is_not_safe():
    cfg = FoolingConfig.parse("ab")
    report = check_safe_delta(cfg, 12)
    assert not report and report.holds_for_all_lengths is False
    mask, p, a = report.witness
    assert delta_compatible(mask, cfg) and p in safe_positions(mask, cfg)
    assert not delta_compatible(set_position(mask, p, a), cfg)
    assert not check_safe_delta_bruteforce(cfg, 7).safe


@pytest.mark.parametrize("delta", ["a,bb", "ab,ba", "abc", "a,bc,cb", "aa,b"])
def test_automaton_check_agrees_with_enumeration(delta):
    cfg = FoolingConfig.parse(delta)
    exact = check_safe_delta(cfg, 6)
    assert exact.safe == check_safe_delta_bruteforce(cfg, 6).safe


def test_bruteforce_switches_to_sampling_above_cap():
    from monoidprog.config import DEFAULT_LIMITS
    report = check_safe_delta_bruteforce(C_AB, 6, DEFAULT_LIMITS.with_(safe_check_cap=3), samples=200)
    assert report.safe and report.method == "sampled"


# -- output fixing -------------------------------------------------------------------------------

def starts_with_a_monoid():
    phi, _ = syntactic_stamp_of("a(a+b)*", "ab")
    return phi.monoid


def check_fix(P, cfg, mask, res, exhaustive=True):
    M = P.monoid
    assert is_submask(res.mask, mask)
    assert delta_compatible(res.mask, cfg)
    assert res.depth <= 2 * M.size ** 2
    assert res.fixed == fixed_count(res.mask) and res.within_bound
    if exhaustive:
        for w in safe_completions(res.mask, cfg):
            assert P.eval(w) == res.output


def test_fix_empty_program():
    M = starts_with_a_monoid()
    P = Program(8, C_AB.alphabet, M, ())
    u, v = 1, 2
    res = fix_output(free_mask(8), P, u, v, C_AB)
    assert res.output == M.table[u][v] and res.depth == 0
    assert set(p for p, a in enumerate(res.mask, 1) if a is not None) <= dangerous_positions(free_mask(8), C_AB)


def test_fix_over_trivial_monoid():
    phi, _ = syntactic_stamp_of("(a+b+c)*", "abc")
    assert phi.monoid.size == 1
    P = from_stamp(phi, 9)
    res = fix_output(free_mask(9), P, cfg=C_AB)
    assert res.output == phi.monoid.identity
    assert {p for p, a in enumerate(res.mask, 1) if a is not None} <= {1, 2, 8, 9}


def test_fix_rejects_bad_inputs():
    P = Program(4, ("a", "b"), cyclic_group(2), ())
    with pytest.raises(InputError):
        fix_output(free_mask(4), P, cfg=A_B)
    Q = Program(4, ("a", "b", "c"), u1(), ())
    with pytest.raises(InputError):
        fix_output(parse_mask("b⊥⊥⊥"), Q, cfg=C_AB)
    with pytest.raises(InputError):
        fix_output(free_mask(3), Q, cfg=C_AB)
    with pytest.raises(InputError):
        fix_output(free_mask(4), Q)
    with pytest.raises(InputError):
        fix_output(free_mask(4), Q, cfg=C_AB, pinning="nowhere")


@settings(max_examples=40, deadline=None)
@given(st.integers(4, 12), st.integers(0, 14), st.sampled_from(PINNING_POLICIES),
       st.randoms(use_true_random=False))
def test_fix_output_invariants_exhaustive(n, length, pinning, rnd):
    M = rnd.choice([starts_with_a_monoid(), u1(), direct_product(u1(), u1())])
    P = random_program(C_AB.alphabet, M, n, length, rnd)
    mask = free_mask(n)
    if rnd.random() < 0.5:
        mask = least_completion(free_mask(n), C_AB)[:2] + (None,) * (n - 2)
    res = fix_output(mask, P, cfg=C_AB, pinning=pinning)
    check_fix(P, C_AB, mask, res)


@pytest.mark.parametrize("pinning", PINNING_POLICIES)
def test_fix_output_at_forty(pinning):
    M = starts_with_a_monoid()
    rng = random.Random(11)
    for _ in range(5):
        P = random_program(C_AB.alphabet, M, 40, 20, rng)
        u, v = rng.choice(M.elements), rng.choice(M.elements)
        res = fix_output(free_mask(40), P, u, v, C_AB, pinning)
        check_fix(P, C_AB, free_mask(40), res, exhaustive=False)
        base = least_completion(res.mask, C_AB)
        safe = safe_positions(res.mask, C_AB)
        for _ in range(1000):
            w = list(base)
            for p in safe:
                w[p - 1] = rng.choice(C_AB.alphabet)
            assert is_safe_completion(res.mask, w, C_AB)
            assert M.table[M.table[u][P.eval(w)]][v] == res.output


def test_read_pinning_fixes_no_more_than_literal():
    rng = random.Random(2)
    M = starts_with_a_monoid()
    for _ in range(20):
        P = random_program(C_AB.alphabet, M, 30, 15, rng)
        lit = fix_output(free_mask(30), P, cfg=C_AB, pinning="dangerous")
        read = fix_output(free_mask(30), P, cfg=C_AB, pinning="read")
        assert read.fixed <= lit.fixed


def test_bound_formula():
    assert fixed_count_bound(0, 2, 0) == 12
    assert fixed_count_bound(1, 2, 3) == 24 ** 2 * 3


# -- fooling pairs -------------------------------------------------------------------------------

def check_pair(P, pair, cfg, target):
    assert isinstance(pair, FoolingPair)
    assert P.eval(pair.inside) == P.eval(pair.outside) == pair.output
    assert target.accepts(pair.inside) and not target.accepts(pair.outside)
    assert is_safe_completion(pair.mask, pair.inside, cfg)
    assert is_safe_completion(pair.mask, pair.outside, cfg)
    d = pair.to_dict(P, target)
    assert d["memberships"] == [True, False] and d["outputs"][0] == d["outputs"][1] == d["t"]
    assert len(d["w0"]) == len(d["w1"]) == P.n


def test_pair_over_trivial_monoid():
    P = random_program(C_AB.alphabet, trivial_monoid(), 10, 12, random.Random(0))
    target = compile_min_dfa("(c+ab)*", "abc")
    pair = fooling_pair(P, [0], C_AB, target)
    check_pair(P, pair, C_AB, target)
    assert pair.edits == 1


def test_pair_for_da_stamp_attempting_target():
    phi, F = syntactic_stamp_of("(a+b+c)*a(a+b+c)*b(a+b+c)*", "abc")
    P = from_stamp(phi, 40)
    target = compile_min_dfa("(c+ab)*", "abc")
    pair = fooling_pair(P, F, C_AB, target)
    check_pair(P, pair, C_AB, target)


def test_pair_for_b_ab():
    phi, F = syntactic_stamp_of("b*a(a+b)*", "ab")
    P = from_stamp(phi, 30)
    target = compile_min_dfa("(b+ab)*", "ab")
    check_pair(P, fooling_pair(P, F, B_AB, target), B_AB, target)


def test_mod_two_pair():
    target = mod_language(2)
    assert target.accepts("abab") and not target.accepts("ab") and target.accepts("")
    rng = random.Random(4)
    M = starts_with_a_monoid()
    for _ in range(5):
        P = random_program(A_B.alphabet, M, 20, 15, rng)
        pair = fooling_pair(P, [0], A_B, target)
        check_pair(P, pair, A_B, target)
        assert pair.edits == 1
        diff = [i for i, (x, y) in enumerate(zip(pair.inside, pair.outside)) if x != y]
        assert len(diff) == 1


def test_insufficient_range_is_reported():
    P = random_program(C_AB.alphabet, starts_with_a_monoid(), 4, 6, random.Random(1))
    result = fooling_pair(P, [0], C_AB, compile_min_dfa("(c+ab)*", "abc"))
    assert isinstance(result, InsufficientRange) and not result
    assert "safe position" in result.reason
    empty = fooling_pair(P, [0], C_AB, compile_min_dfa("(c+ab)*", "abc"), pinnings=())
    assert isinstance(empty, InsufficientRange)


def test_single_edit_suffices_on_random_programs():
    rng = random.Random(8)
    M = starts_with_a_monoid()
    target = compile_min_dfa("(c+ab)*", "abc")
    edits = set()
    for _ in range(30):
        P = random_program(C_AB.alphabet, M, 40, 20, rng)
        pair = fooling_pair(P, [0], C_AB, target)
        check_pair(P, pair, C_AB, target)
        edits.add(pair.edits)
    assert edits == {1}
