"""Command-line front end.

Exit codes: 0 when every check passes, 1 when a verdict fails, 2 on usage,
input or resource errors.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

from . import __version__
from .algebra import (FiniteMonoid, VarietyId, find_da_obstruction, is_isomorphic, satisfies_variety,
                      trivial_monoid, variety_violation)
from .config import DEFAULT_LIMITS, Limits
from .errors import MonoidProgError
from .fooling import FoolingConfig, check_safe_delta, fooling_pair, mod_language
from .programs import (Program, build_j_trick, build_pk, from_stamp, j_trick_language, random_program,
                       recognizes_exhaustive, single_scan_normalize)
from .reglang import (a2_monoid, b2_monoid, compile_min_dfa, essentially_v_certificate, is_essentially_v,
                      is_quasi_v, j_pumping_differs, join_word, regex_to_text, stability_index, stable_stamp,
                      syntactic_stamp, u_monoid)
from .sums import (KSet, compress_program, count_bound, enumerate_program_languages, k_language,
                   mk_certificate, mk_stamp, parse_sum, sum_inverse_morphism, sum_member, sum_quotient,
                   sum_to_text, to_regex)

ALL_VARIETIES = (VarietyId.TRIVIAL, VarietyId.COM, VarietyId.J, VarietyId.DA, VarietyId.A)
NAMED_MONOIDS = {"B2": b2_monoid, "U": u_monoid, "A2": a2_monoid}


@dataclass
class Report:
    """A titled list of checks; each check has a name, a verdict and free-form data."""

    title: str
    items: List[Dict[str, Any]] = field(default_factory=list)

    def add(self, name: str, ok: Optional[bool] = None, **data) -> Dict[str, Any]:
        item = {"name": name, "ok": ok, **data}
        self.items.append(item)
        return item

    @property
    def ok(self) -> bool:
        return all(item["ok"] is not False for item in self.items)

    def to_dict(self) -> dict:
        return {"title": self.title, "ok": self.ok, "items": self.items}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False, default=_json_default)

    @classmethod
    def from_dict(cls, data: dict) -> "Report":
        return cls(data["title"], list(data["items"]))

    def to_text(self) -> str:
        lines = [self.title]
        for item in self.items:
            mark = {True: "PASS", False: "FAIL", None: "INFO"}[item["ok"]]
            rest = ", ".join(f"{k}={_short(v)}" for k, v in item.items() if k not in ("name", "ok"))
            lines.append(f"  [{mark}] {item['name']}" + (f": {rest}" if rest else ""))
        return "\n".join(lines)


def _json_default(x):
    if isinstance(x, (set, frozenset)):
        return sorted(x)
    if isinstance(x, tuple):
        return list(x)
    raise TypeError(f"not serializable: {type(x).__name__}")


def _short(v) -> str:
    text = json.dumps(v, ensure_ascii=False, default=_json_default)
    return text if len(text) <= 160 else text[:157] + "..."


def _load_json(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _write_json(data, out: Optional[str]):
    text = json.dumps(data, indent=2, ensure_ascii=False, default=_json_default)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _limits(args) -> Limits:
    return DEFAULT_LIMITS.with_(seed=args.seed, monoid_cap=args.monoid_cap,
                                enumeration_cap=args.enumeration_cap)


def _varieties(text: str) -> List[VarietyId]:
    return [VarietyId.parse(v) for v in text.split(",") if v.strip()]


# -- analyze ----------------------------------------------------------------------------------

def cmd_analyze(regex: str, varieties: Sequence = ALL_VARIETIES, alphabet: Optional[str] = None,
                limits: Limits = DEFAULT_LIMITS) -> Report:
    """Syntactic stamp, variety memberships, stability and the quasi/essential verdicts."""
    D = compile_min_dfa(regex, tuple(alphabet) if alphabet else None)
    phi, F = syntactic_stamp(D, limits)
    M = phi.monoid
    rep = Report(f"analyze {regex}")
    rep.add("syntactic monoid", None, size=M.size, accept=sorted(F),
            elements=[join_word(w) or "ε" for w in phi.shortest_words])
    for V in varieties:
        viol = variety_violation(M, V)
        rep.add(f"M in {V.value}", None, member=viol is None,
                violation=None if viol is None else {"identity": viol.identity, "x": viol.x, "y": viol.y})
    named = [name for name, build in NAMED_MONOIDS.items() if is_isomorphic(M, build())]
    if named:
        rep.add("isomorphic to", None, monoids=named)
    if not satisfies_variety(M, VarietyId.DA):
        obs = find_da_obstruction(M, limits)
        rep.add("DA obstruction", None, kind=obs.kind, element=obs.element, period=obs.period)
    an = stability_index(phi)
    rep.add("stability", None, s=an.s, stable_monoid_size=an.stable_monoid.size)
    stable = stable_stamp(phi, limits)
    for V in varieties:
        cert = essentially_v_certificate(stable, V)
        rep.add(f"{V.value}", None,
                quasi=is_quasi_v(phi, V),
                essentially=is_essentially_v(phi, V),
                quasi_essentially=cert is None,
                certificate=None if cert is None else cert.to_dict())
    return rep


# -- reports ----------------------------------------------------------------------------------

J_TRICK_REGEX = "(a+b)*ac~"


def cmd_nontameness_j(n_max: int = 8, pumping: int = 3, limits: Limits = DEFAULT_LIMITS) -> Report:
    """Program family recognizing the J-trick language versus its failed QE-J test."""
    rep = Report("non-tameness of J")
    target = compile_min_dfa(J_TRICK_REGEX, ("a", "b", "c"))
    for n in range(2, n_max + 1):
        P, F = build_j_trick(n, limits)
        res = recognizes_exhaustive(P, F, target, n, limits)
        rep.add(f"J-trick program recognizes {J_TRICK_REGEX} at n={n}", res.ok, length=P.length,
                checked=res.checked, witness=None if res.witness is None else join_word(res.witness))
    phi, _ = syntactic_stamp(j_trick_language(), limits)
    rep.add("J-trick monoid in J", satisfies_variety(phi.monoid, VarietyId.J), size=phi.monoid.size)
    psi, _ = syntactic_stamp(target, limits)
    stable = stable_stamp(psi, limits)
    cert = essentially_v_certificate(stable, VarietyId.J)
    rep.add(f"{J_TRICK_REGEX} is not quasi essentially-J", cert is not None,
            s=stability_index(psi).s, certificate=None if cert is None else cert.to_dict())
    words = {}
    for k in range(1, pumping + 1):
        differs = j_pumping_differs(psi, "aa", "bb", "aa", "cc", k)
        words[k] = differs
    rep.add("pumping pair (aa)((bb)(aa))^k(cc) vs (aa)((bb)(aa))^k(bb)(cc) separated",
            all(words.values()), per_k=words)
    return rep


def _fooling_targets():
    return (
        ("c,ab", ("a", "b", "c"), "(c+ab)*", compile_min_dfa("(c+ab)*", ("a", "b", "c"))),
        ("b,ab", ("a", "b"), "(b+ab)*", compile_min_dfa("(b+ab)*", ("a", "b"))),
        ("a,b", ("a", "b"), "b*((ab*)^2)*", mod_language(2)),
    )


def cmd_da_experiments(k_max: int = 2, n: int = 6, fooling_n: int = 40, runs: int = 5,
                       limits: Limits = DEFAULT_LIMITS) -> Report:
    """P_k correctness and length, compression over M_k, fooling runs for the three targets."""
    rng = random.Random(limits.seed)
    rep = Report("DA experiments")
    for k in range(1, k_max + 1):
        S = KSet.random(n, k, rng)
        P, F = build_pk(n, k, S, limits)
        res = recognizes_exhaustive(P, F, k_language(n, S), n, limits)
        bound = 4 * n ** k
        rep.add(f"P_{k} at n={n}", res.ok and P.length <= bound, length=P.length, bound=bound,
                checked=res.checked)
    for k in range(1, k_max + 1):
        stamp, _ = mk_stamp(k, limits)
        M = stamp.monoid
        F = frozenset(x for x in M.elements if rng.random() < 0.5)
        P = random_program(("0", "1"), M, n, n * n, rng)
        res = compress_program(P, F, mk_certificate(k, F, limits), limits)
        bound = 4 * 2 * M.size ** 2 * n ** max(k, 1)
        rep.add(f"compression over M_{k} at n={n}", len(res.indices) <= bound, kept=len(res.indices),
                original=P.length, bound=bound, verified=res.verified, checked=res.checked)
    da_phi, _ = syntactic_stamp(compile_min_dfa("a(a+b)*", ("a", "b")), limits)
    for delta, alphabet, name, target in _fooling_targets():
        cfg = FoolingConfig.parse(delta, alphabet)
        safety = check_safe_delta(cfg)
        rep.add(f"Δ={{{delta}}} is safe", safety.safe, method=safety.method,
                all_lengths=safety.holds_for_all_lengths)
        stamp_program = from_stamp(_extend(da_phi, alphabet), fooling_n)
        programs = [stamp_program] + [random_program(alphabet, da_phi.monoid, fooling_n,
                                                     rng.randint(1, 100), rng) for _ in range(runs)]
        for j, P in enumerate(programs):
            pair = fooling_pair(P, [], cfg, target)
            label = "stamp program" if j == 0 else f"random program {j}"
            if pair:
                rep.add(f"fooling {name}, {label}", True, **pair.to_dict(P, target))
            else:
                rep.add(f"fooling {name}, {label}", False, reason=pair.reason)
    return rep


def _extend(phi, alphabet):
    """Read extra letters as the identity so a stamp runs over a larger alphabet."""
    from .reglang import Stamp

    images = tuple(phi.images[phi.letter_index[a]] if a in phi.letter_index else phi.monoid.identity
                   for a in alphabet)
    return Stamp(tuple(alphabet), phi.monoid, images)


# -- argument handling ------------------------------------------------------------------------

def _emit(rep: Report, args) -> int:
    print(rep.to_json() if args.json else rep.to_text())
    return 0 if rep.ok else 1


def _run_analyze(args) -> int:
    return _emit(cmd_analyze(args.regex, _varieties(args.varieties), args.alphabet, _limits(args)), args)


def _load_program(path: str, monoid_path: Optional[str] = None):
    data = _load_json(path)
    monoid = FiniteMonoid.from_dict(_load_json(monoid_path)) if monoid_path else None
    return Program.from_dict(data, monoid), data.get("accept")


def _run_program(args) -> int:
    limits = _limits(args)
    if args.action == "eval":
        P, accept = _load_program(args.program, args.monoid)
        out = P.eval(tuple(args.word))
        data = {"output": out, "name": P.monoid.names[out]}
        if accept is not None:
            data["accepted"] = out in set(accept)
        _write_json(data, None)
        return 0
    if args.action == "check":
        P, accept = _load_program(args.program, args.monoid)
        if accept is None:
            raise MonoidProgError("program file has no 'accept' set")
        target = compile_min_dfa(args.regex, P.alphabet)
        res = recognizes_exhaustive(P, accept, target, P.n, limits)
        rep = Report(f"program check against {args.regex}")
        rep.add(f"recognition at n={P.n}", res.ok, checked=res.checked,
                witness=None if res.witness is None else join_word(res.witness))
        return _emit(rep, args)
    if args.action == "normalize":
        P, accept = _load_program(args.program, args.monoid)
        _write_json(single_scan_normalize(P).to_dict(accept), args.out)
        return 0
    if args.action == "build":
        if args.family == "jtrick":
            P, F = build_j_trick(args.n, limits)
        else:
            if args.kset:
                S = KSet.from_dict(_load_json(args.kset))
            else:
                S = KSet.random(args.n, args.k, random.Random(args.seed))
            P, F = build_pk(S.n, S.k, S, limits)
        _write_json(P.to_dict(F), args.out)
        return 0
    raise MonoidProgError(f"unknown program action {args.action!r}")


def _run_sum(args) -> int:
    e = parse_sum(args.expr)
    if args.action == "member":
        _write_json({"expr": sum_to_text(e), "word": args.word, "member": sum_member(e, tuple(args.word))}, None)
    elif args.action == "regex":
        _write_json({"expr": sum_to_text(e), "regex": regex_to_text(to_regex(e))}, None)
    elif args.action == "quotient":
        side = "both" if args.left is not None and args.right is not None else (
            "right" if args.right is not None else "left")
        if side == "right":
            parts = sum_quotient(e, tuple(args.right), "right")
        else:
            parts = sum_quotient(e, tuple(args.left or ""), side, tuple(args.right or ""))
        _write_json({"expr": sum_to_text(e), "side": side, "union": [sum_to_text(x) for x in parts]}, None)
    else:
        images = {}
        for item in args.map.split(","):
            b, _, w = item.partition("=")
            images[b.strip()] = tuple(w.strip())
        parts = sum_inverse_morphism(e, images)
        _write_json({"expr": sum_to_text(e), "union": [sum_to_text(x) for x in parts]}, None)
    return 0


def _run_fooling(args) -> int:
    cfg = FoolingConfig.parse(args.delta, tuple(args.alphabet) if args.alphabet else ())
    if args.program:
        P, _ = _load_program(args.program, args.monoid)
    else:
        if not args.monoid:
            raise MonoidProgError("give --program or --monoid (random program)")
        M = FiniteMonoid.from_dict(_load_json(args.monoid))
        P = random_program(cfg.alphabet, M, args.n, args.length, random.Random(args.seed))
    if args.mod:
        target = mod_language(args.mod, *cfg.alphabet[:2])
    else:
        regex = args.target or "(" + "+".join("".join(d) for d in cfg.delta) + ")*"
        target = compile_min_dfa(regex, P.alphabet)
    pair = fooling_pair(P, [], cfg, target)
    if not pair:
        _write_json({"insufficient_range": pair.reason}, args.out)
        return 1
    _write_json(pair.to_dict(P, target), args.out)
    return 0


def _run_count(args) -> int:
    data = {"i": args.i, "n": args.n, "l": args.l, "bound": count_bound(args.i, args.n, args.l)}
    ok = True
    if args.enumerate:
        M = FiniteMonoid.from_dict(_load_json(args.monoid)) if args.monoid else trivial_monoid()
        total = set()
        for length in range(args.l + 1):
            total |= enumerate_program_languages(M, args.n, length, _limits(args))
        data["enumerated"] = len(total)
        ok = len(total) <= count_bound(M.size, args.n, args.l)
        data["within_bound"] = ok
    _write_json(data, None)
    return 0 if ok else 1


def _run_report(args) -> int:
    limits = _limits(args)
    if args.which == "nontameness-j":
        return _emit(cmd_nontameness_j(args.n_max, limits=limits), args)
    return _emit(cmd_da_experiments(args.k_max, args.n, args.fooling_n, args.runs, limits), args)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--monoid-cap", type=int, default=DEFAULT_LIMITS.monoid_cap)
    common.add_argument("--enumeration-cap", type=int, default=DEFAULT_LIMITS.enumeration_cap)

    parser = argparse.ArgumentParser(prog="monoidprog", description="Programs over finite monoids.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", parents=[common], help="analyze a regular expression")
    p.add_argument("regex")
    p.add_argument("--alphabet", help="letters, e.g. abc (default: letters of the regex)")
    p.add_argument("--varieties", default="I,Com,J,DA,A")
    p.set_defaults(func=_run_analyze)

    p = sub.add_parser("program", help="evaluate, check, build or normalize programs")
    psub = p.add_subparsers(dest="action", required=True)
    e = psub.add_parser("eval", parents=[common])
    e.add_argument("--program", required=True)
    e.add_argument("--monoid")
    e.add_argument("word")
    c = psub.add_parser("check", parents=[common])
    c.add_argument("--program", required=True)
    c.add_argument("--monoid")
    c.add_argument("--regex", required=True)
    nm = psub.add_parser("normalize", parents=[common])
    nm.add_argument("--program", required=True)
    nm.add_argument("--monoid")
    nm.add_argument("--out")
    b = psub.add_parser("build", parents=[common])
    b.add_argument("family", choices=("jtrick", "pk"))
    b.add_argument("--n", type=int, required=True)
    b.add_argument("--k", type=int, default=1)
    b.add_argument("--kset", help="k-set JSON file (default: seeded random k-set)")
    b.add_argument("--out")
    p.set_defaults(func=_run_program)

    p = sub.add_parser("sum", help="SUM expression operations")
    ssub = p.add_subparsers(dest="action", required=True)
    m = ssub.add_parser("member", parents=[common])
    m.add_argument("expr")
    m.add_argument("word")
    r = ssub.add_parser("regex", parents=[common])
    r.add_argument("expr")
    q = ssub.add_parser("quotient", parents=[common])
    q.add_argument("expr")
    q.add_argument("--left")
    q.add_argument("--right")
    i = ssub.add_parser("inverse", parents=[common])
    i.add_argument("expr")
    i.add_argument("--map", required=True, help="letter images, e.g. x=ab,y=c")
    p.set_defaults(func=_run_sum)

    p = sub.add_parser("fooling", parents=[common], help="fooling pair for a program over a DA monoid")
    p.add_argument("--delta", required=True, help="comma-separated block words, e.g. c,ab")
    p.add_argument("--alphabet")
    p.add_argument("--program")
    p.add_argument("--monoid")
    p.add_argument("--n", type=int, default=40)
    p.add_argument("--length", type=int, default=50, help="random program length")
    p.add_argument("--target", help="target regex (default: Δ*)")
    p.add_argument("--mod", type=int, help="target: number of the first letter divisible by MOD")
    p.add_argument("--out")
    p.set_defaults(func=_run_fooling)

    p = sub.add_parser("count", parents=[common], help="counting bound for program languages")
    p.add_argument("--i", type=int, required=True, help="monoid size")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--enumerate", action="store_true", help="also enumerate programs (small sizes)")
    p.add_argument("--monoid", help="monoid JSON for --enumerate (default: trivial monoid)")
    p.set_defaults(func=_run_count)

    p = sub.add_parser("report", parents=[common], help="canned experiment reports")
    p.add_argument("which", choices=("nontameness-j", "da"))
    p.add_argument("--n-max", type=int, default=8)
    p.add_argument("--k-max", type=int, default=2)
    p.add_argument("--n", type=int, default=6)
    p.add_argument("--fooling-n", type=int, default=40)
    p.add_argument("--runs", type=int, default=5)
    p.set_defaults(func=_run_report)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (MonoidProgError, ValueError, OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
