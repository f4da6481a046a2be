"""Command-line front end.

Every report starts with ``# pa-lab v1``.  Exit status is 0 when a question was
decided, 2 when the answer is UNKNOWN (or the configuration is unsupported) and
1 on usage or input errors.  ``--verify`` re-checks the printed certificate
exactly and appends a ``verify:`` line.
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__
from .ambiguity import Tag, classify_pa
from .core import ContractError, Pa, PaInputError, as_fraction, constant_pa, evaluate, trim
from .deciders import (HALF, Verdict, _instance_for, build_A_prime, compute_N,
                       containment_fin_vs_unamb, containment_unamb_vs_fin, gap_emptiness)
from .formats import parse_pa, parse_word, render_pa, render_word
from .forge import MachineDoesNotHalt, compile as compile_machine, encode_execution, parse_machine
from .ipexp import Budget, check_unsat_tree, eval_expsum, fmt_rat, parse_instance, solve
from .oracle import (brute_force_containment, brute_force_ipexp, count_accepting_runs, value_by_runs,
                     words_upto)
from .structure import translate

HEADER = "# pa-lab v1"
EXIT_DECIDED, EXIT_ERROR, EXIT_UNKNOWN = 0, 1, 2


class Report:
    def __init__(self, command: str):
        self.lines = [HEADER, f"command: {command}"]
        self.verified = None

    def add(self, key: str, value) -> None:
        self.lines.append(f"{key}: {_fmt(value)}")

    def block(self, title: str, items: dict) -> None:
        self.lines.append(f"{title}:")
        for k, v in items.items():
            self.lines.append(f"  {k}: {_fmt(v)}")

    def text(self) -> str:
        return "\n".join(self.lines) + "\n"


def _fmt(value) -> str:
    if isinstance(value, Fraction):
        return fmt_rat(value)
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, tuple) and all(isinstance(v, int) for v in value):
        return "(" + ", ".join(map(str, value)) + ")"
    return str(value)


def _load_pa(path: str) -> Pa:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise PaInputError(f"{path}: {exc.strerror}") from None
    try:
        return parse_pa(text)
    except PaInputError as exc:
        raise PaInputError(f"{path}: {exc}") from None


def _load_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise PaInputError(f"{path}: {exc.strerror}") from None


def _status(answer: str) -> int:
    return EXIT_UNKNOWN if answer == "UNKNOWN" else EXIT_DECIDED


# -- certificate re-checks ------------------------------------------------------------

def _check_separation(a: Pa, b: Pa, word) -> bool:
    """The witness separates, checked by propagation and by run enumeration."""
    return evaluate(a, word) > evaluate(b, word) and value_by_runs(a, word) > value_by_runs(b, word)


def _check_fin_vs_unamb_yes(a: Pa, b: Pa, count: int) -> bool:
    tuples = translate(a, b)
    if len(tuples) != count:
        return False
    for t in tuples:
        if t.k == 0:
            continue
        if t.l == 0:
            return False
        zero = (0,) * t.n
        (s,) = t.s
        if any(qij > sj for qi in t.q for qij, sj in zip(qi, s)) or t.holds_at(zero):
            return False
    return True


def _check_unamb_vs_fin_yes(a: Pa, b: Pa, cert: dict) -> bool:
    tuples = translate(a, b)
    if len(tuples) != cert["tuples"]:
        return False
    trees = dict(cert["unsat"])
    budget = Budget(**cert.get("budget", {})) if "budget" in cert else Budget()
    for idx, t in enumerate(tuples):
        if t.k == 0:
            continue
        if t.l == 0 or idx not in trees:
            return False
        if not check_unsat_tree(_instance_for(t).instance, trees[idx], budget):
            return False
    return True


# -- subcommands ------------------------------------------------------------------------

def cmd_classify(args) -> tuple:
    pa = _load_pa(args.pa)
    rep = Report("classify")
    rep.add("automaton", f"{args.pa} (states={len(pa.states)})")
    cls = classify_pa(pa)
    rep.add("result", cls)
    if args.verify:
        # an unambiguous verdict is re-checked against the run counts of short words
        ok = True
        if cls.is_finite:
            bound = 1 if cls.tag is Tag.UNAMBIGUOUS else cls.finite_degree
            ok = all(count_accepting_runs(pa, w) <= bound for w in words_upto(pa.alphabet, 5))
        rep.verified = ok
    return rep, EXIT_DECIDED


def cmd_eval(args) -> tuple:
    pa = _load_pa(args.pa)
    word = parse_word(args.word, pa.alphabet)
    rep = Report("eval")
    rep.add("word", render_word(word))
    value = evaluate(pa, word)
    rep.add("result", value)
    if args.verify:
        rep.verified = value_by_runs(pa, word) == value
    return rep, EXIT_DECIDED


def _verdict_lines(rep: Report, verdict: Verdict, a: Pa, b: Pa, yes_text: str, rhs_name: str):
    if verdict.answer == "YES":
        rep.add("result", f"YES ({yes_text})")
    elif verdict.answer == "NO":
        w = verdict.witness
        rep.add("result", f"NO ([[A]](w) = {fmt_rat(evaluate(a, w))} > {fmt_rat(evaluate(b, w))} = {rhs_name})")
    else:
        rep.add("result", "UNKNOWN")
    cert = {"kind": {"YES": "translation", "NO": "witness", "UNKNOWN": "budget"}[verdict.answer]}
    if verdict.answer == "NO":
        w = verdict.witness
        cert.update(word=render_word(w), length=len(w), value_A=evaluate(a, w), value_B=evaluate(b, w),
                    tuple=verdict.certificate.get("tuple"), x=verdict.certificate.get("x"))
    elif verdict.answer == "YES":
        cert["tuples"] = verdict.certificate.get("tuples")
        if "unsat" in verdict.certificate:
            cert["unsat_trees"] = len(verdict.certificate["unsat"])
    else:
        cert.update({k: v for k, v in verdict.certificate.items() if k != "budget"})
    rep.block("certificate", cert)


def _decide_containment(a: Pa, b: Pa, args):
    ca, cb = classify_pa(a), classify_pa(b)
    if ca.is_finite and cb.tag is Tag.UNAMBIGUOUS:
        return "fin-vs-unamb", containment_fin_vs_unamb(a, b)
    if ca.tag is Tag.UNAMBIGUOUS and cb.is_finite:
        budget = Budget(radius=args.radius) if getattr(args, "radius", None) else None
        return "unamb-vs-fin", containment_unamb_vs_fin(a, b, budget=budget)
    return None, (ca, cb)


def _verify_containment(mode: str, a: Pa, b: Pa, verdict: Verdict) -> bool:
    if verdict.answer == "NO":
        return _check_separation(a, b, verdict.witness)
    if verdict.answer == "YES":
        if mode == "fin-vs-unamb":
            return _check_fin_vs_unamb_yes(a, b, verdict.certificate["tuples"])
        return _check_unamb_vs_fin_yes(a, b, verdict.certificate)
    return True


def cmd_contain(args) -> tuple:
    a, b = _load_pa(args.a), _load_pa(args.b)
    if set(a.alphabet) != set(b.alphabet):
        raise PaInputError("the two automata use different alphabets")
    rep = Report("contain")
    mode, verdict = _decide_containment(a, b, args)
    if mode is None:
        ca, cb = verdict
        rep.add("classes", f"A {ca}, B {cb}")
        rep.add("result", "configuration undecidable/unsupported")
        return rep, EXIT_UNKNOWN
    rep.add("configuration", mode)
    _verdict_lines(rep, verdict, a, b, "[[A]] ≤ [[B]]", "[[B]](w)")
    if args.verify:
        rep.verified = _verify_containment(mode, a, b, verdict)
    return rep, _status(verdict.answer)


def cmd_empty(args) -> tuple:
    a = _load_pa(args.pa)
    rep = Report("empty")
    cls = classify_pa(a)
    if not cls.is_finite:
        rep.add("classes", f"A {cls}")
        rep.add("result", "configuration undecidable/unsupported (use gap-empty)")
        return rep, EXIT_UNKNOWN
    half = constant_pa(a.alphabet, HALF)
    verdict = containment_fin_vs_unamb(a, half)
    _verdict_lines(rep, verdict, a, half, "[[A]] ≤ 1/2", "1/2")
    if args.verify:
        rep.verified = _verify_containment("fin-vs-unamb", a, half, verdict)
    return rep, _status(verdict.answer)


def cmd_gap_empty(args) -> tuple:
    a = _load_pa(args.pa)
    eps = as_fraction(args.epsilon)
    rep = Report("gap-empty")
    verdict = gap_emptiness(a, eps, override_N=args.override_N, max_layers=args.max_layers)
    cert = verdict.certificate
    rep.add("epsilon", eps)
    rep.add("N", f"{cert['N']} ({'certified' if cert['certified'] else 'override, not certified'})")
    if verdict.answer == "YES":
        rep.add("result", "YES ([[A]] ≤ 1/2)")
    elif verdict.answer == "NO":
        rep.add("result", f"NO ([[A]](w) = {fmt_rat(cert['value'])} > 1/2)")
    else:
        rep.add("result", "UNKNOWN")
    block = {"kind": {"YES": "truncation", "NO": "witness", "UNKNOWN": "budget"}[verdict.answer]}
    if cert.get("certified"):
        block.update(alpha=cert["alpha"], tail_bound=cert["tail_bound"])
    if verdict.answer == "NO":
        block.update(word=render_word(verdict.witness), value=cert["value"])
    elif verdict.answer == "UNKNOWN":
        block["reason"] = cert.get("reason", cert.get("inner", {}).get("reason", ""))
    rep.block("certificate", block)
    if args.verify:
        if verdict.answer == "NO":
            rep.verified = evaluate(a, verdict.witness) > HALF and value_by_runs(a, verdict.witness) > HALF
        elif verdict.answer == "YES":
            ok = True
            if cert.get("certified"):
                params = compute_N(a, eps)
                ok = params.N == cert["N"] and params.tail_upper(params.N + 1) <= eps
            prime = build_A_prime(trim(a), cert["N"])
            rep.verified = ok and _check_fin_vs_unamb_yes(prime, constant_pa(a.alphabet, HALF),
                                                          cert["inner"]["tuples"])
        else:
            rep.verified = True
    return rep, _status(verdict.answer)


def cmd_forge(args) -> tuple:
    machine = parse_machine(_load_text(args.tcm))
    out = compile_machine(machine)
    rep = Report("forge")
    rep.add("machine", f"{args.tcm} (states={len(machine.states)})")
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    files = {"A.pa": out.A, "B.pa": out.B, "A-prime.pa": out.Aprime, "B-prime.pa": out.Bprime}
    for name, pa in files.items():
        (outdir / name).write_text(render_pa(pa), encoding="utf-8")
        rep.add(f"wrote {outdir / name}", f"states={len(pa.states)} class={classify_pa(pa)}")
    try:
        word = encode_execution(machine, args.steps)
    except MachineDoesNotHalt as exc:
        rep.add("halting word", f"none ({exc})")
        word = None
    else:
        rep.add("halting word", f"{render_word(word)} (length {len(word)})")
        rep.add("values on halting word", f"A = {fmt_rat(evaluate(out.A, word))}, B = {fmt_rat(evaluate(out.B, word))}")
    if args.verify:
        ok = all(parse_pa(render_pa(pa)) == pa for pa in files.values())
        if word is not None:
            ok = ok and evaluate(out.A, word) == evaluate(out.B, word)
            ok = ok and evaluate(out.Aprime, word) < evaluate(out.Bprime, word)
        rep.verified = ok
    return rep, EXIT_DECIDED


def cmd_ipexp(args) -> tuple:
    inst = parse_instance(_load_text(args.file))
    budget = Budget(radius=args.radius)
    res = solve(inst, budget)
    rep = Report("ipexp solve")
    rep.add("instance", f"{args.file} (n={inst.n}, terms={inst.ell}, rows={inst.m})")
    rep.add("result", res)
    cert = {"kind": {"SAT": "witness", "UNSAT": "slicing tree", "UNKNOWN": "budget"}[res.status]}
    if res.status == "SAT":
        cert.update(x=res.witness, f_value=eval_expsum(inst.f, res.witness))
    elif res.status == "UNSAT":
        cert["tree_nodes"] = _tree_size(res.certificate["tree"])
    cert["radius"] = budget.radius
    rep.block("certificate", cert)
    if args.verify:
        if res.status == "SAT":
            rep.verified = inst.holds(res.witness)
        elif res.status == "UNSAT":
            rep.verified = check_unsat_tree(inst, res.certificate["tree"], budget)
        else:
            rep.verified = True
    return rep, _status("UNKNOWN" if res.status == "UNKNOWN" else "YES")


def _tree_size(tree) -> int:
    if not isinstance(tree, dict) or "slices" not in tree:
        return 1
    return 1 + sum(_tree_size(sub) for _, sub in tree["slices"])


def cmd_brute_contain(args) -> tuple:
    a, b = _load_pa(args.a), _load_pa(args.b)
    return _brute_report("brute contain", a, b, args.length)


def cmd_brute_empty(args) -> tuple:
    a = _load_pa(args.pa)
    return _brute_report("brute empty", a, constant_pa(a.alphabet, HALF), args.length)


def _brute_report(name, a, b, length) -> tuple:
    if set(a.alphabet) != set(b.alphabet):
        raise PaInputError("the two automata use different alphabets")
    sweep = brute_force_containment(a, b, length)
    rep = Report(name)
    rep.add("bound", f"|w| <= {length}")
    rep.add("violations", len(sweep.witnesses))
    if sweep.found:
        rep.add("first violation", render_word(sweep.witnesses[0]))
    rep.add("largest difference", sweep.extremal)
    return rep, EXIT_DECIDED


def cmd_brute_ipexp(args) -> tuple:
    inst = parse_instance(_load_text(args.file))
    sweep = brute_force_ipexp(inst, args.radius)
    rep = Report("brute ipexp")
    rep.add("bound", f"max-norm <= {args.radius}")
    rep.add("solutions", len(sweep.witnesses))
    if sweep.found:
        rep.add("first solution", sweep.witnesses[0])
    rep.add("smallest f value", sweep.extremal)
    return rep, EXIT_DECIDED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="palab", description="Decision procedures for probabilistic automata.")
    parser.add_argument("--version", action="version", version=f"palab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        p.add_argument("--verify", action="store_true", help="re-check the certificate exactly")
        return p

    p = add("classify", cmd_classify, "ambiguity class of an automaton")
    p.add_argument("pa")
    p = add("eval", cmd_eval, "exact acceptance probability of a word")
    p.add_argument("pa")
    p.add_argument("word", help="letters separated by spaces or commas; '' or ε for the empty word")
    p = add("empty", cmd_empty, "decide whether every word has value at most 1/2")
    p.add_argument("pa")
    p = add("gap-empty", cmd_gap_empty, "gap emptiness for polynomially ambiguous automata")
    p.add_argument("pa")
    p.add_argument("--epsilon", required=True)
    p.add_argument("--override-N", dest="override_N", type=int, default=None,
                   help="use this cutoff instead of the certified one (result not certified)")
    p.add_argument("--max-layers", dest="max_layers", type=int, default=64,
                   help="report UNKNOWN when the certified cutoff exceeds this")
    p = add("contain", cmd_contain, "decide [[A]] <= [[B]]")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--radius", type=int, default=None, help="enumeration radius for the integer solver")
    p = add("forge", cmd_forge, "compile a two-counter machine into the four automata")
    p.add_argument("tcm")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--steps", type=int, default=10_000, help="simulation limit for the halting word")

    ip = sub.add_parser("ipexp", help="integer programming with exponentiation")
    ipsub = ip.add_subparsers(dest="ipexp_command", required=True)
    p = ipsub.add_parser("solve", help="decide an instance file")
    p.set_defaults(func=cmd_ipexp)
    p.add_argument("file")
    p.add_argument("--radius", type=int, default=10)
    p.add_argument("--verify", action="store_true")

    br = sub.add_parser("brute", help="bounded exhaustive oracles")
    brsub = br.add_subparsers(dest="brute_command", required=True)
    p = brsub.add_parser("contain", help="check [[A]] <= [[B]] on all short words")
    p.set_defaults(func=cmd_brute_contain)
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--length", type=int, default=7)
    p = brsub.add_parser("empty", help="check [[A]] <= 1/2 on all short words")
    p.set_defaults(func=cmd_brute_empty)
    p.add_argument("pa")
    p.add_argument("--length", type=int, default=7)
    p = brsub.add_parser("ipexp", help="all solutions in a box")
    p.set_defaults(func=cmd_brute_ipexp)
    p.add_argument("file")
    p.add_argument("--radius", type=int, default=6)
    for p in (brsub.choices["contain"], brsub.choices["empty"], brsub.choices["ipexp"]):
        p.set_defaults(verify=False)
    return parser


def run_command(argv) -> tuple:
    """Run one command; returns ``(exit code, report text)``."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0), ""
    try:
        rep, code = args.func(args)
    except (PaInputError, ContractError) as exc:
        return EXIT_ERROR, f"{HEADER}\nerror: {exc}\n"
    if rep.verified is not None:
        rep.add("verify", "ok" if rep.verified else "FAILED")
        if not rep.verified:
            code = EXIT_ERROR
    return code, rep.text()


def main(argv=None) -> int:
    code, text = run_command(sys.argv[1:] if argv is None else argv)
    if text:
        out = sys.stdout if code != EXIT_ERROR or text.count("\n") > 2 else sys.stderr
        out.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
