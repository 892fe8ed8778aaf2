"""Batch command line for the workbench.

Every command prints stable text lines.  ``--format kv`` instead prints one
``key=value`` record per line: keys are lowercase and dotted, the value is
the rest of the line, and repeated items carry a numeric index
(``tag.0=...``).  Exit status: 0 success, 1 domain error (invalid key,
infeasible class, failed check), 2 usage error or unreadable input.
"""

from __future__ import annotations

import argparse
import re
import sys
from pathlib import Path

import numpy as np

from . import attacks, boolfn, glc, keyspace, lincrypt
from .anf import format_poly
from .cipher import (
    NAMED_KEYS, KeyFormatError, LongTermKey, ShortTermKey, decrypt, encrypt, iv_from_hex, iv_hex,
    keystream, random_iv,
)

DEFAULT_SEED = 0


class UsageError(Exception):
    pass


class DomainError(Exception):
    pass


class Report:
    """Collects text lines and kv pairs for one command run."""

    def __init__(self):
        self.text: list[str] = []
        self.kv: list[tuple[str, object]] = []
        self.ok = True

    def line(self, text: str = "") -> None:
        self.text.append(text)

    def put(self, key: str, value) -> None:
        self.kv.append((key, value))

    def both(self, key: str, value, text: str | None = None) -> None:
        self.put(key, value)
        self.line(text if text is not None else f"{key}: {value}")

    def emit(self, fmt: str, stream) -> None:
        if fmt == "kv":
            for k, v in self.kv:
                stream.write(f"{k}={v}\n")
        else:
            for t in self.text:
                stream.write(t + "\n")


# -- argument helpers -----------------------------------------------------------

def load_key(spec: str) -> LongTermKey:
    """A key file path, or one of the built-in key names."""
    path = Path(spec)
    if path.is_file():
        try:
            return LongTermKey.load(path)
        except (KeyFormatError, ValueError) as exc:
            raise UsageError(f"{spec}: {exc}") from None
    if spec in NAMED_KEYS:
        return NAMED_KEYS[spec]
    raise UsageError(f"no key file or built-in key named {spec!r} (built-ins: {', '.join(NAMED_KEYS)})")


def load_function(spec: str) -> boolfn.BooleanFunc6:
    """A built-in name, a 16-digit truth-table hex string, or a file holding one."""
    if spec in boolfn.NAMED_FUNCTIONS:
        return boolfn.NAMED_FUNCTIONS[spec]
    text = Path(spec).read_text().strip() if Path(spec).is_file() else spec
    try:
        return boolfn.BooleanFunc6.from_hex(text, name=spec)
    except ValueError as exc:
        raise UsageError(f"bad function {spec!r}: {exc}") from None


def _stk(args, rng) -> ShortTermKey:
    if args.stk is None:
        return ShortTermKey.random(rng)
    try:
        return ShortTermKey.from_hex(args.stk)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _iv(args, rng) -> int:
    if args.iv is None:
        return random_iv(rng)
    try:
        return iv_from_hex(args.iv)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _chars(args) -> list[int]:
    if args.input:
        text = Path(args.input).read_text()
    else:
        text = " ".join(args.chars)
    try:
        vals = [int(t) for t in re.split(r"[,\s]+", text.strip()) if t]
    except ValueError:
        raise UsageError("characters must be integers 0..31") from None
    if any(not 0 <= v < 32 for v in vals):
        raise UsageError("characters must be integers 0..31")
    return vals


def _overrides(items) -> dict:
    out = {}
    for item in items or ():
        m = re.fullmatch(r"(D\d|P\d{1,2}|alpha)=(\d+)", item)
        if not m:
            raise UsageError(f"bad binding {item!r}; expected e.g. D8=8, P20=32, alpha=26")
        out[m[1]] = int(m[2])
    return out


def _prop_list(args) -> list[lincrypt.LinearProperty]:
    if args.properties:
        try:
            return lincrypt.load_properties(args.properties)
        except (OSError, ValueError) as exc:
            raise UsageError(f"{args.properties}: {exc}") from None
    if args.property:
        try:
            return [lincrypt.get_property(n) for n in args.property]
        except KeyError as exc:
            raise UsageError(str(exc.args[0])) from None
    return list(lincrypt.property_catalog().values())


def _window_map(args) -> tuple[glc.WindowMap, glc.GlcCase | None]:
    if args.case:
        if args.case not in glc.GLC_CASES:
            raise UsageError(f"unknown case {args.case!r}; known: {', '.join(glc.GLC_CASES)}")
        case = glc.GLC_CASES[args.case]
        return case.window_map(), case
    if not args.key:
        raise UsageError("give --case or --key")
    low = {12: glc.WINDOW_12, 20: glc.WINDOW_20}[args.window]
    try:
        return glc.build_window_map(load_key(args.key), low, load_function(args.function)), None
    except glc.ClosureError as exc:
        raise DomainError(str(exc)) from None


def _l_value(text):
    if text is None:
        return None
    return "both" if text == "both" else int(text)


# -- commands -------------------------------------------------------------------

def cmd_crypt(args, rng, rep: Report) -> None:
    ltk = load_key(args.key)
    stk, iv = _stk(args, rng), _iv(args, rng)
    chars = _chars(args)
    fn = encrypt if args.command == "encrypt" else decrypt
    out = fn(chars, ltk, stk, iv)
    rep.put("stk", stk.hex())
    rep.put("iv", iv_hex(iv))
    rep.put("chars", " ".join(map(str, out)))
    if args.stk is None or args.iv is None:
        rep.line(f"stk: {stk.hex()}")
        rep.line(f"iv: {iv_hex(iv)}")
    rep.line(" ".join(map(str, out)))
    if args.out:
        Path(args.out).write_text(" ".join(map(str, out)) + "\n")


def cmd_keystream(args, rng, rep: Report) -> None:
    ltk = load_key(args.key)
    stk, iv = _stk(args, rng), _iv(args, rng)
    bits = "".join(map(str, keystream(ltk, stk, iv, args.count)))
    rep.both("stk", stk.hex())
    rep.both("iv", iv_hex(iv))
    rep.both("bits", bits)


def cmd_keygen(args, rng, rep: Report) -> None:
    if args.kind == "stk":
        text = ShortTermKey.random(rng).hex()
    elif args.kind == "iv":
        text = iv_hex(random_iv(rng))
    else:
        key = keyspace.SAMPLERS[args.kind](rng)
        text = key.to_text().rstrip("\n")
    for i, t in enumerate(text.splitlines()):
        rep.put(f"line.{i}", t)
        rep.line(t)
    if args.out:
        Path(args.out).write_text(text + "\n")


def cmd_validate(args, rng, rep: Report) -> None:
    ltk = load_key(args.key)
    r1 = keyspace.validate_kt1(ltk)
    rep.put("kt1", "valid" if r1.valid else "invalid")
    for i, (cid, text) in enumerate(r1.violations):
        rep.put(f"kt1.violation.{i}", f"{cid}: {text}")
    rep.text.extend(r1.lines())
    ok = r1.valid
    if args.kt2:
        r2 = keyspace.validate_kt2(ltk)
        rep.put("kt2", "valid" if r2.valid else "invalid")
        rep.text.extend(r2.lines())
        ok = ok and r2.valid
    rep.ok = ok


def cmd_classify(args, rng, rep: Report) -> None:
    ltk = load_key(args.key)
    kt1 = keyspace.is_kt1(ltk)
    rep.both("kt1", "valid" if kt1 else "invalid", f"KT1: {'valid' if kt1 else 'invalid'}")
    tags = keyspace.classify_weak(ltk)
    rep.put("classes", len(tags))
    for i, t in enumerate(tags):
        rep.put(f"class.{i}", str(t))
        rep.line(str(t))
    if not tags:
        rep.line("no weak class")


def cmd_construct(args, rng, rep: Report) -> None:
    try:
        key = keyspace.construct_weak(args.tag, rng, _overrides(args.set))
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None
    except keyspace.InfeasibleClass as exc:
        raise DomainError(str(exc)) from None
    text = key.to_text().rstrip("\n")
    for i, t in enumerate(text.splitlines()):
        rep.put(f"line.{i}", t)
        rep.line(t)
    if args.out:
        key.save(args.out)


def _hist_line(hist: dict[int, int]) -> str:
    return " ".join(f"{v}:{c}" for v, c in hist.items())


def cmd_spectrum(args, rng, rep: Report) -> None:
    f = load_function(args.function)
    _, wh = boolfn.walsh_spectrum(f)
    _, ah = boolfn.autocorrelation_spectrum(f)
    rep.both("function", f.name or f.to_hex())
    rep.both("table", f.to_hex())
    rep.both("weight", f.weight())
    rep.both("walsh", _hist_line(wh), "walsh (value:frequency, nonzero masks): " + _hist_line(wh))
    rep.both("autocorrelation", _hist_line(ah), "autocorrelation (value:frequency): " + _hist_line(ah))
    if args.table_out:
        Path(args.table_out).write_text(f.to_hex() + "\n")
    if args.plot:
        from .plotting import plot_spectrum
        plot_spectrum(f.name or f.to_hex(), wh, ah, args.plot)
        rep.both("plot", args.plot)


def cmd_annihilators(args, rng, rep: Report) -> None:
    f = load_function(args.function)
    r = boolfn.annihilator_space(f, args.side, args.degree)
    rep.both("function", f.name or f.to_hex())
    rep.both("condition", f"(f+1+{args.side})*g = 0, deg g <= {args.degree}")
    rep.both("dimension", r.count)
    rep.both("nonzero", r.nonzero_solutions)
    rep.both("min_degree", boolfn.min_annihilator_degree(f, args.side))
    if args.show:
        for i, g in enumerate(r.basis):
            rep.put(f"basis.{i}", format_poly(g))
            rep.line("  " + format_poly(g))
    if args.restricted:
        for i, chk in enumerate(boolfn.verify_z_restricted_annihilators(f)):
            state = "holds" if chk.holds else f"fails at {chk.witness}"
            rep.both(f"restricted.{i}", f"{chk.label} {state}", f"restricted identity {chk.label}: {state}")
            rep.ok &= chk.holds
    if args.out:
        Path(args.out).write_text("".join(format_poly(g) + "\n" for g in r.basis))


def _key_for(args, prop, rng) -> LongTermKey:
    if args.key:
        return load_key(args.key)
    try:
        return lincrypt.key_for(prop, rng)
    except ValueError as exc:
        raise UsageError(f"{prop.name}: {exc}; give --key") from None


def cmd_verify_approx(args, rng, rep: Report) -> None:
    for n, prop in enumerate(_prop_list(args)):
        ltk = _key_for(args, prop, rng)
        try:
            est = lincrypt.measure_bias(prop, ltk, args.trials, rng, threads=args.threads)
        except lincrypt.PreconditionError as exc:
            raise DomainError(str(exc)) from None
        tag = f"prop.{n}"
        rep.put(f"{tag}.name", prop.name)
        rep.put(f"{tag}.holds", est.holds)
        rep.put(f"{tag}.trials", est.trials)
        rep.put(f"{tag}.bias", f"{est.bias:+.6g}")
        rep.line(f"{prop.name}: {prop.describe()} key {ltk.name or '?'}")
        msg = f"holds {est.holds}/{est.trials}, bias {est.bias:+.6g}"
        if est.holds not in (0, est.trials):
            msg += f" (|bias| 2^{est.log2_abs:.2f}, {est.sigma:.1f} sigma)"
        rep.line(msg)
        if args.deterministic and est.holds not in (0, est.trials):
            rep.ok = False


def cmd_bias_scan(args, rng, rep: Report) -> None:
    rows = []
    for n, prop in enumerate(_prop_list(args)):
        ltk = _key_for(args, prop, rng)
        try:
            est = lincrypt.measure_bias(prop, ltk, args.trials, rng, threads=args.threads)
        except lincrypt.PreconditionError as exc:
            rep.line(f"{prop.name}: skipped ({exc})")
            rep.put(f"prop.{n}.skipped", str(exc))
            continue
        claimed = "-" if prop.claimed_bias is None else f"{prop.claimed_bias:.2f}"
        rows.append((prop.name, est.log2_abs, prop.claimed_bias))
        rep.put(f"prop.{n}.name", prop.name)
        rep.put(f"prop.{n}.bias", f"{est.bias:+.6g}")
        rep.put(f"prop.{n}.log2", f"{est.log2_abs:.3f}")
        rep.put(f"prop.{n}.sigma", f"{est.sigma:.1f}")
        rep.put(f"prop.{n}.claimed", claimed)
        rep.line(f"{prop.name:12s} {prop.describe():40s} bias {est.bias:+.5f} "
                 f"log2 {est.log2_abs:7.3f} ({est.sigma:6.1f} sigma) claimed {claimed}")
    if args.plot and rows:
        from .plotting import plot_bias_scan
        plot_bias_scan(rows, args.plot)
        rep.both("plot", args.plot)


def cmd_invariant_search(args, rng, rep: Report) -> None:
    wmap, case = _window_map(args)
    F = args.F if args.F is not None else (case.F if case and case.F is not None else 0)
    L = _l_value(args.L)
    if L is None:
        L = case.L if case and case.L is not None else 0
    try:
        basis = glc.invariant_space(wmap, F, L)
    except ValueError as exc:
        raise DomainError(str(exc)) from None
    rep.both("window", "".join(wmap.letters))
    rep.both("F", F)
    rep.both("L", L)
    rep.both("dimension", basis.dimension, f"dimension: {basis.dimension} (with the constant)")
    rep.both("nonconstant", basis.nonconstant_dimension)
    if case and (F, L) in case.expected_dims:
        rep.both("published", case.expected_dims[(F, L)])
    if args.out:
        glc.save_basis(basis.basis, args.out)
        rep.both("basis", args.out)
    if args.show:
        for p in basis.basis:
            rep.line("  " + format_poly(p))


def cmd_verify_invariant(args, rng, rep: Report) -> None:
    wmap, case = _window_map(args)
    if args.poly:
        polys = [glc.parse_window_poly(t, wmap) for t in args.poly]
    elif args.basis:
        try:
            polys = glc.load_basis(args.basis, wmap.universe)
        except (OSError, ValueError) as exc:
            raise UsageError(f"{args.basis}: {exc}") from None
    elif case:
        polys = glc.case_polys(case, wmap)
    else:
        raise UsageError("give --poly, --basis or a --case with listed invariants")
    F = args.F if args.F is not None else (case.F if case and case.F is not None else 0)
    L = _l_value(args.L)
    if L is None:
        L = case.L if case and case.L is not None else 0
    rep.both("F", F)
    rep.both("L", L)
    for i, p in enumerate(polys):
        ok, _ = glc.verify_invariant(wmap, p, F, L)
        state = "invariant" if ok else "not invariant"
        if args.concrete:
            hits = glc.check_concrete(wmap, p, F, L, args.concrete, rng)
            state += f"; concrete {hits}/{args.concrete}"
            ok = ok and hits == args.concrete
        rep.put(f"poly.{i}", format_poly(p))
        rep.put(f"poly.{i}.ok", int(ok))
        rep.line(f"{format_poly(p)}: {state}")
        rep.ok &= ok


def cmd_slide(args, rng, rep: Report) -> None:
    if args.mode == "detect":
        ltk = load_key(args.key or "625r")
        r = attacks.slide_scenario(ltk, args.planted, args.random, args.coverage, rng)
        rep.text.extend(r.lines())
        for k in ("planted", "detected", "missed", "random", "false_matches"):
            rep.put(k, getattr(r, k))
        rep.put("mean_overlap", f"{r.mean_overlap:.2f}")
    elif args.mode == "recover":
        prop = lincrypt.get_property(args.property or "thm-4.2.5")
        ltk = _key_for(args, prop, rng)
        stk, iv = _stk(args, rng), _iv(args, rng)
        try:
            r = attacks.recover_key_bits(prop, ltk, stk, iv, args.placements)
        except lincrypt.PreconditionError as exc:
            raise DomainError(str(exc)) from None
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        rep.text.extend(r.lines())
        rep.put("correct", r.correct)
        rep.put("equations", len(r.equations))
        rep.put("rank", r.rank)
    else:
        ltk = load_key(args.key or "625r")
        try:
            r = attacks.onebit_attack_demo(ltk, args.s, args.t, args.d, args.pairs, rng, args.coverage)
        except ValueError as exc:
            raise DomainError(str(exc)) from None
        rep.text.extend(r.lines())
        rep.put("pairs", r.pairs)
        rep.put("advantage_sigma", f"{r.advantage_sigma:.2f}")


def cmd_proportions(args, rng, rep: Report) -> None:
    tags = args.tag or ["AppC-7:8<->12", "AppC-1a:D8=8"]
    try:
        ests = keyspace.estimate_class_proportions(tags, args.samples, rng, args.base)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None
    rep.both("base", args.base)
    rep.both("samples", args.samples)
    for i, e in enumerate(ests):
        pub = "-" if e.published_log2 is None else f"{e.published_log2:.2f}"
        rep.put(f"class.{i}.tag", e.tag)
        rep.put(f"class.{i}.hits", e.hits)
        rep.put(f"class.{i}.log2", f"{e.log2:.3f}")
        rep.put(f"class.{i}.published", pub)
        rep.line(f"{e.tag:16s} {e.hits:7d} hits  log2 {e.log2:7.2f}  "
                 f"95% [{e.low:.3g}, {e.high:.3g}]  published {pub}")
    if args.plot:
        from .plotting import plot_proportions
        plot_proportions(ests, args.plot)
        rep.both("plot", args.plot)


# -- parser ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=DEFAULT_SEED)
    common.add_argument("--trials", type=int, default=10_000)
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--format", choices=("text", "kv"), default="text")

    p = argparse.ArgumentParser(prog="t310", description="T-310 cryptanalysis workbench")
    sub = p.add_subparsers(dest="command", metavar="command", required=True)

    def add(name, func, help_text):
        sp = sub.add_parser(name, parents=[common], help=help_text)
        sp.set_defaults(func=func)
        return sp

    def keyed(sp, required=True):
        sp.add_argument("--key", required=required, help="key file or built-in name")

    def session(sp):
        sp.add_argument("--stk", help="240-bit short-term key in hex (random if omitted)")
        sp.add_argument("--iv", help="61-bit IV in hex (random if omitted)")

    for name in ("encrypt", "decrypt"):
        sp = add(name, cmd_crypt, f"{name} 5-bit characters")
        keyed(sp)
        session(sp)
        sp.add_argument("chars", nargs="*", help="integers 0..31")
        sp.add_argument("--input", help="file of integers 0..31")
        sp.add_argument("--out")

    sp = add("keystream", cmd_keystream, "print keystream bits")
    keyed(sp)
    session(sp)
    sp.add_argument("--count", type=int, default=130)

    sp = add("keygen", cmd_keygen, "draw a random key")
    sp.add_argument("--kind", choices=("kt1", "chain", "stk", "iv"), default="kt1")
    sp.add_argument("--out")

    sp = add("validate-key", cmd_validate, "check the KT1 (and KT2) conditions")
    sp.add_argument("key")
    sp.add_argument("--kt2", action="store_true")

    sp = add("classify-key", cmd_classify, "list weak classes containing a key")
    sp.add_argument("key")

    sp = add("construct-weak", cmd_construct, "build a KT1 key in a weak class")
    sp.add_argument("tag")
    sp.add_argument("--set", action="append", metavar="NAME=VALUE", help="pin D<i>, P<j> or alpha")
    sp.add_argument("--out")

    sp = add("spectrum", cmd_spectrum, "Walsh and autocorrelation histograms")
    sp.add_argument("--function", default="z")
    sp.add_argument("--table-out")
    sp.add_argument("--plot")

    sp = add("annihilators", cmd_annihilators, "annihilator space of a 6-bit function")
    sp.add_argument("--function", default="z")
    sp.add_argument("--side", type=int, choices=(0, 1), default=0)
    sp.add_argument("--degree", type=int, default=6)
    sp.add_argument("--show", action="store_true")
    sp.add_argument("--restricted", action="store_true", help="also check the restricted identities")
    sp.add_argument("--out")

    for name, func, text in (("verify-approx", cmd_verify_approx, "measure linear approximations"),
                             ("bias-scan", cmd_bias_scan, "bias table over many properties")):
        sp = add(name, func, text)
        keyed(sp, required=False)
        sp.add_argument("--property", action="append", help="catalog name (repeatable)")
        sp.add_argument("--properties", help="property file")
        if name == "verify-approx":
            sp.add_argument("--deterministic", action="store_true", help="fail unless it holds always or never")
        else:
            sp.add_argument("--plot")

    for name, func, text in (("invariant-search", cmd_invariant_search, "invariant space of a window"),
                             ("verify-invariant", cmd_verify_invariant, "check polynomial invariants")):
        sp = add(name, func, text)
        keyed(sp, required=False)
        sp.add_argument("--case", help="one of the built-in reference cases")
        sp.add_argument("--window", type=int, choices=(12, 20), default=12)
        sp.add_argument("--function", default="z")
        sp.add_argument("--F", type=int, choices=(0, 1))
        sp.add_argument("--L", choices=("0", "1", "both"))
        if name == "invariant-search":
            sp.add_argument("--out", help="write the basis here")
            sp.add_argument("--show", action="store_true")
        else:
            sp.add_argument("--poly", action="append")
            sp.add_argument("--basis", help="basis file")
            sp.add_argument("--concrete", type=int, default=0, metavar="N",
                            help="also test on N random cipher rounds")

    sp = add("slide-attack", cmd_slide, "slid-pair detection, key-bit recovery, one-bit distinguisher")
    keyed(sp, required=False)
    session(sp)
    sp.add_argument("--mode", choices=("detect", "recover", "onebit"), default="detect")
    sp.add_argument("--planted", type=int, default=100)
    sp.add_argument("--random", type=int, default=10_000)
    sp.add_argument("--coverage", type=float, default=0.73)
    sp.add_argument("--property")
    sp.add_argument("--placements", type=int, default=8)
    sp.add_argument("--s", type=int, default=19)
    sp.add_argument("--t", type=int, default=18)
    sp.add_argument("--d", type=int, default=-6)
    sp.add_argument("--pairs", type=int, default=100_000)

    sp = add("proportions", cmd_proportions, "sampled weak-class proportions")
    sp.add_argument("--tag", action="append")
    sp.add_argument("--samples", type=int, default=100_000)
    sp.add_argument("--base", choices=tuple(keyspace.SAMPLERS), default="kt1")
    sp.add_argument("--plot")
    return p


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    rng = np.random.default_rng(args.seed)
    rep = Report()
    try:
        args.func(args, rng, rep)
    except UsageError as exc:
        stderr.write(f"t310 {args.command}: {exc}\n")
        return 2
    except OSError as exc:
        stderr.write(f"t310 {args.command}: {exc}\n")
        return 2
    except DomainError as exc:
        stderr.write(f"t310 {args.command}: {exc}\n")
        return 1
    rep.emit(args.format, stdout)
    return 0 if rep.ok else 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
