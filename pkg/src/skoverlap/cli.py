"""Command-line front end: ``skoverlap expand|eval|verify``.

Exit codes: 0 success, 2 parse error, 3 domain or budget error,
4 internal assertion, 5 verification failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from fractions import Fraction

from .algebra import format_latex, format_plain
from .engine import Expansion, evaluate_expansion, expand
from .errors import DomainError, ParseError, SelfTermMismatch
from .terms import FactorPair, Monomial, canonicalize
from .verify import DEFAULT_SIZES, format_report, verify

EXIT_OK, EXIT_PARSE, EXIT_DOMAIN, EXIT_INTERNAL, EXIT_VERIFY = 0, 2, 3, 4, 5

log = logging.getLogger("skoverlap")


class _Reader:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    @property
    def column(self) -> int:
        return self.pos + 1

    def skip(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch: str):
        got = self.peek()
        if got != ch:
            raise ParseError(f"expected {ch!r}, found {got!r}" if got else f"expected {ch!r} at end of input", self.column)
        self.pos += 1

    def integer(self) -> tuple[int, int]:
        self.skip()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        if start == self.pos:
            got = self.text[self.pos] if self.pos < len(self.text) else "end of input"
            raise ParseError(f"expected a replica index, found {got!r}", start + 1)
        return int(self.text[start:self.pos]), start + 1


def parse_monomial(text: str) -> Monomial:
    """Parse ``[[1,2],[1,3]]``; one redundant outer bracket (``[[[1,2]]]``) is tolerated."""
    r = _Reader(text)
    r.expect("[")
    wrapped = False
    if r.peek() == "[":
        # a third bracket means the pair list is wrapped once more
        save = r.pos
        r.pos += 1
        wrapped = r.peek() == "["
        r.pos = save
    if wrapped:
        r.expect("[")
    pairs = []
    while True:
        r.expect("[")
        a, col = r.integer()
        r.expect(",")
        b, _ = r.integer()
        r.expect("]")
        if not 1 <= a < b:
            raise ParseError(f"pair [{a},{b}] must satisfy 1 <= first < second", col)
        pairs.append(FactorPair(a, b, False))
        if r.peek() == ",":
            r.pos += 1
            continue
        break
    r.expect("]")
    if wrapped:
        r.expect("]")
    if r.peek():
        raise ParseError(f"unexpected trailing text {r.text[r.pos:]!r}", r.column)
    return canonicalize(pairs)


def render_monomial(m: Monomial) -> str:
    return "[" + ",".join(f"[{f.a},{f.b}]" for f in m) + "]"


def parse_beta(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"cannot read beta {text!r} as a rational number", 1) from None


def parse_sizes(text: str) -> list[int]:
    out = []
    for i, part in enumerate(text.split(",")):
        try:
            out.append(int(part))
        except ValueError:
            raise ParseError(f"bad system size {part!r}", sum(len(p) + 1 for p in text.split(",")[:i]) + 1) from None
    return out


def render_expansion(e: Expansion, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(e.to_json(), indent=2)
    if fmt == "latex":
        return "\n".join(rf"C_{{{j}}} = {format_latex(e.coeffs[j])}" for j in sorted(e.coeffs))
    return "; ".join(f"C{j} = {format_plain(e.coeffs[j])}" for j in sorted(e.coeffs))


def _cmd_expand(args) -> tuple[str, int]:
    e = expand(parse_monomial(args.expr), args.order)
    return render_expansion(e, args.format), EXIT_OK


def _cmd_eval(args) -> tuple[str, int]:
    mono = parse_monomial(args.expr)
    beta = parse_beta(args.beta)
    if abs(beta) >= 1:
        raise DomainError(f"|beta| = {abs(beta)} must be below 1")
    value = evaluate_expansion(expand(mono, args.order), beta, args.n)
    if args.format == "json":
        doc = {
            "monomial": [[f.a, f.b] for f in mono],
            "order": args.order,
            "beta": str(beta),
            "n": args.n,
            "value": str(value),
            "decimal": float(value),
        }
        return json.dumps(doc, indent=2), EXIT_OK
    if args.format == "latex":
        body = str(value.numerator) if value.denominator == 1 else rf"\frac{{{value.numerator}}}{{{value.denominator}}}"
        return body, EXIT_OK
    return f"{value} = {float(value)!r}", EXIT_OK


def _cmd_verify(args) -> tuple[str, int]:
    mono = parse_monomial(args.expr)
    beta = parse_beta(args.beta)
    report = verify(
        mono,
        args.order,
        beta,
        sizes=parse_sizes(args.sizes),
        samples=args.samples,
        seed=args.seed,
        tail=args.tail,
        pinned=args.pinned,
        z_tol=args.z_tol,
        rel_tol=args.rel_tol,
        workers=args.workers,
    )
    if args.format == "json":
        text = json.dumps(report.to_json(), indent=2)
    else:
        text = format_report(report)
    return text, EXIT_OK if report.passed else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "plain", "latex"), default=argparse.SUPPRESS)
    common.add_argument("--output", metavar="FILE", default=argparse.SUPPRESS, help="write the result here")

    p = argparse.ArgumentParser(prog="skoverlap", description=__doc__.split("\n")[0], parents=[common])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    ex = sub.add_parser("expand", parents=[common], help="symbolic 1/N coefficients")
    ex.add_argument("--expr", required=True, help='monomial such as "[[1,2],[1,2]]"')
    ex.add_argument("--order", type=int, default=2)
    ex.set_defaults(func=_cmd_expand)

    ev = sub.add_parser("eval", parents=[common], help="evaluate the truncated series exactly")
    ev.add_argument("--expr", required=True)
    ev.add_argument("--order", type=int, default=2)
    ev.add_argument("--beta", required=True, help='exact rational, e.g. "1/2" or "0.2"')
    ev.add_argument("--n", type=int, required=True, help="system size N")
    ev.set_defaults(func=_cmd_eval)

    ve = sub.add_parser("verify", parents=[common], help="compare coefficients with exact-enumeration Monte Carlo")
    ve.add_argument("--expr", required=True)
    ve.add_argument("--order", type=int, default=2)
    ve.add_argument("--beta", default="1/5")
    ve.add_argument("--sizes", default=",".join(map(str, DEFAULT_SIZES)))
    ve.add_argument("--samples", type=int, default=20000)
    ve.add_argument("--seed", type=int, default=0)
    ve.add_argument("--tail", type=int, default=None, help="subtract engine terms up to this order before fitting")
    ve.add_argument("--pinned", action="store_true", help="also refit each coefficient with the others held fixed")
    ve.add_argument("--z-tol", type=float, default=3.0)
    ve.add_argument("--rel-tol", type=float, default=0.0)
    ve.add_argument("--workers", type=int, default=1)
    ve.set_defaults(func=_cmd_verify)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.format = getattr(args, "format", "plain")
    args.output = getattr(args, "output", None)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        text, code = args.func(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (SelfTermMismatch, AssertionError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
