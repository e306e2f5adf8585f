"""Command-line interface: ``latglue <command> ...``.

Every command prints a JSON report on stdout.  Exit codes:
0 success, 2 parse error, 3 precondition failed, 4 search exhausted,
5 verification failed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction

from . import automorphisms as aut
from . import bianchi, exact, genus, gluing
from .lattice import (
    LatticeError,
    discriminant_group,
    is_ssf,
    lattice_from_json,
)

EXIT_OK, EXIT_PARSE, EXIT_PRECONDITION, EXIT_SEARCH, EXIT_VERIFY = 0, 2, 3, 4, 5


class CliError(Exception):
    def __init__(self, code: int, message: str, **extra):
        super().__init__(message)
        self.code = code
        self.extra = extra


def _jsonable(x):
    if isinstance(x, Fraction):
        return gluing.frac_str(x)
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def dumps(report: dict) -> str:
    return json.dumps(_jsonable(report), indent=2)


# --------------------------------------------------------------------------
# input


def _row_lines(text: str) -> list[int]:
    """Line number of each depth-2 ``[`` (the rows of a Gram matrix)."""
    lines, depth, line, in_str, esc = [], 0, 1, False, False
    for ch in text:
        if in_str:
            if esc:
                esc = False
            elif ch == "\\":
                esc = True
            elif ch == '"':
                in_str = False
        elif ch == '"':
            in_str = True
        elif ch in "[{":
            depth += 1
            if ch == "[" and depth == 3:
                lines.append(line)
        elif ch in "]}":
            depth -= 1
        if ch == "\n":
            line += 1
    return lines


def read_json(path: str):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise CliError(EXIT_PARSE, f"{path}: {exc.strerror}") from None
    try:
        return json.loads(text), text
    except json.JSONDecodeError as exc:
        raise CliError(EXIT_PARSE, f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}", line=exc.lineno, column=exc.colno) from None


def _asymmetry(gram):
    for i, row in enumerate(gram):
        for j, x in enumerate(row):
            try:
                if gram[j][i] != x:
                    return i, j
            except (IndexError, TypeError):
                return i, j
    return None


def read_lattice(path: str):
    data, text = read_json(path)
    try:
        return lattice_from_json(data)
    except LatticeError as exc:
        extra = {}
        gram = data.get("gram") if isinstance(data, dict) else None
        where = _asymmetry(gram) if isinstance(gram, list) and all(isinstance(r, list) for r in gram) else None
        msg = f"{path}: {exc}"
        if where is not None:
            rows = _row_lines(text)
            i, j = where
            line = rows[i] if i < len(rows) else 1
            msg = f"{path}:{line}: {exc} (entry [{i}][{j}])"
            extra = {"line": line, "entry": [i, j]}
        raise CliError(EXIT_PARSE, msg, **extra) from None


def read_matrix(path: str):
    data, _ = read_json(path)
    if isinstance(data, dict):
        data = data.get("matrix", data.get("gram"))
    if not isinstance(data, list) or not all(isinstance(r, list) and all(isinstance(x, int) for x in r) for r in data):
        raise CliError(EXIT_PARSE, f'{path}: expected an integer matrix or {{"matrix": [[...]]}}')
    return data


def read_embedding(path: str):
    data, _ = read_json(path)
    try:
        return gluing.embedding_from_json(data), data
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise CliError(EXIT_PARSE, f"{path}: malformed embedding file ({exc.__class__.__name__}: {exc})") from None


# --------------------------------------------------------------------------
# commands


def cmd_analyze(args) -> dict:
    L = read_lattice(args.lattice)
    D = discriminant_group(L)
    ssf, delta = is_ssf(L)
    primes = genus.relevant_primes(L.det)
    symbols = {p: genus.padic_symbol(L, p) for p in primes}
    check = genus.oddity_formula_check(L)
    return {
        "dim": L.dim,
        "det": L.det,
        "signature": list(L.signature),
        "type": "odd" if L.is_odd() else "even",
        "unimodular": L.is_unimodular(),
        "invariant_factors": exact.invariant_factors(L.matrix()),
        "discriminant_group": list(D.factors),
        "discriminant_order": D.order,
        "ssf": ssf,
        "discriminant_rank": delta,
        "symbols": {p: genus.render_symbol(s) for p, s in symbols.items()},
        "p_excess": {p: genus.p_excess(s) for p, s in symbols.items() if p != 2},
        "oddity": genus.oddity(symbols[2]),
        "oddity_formula": {"holds": check.holds, "lhs": check.lhs, "rhs": check.rhs},
        "genus": genus.render_genus(genus.genus_spec(L)),
    }


_STAGE_EXIT = {
    "spec": EXIT_PRECONDITION,
    "search": EXIT_SEARCH,
    "anti-isometry": EXIT_SEARCH,
    "verify": EXIT_VERIFY,
    "glue": EXIT_VERIFY,
}


def cmd_embed(args) -> dict:
    L = read_lattice(args.lattice)
    try:
        E = gluing.embed_unimodular(L, args.budget)
    except gluing.GluingError as exc:
        raise CliError(_STAGE_EXIT.get(exc.stage, EXIT_VERIFY), str(exc), stage=exc.stage) from None
    data = gluing.embedding_to_json(E)
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(data, fh, indent=2)
            fh.write("\n")
    return {
        "status": "ok",
        "m": E.m,
        "glue_index": E.glue_index,
        "companion": E.K.matrix(),
        "glue_generators": data["glue_generators"],
        "glued_signature": list(E.glued.signature),
        "glued_det": E.glued.det,
        "certificate": data["certificate"],
        "out": args.out,
    }


def cmd_verify(args) -> dict:
    E, data = read_embedding(args.embedding)
    cert = gluing.certify(E)
    flags = {k: bool(cert[k]) for k in gluing.CHECKS}
    failed = [k for k in gluing.CHECKS if not flags[k]]
    stored = data.get("certificate") or {}
    mismatched = [k for k in gluing.CHECKS if k in stored and bool(stored[k]) != flags[k]]
    fields = []
    if not flags["generators_ok"] or not flags["integral"]:
        fields.append("glue_generators")
    if not flags["gram_consistent"]:
        fields.append("glued")
    if not flags["index_ok"] or not flags["det_law"]:
        fields.append("glue_index / K / L")
    if data.get("m") != E.K.dim:
        fields.append("m")
    report = {
        "status": "ok" if not failed else "failed",
        "certificate": flags,
        "failed": failed,
        "stored_flags_disagree": mismatched,
        "suspect_fields": fields,
    }
    if failed:
        raise CliError(EXIT_VERIFY, "failed checks: " + ", ".join(failed), report=report)
    return report


def _load_genus(arg: str):
    if os.path.exists(arg):
        with open(arg) as fh:
            text = fh.read()
        try:
            data = json.loads(text)
        except json.JSONDecodeError:
            return genus.parse_genus(text)
        return genus.genus_from_json(data)
    return genus.parse_genus(arg)


def cmd_genus(args) -> dict:
    try:
        spec = _load_genus(args.symbol)
    except genus.SymbolSyntaxError as exc:
        raise CliError(EXIT_PARSE, f"syntax error: {exc}") from None
    try:
        verdict = genus.genus_exists(spec)
    except genus.MalformedGenusError as exc:
        raise CliError(EXIT_PARSE, f"malformed genus symbol: {exc}", status="malformed") from None
    return {
        "genus": genus.render_genus(spec),
        "exists": verdict.exists,
        "violations": list(verdict.violations),
    }


def cmd_extend(args) -> dict:
    L = read_lattice(args.lattice)
    E, _ = read_embedding(args.embedding)
    g = read_matrix(args.automorphism)
    if L.matrix() != E.L.matrix():
        raise CliError(EXIT_PRECONDITION, "lattice file does not match the embedding's L")
    if len(g) != L.dim or not exact.is_square(g):
        raise CliError(EXIT_PRECONDITION, f"automorphism must be {L.dim}x{L.dim}")
    if not aut.is_automorphism(L, g):
        raise CliError(EXIT_PRECONDITION, "not an automorphism of L")
    if not aut.congruence_level(L, g, 2):
        raise CliError(EXIT_PRECONDITION, "not level 2 (g is not == I mod 2)")
    try:
        v = aut.check_level2_extension(E, g, bound=args.bound)
    except aut.ExtensionNotFound as exc:
        raise CliError(EXIT_SEARCH, str(exc)) from None
    report = {
        "status": "ok" if v.passed else "failed",
        "companion_automorphism": [list(r) for r in v.extension.companion],
        "conjugated": [list(r) for r in v.extension.conjugated],
        "integral": v.integral,
        "preserves_gram": v.preserves_gram,
        "level2": v.level2,
    }
    if not v.passed:
        raise CliError(EXIT_VERIFY, "extension is not level 2", report=report)
    return report


def _bianchi_row(d: int) -> dict:
    R = bianchi.ring_mod2(d)
    return {
        "d": d,
        "residue_class": bianchi.residue_class(d),
        "ring": R.describe(),
        "index": bianchi.sl2_order(R),
    }


def cmd_bianchi(args) -> dict:
    if args.d is not None:
        try:
            return {"rows": [_bianchi_row(args.d)]}
        except bianchi.BianchiError as exc:
            raise CliError(EXIT_PRECONDITION, str(exc)) from None
    a, b = args.range
    if a < 1 or b < a:
        raise CliError(EXIT_PRECONDITION, f"bad range {a}..{b}")
    rows = [_bianchi_row(d) for d in range(a, b + 1) if bianchi.is_squarefree(d)]
    return {"rows": rows}


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="latglue", description="Exact lattice invariants and unimodular gluing.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="invariants of a lattice file")
    p.add_argument("lattice")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("embed", help="glue a companion to reach a unimodular lattice")
    p.add_argument("lattice")
    p.add_argument("--budget", type=int, default=gluing.DEFAULT_BUDGET, help="largest Gram entry tried for the companion")
    p.add_argument("--out", help="write the embedding JSON here")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("verify", help="recompute the certificate of an embedding file")
    p.add_argument("embedding")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("genus", help="decide whether a genus symbol is realized")
    p.add_argument("symbol", help='symbol text such as "signature=3,0; det=7; 2: [1^+3]_1; 7: 1^+2 7^+1", or a file')
    p.set_defaults(func=cmd_genus)

    p = sub.add_parser("extend", help="extend a level-2 automorphism across an embedding")
    p.add_argument("lattice")
    p.add_argument("embedding")
    p.add_argument("automorphism")
    p.add_argument("--bound", type=int, default=2, help="search bound for companion automorphisms")
    p.set_defaults(func=cmd_extend)

    p = sub.add_parser("bianchi", help="index of the level-2 congruence subgroup of PSL(2, O_d)")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--d", type=int)
    g.add_argument("--range", type=int, nargs=2, metavar=("A", "B"))
    p.set_defaults(func=cmd_bianchi)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        report = args.func(args)
    except CliError as exc:
        out = dict(exc.extra.pop("report", None) or {})
        out.setdefault("status", exc.extra.pop("status", "error"))
        out["error"] = str(exc)
        out["exit_code"] = exc.code
        out.update(exc.extra)
        print(dumps(out))
        print(f"latglue: {exc}", file=sys.stderr)
        return exc.code
    print(dumps(report))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
