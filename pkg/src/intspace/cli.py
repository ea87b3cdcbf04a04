"""Command line interface: ``intspace <command> [options]``.

Exit codes: 0 success, 2 negative verdict (obstructed, non-existence, failed
check), 3 invalid input, 4 internal invariant violation.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from .sheafcx import InvariantViolation

EXIT_OK, EXIT_VERDICT, EXIT_INPUT, EXIT_INTERNAL = 0, 2, 3, 4


class InputError(Exception):
    pass


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="intspace", description="Intersection space complexes on stratified cell complexes.")
    ap.add_argument("command", choices=["check", "ic", "is", "obstruct", "ss", "betti", "duality", "fixture"])
    ap.add_argument("name", nargs="?", help="fixture name (fixture command only)")
    ap.add_argument("--space", help="space JSON")
    ap.add_argument("--sheaf", help="sheaf JSON")
    ap.add_argument("--perversity", default="lower-middle", help="name or explicit values k:v,k:v")
    ap.add_argument("--variant", choices=["IS", "IC"], default="IS", help="axioms to check")
    ap.add_argument("--qbar", type=int)
    ap.add_argument("--codim", type=int, help="codimension of a bare stratum model")
    ap.add_argument("--coords", help="retraction coordinates, codim:c1,c2;codim:...")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--samples", type=int, default=20)
    ap.add_argument("--format", choices=["json", "csv", "ascii"], default="json")
    ap.add_argument("--out", help="report path (figures are written next to it)")
    ap.add_argument("--no-figures", action="store_true")
    return ap


# -- input helpers -------------------------------------------------------------

def _load_space(args):
    from .models_io import load_json, space_from_json
    if not args.space:
        raise InputError("--space is required")
    try:
        return space_from_json(load_json(args.space))
    except (OSError, json.JSONDecodeError) as e:
        raise InputError(f"cannot read space: {e}") from None


def _load_sheaf(args, space=None):
    from .models_io import load_json, sheaf_from_json
    if not args.sheaf:
        raise InputError("--sheaf is required")
    try:
        obj = load_json(args.sheaf)
    except (OSError, json.JSONDecodeError) as e:
        raise InputError(f"cannot read sheaf: {e}") from None
    return sheaf_from_json(obj, base=space, base_dir=Path(args.sheaf).parent)


def _perversity(args, d):
    from .istower import parse_perversity
    try:
        return parse_perversity(args.perversity, d)
    except (ValueError, KeyError) as e:
        raise InputError(f"bad perversity: {e}") from None


def _coords(text):
    if not text:
        return {}
    out = {}
    try:
        for part in text.split(";"):
            k, vals = part.split(":")
            out[int(k)] = tuple(int(v) for v in vals.split(",") if v.strip())
    except ValueError:
        raise InputError(f"bad --coords {text!r}") from None
    return out


def _betti_rows(betti: dict, d: int | None = None):
    top = max([d or 0] + list(betti))
    return [(n, betti.get(n, 0)) for n in range(min([0] + list(betti)), top + 1)]


# -- commands ----------------------------------------------------------------

def cmd_check(args):
    from .istower import check_axioms
    X = _load_space(args)
    K = _load_sheaf(args, X)
    rep = check_axioms(K, X, _perversity(args, X.dim), args.variant)
    out = rep.to_json()
    out["verdict"] = "PASS" if rep.passed else "FAIL"
    text = "\n".join(f"{a}{'_' + str(k) if k else ''} deg {n}: {'pass' if ok else 'FAIL'} {d}"
                     for a, k, n, ok, d in rep.results)
    rows = [("axiom", "codim", "degree", "passed")] + [(a, k, n, int(ok)) for a, k, n, ok, _ in rep.results]
    return out, text, rows, {}, EXIT_OK if rep.passed else EXIT_VERDICT


def cmd_ic(args):
    from .istower import build_ic
    X = _load_space(args)
    p = _perversity(args, X.dim)
    betti = build_ic(X, p).gamma_betti()
    out = {"verdict": "EXISTS", "perversity": p.to_json(), "betti": {str(n): v for n, v in sorted(betti.items())},
           "witnesses": [], "ext1_dim": 0, "linear_part_dim": 0, "seed": args.seed}
    rows = [("degree", "dim")] + _betti_rows(betti, X.dim)
    text = "IC hypercohomology: " + " ".join(f"H^{n}={v}" for n, v in _betti_rows(betti, X.dim))
    return out, text, rows, {"betti": betti}, EXIT_OK


def cmd_is(args):
    from .istower import ObstructionNonzero, build_is
    from .models_io import attach_stratum_model
    X = _load_space(args)
    target = X
    if args.sheaf:
        K = _load_sheaf(args, X)
        target = attach_stratum_model(X, K, args.codim)
    d = target.dim
    p = _perversity(args, d)
    try:
        tower = build_is(target, p, _coords(args.coords), seed=args.seed)
    except ObstructionNonzero as e:
        out = {"verdict": "OBSTRUCTED", "perversity": p.to_json(), "codim": e.codim, "qbar": e.qbar,
               "ext1_dim": e.ext1_dim, "linear_part_dim": 0, "witnesses": [{"codim": e.codim, "ext1_dim": e.ext1_dim}],
               "betti": {}, "seed": args.seed}
        return out, f"OBSTRUCTED at codimension {e.codim} (qbar={e.qbar}), dim Ext^1 = {e.ext1_dim}", \
            [("codim", "qbar", "ext1_dim"), (e.codim, e.qbar, e.ext1_dim)], {}, EXIT_VERDICT
    out = tower.to_json()
    out.update({"verdict": "EXISTS", "witnesses": [],
                "ext1_dim": sum(s.splitting.ext1_dim for s in tower.steps if s.splitting),
                "linear_part_dim": sum(s.splitting.linear_part_dim for s in tower.steps if s.splitting)})
    betti = tower.betti() if tower.complete else {}
    rows = [("degree", "dim")] + (_betti_rows(betti, d) if betti else [])
    lines = [f"codim {s.codim}: qbar={s.threshold} split={s.splitting.split if s.splitting else True} "
             f"linear part {s.splitting.linear_part_dim if s.splitting else 0} coords {list(s.coords)}" for s in tower.steps]
    if betti:
        lines.append("IS hypercohomology: " + " ".join(f"H^{n}={v}" for n, v in _betti_rows(betti, d)))
    return out, "\n".join(lines), rows, {"betti": betti} if betti else {}, EXIT_OK


def cmd_obstruct(args):
    from .obstruction import ascii_page, obstruction_scan, spectral_sequence
    X = _load_space(args) if args.space else None
    K = _load_sheaf(args, X)
    if args.qbar is None:
        raise InputError("--qbar is required")
    ss = spectral_sequence(K)
    rep = obstruction_scan(K, args.qbar, ss)
    out = rep.to_json()
    out.update({"betti": {str(n): v for n, v in sorted(ss.hyper.items())}, "seed": args.seed})
    rows = [("r", "p", "q", "rank")] + [w for w in rep.witnesses]
    text = f"{rep.verdict} (qbar={args.qbar})\n" + "\n".join(
        f"  d_{r}^{{{p},{q}}} rank {k}" for r, p, q, k in rep.witnesses) + "\n" + ascii_page(ss.pages[0])
    return out, text, rows, {"pages": ss.pages}, EXIT_VERDICT if rep.verdict == "OBSTRUCTED" else EXIT_OK


def cmd_ss(args):
    from .obstruction import ascii_page, check_convergence, spectral_sequence
    X = _load_space(args) if args.space else None
    K = _load_sheaf(args, X)
    ss = spectral_sequence(K)
    out = {"pages": [pg.to_json() for pg in ss.pages], "betti": {str(n): v for n, v in sorted(ss.hyper.items())},
           "converged": check_convergence(ss)}
    rows = [("r", "p", "q", "dim", "d_rank")]
    for pg in ss.pages:
        for (p, q), v in sorted(pg.entries.items()):
            if v:
                rows.append((pg.r, p, q, v, pg.rank(p, q)))
    text = "\n\n".join(ascii_page(pg) for pg in ss.pages)
    return out, text, rows, {"pages": ss.pages}, EXIT_OK


def cmd_betti(args):
    from .bettidual import generic_betti
    X = _load_space(args)
    p = _perversity(args, X.dim)
    from .istower import ObstructionNonzero
    try:
        g = generic_betti(X, p, args.samples, args.seed)
    except ObstructionNonzero as e:
        return ({"verdict": "OBSTRUCTED", "codim": e.codim, "ext1_dim": e.ext1_dim, "witnesses": [], "betti": {},
                 "seed": args.seed}, str(e), [("codim",), (e.codim,)], {}, EXIT_VERDICT)
    out = g.to_json()
    out.update({"verdict": "EXISTS", "betti": out.pop("dims"), "seed": args.seed, "witnesses": []})
    betti = g.profile.dims
    rows = [("degree", "dim")] + _betti_rows(betti, X.dim)
    text = "generic Betti: " + " ".join(f"b{n}={v}" for n, v in _betti_rows(betti, X.dim)) + \
        f"\nminimum attained by {g.attained_by}/{len(g.samples)} samples"
    return out, text, rows, {"betti": betti}, EXIT_OK


def cmd_duality(args):
    from .bettidual import duality_check
    X = _load_space(args)
    p = _perversity(args, X.dim)
    rep = duality_check(X, p, args.samples, args.seed)
    out = rep.to_json()
    out["seed"] = args.seed
    out["betti"] = out["betti_p"]
    rows = [("degree", "betti_p", "betti_q_dual")] + [
        (i, rep.dims_p.get(i, 0), rep.dims_q.get(rep.d - i, 0)) for i in range(rep.d + 1)]
    text = f"{rep.verdict}: p {[rep.dims_p.get(i, 0) for i in range(rep.d + 1)]} " \
           f"q reversed {[rep.dims_q.get(rep.d - i, 0) for i in range(rep.d + 1)]}"
    figs = {"betti": rep.dims_p, "betti_dual": rep.dims_q, "d": rep.d}
    return out, text, rows, figs, EXIT_OK if rep.verdict == "PASS" else EXIT_VERDICT


def cmd_fixture(args):
    from . import models_io as mio
    name = args.name
    spaces = mio.FIXTURES
    sheaves = mio.SHEAF_FIXTURES
    if name in spaces:
        out = mio.space_to_json(spaces[name]())
    elif name in sheaves:
        out = mio.sheaf_to_json(sheaves[name]())
    else:
        raise InputError(f"unknown fixture {name!r}; spaces {sorted(spaces)}, sheaves {sorted(sheaves)}")
    return out, None, None, {}, EXIT_OK


COMMANDS = {"check": cmd_check, "ic": cmd_ic, "is": cmd_is, "obstruct": cmd_obstruct, "ss": cmd_ss,
            "betti": cmd_betti, "duality": cmd_duality, "fixture": cmd_fixture}


# -- output ------------------------------------------------------------------

def _render(out, text, rows, fmt) -> str:
    if fmt == "json" or text is None:
        return json.dumps(out, indent=1, sort_keys=True) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerows(rows or [])
        return buf.getvalue()
    return text + "\n"


def _figures(args, figs):
    if args.no_figures or not args.out or not figs:
        return []
    from .plots import betti_bars, page_heatmap
    stem = Path(args.out)
    stem = stem.with_name(stem.stem)
    written = []
    if "pages" in figs:
        for pg in figs["pages"]:
            path = Path(f"{stem}_E{pg.r}.png")
            page_heatmap(pg, path)
            written.append(path)
    if "betti" in figs:
        path = Path(f"{stem}_betti.png")
        betti_bars(figs["betti"], path, dual=figs.get("betti_dual"), d=figs.get("d"))
        written.append(path)
    return written


def cli_dispatch(argv=None) -> int:
    from .bettidual import MinimumUnstable
    from .istower import ObstructionNonzero
    from .models_io import NotACocycle
    from .stratspace import ForbiddenCodimensionOne, InvalidSpace, StratumNotClosed
    ap = _parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_INPUT
    try:
        out, text, rows, figs, code = COMMANDS[args.command](args)
    except (InputError, InvalidSpace, StratumNotClosed, ForbiddenCodimensionOne, NotACocycle, MinimumUnstable,
            ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except ObstructionNonzero as e:
        out, text, rows, figs, code = ({"verdict": "OBSTRUCTED", "codim": e.codim, "qbar": e.qbar,
                                        "ext1_dim": e.ext1_dim}, f"OBSTRUCTED at codimension {e.codim}",
                                       [("codim", "qbar", "ext1_dim"), (e.codim, e.qbar, e.ext1_dim)], {},
                                       EXIT_VERDICT)
    except (InvariantViolation, AssertionError) as e:
        print(f"internal invariant violation: {e}", file=sys.stderr)
        return EXIT_INTERNAL
    if args.command != "fixture":
        for key, default in (("verdict", "OK"), ("witnesses", []), ("betti", {}), ("ext1_dim", None),
                             ("linear_part_dim", None), ("seed", args.seed)):
            out.setdefault(key, default)
    report = _render(out, text, rows, args.format)
    if args.out:
        Path(args.out).write_text(report)
        _figures(args, figs)
    else:
        sys.stdout.write(report)
    return code


def main():
    sys.exit(cli_dispatch())


if __name__ == "__main__":
    main()
