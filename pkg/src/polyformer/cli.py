"""Command line entry point: ``polyformer <command> ...``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import harness
from .constructor import BuildBudget, build_theorem1
from .harness import Sampler
from .networks import eval_transformer
from .polyoracle import decompose, load_polynomial
from .serialization import dumps, load_network, matrix_from_dict, matrix_to_dict, network_to_dict


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of integers, got {text!r}")


def _add_poly_args(p: argparse.ArgumentParser, budget: bool = True) -> None:
    p.add_argument("--poly", required=True, help="polynomial file (text or JSON)")
    p.add_argument("--d", type=int, help="rows of X (default: inferred from the polynomial)")
    p.add_argument("--n", type=int, help="columns of X (default: inferred)")
    p.add_argument("--s", type=int, help="degree budget (default: the polynomial's degree)")
    if budget:
        p.add_argument("--N", type=int, default=4, help="width parameter N >= 2 (default 4)")
        p.add_argument("--L", type=int, default=2, help="depth parameter L >= 1 (default 2)")
        p.add_argument("--width-limit", type=int, help="cap the state width by splitting stages into rounds")


def _add_sampler_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, help="sampler seed (default: $POLYFORMER_SEED or a fixed value)")
    p.add_argument("--samples", type=int, default=2000, help="random matrices per check (default 2000)")


def _load(args):
    f = load_polynomial(args.poly, args.d, args.n)
    s = args.s or max(f.degree, 1)
    return f, s


def _sampler(args) -> Sampler:
    return Sampler(count=args.samples, seed=args.seed)


def cmd_build(args) -> int:
    f, s = _load(args)
    build = build_theorem1(f, BuildBudget(f.d, f.n, s, args.N, args.L), args.width_limit)
    doc = network_to_dict(build.net)
    doc["manifest"] = build.manifest()
    Path(args.out).write_text(dumps(doc) + "\n")
    print(json.dumps({"out": args.out, **build.manifest()["size"]}, sort_keys=True))
    return 0


def _read_matrix(path) -> np.ndarray:
    obj = json.loads(Path(path).read_text())
    if isinstance(obj, dict):
        return matrix_from_dict(obj)
    return np.array(obj, dtype=np.float64)


def cmd_eval(args) -> int:
    doc = json.loads(Path(args.net).read_text())
    net = load_network(args.net)
    manifest = doc.get("manifest")
    x = _read_matrix(args.input)
    if manifest:
        from .constructor import pad_input

        state = pad_input(x, net.state_dim)
    else:
        state = x
    out = eval_transformer(net, state)
    result = {"output": matrix_to_dict(out)}
    if manifest:
        ro = manifest["readout"]
        result["readout"] = float(out[ro["row"], ro["column"]] + ro["bias"])
    print(json.dumps(result))
    return 0


def cmd_verify(args) -> int:
    f, s = _load(args)
    b = BuildBudget(f.d, f.n, s, args.N, args.L)
    report = harness.check_bounds(f, b, _sampler(args), width_limit=args.width_limit)
    sys.stdout.write(report.to_json())
    return 0 if report.passed else 1


def cmd_sweep(args) -> int:
    f, s = _load(args)
    rows = harness.sweep(f, args.N_list, args.L_list, _sampler(args), degree=s)
    text = harness.rows_to_csv(rows)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0 if all(r["measured"] < r["bound"] for r in rows) else 1


def cmd_decompose(args) -> int:
    f, _ = _load(args)
    for c, t in decompose(f):
        parts = " ".join("(" + ",".join(str(e) for e in p) + ")" for p in t) or "()"
        print(f"{c}\t{parts}")
    return 0


def cmd_selftest(args) -> int:
    ok = True
    for claim in harness.run_selftest(args.seed):
        ok &= claim.passed
        print(f"{'PASS' if claim.passed else 'FAIL'}  {claim.claim_id}  measured={claim.measured!r}")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polyformer", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="compile a polynomial into a Transformer (JSON)")
    _add_poly_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("eval", help="run a compiled network on an input matrix")
    p.add_argument("--net", required=True)
    p.add_argument("--input", required=True, help="JSON matrix: nested list or {rows, cols, values}")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("verify", help="check every error and size bound; nonzero exit on failure")
    _add_poly_args(p)
    _add_sampler_args(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="measured error and size over a grid of (N, L)")
    _add_poly_args(p, budget=False)
    _add_sampler_args(p)
    p.add_argument("--N-list", dest="N_list", type=_int_list, default=[2, 4, 8])
    p.add_argument("--L-list", dest="L_list", type=_int_list, default=[1, 2, 3])
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("decompose", help="coefficients on the monomial column-symmetric basis")
    _add_poly_args(p, budget=False)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("selftest", help="cross-check the exact oracles against each other")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
