"""Command-line front end: sweeps, transition reports and oracle comparisons."""
from __future__ import annotations

import argparse
import os
import sys

from .broadcast import BroadcastParams
from .errors import (
    DomainError,
    InsufficientData,
    InvalidArgument,
    OutOfRange,
    OutputError,
    RegimeError,
    StatMechError,
    TooLarge,
    UnsupportedModel,
)
from .iid import IidParams
from .oracle import BroadcastCode, GaussianIid, SparseInstance, SphereCode, TreeCode
from .sparse import PriorExponent, SparseParams
from .sphere import SphereParams
from .sweep import (
    DEFAULT_JUMP_TOL,
    DEFAULT_KINK_TOL,
    SweepSpec,
    compare_oracle,
    detect_transitions,
    emit,
    oracle_sweep,
    run_metadata,
    run_sweep,
)
from .tree import TreeParams

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_REGIME = 3
EXIT_MISMATCH = 4

THREADS_ENV = "STATMECH_MMSE_THREADS"
MODEL_COMMANDS = ("iid", "sphere", "broadcast", "tree", "sparse")
_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


class _Parser(argparse.ArgumentParser):
    """Raises instead of exiting so every failure maps onto the exit-code table."""

    def error(self, message):
        raise InvalidArgument(message)


def _shared(p):
    g = p.add_argument_group("sweep and output")
    g.add_argument("--beta-min", type=float, default=0.1)
    g.add_argument("--beta-max", type=float, default=10.0)
    g.add_argument("--points", type=int, default=200)
    g.add_argument("--log", action="store_true", help="log-spaced SNR grid")
    g.add_argument("--out", default=None, help="output path (default: standard output)")
    g.add_argument("--format", choices=("csv", "json"), default="csv")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--quad-order", type=int, default=None, help="Gauss-Hermite order for the sparse model")
    g.add_argument("--jump-tol", type=float, default=DEFAULT_JUMP_TOL)
    g.add_argument("--kink-tol", type=float, default=DEFAULT_KINK_TOL)
    g.add_argument("--threads", type=int, default=None, help=f"worker threads (also ${THREADS_ENV})")
    g.add_argument("--config", default=None, help="flat key=value file; command-line flags win")


def _model_args(p, kind):
    if kind == "iid":
        p.add_argument("--px", type=float, default=1.0)
    elif kind == "sphere":
        p.add_argument("--px", type=float, default=1.0)
        p.add_argument("--rate", type=float, default=0.5)
    elif kind == "broadcast":
        p.add_argument("--r1", type=float, default=0.1)
        p.add_argument("--r2", type=float, default=0.6206)
        p.add_argument("--alpha", type=float, default=0.7129)
    elif kind == "tree":
        p.add_argument("--lambda1", type=float, default=0.5)
        p.add_argument("--r1", type=float, default=0.2)
        p.add_argument("--r2", type=float, default=0.8)
    elif kind == "sparse":
        p.add_argument("--sigma2", type=float, default=1.0)
        p.add_argument("--a", type=float, default=0.0)
        p.add_argument("--b", type=float, default=0.0)


def _all_model_args(p):
    p.add_argument("--model", choices=MODEL_COMMANDS, required=True)
    p.add_argument("--n", type=int, required=True, help="block length of the finite instance")
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--code-seed", type=int, default=None, help="codebook seed (default: --seed)")
    p.add_argument("--px", type=float, default=1.0)
    p.add_argument("--rate", type=float, default=0.5)
    p.add_argument("--r1", type=float, default=None)
    p.add_argument("--r2", type=float, default=None)
    p.add_argument("--alpha", type=float, default=0.7129)
    p.add_argument("--lambda1", type=float, default=0.5)
    p.add_argument("--sigma2", type=float, default=1.0)
    p.add_argument("--a", type=float, default=0.0)
    p.add_argument("--b", type=float, default=0.0)


def build_parser():
    parser = _Parser(prog="statmech-mmse", description=__doc__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True
    subs = {}
    for kind in MODEL_COMMANDS:
        p = sub.add_parser(kind, help=f"asymptotic curve of the {kind} model")
        _model_args(p, kind)
        p.add_argument("--transitions", action="store_true", help="emit the transition report instead of the curve")
        _shared(p)
        subs[kind] = p
    p = sub.add_parser("oracle", help="finite-n Monte Carlo MMSE and free energy")
    _all_model_args(p)
    _shared(p)
    subs["oracle"] = p
    p = sub.add_parser("compare", help="asymptotic MMSE against the finite-n oracle")
    _all_model_args(p)
    _shared(p)
    subs["compare"] = p
    return parser, subs


def read_config(path):
    """``key = value`` lines; ``#`` starts a comment; keys use flag names without dashes."""
    out = {}
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as e:
        raise InvalidArgument(f"cannot read config {path}: {e.strerror or e}") from e
    for num, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidArgument(f"{path}:{num}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.lstrip("-").replace("-", "_")] = value
    return out


def _apply_config(parser, cfg):
    known = {a.dest: a for a in parser._actions}
    defaults = {}
    for key, value in cfg.items():
        if key not in known or key in ("help", "config"):
            raise InvalidArgument(f"unknown config key {key!r}")
        action = known[key]
        if isinstance(action, argparse._StoreTrueAction):
            if value.lower() not in _TRUE | _FALSE:
                raise InvalidArgument(f"config key {key!r} needs a boolean")
            defaults[key] = value.lower() in _TRUE
        else:
            # argparse runs string defaults through the argument's type and choices
            defaults[key] = value
    parser.set_defaults(**defaults)


def parse_args(argv):
    parser, subs = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        _apply_config(subs[args.command], read_config(args.config))
        args = parser.parse_args(argv)
        for action in subs[args.command]._actions:
            if action.choices is not None and getattr(args, action.dest, None) not in action.choices:
                raise InvalidArgument(f"invalid value for {action.dest}: {getattr(args, action.dest)!r}")
    return args


def _threads(args):
    if args.threads is not None:
        t = args.threads
    else:
        try:
            t = int(os.environ.get(THREADS_ENV, "1"))
        except ValueError:
            raise InvalidArgument(f"{THREADS_ENV} must be an integer") from None
    if t < 1:
        raise InvalidArgument("thread count must be >= 1")
    return t


def _sparse_params(args):
    kw = {}
    if args.quad_order is not None:
        kw["quad_order"] = args.quad_order
    return SparseParams(args.sigma2, PriorExponent.quadratic(args.a, args.b), **kw)


def make_model(args):
    kind = args.model if args.command in ("oracle", "compare") else args.command
    if kind == "iid":
        return IidParams(args.px)
    if kind == "sphere":
        return SphereParams(args.px, args.rate)
    if kind == "broadcast":
        return BroadcastParams(_pick(args.r1, 0.1), _pick(args.r2, 0.6206), args.alpha)
    if kind == "tree":
        return TreeParams(args.lambda1, _pick(args.r1, 0.2), _pick(args.r2, 0.8))
    return _sparse_params(args)


def _pick(value, default):
    return default if value is None else value


def make_instance(args):
    seed = args.seed if args.code_seed is None else args.code_seed
    n = args.n
    if args.model == "iid":
        return GaussianIid(n, args.px)
    if args.model == "sphere":
        return SphereCode(n, args.rate, args.px, seed)
    if args.model == "broadcast":
        return BroadcastCode(n, _pick(args.r1, 0.1), _pick(args.r2, 0.6206), args.alpha, seed)
    if args.model == "tree":
        return TreeCode(n, args.lambda1, _pick(args.r1, 0.2), _pick(args.r2, 0.8), seed)
    return SparseInstance(n, args.sigma2, PriorExponent.quadratic(args.a, args.b))


def _sweep(args):
    return SweepSpec(args.beta_min, args.beta_max, args.points, "log" if args.log else "linear")


def run(args, stderr=sys.stderr):
    sweep = _sweep(args)
    threads = _threads(args)
    model = make_model(args)
    sweep_meta = {"beta_min": sweep.beta_min, "beta_max": sweep.beta_max,
                  "points": sweep.points, "scale": sweep.scale}
    if args.command in MODEL_COMMANDS:
        curve = run_sweep(model, sweep, threads=threads)
        if args.transitions:
            report = detect_transitions(curve, args.jump_tol, args.kink_tol, model=model)
            meta = run_metadata(model, args.seed, sweep=sweep_meta, jump_tol=args.jump_tol, kink_tol=args.kink_tol)
            emit(report, args.format, args.out, meta)
        else:
            emit(curve, args.format, args.out, run_metadata(model, args.seed, sweep=sweep_meta))
        return EXIT_OK
    inst = make_instance(args)
    meta = run_metadata(model, args.seed, inst=inst, sweep=sweep_meta, samples=args.samples)
    if args.command == "oracle":
        emit(oracle_sweep(inst, sweep, args.samples, args.seed, threads=threads), args.format, args.out, meta)
        return EXIT_OK
    table = compare_oracle(model, inst, sweep, args.samples, args.seed, threads=threads)
    meta["exact_at_finite_n"] = table.exact
    emit(table, args.format, args.out, meta)
    if table.hard_failure:
        worst = max(abs(r.z) for r in table.failures())
        print(f"error: oracle disagrees with the exact asymptotics (max |z| = {worst:.3g})", file=stderr)
        return EXIT_MISMATCH
    if table.failures():
        print("note: |z| > 4 on an asymptotic-only branch (advisory)", file=stderr)
    return EXIT_OK


def main(argv=None, stderr=sys.stderr):
    argv = sys.argv[1:] if argv is None else list(argv)
    if any(a in ("-h", "--help") for a in argv):
        build_parser()[0].parse_args(argv)  # argparse prints help and exits 0
    try:
        return run(parse_args(argv), stderr=stderr)
    except (RegimeError, TooLarge) as e:
        dim = getattr(e, "dimension", None)
        suffix = f" [dimension: {dim}]" if dim is not None else ""
        print(f"error: {e}{suffix}", file=stderr)
        return EXIT_REGIME
    except OutputError as e:
        print(f"error: {e}", file=stderr)
        return EXIT_INVALID
    except (InvalidArgument, DomainError, OutOfRange, InsufficientData, UnsupportedModel) as e:
        print(f"error: {e}", file=stderr)
        return EXIT_INVALID
    except StatMechError as e:
        print(f"error: {e}", file=stderr)
        return EXIT_REGIME


if __name__ == "__main__":
    sys.exit(main())
