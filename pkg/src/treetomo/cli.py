"""Command-line front end.

Subcommands wire generation, forward solving, inversion, sampling,
estimation, and round-trip verification into reproducible runs.  Every
command is a pure function of its flags and input files.  Exit codes:
0 ok, 2 format, 3 insufficient data, 4 out-of-range recovery, 5 internal.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import __version__
from .chain_model import FLOAT, KNOWN, TransitionKernel, random_kernel
from .errors import (
    FormatError,
    InsufficientData,
    InvalidParameter,
    OutOfRange,
    RowSumViolation,
    TreetomoError,
    ZeroDenominator,
)
from .estimation import collect_batch, consistency_curve, estimate_kernel
from .formats import (
    dump_batch,
    dump_distribution,
    dump_kernel,
    dump_report,
    dump_tree,
    parse_batch,
    parse_distribution,
    parse_kernel,
    parse_tree,
    read_text,
    write_text,
)
from .forward_solver import INNER, OUTER, first_hitting_joint
from .tomography import recover_all
from .tree_model import (
    AugmentedTree,
    RootedTree,
    random_tree,
    segment,
    spherical_augmentation,
    star,
)

EXIT_OK = 0
EXIT_FORMAT = 2
EXIT_INSUFFICIENT = 3
EXIT_OUT_OF_RANGE = 4
EXIT_INTERNAL = 5


def _default_seed() -> int:
    return int(os.environ.get("TREETOMO_SEED", "0"))


def _tree_source(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tree", help="builtin name (star, segment) or a tree file path")
    p.add_argument("--random-tree", action="store_true", help="generate a random tree")
    p.add_argument("--rout", type=int, help="outer radius for --random-tree")
    p.add_argument("--size", type=int, help="vertex count for --random-tree")
    p.add_argument("--l", type=int, help="arm length for star/segment builtins")
    p.add_argument("--n", type=int, help="branch count for the star builtin")
    p.add_argument("--k", type=int, default=0, help="second arm length for segment")


def _kernel_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--mode", choices=["float", "rational"], default="float")
    p.add_argument("--floor", type=float, default=0.05)
    p.add_argument("--scope", choices=["lambda", "all"], default="lambda")


def _resolve_tree(args: argparse.Namespace, seed: int) -> RootedTree:
    if args.random_tree:
        if args.rout is None:
            raise InvalidParameter("--random-tree requires --rout")
        return random_tree(args.rout, seed, args.size)
    if args.tree is None:
        raise InvalidParameter("one of --tree or --random-tree is required")
    if args.tree == "star":
        if args.l is None or args.n is None:
            raise InvalidParameter("star builtin requires --l and --n")
        return star(args.l, args.n)
    if args.tree == "segment":
        if args.l is None:
            raise InvalidParameter("segment builtin requires --l (and optionally --k)")
        return segment(args.k, args.l)
    tree = parse_tree(read_text(args.tree))
    return tree.base if isinstance(tree, AugmentedTree) else tree


def _load_aug(path: str) -> AugmentedTree:
    tree = parse_tree(read_text(path))
    if not isinstance(tree, AugmentedTree):
        raise FormatError(f"{path} holds a plain tree, an augmented tree is required")
    return tree


def _outdir(args: argparse.Namespace) -> Path:
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _gen_objects(args: argparse.Namespace, seed: int):
    base = _resolve_tree(args, seed)
    aug = spherical_augmentation(base, args.aug_len)
    kernel = random_kernel(
        aug, seed, floor=args.floor, scope=args.scope, mode=args.mode
    )
    return aug, kernel


def cmd_gen(args: argparse.Namespace) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    aug, kernel = _gen_objects(args, seed)
    out = _outdir(args)
    write_text(out / "tree.txt", dump_tree(aug))
    write_text(out / "kernel.txt", dump_kernel(kernel))
    write_text(out / "known.txt", dump_kernel(kernel.restricted_to({KNOWN})))
    print(f"tree {aug.full.vertex_count} vertices, hull radius {aug.hull_radius}")
    return EXIT_OK


def cmd_forward(args: argparse.Namespace) -> int:
    aug = _load_aug(args.tree_file)
    kernel = parse_kernel(read_text(args.kernel_file))
    t_max = args.t_max if args.t_max is not None else 3 * aug.hull_radius + 4
    out = _outdir(args)
    for layer, name in ((INNER, "in.tsv"), (OUTER, "out.tsv")):
        dist = first_hitting_joint(aug, kernel, layer, t_max)
        write_text(out / name, dump_distribution(dist, kernel.mode))
    print(f"forward horizon {t_max}")
    return EXIT_OK


def cmd_invert(args: argparse.Namespace) -> int:
    aug = _load_aug(args.tree_file)
    known = parse_kernel(read_text(args.known_file))
    p_in = parse_distribution(read_text(args.in_dist), known.mode)
    p_out = parse_distribution(read_text(args.out_dist), known.mode)
    reference = (
        parse_kernel(read_text(args.reference)) if args.reference else None
    )
    report = recover_all(aug, known, p_in, p_out, reference=reference)
    out = _outdir(args)
    write_text(out / "report.txt", dump_report(report))
    print(f"max_time_read {max(report.times_accessed.values())}")
    if report.max_error is not None:
        print(f"max_error {float(report.max_error):.17g}")
    return EXIT_OK


def cmd_sample(args: argparse.Namespace) -> int:
    aug = _load_aug(args.tree_file)
    kernel = parse_kernel(read_text(args.kernel_file))
    seed = args.seed if args.seed is not None else _default_seed()
    batch = collect_batch(
        aug, kernel, args.n, seed, workers=args.workers, t_cap=args.t_cap
    )
    out = _outdir(args)
    write_text(out / "batch.txt", dump_batch(batch))
    print(f"sampled {batch.n} walks, overflow {batch.overflow}")
    return EXIT_OK


def cmd_estimate(args: argparse.Namespace) -> int:
    aug = _load_aug(args.tree_file)
    known = parse_kernel(read_text(args.known_file))
    batch = parse_batch(read_text(args.batch_file))
    reference = (
        parse_kernel(read_text(args.reference)) if args.reference else None
    )
    report = estimate_kernel(aug, known, batch, reference=reference)
    out = _outdir(args)
    write_text(out / "report.txt", dump_report(report))
    if report.max_error is not None:
        print(f"max_error {float(report.max_error):.17g}")
    print(f"flags {len(report.flags)}")
    return EXIT_OK


def cmd_roundtrip(args: argparse.Namespace) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    aug, kernel = _gen_objects(args, seed)
    t_max = args.t_max if args.t_max is not None else 3 * aug.hull_radius + 4
    p_in = first_hitting_joint(aug, kernel, INNER, t_max)
    p_out = first_hitting_joint(aug, kernel, OUTER, t_max)
    known = kernel.restricted_to({KNOWN})
    report = recover_all(aug, known, p_in, p_out, reference=kernel)
    if args.out:
        out = _outdir(args)
        write_text(out / "tree.txt", dump_tree(aug))
        write_text(out / "kernel.txt", dump_kernel(kernel))
        write_text(out / "report.txt", dump_report(report))
    print(f"max_error {float(report.max_error):.17g}")
    print(f"max_time_read {max(report.times_accessed.values())}")
    return EXIT_OK


def cmd_consistency(args: argparse.Namespace) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    aug, kernel = _gen_objects(args, seed)
    n_grid = [int(x) for x in args.n_grid.split(",")]
    seeds = [int(x) for x in args.seeds.split(",")]
    rows = consistency_curve(aug, kernel, n_grid, seeds, workers=args.workers)
    lines = ["n\tseed\tmax_error"]
    lines.extend(f"{n}\t{s}\t{e:.17g}" for n, s, e in rows)
    text = "\n".join(lines) + "\n"
    if args.out:
        out = _outdir(args)
        write_text(out / "consistency.tsv", text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="treetomo",
        description="Forward solving and exact inversion of killed walks on trees.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate an augmented tree and a kernel")
    _tree_source(p)
    _kernel_flags(p)
    p.add_argument("--aug-len", type=int, default=2)
    p.add_argument("--out")

    p = sub.add_parser("forward", help="compute both boundary hitting laws")
    p.add_argument("--tree-file", required=True)
    p.add_argument("--kernel-file", required=True)
    p.add_argument("--t-max", type=int, default=None)
    p.add_argument("--out")

    p = sub.add_parser("invert", help="recover unknown rows from hitting laws")
    p.add_argument("--tree-file", required=True)
    p.add_argument("--known-file", required=True)
    p.add_argument("--in-dist", required=True, help="inner-layer law file")
    p.add_argument("--out-dist", required=True, help="outer-layer law file")
    p.add_argument("--reference")
    p.add_argument("--out")

    p = sub.add_parser("sample", help="simulate probe walks into a batch file")
    p.add_argument("--tree-file", required=True)
    p.add_argument("--kernel-file", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--t-cap", type=int, default=None)
    p.add_argument("--out")

    p = sub.add_parser("estimate", help="plug-in estimation from a batch file")
    p.add_argument("--tree-file", required=True)
    p.add_argument("--known-file", required=True)
    p.add_argument("--batch-file", required=True)
    p.add_argument("--reference")
    p.add_argument("--out")

    p = sub.add_parser("roundtrip", help="generate, forward-solve, invert, compare")
    _tree_source(p)
    _kernel_flags(p)
    p.add_argument("--aug-len", type=int, default=2)
    p.add_argument("--t-max", type=int, default=None)
    p.add_argument("--out")

    p = sub.add_parser("consistency", help="estimation error versus sample size")
    _tree_source(p)
    _kernel_flags(p)
    p.add_argument("--aug-len", type=int, default=2)
    p.add_argument("--n-grid", default="10000,100000")
    p.add_argument("--seeds", default="1,2,3,4,5")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")

    return parser


_HANDLERS = {
    "gen": cmd_gen,
    "forward": cmd_forward,
    "invert": cmd_invert,
    "sample": cmd_sample,
    "estimate": cmd_estimate,
    "roundtrip": cmd_roundtrip,
    "consistency": cmd_consistency,
}


def _exit_code(exc: Exception) -> int:
    if isinstance(exc, (InsufficientData, ZeroDenominator)):
        return EXIT_INSUFFICIENT
    if isinstance(exc, (OutOfRange, RowSumViolation)):
        return EXIT_OUT_OF_RANGE
    if isinstance(exc, (FormatError, OSError)):
        return EXIT_FORMAT
    return EXIT_INTERNAL


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except (TreetomoError, OSError) as exc:
        code = _exit_code(exc)
        print(f"error {code} {type(exc).__name__}: {exc}", file=sys.stderr)
        return code
    except Exception as exc:  # pragma: no cover - defensive
        print(f"error {EXIT_INTERNAL} {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
