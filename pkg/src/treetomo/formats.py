"""Line-oriented text formats for every artifact the CLI reads or writes.

All formats are diffable plain text.  Floats are written with 17 significant
digits so a write/read trip is lossless; rationals are written ``num/den``
and round-trip bit-exactly.
"""

from __future__ import annotations

from fractions import Fraction

from .chain_model import FLOAT, RATIONAL, Number, TransitionKernel
from .errors import FormatError
from .estimation import SampleBatch
from .forward_solver import INNER, OUTER, HittingDistribution
from .tomography import RecoveryReport
from .tree_model import ADDED, ORIGINAL, AugmentedTree, RootedTree, build_tree


def _fmt(x: Number, mode: str) -> str:
    if mode == RATIONAL:
        f = Fraction(x)
        return f"{f.numerator}/{f.denominator}"
    return f"{float(x):.17g}"


def _parse_number(token: str, mode: str) -> Number:
    try:
        if "/" in token:
            num, den = token.split("/")
            value: Number = Fraction(int(num), int(den))
        else:
            value = float(token)
    except (ValueError, ZeroDivisionError) as exc:
        raise FormatError(f"bad probability token {token!r}") from exc
    if mode == RATIONAL and not isinstance(value, Fraction):
        value = Fraction(value)
    if mode == FLOAT and isinstance(value, Fraction):
        value = float(value)
    return value


def dump_tree(tree: RootedTree | AugmentedTree) -> str:
    """Serialize a plain or augmented tree."""
    aug = tree if isinstance(tree, AugmentedTree) else None
    t = aug.full if aug else tree
    lines = [f"tree {t.vertex_count} {t.root}"]
    lines.extend(f"edge {u} {v}" for u, v in t.edges())
    if aug:
        lines.extend(
            f"origin {v} {aug.origin[v]}" for v in range(t.vertex_count)
        )
        lines.append("layer inner " + " ".join(str(v) for v in sorted(aug.inner_layer)))
        lines.append("layer outer " + " ".join(str(v) for v in sorted(aug.outer_layer)))
    return "\n".join(lines) + "\n"


def parse_tree(text: str) -> RootedTree | AugmentedTree:
    """Parse :func:`dump_tree` output; returns an AugmentedTree when origin
    lines are present."""
    n = root = None
    edges: list[tuple[int, int]] = []
    origin: dict[int, str] = {}
    layers: dict[str, set[int]] = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "tree":
                n, root = int(parts[1]), int(parts[2])
            elif parts[0] == "edge":
                edges.append((int(parts[1]), int(parts[2])))
            elif parts[0] == "origin":
                if parts[2] not in (ORIGINAL, ADDED):
                    raise FormatError(f"bad origin flag {parts[2]!r}")
                origin[int(parts[1])] = parts[2]
            elif parts[0] == "layer":
                layers[parts[1]] = {int(x) for x in parts[2:]}
            else:
                raise FormatError(f"unknown record {parts[0]!r}")
        except (IndexError, ValueError) as exc:
            raise FormatError(f"bad tree line {line!r}") from exc
    if n is None or root is None:
        raise FormatError("missing tree header")
    full = build_tree(edges, root)
    if full.vertex_count != n:
        raise FormatError(f"header says {n} vertices, edges give {full.vertex_count}")
    if not origin:
        return full

    if set(origin) != set(range(n)):
        raise FormatError("origin flags do not cover all vertices")
    base_ids = sorted(v for v, o in origin.items() if o == ORIGINAL)
    if base_ids != list(range(len(base_ids))):
        raise FormatError("base vertex ids must form a prefix 0..k-1")
    base_edges = [(u, v) for u, v in edges if origin[u] == origin[v] == ORIGINAL]
    base = build_tree(base_edges, root)
    hull = max(base.norm.values())
    radius = max(full.norm.values())
    aug_len = radius - hull
    inner = frozenset(v for v in range(n) if full.norm[v] == radius - 1)
    outer = frozenset(v for v in range(n) if full.norm[v] == radius)
    if "inner" in layers and layers["inner"] != set(inner):
        raise FormatError("inner layer does not match shell structure")
    if "outer" in layers and layers["outer"] != set(outer):
        raise FormatError("outer layer does not match shell structure")
    return AugmentedTree(base, full, origin, hull, aug_len, inner, outer)


def dump_kernel(kernel: TransitionKernel) -> str:
    lines = [f"mode {kernel.mode}"]
    for u in sorted(kernel.entries):
        row = kernel.entries[u]
        cells = " ".join(f"{v}:{_fmt(p, kernel.mode)}" for v, p in sorted(row.items()))
        lines.append(f"row {u} {cells}")
    return "\n".join(lines) + "\n"


def parse_kernel(text: str, default_provenance: str = "known") -> TransitionKernel:
    mode = FLOAT
    entries: dict[int, dict[int, Number]] = {}
    saw_header = False
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "mode":
            if len(parts) != 2 or parts[1] not in (FLOAT, RATIONAL):
                raise FormatError(f"bad mode line {line!r}")
            mode = parts[1]
            saw_header = True
        elif parts[0] == "row":
            try:
                u = int(parts[1])
                row: dict[int, Number] = {}
                for cell in parts[2:]:
                    v, p = cell.split(":", 1)
                    row[int(v)] = _parse_number(p, mode)
                entries[u] = row
            except (IndexError, ValueError) as exc:
                raise FormatError(f"bad kernel line {line!r}") from exc
        else:
            raise FormatError(f"unknown record {parts[0]!r}")
    if not saw_header:
        raise FormatError("missing mode header")
    prov = {u: default_provenance for u in entries}
    return TransitionKernel(entries, prov, mode)


def dump_distribution(dist: HittingDistribution, mode: str = FLOAT) -> str:
    lines = [
        f"{dist.layer}\t{t}\t{v}\t{_fmt(p, mode)}"
        for (t, v), p in sorted(dist.mass.items())
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def parse_distribution(text: str, mode: str = FLOAT) -> HittingDistribution:
    layer = None
    mass: dict[tuple[int, int], Number] = {}
    t_max = -1
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 4 or parts[0] not in (INNER, OUTER):
            raise FormatError(f"bad distribution line {line!r}")
        if layer is None:
            layer = parts[0]
        elif parts[0] != layer:
            raise FormatError("distribution file mixes layers")
        try:
            t, v = int(parts[1]), int(parts[2])
        except ValueError as exc:
            raise FormatError(f"bad distribution line {line!r}") from exc
        mass[(t, v)] = _parse_number(parts[3], mode)
        t_max = max(t_max, t)
    if layer is None:
        raise FormatError("distribution file is empty")
    return HittingDistribution(layer, -1, t_max, mass)


def dump_batch(batch: SampleBatch) -> str:
    lines = [f"batch {batch.n} {batch.seed} {batch.t_cap}"]
    for tag, counts in (("in", batch.counts_in), ("out", batch.counts_out)):
        lines.extend(
            f"{tag} {t} {v} {c}" for (t, v), c in sorted(counts.items())
        )
    lines.append(f"overflow {batch.overflow}")
    return "\n".join(lines) + "\n"


def parse_batch(text: str) -> SampleBatch:
    batch: SampleBatch | None = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "batch":
                batch = SampleBatch(int(parts[1]), int(parts[2]), int(parts[3]))
            elif parts[0] in ("in", "out"):
                if batch is None:
                    raise FormatError("counts before batch header")
                counts = batch.counts_in if parts[0] == "in" else batch.counts_out
                counts[(int(parts[1]), int(parts[2]))] = int(parts[3])
            elif parts[0] == "overflow":
                if batch is None:
                    raise FormatError("overflow before batch header")
                batch.overflow = int(parts[1])
            else:
                raise FormatError(f"unknown record {parts[0]!r}")
        except (IndexError, ValueError) as exc:
            raise FormatError(f"bad batch line {line!r}") from exc
    if batch is None:
        raise FormatError("missing batch header")
    total = sum(batch.counts_out.values()) + batch.overflow
    if total != batch.n:
        raise FormatError(f"outer counts plus overflow {total} != n {batch.n}")
    return batch


def dump_report(report: RecoveryReport) -> str:
    out = [dump_kernel(report.kernel).rstrip("\n")]
    for code, vertex in report.flags:
        out.append(f"flag {code} {vertex}")
    if report.times_accessed:
        out.append(f"max_time_read {max(report.times_accessed.values())}")
    if report.max_error is not None:
        out.append(f"max_error {_fmt(report.max_error, report.kernel.mode)}")
    return "\n".join(out) + "\n"


def read_text(path) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def write_text(path, text: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
