"""Transition kernels for nearest-neighbor chains on augmented trees.

A kernel assigns every non-absorbing vertex a strictly positive probability
row over its neighbors.  Outer-layer vertices carry no row: the walk stops
there.  Rows are tagged with a provenance flag so the tomography step knows
which rows are measurement targets (``unknown``), which are given
(``known``), and which it has already solved (``recovered``).

Two arithmetic modes are supported end to end: ``float`` (doubles) and
``rational`` (exact :class:`fractions.Fraction` entries).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import DegreeMismatch, InvalidParameter, MissingRow
from .tree_model import AugmentedTree

KNOWN = "known"
UNKNOWN = "unknown"
RECOVERED = "recovered"

FLOAT = "float"
RATIONAL = "rational"

ROW_SUM_TOL = 1e-12

Number = float | Fraction


def acc_rows(kernel: "TransitionKernel") -> dict[int, dict[int, Number]]:
    """Kernel rows in the accumulation type of the kernel's mode.

    Float-mode arithmetic runs internally on extended-precision scalars: the
    inversion subtracts nearly equal hitting masses, and the extra mantissa
    bits keep the round trip comfortably inside its double-precision
    tolerance.  Rational rows pass through unchanged.
    """
    if kernel.mode == RATIONAL:
        return kernel.entries
    return {
        u: {v: np.longdouble(p) for v, p in row.items()}
        for u, row in kernel.entries.items()
    }


def settle(value, mode: str) -> Number:
    """Cast an accumulation-type value back to the mode's public type."""
    return value if mode == RATIONAL else float(value)


@dataclass
class TransitionKernel:
    """Per-vertex probability rows plus provenance flags.

    ``entries[u][v]`` is the one-step probability of moving from ``u`` to its
    neighbor ``v``.  Absorbing vertices are simply absent from ``entries``.
    """

    entries: dict[int, dict[int, Number]]
    provenance: dict[int, str] = field(default_factory=dict)
    mode: str = FLOAT

    def row(self, u: int) -> dict[int, Number]:
        try:
            return self.entries[u]
        except KeyError:
            raise MissingRow(f"no transition row for vertex {u}") from None

    def prob(self, u: int, v: int) -> Number:
        return self.row(u)[v]

    def copy(self) -> "TransitionKernel":
        return TransitionKernel(
            {u: dict(r) for u, r in self.entries.items()},
            dict(self.provenance),
            self.mode,
        )

    def restricted_to(self, flags: set[str]) -> "TransitionKernel":
        """Kernel containing only rows whose provenance is in ``flags``."""
        keep = {u for u, f in self.provenance.items() if f in flags}
        return TransitionKernel(
            {u: dict(r) for u, r in self.entries.items() if u in keep},
            {u: f for u, f in self.provenance.items() if u in keep},
            self.mode,
        )


@dataclass(frozen=True)
class KernelViolation:
    vertex: int
    kind: str
    detail: str = ""


def validate_kernel(aug: AugmentedTree, kernel: TransitionKernel) -> list[KernelViolation]:
    """Check support, positivity, row sums, and outer-layer absorption.

    Returns an empty list iff the kernel is a valid nondegenerate chain on
    ``aug.full`` killed at the outer layer.
    """
    out: list[KernelViolation] = []
    full = aug.full
    for v in sorted(aug.outer_layer):
        if v in kernel.entries and kernel.entries[v]:
            out.append(KernelViolation(v, "AbsorbingRow", "outer vertex has a row"))
    for u in range(full.vertex_count):
        if u in aug.outer_layer:
            continue
        if u not in kernel.entries:
            out.append(KernelViolation(u, "MissingRow"))
            continue
        row = kernel.entries[u]
        nbrs = set(full.neighbors(u))
        if set(row) != nbrs:
            out.append(KernelViolation(u, "Support", f"{sorted(row)} != {sorted(nbrs)}"))
            continue
        if any(p <= 0 for p in row.values()):
            out.append(KernelViolation(u, "Nondegenerate", "nonpositive entry"))
            continue
        s = sum(row.values())
        if kernel.mode == RATIONAL:
            ok = s == 1
        else:
            ok = abs(s - 1) <= ROW_SUM_TOL
        if not ok:
            out.append(KernelViolation(u, "RowSum", f"sum = {s}"))
    return out


def _half(mode: str) -> Number:
    return Fraction(1, 2) if mode == RATIONAL else 0.5


def _one(mode: str) -> Number:
    return Fraction(1) if mode == RATIONAL else 1.0


def default_augmented_kernel(
    aug: AugmentedTree, base: TransitionKernel
) -> TransitionKernel:
    """Extend base-tree rows to the full augmented chain.

    Every vertex that is neither an internal base vertex nor outer-layer gets
    the symmetric (1/2, 1/2) row over its two neighbors, flagged known.  Base
    rows are copied and flagged unknown: they are the recovery targets.  A
    degree-1 root is forced to probability one and flagged known, since
    nondegeneracy leaves it no freedom.
    """
    mode = base.mode
    full = aug.full
    internal = set(range(aug.base.vertex_count)) - set(aug.base.terminals())
    entries: dict[int, dict[int, Number]] = {}
    prov: dict[int, str] = {}
    for u in range(full.vertex_count):
        if u in aug.outer_layer:
            continue
        nbrs = full.neighbors(u)
        if u in internal:
            if u == full.root and len(nbrs) == 1:
                entries[u] = {nbrs[0]: _one(mode)}
                prov[u] = KNOWN
                continue
            if u not in base.entries:
                raise MissingRow(f"base kernel lacks a row for internal vertex {u}")
            entries[u] = dict(base.entries[u])
            prov[u] = UNKNOWN
        else:
            if len(nbrs) != 2:
                raise DegreeMismatch(
                    f"vertex {u} should have exactly 2 neighbors, has {len(nbrs)}"
                )
            entries[u] = {nbrs[0]: _half(mode), nbrs[1]: _half(mode)}
            prov[u] = KNOWN
    return TransitionKernel(entries, prov, mode)


LAMBDA_ONLY = "lambda"
ALL_VERTICES = "all"


def random_kernel(
    aug: AugmentedTree,
    seed: int,
    floor: float = 0.05,
    scope: str = LAMBDA_ONLY,
    mode: str = FLOAT,
    denominator: int = 64,
) -> TransitionKernel:
    """Reproducible random kernel with all entries at least ``floor``.

    ``scope`` selects which rows are randomized: ``"lambda"`` draws rows on
    base-tree vertices only (added vertices get the symmetric walk),
    ``"all"`` also randomizes the added non-outer rows.  Base-tree rows are
    flagged unknown, added rows known.  Rows are drawn uniformly on the
    floor-truncated simplex; in rational mode entries are multiples of
    ``1/denominator`` summing exactly to one.
    """
    if scope not in (LAMBDA_ONLY, ALL_VERTICES):
        raise InvalidParameter(f"unknown scope {scope!r}")
    if not 0 < floor < 1:
        raise InvalidParameter(f"floor must lie in (0, 1), got {floor}")
    rng = np.random.default_rng(seed)
    full = aug.full
    entries: dict[int, dict[int, Number]] = {}
    prov: dict[int, str] = {}
    for u in range(full.vertex_count):
        if u in aug.outer_layer:
            continue
        nbrs = full.neighbors(u)
        lam = aug.is_original(u)
        prov[u] = UNKNOWN if lam else KNOWN
        d = len(nbrs)
        if d == 1:
            entries[u] = {nbrs[0]: _one(mode)}
            if u == full.root:
                prov[u] = KNOWN
            continue
        randomize = lam or scope == ALL_VERTICES
        if not randomize:
            entries[u] = {v: _half(mode) for v in nbrs}
            continue
        if floor * d >= 1:
            raise InvalidParameter(
                f"floor {floor} infeasible for degree-{d} vertex {u}"
            )
        raw = rng.dirichlet(np.ones(d))
        probs = floor + (1.0 - d * floor) * raw
        if mode == RATIONAL:
            # grid must leave room above the floor for every neighbor
            den = denominator
            while int(np.ceil(floor * den)) * d >= den:
                den *= 2
            lo = max(int(np.ceil(floor * den)), 1)
            counts = [max(lo, int(round(p * den))) for p in probs]
            counts[int(np.argmax(probs))] += den - sum(counts)
            if min(counts) < lo:
                # rounding pushed the largest cell below the floor: rebalance
                counts = [lo] * d
                counts[int(np.argmax(probs))] += den - lo * d
            entries[u] = {v: Fraction(c, den) for v, c in zip(nbrs, counts)}
        else:
            entries[u] = {v: float(p) for v, p in zip(nbrs, probs)}
    return TransitionKernel(entries, prov, mode)
