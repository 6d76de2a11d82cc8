"""Exact first-hitting distributions and constrained path-class probabilities.

The chain starts at the root and is killed on the outer layer.  For either
boundary layer, the joint law of (first hitting time, hitting place) is
computed by forward dynamic programming: a sub-probability vector is pushed
over the non-target vertices and the mass stepping onto the target layer is
harvested at each time.  All sums involve nonnegative terms only, so the
float path has no cancellation; with rational kernels every value is exact.

``brute_force_hitting`` recomputes the same object by explicit path
enumeration and serves as the independent oracle in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .chain_model import Number, TransitionKernel, acc_rows, validate_kernel
from .errors import (
    InvalidKernel,
    InvalidQuery,
    MissingKnownRow,
    TooLarge,
)
from .tree_model import AugmentedTree

INNER = "inner"
OUTER = "outer"

BRUTE_T_CAP = 16
BRUTE_VERTEX_CAP = 12


@dataclass
class HittingDistribution:
    """Sparse joint law of (first hitting time, hitting place) for one layer.

    ``mass[(t, v)]`` is the probability that the walk first touches the layer
    at time ``t``, doing so at vertex ``v``.  Cells absent from ``mass`` are
    zero.  ``max_time_read`` tracks the largest time index ever queried
    through :meth:`prob`, which is how the recovery's data-usage bound is
    audited.
    """

    layer: str
    start: int
    t_max: int
    mass: dict[tuple[int, int], Number] = field(default_factory=dict)
    max_time_read: int = -1

    def prob(self, t: int, v: int) -> Number:
        if t > self.t_max:
            raise InvalidQuery(
                f"time {t} beyond computed horizon {self.t_max} for {self.layer} layer"
            )
        if t > self.max_time_read:
            self.max_time_read = t
        return self.mass.get((t, v), 0)

    def total(self, up_to: int | None = None) -> Number:
        horizon = self.t_max if up_to is None else up_to
        return sum(p for (t, _), p in self.mass.items() if t <= horizon)

    def support(self) -> list[tuple[int, int]]:
        return sorted(self.mass)


def _layer_set(aug: AugmentedTree, layer: str) -> frozenset[int]:
    if layer == INNER:
        return aug.inner_layer
    if layer == OUTER:
        return aug.outer_layer
    raise InvalidQuery(f"unknown layer {layer!r}")


def first_hitting_joint(
    aug: AugmentedTree,
    kernel: TransitionKernel,
    layer: str,
    t_max: int,
) -> HittingDistribution:
    """Joint hitting law for ``layer``, all times ``t <= t_max``.

    Parameters
    ----------
    aug : AugmentedTree
        Tree with marked boundary layers.
    kernel : TransitionKernel
        Full chain on ``aug.full``; validated before use.
    layer : str
        ``"inner"`` or ``"outer"``.
    t_max : int
        Largest time index to compute.

    Raises
    ------
    InvalidKernel
        If the kernel fails validation.
    """
    if t_max < 0:
        raise InvalidQuery(f"t_max must be >= 0, got {t_max}")
    bad = validate_kernel(aug, kernel)
    if bad:
        first = bad[0]
        raise InvalidKernel(f"{first.kind} at vertex {first.vertex}: {first.detail}")
    target = _layer_set(aug, layer)
    dist = HittingDistribution(layer, aug.full.root, t_max)
    if aug.full.root in target:
        dist.mass[(0, aug.full.root)] = 1
        return dist
    rows = acc_rows(kernel)
    cur: dict[int, Number] = {aug.full.root: 1}
    for t in range(1, t_max + 1):
        nxt: dict[int, Number] = {}
        for v, p in cur.items():
            row = rows.get(v)
            if row is None:
                continue  # absorbed off-target (outer while targeting inner)
            for w, q in row.items():
                m = p * q
                if w in target:
                    key = (t, w)
                    dist.mass[key] = dist.mass.get(key, 0) + m
                else:
                    nxt[w] = nxt.get(w, 0) + m
        cur = nxt
        if not cur:
            break
    return dist


@dataclass(frozen=True)
class PathClassQuery:
    """Constrained first-passage event.

    The event: starting from ``start``, the first visit to ``target`` happens
    exactly at ``exact_hit_time``, and every earlier position has norm at
    least ``min_shell`` and strictly less than ``max_shell_strict`` (and lies
    in the subtree of ``restrict_to_subtree`` when that is set).  The target
    itself may sit outside the shell band.
    """

    start: int
    target: frozenset[int]
    exact_hit_time: int
    min_shell: int = 0
    max_shell_strict: int | None = None
    restrict_to_subtree: int | None = None


def path_class_prob(
    aug: AugmentedTree,
    kernel: TransitionKernel,
    query: PathClassQuery,
) -> Number:
    """Probability of a :class:`PathClassQuery` under ``kernel``.

    Only rows of vertices inside the shell band are read, so a kernel that is
    known merely on that band is sufficient.
    """
    if not query.target:
        raise InvalidQuery("target set is empty")
    if query.exact_hit_time < 0:
        raise InvalidQuery("exact_hit_time must be >= 0")
    hi = query.max_shell_strict
    if hi is not None and query.min_shell >= hi:
        raise InvalidQuery(
            f"shell bounds inconsistent: [{query.min_shell}, {hi})"
        )
    norm = aug.full.norm
    allowed_sub = (
        None
        if query.restrict_to_subtree is None
        else set(aug.full.subtree(query.restrict_to_subtree))
    )

    def in_band(v: int) -> bool:
        if norm[v] < query.min_shell:
            return False
        if hi is not None and norm[v] >= hi:
            return False
        if allowed_sub is not None and v not in allowed_sub:
            return False
        return True

    if query.exact_hit_time == 0:
        return 1 if query.start in query.target else 0
    if query.start in query.target or not in_band(query.start):
        return 0

    rows = acc_rows(kernel)
    cur: dict[int, Number] = {query.start: 1}
    for t in range(1, query.exact_hit_time + 1):
        last = t == query.exact_hit_time
        nxt: dict[int, Number] = {}
        hit: Number = 0
        for v, p in cur.items():
            if v not in rows:
                raise MissingKnownRow(f"row for vertex {v} required but absent")
            for w, q in rows[v].items():
                if w in query.target:
                    if last:
                        hit = hit + p * q
                elif in_band(w):
                    nxt[w] = nxt.get(w, 0) + p * q
        if last:
            return hit
        cur = nxt
        if not cur:
            return 0
    return 0


def brute_force_hitting(
    aug: AugmentedTree,
    kernel: TransitionKernel,
    layer: str,
    t_max: int,
    t_cap: int = BRUTE_T_CAP,
    vertex_cap: int = BRUTE_VERTEX_CAP,
) -> HittingDistribution:
    """Hitting law by explicit enumeration of every path from the root.

    Independent of the dynamic program: walks the tree recursively,
    multiplying transition probabilities along each path and recording the
    first step onto the target layer.  Guarded by size caps.
    """
    if t_max > t_cap:
        raise TooLarge(f"t_max {t_max} exceeds oracle cap {t_cap}")
    if aug.full.vertex_count > vertex_cap:
        raise TooLarge(
            f"{aug.full.vertex_count} vertices exceed oracle cap {vertex_cap}"
        )
    target = _layer_set(aug, layer)
    dist = HittingDistribution(layer, aug.full.root, t_max)

    def walk(v: int, t: int, p: Number) -> None:
        if v in target:
            key = (t, v)
            dist.mass[key] = dist.mass.get(key, 0) + p
            return
        if t == t_max or v not in kernel.entries:
            return
        for w, q in kernel.entries[v].items():
            walk(w, t + 1, p * q)

    walk(aug.full.root, 0, 1)
    return dist
