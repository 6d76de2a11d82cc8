"""Recovery of unknown transition rows from two boundary hitting laws.

The chain on a 2-spherically augmented tree is observed only through the
joint laws of first hitting time and place at the inner and outer boundary
layers.  Rows at added vertices are given; rows at base-tree vertices are
solved shell by shell, outermost first.

For a base vertex ``u`` at shell ``k`` with child ``w``, the observable
"first arrival in the outer targets below ``w`` at time ``3R+4-2k``" splits
over the time of the first visit to the inner layer.  Each piece with a late
first visit factors into a measured inner-hit probability times a
first-passage probability that involves only already-solved rows.  The lone
remaining family consists of paths that run straight out to the inner layer,
straight back up to ``u``, and straight out again through ``w``; its total
probability is the unknown ``t(u, w)`` times a coefficient built from solved
rows and boundary values, so the unknown drops out by division.

The out-and-back family is indexed by every inner vertex below ``u`` (the
first ballistic leg may descend through any child of ``u``, not only ``w``)
paired with every outer target below ``w``, and its coefficient factorizes
accordingly.  On chains and at the outermost shell this reduces to a single
product; the general form is what makes the recursion close on branching
trees, and it is validated against brute-force path enumeration in the test
suite.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .chain_model import (
    KNOWN,
    RATIONAL,
    RECOVERED,
    UNKNOWN,
    Number,
    TransitionKernel,
    settle,
)
from .errors import (
    FormatError,
    InvalidParameter,
    MissingKnownRow,
    NotAChild,
    NotInLambda,
    OutOfRange,
    RowSumViolation,
    ZeroDenominator,
)
from .forward_solver import HittingDistribution
from .tree_model import AugmentedTree, spherical_augmentation, star

CLAMP_EPS = 1e-6
ROOT_SUM_TOL = 1e-6
FLOAT_EDGE_SLACK = 1e-9


@dataclass(frozen=True)
class EdgeRecoveryPlan:
    """Geometry of one edge-recovery step.

    For the edge from ``vertex`` (shell ``shell`` of the base tree) to its
    child ``child``: ``hit_time`` is the outer-arrival time the step reads,
    ``num_classes`` how many inner-first-visit classes partition it,
    ``outer_targets`` the outer-layer vertices below ``child`` and
    ``inner_targets`` their parents on the inner layer.
    """

    shell: int
    vertex: int
    child: int
    hull_radius: int
    hit_time: int
    num_classes: int
    outer_targets: tuple[int, ...]
    inner_targets: tuple[int, ...]


@dataclass
class RecoveryReport:
    """Solved kernel plus diagnostics of one full recovery run."""

    kernel: TransitionKernel
    residuals: dict[int, Number] = field(default_factory=dict)
    max_error: Number | None = None
    times_accessed: dict[str, int] = field(default_factory=dict)
    flags: list[tuple[str, int]] = field(default_factory=list)
    shell_time_reads: dict[int, int] = field(default_factory=dict)
    raw_kernel: TransitionKernel | None = None


def make_plan(aug: AugmentedTree, u: int, w: int) -> EdgeRecoveryPlan:
    """Build the recovery plan for the edge ``u -> w``.

    Requires ``aug.aug_len == 2`` and ``u`` in the base tree.
    """
    if aug.aug_len != 2:
        raise InvalidParameter(
            f"recovery needs a 2-spherical augmentation, got aug_len={aug.aug_len}"
        )
    if u not in aug.origin or not aug.is_original(u):
        raise NotInLambda(f"vertex {u} is not a base-tree vertex")
    if w not in aug.full.children[u]:
        raise NotAChild(f"{w} is not a child of {u}")
    k = aug.full.norm[u]
    r = aug.hull_radius
    outer_targets = aug.layer_descendants(w, aug.outer_layer)
    inner_targets = aug.layer_descendants(w, aug.inner_layer)
    return EdgeRecoveryPlan(
        shell=k,
        vertex=u,
        child=w,
        hull_radius=r,
        hit_time=3 * r + 4 - 2 * k,
        num_classes=r + 2 - k,
        outer_targets=outer_targets,
        inner_targets=inner_targets,
    )


def tail_passage_probs(
    aug: AugmentedTree,
    kernel: TransitionKernel,
    plan: EdgeRecoveryPlan,
) -> dict[tuple[int, int], Number]:
    """First-passage probabilities of the tail classes, one per (vertex, class).

    Entry ``(v, l)`` is the probability that a walk started at inner vertex
    ``v`` first reaches ``plan.outer_targets`` after exactly ``2l-1`` steps
    while every earlier position stays at shells ``>= plan.shell + 1``.  A
    single backward recursion over the subtree of ``plan.child`` yields all
    entries; only rows at shells above ``plan.shell`` are read.
    """
    norm = aug.full.norm
    lo = plan.shell + 1
    hi = plan.hull_radius + 2
    band = [
        z
        for z in aug.full.subtree(plan.child)
        if lo <= norm[z] < hi and z not in plan.outer_targets
    ]
    targets = set(plan.outer_targets)
    horizon = 2 * plan.num_classes - 1

    to_acc = kernel.mode != RATIONAL
    conv: dict[int, dict[int, Number]] = {}

    def row(z: int) -> dict[int, Number]:
        got = conv.get(z)
        if got is None:
            try:
                r = kernel.entries[z]
            except KeyError:
                raise MissingKnownRow(
                    f"row for shell-{norm[z]} vertex {z} required but absent"
                ) from None
            got = {v: np.longdouble(p) for v, p in r.items()} if to_acc else r
            conv[z] = got
        return got

    psi: dict[int, Number] = {}
    for z in band:
        p = sum(q for x, q in row(z).items() if x in targets)
        if p:
            psi[z] = p
    table: dict[int, dict[int, Number]] = {1: psi}
    band_set = set(band)
    for s in range(2, horizon + 1):
        prev = table[s - 1]
        cur: dict[int, Number] = {}
        for z in band:
            acc: Number = 0
            for x, q in row(z).items():
                if x in band_set and x in prev:
                    acc = acc + q * prev[x]
            if acc:
                cur[z] = acc
        table[s] = cur
    return {
        (v, l): table[2 * l - 1].get(v, 0)
        for v in plan.inner_targets
        for l in range(1, plan.num_classes + 1)
    }


def _acc_one(kernel: TransitionKernel) -> Number:
    return 1 if kernel.mode == RATIONAL else np.longdouble(1)


def _up_product(aug: AugmentedTree, kernel: TransitionKernel, z: int, u: int) -> Number:
    """Product of inward transitions along the unique path from ``z`` up to ``u``."""
    acc = _acc_one(kernel)
    x = z
    while x != u:
        p = aug.full.parent[x]
        if p is None:
            raise NotAChild(f"{z} is not a descendant of {u}")
        acc = acc * kernel.prob(x, p)
        x = p
    return acc


def _down_product(aug: AugmentedTree, kernel: TransitionKernel, w: int, v: int) -> Number:
    """Product of outward transitions along the unique path from ``w`` down to ``v``."""
    chain = [v]
    while chain[-1] != w:
        p = aug.full.parent[chain[-1]]
        if p is None:
            raise NotAChild(f"{v} is not a descendant of {w}")
        chain.append(p)
    chain.reverse()
    acc = _acc_one(kernel)
    for a, b in zip(chain, chain[1:]):
        acc = acc * kernel.prob(a, b)
    return acc


def unknown_edge_coefficient(
    aug: AugmentedTree,
    kernel: TransitionKernel,
    plan: EdgeRecoveryPlan,
    p_out: HittingDistribution,
) -> Number:
    """Coefficient of the unknown edge probability in the arrival decomposition.

    This is the total probability, per unit of ``t(vertex, child)``, of the
    out-and-back path family: straight to some inner vertex below ``vertex``,
    straight back up, and straight out to some outer target below ``child``.
    The ballistic head is read off the outer law at time ``R + 2`` (one known
    factor divided out); the remaining factors are known up- and down-leg
    products.  The two legs are independent, so the sum factorizes.
    """
    u = plan.vertex
    r = plan.hull_radius
    head: Number = 0
    for z in aug.layer_descendants(u, aug.inner_layer):
        vz = aug.outer_child(z)
        ballistic = p_out.prob(r + 2, vz)
        if ballistic == 0:
            continue
        head = head + (ballistic / kernel.prob(z, vz)) * _up_product(aug, kernel, z, u)
    tail: Number = 0
    for v in plan.outer_targets:
        tail = tail + _down_product(aug, kernel, plan.child, v)
    return head * tail


def recover_edge(
    aug: AugmentedTree,
    kernel: TransitionKernel,
    plan: EdgeRecoveryPlan,
    p_in: HittingDistribution,
    p_out: HittingDistribution,
    clamp: bool = False,
    flags: list[tuple[str, int]] | None = None,
) -> Number:
    """Solve the single transition probability ``t(plan.vertex, plan.child)``.

    Subtracts every tail-class contribution from the outer arrival mass at
    ``plan.hit_time`` and divides by the out-and-back coefficient.  With
    analytic inputs the result is exact (rational mode) or accurate to
    roundoff; with empirical inputs it may leave [0, 1], in which case it is
    clamped and flagged when ``clamp`` is set and raised otherwise.
    """
    denom = unknown_edge_coefficient(aug, kernel, plan, p_out)
    if denom == 0:
        raise ZeroDenominator(
            f"edge ({plan.vertex}, {plan.child}): out-and-back coefficient is zero"
        )
    chis = tail_passage_probs(aug, kernel, plan)
    total: Number = 0
    for v in plan.outer_targets:
        total = total + p_out.prob(plan.hit_time, v)
    for l in range(1, plan.num_classes + 1):
        s = plan.hit_time - (2 * l - 1)
        for vstar in plan.inner_targets:
            c = chis[(vstar, l)]
            if c:
                total = total - p_in.prob(s, vstar) * c
    value = total / denom

    slack = 0 if kernel.mode == RATIONAL else FLOAT_EDGE_SLACK
    if value <= 0 or value > 1 + slack:
        if not clamp:
            raise OutOfRange(
                f"recovered t({plan.vertex},{plan.child}) = {value} outside (0, 1]"
            )
        if flags is not None:
            flags.append(("OutOfRange", plan.child))
        value = min(max(value, CLAMP_EPS), 1 - CLAMP_EPS)
    return value


def _coverage_check(r: int, p_in: HittingDistribution, p_out: HittingDistribution) -> None:
    need = 3 * r + 4
    if p_out.t_max < need:
        raise FormatError(
            f"outer law covers t <= {p_out.t_max}, recovery needs t <= {need}"
        )
    if p_in.t_max < need - 1:
        raise FormatError(
            f"inner law covers t <= {p_in.t_max}, recovery needs t <= {need - 1}"
        )


def recover_all(
    aug: AugmentedTree,
    known: TransitionKernel,
    p_in: HittingDistribution,
    p_out: HittingDistribution,
    reference: TransitionKernel | None = None,
    clamp: bool = False,
) -> RecoveryReport:
    """Recover every unknown base-tree row, outermost shell first.

    ``known`` must carry the given rows (added vertices, plus any base rows
    already known); base vertices without a row, or flagged unknown, are the
    targets.  Children edges are solved independently via
    :func:`recover_edge`; the inward entry is the row complement.  The
    report's ``shell_time_reads`` records the largest distribution time index
    touched while working on each shell.
    """
    if aug.aug_len != 2:
        raise InvalidParameter(
            f"recovery needs a 2-spherical augmentation, got aug_len={aug.aug_len}"
        )
    r = aug.hull_radius
    _coverage_check(r, p_in, p_out)

    work = known.copy()
    for u in range(aug.full.vertex_count):
        if u in work.entries and u not in work.provenance:
            work.provenance[u] = KNOWN
    raw_entries: dict[int, dict[int, Number]] = {}
    residuals: dict[int, Number] = {}
    flags: list[tuple[str, int]] = []
    shell_reads: dict[int, int] = {}

    orig_in, orig_out = p_in.max_time_read, p_out.max_time_read
    run_in, run_out = -1, -1
    root = aug.full.root
    for k in range(r, -1, -1):
        p_in.max_time_read = -1
        p_out.max_time_read = -1
        for u in aug.full.shell(k):
            if not aug.is_original(u):
                continue
            if work.provenance.get(u, UNKNOWN) in (KNOWN, RECOVERED):
                continue
            row: dict[int, Number] = {}
            for w in aug.full.children[u]:
                plan = make_plan(aug, u, w)
                row[w] = recover_edge(aug, work, plan, p_in, p_out, clamp, flags)
            child_sum = sum(row.values())
            if u == root:
                residuals[u] = child_sum - 1
                bad = (
                    child_sum != 1
                    if known.mode == RATIONAL
                    else abs(child_sum - 1) > ROOT_SUM_TOL
                )
                if bad:
                    if not clamp:
                        raise RowSumViolation(
                            f"root row sums to {child_sum}, expected 1"
                        )
                    flags.append(("RowSumViolation", u))
                if clamp:
                    raw_entries[u] = dict(row)
                    row = {w: p / child_sum for w, p in row.items()}
            else:
                comp = 1 - child_sum
                ok = 0 < comp < 1
                if not ok and not clamp:
                    raise RowSumViolation(
                        f"inward entry of vertex {u} is {comp}, outside (0, 1)"
                    )
                if not ok:
                    flags.append(("RowSumViolation", u))
                    comp = min(max(comp, CLAMP_EPS), 1 - CLAMP_EPS)
                residuals[u] = child_sum + comp - 1
                parent = aug.full.parent[u]
                row[parent] = comp  # type: ignore[index]
                if clamp:
                    raw_entries[u] = dict(row)
                    s = sum(row.values())
                    row = {w: p / s for w, p in row.items()}
            work.entries[u] = row
            work.provenance[u] = RECOVERED
        shell_reads[k] = max(p_in.max_time_read, p_out.max_time_read)
        run_in = max(run_in, p_in.max_time_read)
        run_out = max(run_out, p_out.max_time_read)
    p_in.max_time_read = max(orig_in, run_in)
    p_out.max_time_read = max(orig_out, run_out)

    mode = work.mode
    for u, flag in work.provenance.items():
        if flag == RECOVERED:
            work.entries[u] = {v: settle(p, mode) for v, p in work.entries[u].items()}
    residuals = {u: settle(x, mode) for u, x in residuals.items()}

    report = RecoveryReport(
        kernel=work,
        residuals=residuals,
        times_accessed={"inner": run_in, "outer": run_out},
        flags=flags,
        shell_time_reads=shell_reads,
    )
    if clamp and raw_entries:
        raw = work.copy()
        for u, row in raw_entries.items():
            raw.entries[u] = {v: settle(p, mode) for v, p in row.items()}
        report.raw_kernel = raw
    if reference is not None:
        report.max_error = kernel_max_error(work, reference)
    return report


def kernel_max_error(
    recovered: TransitionKernel, reference: TransitionKernel
) -> Number:
    """Largest absolute entry difference over recovered rows."""
    worst: Number = 0
    for u, flag in recovered.provenance.items():
        if flag != RECOVERED:
            continue
        for v, p in recovered.entries[u].items():
            d = abs(p - reference.entries[u][v])
            if d > worst:
                worst = d
    return worst


def recover_star(
    m: int,
    known: TransitionKernel,
    p_in: HittingDistribution,
    p_out: HittingDistribution,
    clamp: bool = False,
) -> TransitionKernel:
    """Closed-form recovery on the augmented star with ``m`` unit branches.

    Vertex ids follow the star constructor: root 0, branch vertices
    ``1..m``, inner layer ``m+1..2m``, outer layer ``2m+1..3m`` (branch ``j``
    runs ``0, j, m+j, 2m+j``).  For each branch the ratio of outer arrivals
    at times 5 and 3 minus the ratio of inner arrivals at times 4 and 2
    isolates the outward probability at shell one; the root entry then falls
    out of the time-2 inner arrival.
    """
    if m < 1:
        raise InvalidParameter(f"star needs at least one branch, got {m}")
    if p_out.t_max < 5:
        raise FormatError(f"outer law covers t <= {p_out.t_max}, star recovery needs 5")
    if p_in.t_max < 4:
        raise FormatError(f"inner law covers t <= {p_in.t_max}, star recovery needs 4")
    aug = spherical_augmentation(star(1, m), 2)

    result = known.copy()
    slack = 0 if known.mode == RATIONAL else FLOAT_EDGE_SLACK
    root_row: dict[int, Number] = {}
    for j in range(1, m + 1):
        inner_v = m + j
        outer_v = 2 * m + j
        po3 = p_out.prob(3, outer_v)
        po5 = p_out.prob(5, outer_v)
        pi2 = p_in.prob(2, inner_v)
        pi4 = p_in.prob(4, inner_v)
        t_back = known.prob(inner_v, j)
        if po3 == 0 or pi2 == 0 or t_back == 0:
            raise ZeroDenominator(f"branch {j}: a required boundary cell is zero")
        t_out = (po5 / po3 - pi4 / pi2) / t_back
        if t_out <= 0 or t_out > 1 + slack:
            if not clamp:
                raise OutOfRange(f"t({j},{inner_v}) = {t_out} outside (0, 1]")
            t_out = min(max(t_out, CLAMP_EPS), 1 - CLAMP_EPS)
        t_root = pi2 / t_out
        if t_root <= 0 or t_root > 1 + slack:
            if not clamp:
                raise OutOfRange(f"t(0,{j}) = {t_root} outside (0, 1]")
            t_root = min(max(t_root, CLAMP_EPS), 1 - CLAMP_EPS)
        t_out = settle(t_out, known.mode)
        result.entries[j] = {0: settle(1 - t_out, known.mode), inner_v: t_out}
        result.provenance[j] = RECOVERED
        root_row[j] = settle(t_root, known.mode)
    root_sum = sum(root_row.values())
    bad = (
        root_sum != 1
        if known.mode == RATIONAL
        else abs(root_sum - 1) > ROOT_SUM_TOL
    )
    if bad and not clamp:
        raise RowSumViolation(f"root row sums to {root_sum}, expected 1")
    if clamp:
        root_row = {j: p / root_sum for j, p in root_row.items()}
    result.entries[aug.full.root] = root_row
    result.provenance[aug.full.root] = RECOVERED
    return result
