"""Probe-walk simulation, empirical hitting laws, and the plug-in estimator.

Randomness is counter based: the uniform used by walk ``i`` at step ``t`` is
a pure function of ``(seed, i, t)``, so a batch is bit-identical no matter
how it is chunked across workers, and any single walk can be replayed in
isolation.  Batches are simulated in vectorized blocks; walks that have not
been absorbed by the time cap land in an overflow bucket and are excluded
from the empirical mass.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .chain_model import KNOWN, Number, TransitionKernel
from .errors import (
    InsufficientData,
    InvalidParameter,
    NonTermination,
    ZeroDenominator,
)
from .forward_solver import INNER, OUTER, HittingDistribution
from .tomography import RecoveryReport, recover_all
from .tree_model import AugmentedTree

_MASK = (1 << 64) - 1
_GOLD = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

STEP_CAP = 10**7
CHUNK = 1 << 18


def _mix(z: int) -> int:
    z = (z ^ (z >> 30)) * _MIX1 & _MASK
    z = (z ^ (z >> 27)) * _MIX2 & _MASK
    return z ^ (z >> 31)


def _mix_vec(z: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
        return z ^ (z >> np.uint64(31))


def _walk_base(seed: int, walk: int) -> int:
    return _mix((_mix(seed & _MASK) + (walk + 1) * _GOLD) & _MASK)


def _walk_base_vec(seed: int, walks: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = np.uint64(_mix(seed & _MASK)) + (walks + np.uint64(1)) * np.uint64(_GOLD)
    return _mix_vec(z)


def _u01(base: int, step: int) -> float:
    v = _mix((base + (step + 1) * _GOLD) & _MASK)
    return (v >> 11) * 2.0**-53


def _u01_vec(bases: np.ndarray, step: int) -> np.ndarray:
    with np.errstate(over="ignore"):
        v = _mix_vec(bases + np.uint64(((step + 1) * _GOLD) & _MASK))
    return (v >> np.uint64(11)) * 2.0**-53


class WalkStream:
    """Replayable uniform stream for one walk, derived from (seed, index)."""

    def __init__(self, seed: int, walk_index: int):
        self.seed = seed
        self.walk_index = walk_index
        self._base = _walk_base(seed, walk_index)

    def u(self, step: int) -> float:
        return _u01(self._base, step)


@dataclass(frozen=True)
class WalkSample:
    """First boundary contacts of a single probe walk."""

    tau_in: int
    place_in: int
    tau_out: int
    place_out: int


@dataclass
class SampleBatch:
    """Counted boundary observations of ``n`` independent probe walks."""

    n: int
    seed: int
    t_cap: int
    counts_in: dict[tuple[int, int], int] = field(default_factory=dict)
    counts_out: dict[tuple[int, int], int] = field(default_factory=dict)
    overflow: int = 0


def _float_rows(aug: AugmentedTree, kernel: TransitionKernel):
    """Sorted neighbors and float cumulative rows, absorbing vertices excluded."""
    rows: dict[int, tuple[list[int], list[float]]] = {}
    for u, row in kernel.entries.items():
        if u in aug.outer_layer or not row:
            continue
        nbrs = sorted(row)
        cum = list(itertools.accumulate(float(row[v]) for v in nbrs))
        rows[u] = (nbrs, cum)
    return rows


def sample_walk(
    aug: AugmentedTree, kernel: TransitionKernel, stream: WalkStream
) -> WalkSample:
    """Simulate one killed walk from the root to outer absorption.

    Records the first inner-layer and outer-layer contacts.  Raises
    :class:`NonTermination` after ``10**7`` steps, which indicates an invalid
    kernel rather than bad luck.
    """
    rows = _float_rows(aug, kernel)
    v = aug.full.root
    tau_in = place_in = -1
    t = 0
    while True:
        if t >= STEP_CAP:
            raise NonTermination(f"walk exceeded {STEP_CAP} steps")
        nbrs, cum = rows[v]
        u = stream.u(t)
        nxt = nbrs[-1]
        for i, c in enumerate(cum):
            if u < c:
                nxt = nbrs[i]
                break
        t += 1
        if tau_in < 0 and nxt in aug.inner_layer:
            tau_in, place_in = t, nxt
        if nxt in aug.outer_layer:
            return WalkSample(tau_in, place_in, t, nxt)
        v = nxt


def _simulate_block(
    walk_ids: np.ndarray,
    seed: int,
    t_cap: int,
    nbr_tab: np.ndarray,
    cum_tab: np.ndarray,
    is_inner: np.ndarray,
    is_outer: np.ndarray,
    root: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    nb = walk_ids.size
    bases = _walk_base_vec(seed, walk_ids.astype(np.uint64))
    state = np.full(nb, root, dtype=np.int64)
    alive = np.ones(nb, dtype=bool)
    tau_in = np.full(nb, -1, dtype=np.int64)
    place_in = np.full(nb, -1, dtype=np.int64)
    tau_out = np.full(nb, -1, dtype=np.int64)
    place_out = np.full(nb, -1, dtype=np.int64)
    for t in range(t_cap):
        idx = np.nonzero(alive)[0]
        if idx.size == 0:
            break
        u = _u01_vec(bases[idx], t)
        cum = cum_tab[state[idx]]
        j = np.minimum((cum <= u[:, None]).sum(axis=1), cum_tab.shape[1] - 1)
        nxt = nbr_tab[state[idx], j]
        fresh_in = is_inner[nxt] & (tau_in[idx] < 0)
        tau_in[idx[fresh_in]] = t + 1
        place_in[idx[fresh_in]] = nxt[fresh_in]
        hit_out = is_outer[nxt]
        tau_out[idx[hit_out]] = t + 1
        place_out[idx[hit_out]] = nxt[hit_out]
        alive[idx[hit_out]] = False
        state[idx] = nxt
    return tau_in, place_in, tau_out, place_out


def collect_batch(
    aug: AugmentedTree,
    kernel: TransitionKernel,
    n: int,
    seed: int,
    workers: int = 1,
    t_cap: int | None = None,
) -> SampleBatch:
    """Simulate ``n`` probe walks and tally boundary contacts.

    The result is bit-identical for a fixed ``(seed, n, t_cap)`` regardless
    of ``workers`` or internal chunking.  Walks not absorbed within
    ``t_cap`` steps are counted in the overflow bucket only.
    """
    if n < 1:
        raise InvalidParameter(f"sample count must be >= 1, got {n}")
    if workers < 1:
        raise InvalidParameter(f"workers must be >= 1, got {workers}")
    if t_cap is None:
        t_cap = max(3 * aug.hull_radius + 4, 64)

    full = aug.full
    nv = full.vertex_count
    maxdeg = max(len(r) for u, r in kernel.entries.items() if r) if kernel.entries else 1
    nbr_tab = np.zeros((nv, maxdeg), dtype=np.int64)
    cum_tab = np.full((nv, maxdeg), 2.0)
    for u, (nbrs, cum) in _float_rows(aug, kernel).items():
        d = len(nbrs)
        nbr_tab[u, :d] = nbrs
        nbr_tab[u, d:] = nbrs[-1]
        cum_tab[u, :d] = cum
    is_inner = np.zeros(nv, dtype=bool)
    is_outer = np.zeros(nv, dtype=bool)
    is_inner[list(aug.inner_layer)] = True
    is_outer[list(aug.outer_layer)] = True

    blocks = [
        np.arange(a, min(a + CHUNK, n), dtype=np.int64) for a in range(0, n, CHUNK)
    ]

    def run(block: np.ndarray):
        return _simulate_block(
            block, seed, t_cap, nbr_tab, cum_tab, is_inner, is_outer, full.root
        )

    if workers == 1 or len(blocks) == 1:
        results = [run(b) for b in blocks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, blocks))

    batch = SampleBatch(n=n, seed=seed, t_cap=t_cap)
    for tau_in, place_in, tau_out, place_out in results:
        done = tau_out >= 0
        batch.overflow += int((~done).sum())
        for key_t, key_v, counts in (
            (tau_in[done], place_in[done], batch.counts_in),
            (tau_out[done], place_out[done], batch.counts_out),
        ):
            pairs = np.stack([key_t, key_v], axis=1)
            uniq, cnt = np.unique(pairs, axis=0, return_counts=True)
            for (t, v), c in zip(uniq, cnt):
                k = (int(t), int(v))
                counts[k] = counts.get(k, 0) + int(c)
    return batch


def empirical_joint(
    batch: SampleBatch, t_max: int
) -> tuple[HittingDistribution, HittingDistribution]:
    """Empirical inner and outer hitting laws, ``count / n`` per cell."""
    if t_max > batch.t_cap:
        raise InvalidParameter(
            f"t_max {t_max} exceeds the batch time cap {batch.t_cap}"
        )
    dists = []
    for layer, counts in ((INNER, batch.counts_in), (OUTER, batch.counts_out)):
        mass = {
            (t, v): c / batch.n for (t, v), c in counts.items() if t <= t_max
        }
        dists.append(HittingDistribution(layer, -1, t_max, mass))
    return dists[0], dists[1]


def estimate_kernel(
    aug: AugmentedTree,
    known: TransitionKernel,
    batch: SampleBatch,
    reference: TransitionKernel | None = None,
) -> RecoveryReport:
    """Plug-in estimator: exact inversion applied to empirical hitting laws.

    Out-of-simplex recoveries are clamped and flagged; an empty empirical
    cell that the inversion needs surfaces as :class:`InsufficientData`.
    """
    need = 3 * aug.hull_radius + 4
    if batch.t_cap < need:
        raise InvalidParameter(
            f"batch time cap {batch.t_cap} below required horizon {need}"
        )
    p_in, p_out = empirical_joint(batch, batch.t_cap)
    try:
        return recover_all(aug, known, p_in, p_out, reference=reference, clamp=True)
    except ZeroDenominator as exc:
        raise InsufficientData(str(exc)) from exc


def consistency_curve(
    aug: AugmentedTree,
    kernel: TransitionKernel,
    n_grid: list[int],
    seeds: list[int],
    workers: int = 1,
) -> list[tuple[int, int, float]]:
    """Estimation error versus sample size, one row per (n, seed).

    The truth kernel supplies both the known rows fed to the estimator and
    the reference for the error; the error is the largest absolute entry
    deviation over estimated rows.
    """
    known = kernel.restricted_to({KNOWN})
    rows: list[tuple[int, int, float]] = []
    for n in n_grid:
        for seed in seeds:
            batch = collect_batch(aug, kernel, n, seed, workers=workers)
            report = estimate_kernel(aug, known, batch, reference=kernel)
            rows.append((n, seed, float(report.max_error)))
    return rows
