"""Shared instance generators for the test suite."""

from __future__ import annotations

from itertools import product

from treetomo import (
    KNOWN,
    TransitionKernel,
    random_kernel,
    spherical_augmentation,
)
from treetomo.tree_model import AugmentedTree, RootedTree, build_tree, random_tree


def rand_instance(
    seed: int,
    rout: int | None = None,
    mode: str = "float",
    scope: str = "all",
    size: int | None = None,
    floor: float = 0.05,
) -> tuple[AugmentedTree, TransitionKernel]:
    """Random augmented tree plus a full random kernel on it."""
    if rout is None:
        rout = 1 + seed % 4
    base = random_tree(rout, seed, size=size)
    aug = spherical_augmentation(base, 2)
    kernel = random_kernel(aug, seed + 1000, floor=floor, scope=scope, mode=mode)
    return aug, kernel


def known_part(kernel: TransitionKernel) -> TransitionKernel:
    return kernel.restricted_to({KNOWN})


def shape_signature(tree: RootedTree, v: int | None = None):
    """Canonical form of a rooted tree (isomorphism-invariant)."""
    if v is None:
        v = tree.root
    return tuple(sorted(shape_signature(tree, c) for c in tree.children[v]))


def small_bases(max_aug_vertices: int = 9) -> list[RootedTree]:
    """Every rooted tree shape whose 2-spherical augmentation stays small.

    Enumerates parent arrays (parent of vertex i is some j < i), filters by
    augmented size, and deduplicates up to rooted isomorphism.
    """
    seen = set()
    out: list[RootedTree] = []
    for b in range(2, max_aug_vertices + 1):
        for parents in product(*(range(i) for i in range(1, b))):
            tree = build_tree([(p, i) for i, p in enumerate(parents, start=1)], 0)
            r = max(tree.norm.values())
            aug_size = tree.vertex_count + sum(
                r - tree.norm[v] + 2 for v in tree.terminals()
            )
            if aug_size > max_aug_vertices:
                continue
            sig = shape_signature(tree)
            if sig in seen:
                continue
            seen.add(sig)
            out.append(tree)
    return out
