"""Finite rooted trees, shells, radii, and boundary-layer augmentations.

A rooted tree is stored with parents oriented away from the root and with
every vertex carrying its distance to the root (its norm).  The shell ``k``
of a tree is the set of vertices at norm ``k``; shells partition the vertex
set.  Augmentation glues chains onto terminal vertices so that every branch
reaches a common outer radius, which creates the two detector layers used by
the forward solver and the tomography recursion.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameter, NotATree, NotTerminal, UnknownVertex

ORIGINAL = "original"
ADDED = "added"


@dataclass(frozen=True)
class RootedTree:
    """Immutable rooted tree over vertex ids ``0..vertex_count-1``.

    ``parent[root]`` is None; ``children`` sequences are sorted ascending so
    iteration order is deterministic.  ``norm[v]`` is the edge distance from
    ``v`` to the root.
    """

    vertex_count: int
    root: int
    parent: dict[int, int | None]
    children: dict[int, tuple[int, ...]]
    norm: dict[int, int]
    labels: dict[int, str] | None = None

    def neighbors(self, v: int) -> tuple[int, ...]:
        """Parent (if any) followed by children, as one tuple."""
        p = self.parent[v]
        if p is None:
            return self.children[v]
        return (p,) + self.children[v]

    def degree(self, v: int) -> int:
        return len(self.neighbors(v))

    def shell(self, k: int) -> tuple[int, ...]:
        """Vertices at norm exactly ``k``, ascending."""
        return tuple(v for v in range(self.vertex_count) if self.norm[v] == k)

    def shells(self) -> dict[int, tuple[int, ...]]:
        out: dict[int, list[int]] = {}
        for v in range(self.vertex_count):
            out.setdefault(self.norm[v], []).append(v)
        return {k: tuple(sorted(vs)) for k, vs in out.items()}

    def terminals(self) -> tuple[int, ...]:
        """Degree-1 vertices, root excluded."""
        return tuple(
            v
            for v in range(self.vertex_count)
            if v != self.root and self.degree(v) == 1
        )

    def path_to_root(self, v: int) -> tuple[int, ...]:
        """Vertices from ``v`` up to and including the root."""
        out = [v]
        while self.parent[out[-1]] is not None:
            out.append(self.parent[out[-1]])  # type: ignore[arg-type]
        return tuple(out)

    def subtree(self, v: int) -> tuple[int, ...]:
        """All descendants of ``v`` including ``v`` (``v`` first), deterministic."""
        out = [v]
        stack = [v]
        while stack:
            for c in self.children[stack.pop()]:
                out.append(c)
                stack.append(c)
        return tuple(out)

    def edges(self) -> tuple[tuple[int, int], ...]:
        return tuple(
            (u, c) for u in range(self.vertex_count) for c in self.children[u]
        )


@dataclass(frozen=True)
class AugmentedTree:
    """A base tree embedded in its spherical augmentation.

    ``full`` is spherical with radius ``hull_radius + aug_len``; the outer
    layer is its terminal shell and the inner layer the shell just below it.
    Base vertex ids, parents, and norms are unchanged inside ``full``.
    """

    base: RootedTree
    full: RootedTree
    origin: dict[int, str]
    hull_radius: int
    aug_len: int
    inner_layer: frozenset[int]
    outer_layer: frozenset[int]

    def is_original(self, v: int) -> bool:
        return self.origin[v] == ORIGINAL

    def layer_descendants(self, v: int, layer: frozenset[int]) -> tuple[int, ...]:
        """Descendants of ``v`` (in ``full``) that belong to ``layer``."""
        return tuple(x for x in self.full.subtree(v) if x in layer)

    def outer_child(self, z: int) -> int:
        """The unique outer-layer child of an inner-layer vertex."""
        kids = self.full.children[z]
        if len(kids) != 1 or kids[0] not in self.outer_layer:
            raise InvalidParameter(f"vertex {z} is not an inner chain vertex")
        return kids[0]


def build_tree(
    edges: list[tuple[int, int]],
    root: int,
    labels: dict[int, str] | None = None,
) -> RootedTree:
    """Build a rooted tree from an undirected edge list.

    Args:
        edges: pairs of vertex ids; ids must be exactly ``0..n-1``.
        root: id of the root vertex.

    Raises:
        NotATree: on cycles, disconnection, duplicate edges, or id gaps.
        UnknownVertex: if ``root`` does not appear among the ids.
    """
    if not edges:
        raise NotATree("edge list is empty")
    ids: set[int] = set()
    seen = set()
    for u, v in edges:
        if u == v:
            raise NotATree(f"self-loop at {u}")
        key = (min(u, v), max(u, v))
        if key in seen:
            raise NotATree(f"duplicate edge {key}")
        seen.add(key)
        ids.add(u)
        ids.add(v)
    if root not in ids:
        raise UnknownVertex(f"root {root} not on any edge")
    n = max(ids) + 1
    if ids != set(range(n)):
        raise NotATree("vertex ids must be contiguous 0..n-1")
    if len(edges) != n - 1:
        raise NotATree(f"{len(edges)} edges for {n} vertices")

    adj: dict[int, list[int]] = {v: [] for v in range(n)}
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)

    parent: dict[int, int | None] = {root: None}
    norm = {root: 0}
    order = [root]
    for v in order:
        for w in adj[v]:
            if w not in norm:
                parent[w] = v
                norm[w] = norm[v] + 1
                order.append(w)
    if len(order) != n:
        raise NotATree("graph is disconnected")

    children = {
        v: tuple(sorted(w for w in adj[v] if parent.get(w) == v)) for v in range(n)
    }
    return RootedTree(n, root, parent, children, norm, labels)


def segment(k: int, l: int) -> RootedTree:
    """Two-armed path rooted at its junction: arms of length ``k`` and ``l``.

    Ids run 0 (root), then 1..l along one arm, then l+1..l+k along the
    other.  ``k == 0`` gives a plain path of ``l`` edges rooted at one end.
    """
    if k < 0 or l < 1:
        raise InvalidParameter(f"segment requires k >= 0 and l >= 1, got ({k}, {l})")
    edges = [(0, 1)] + [(i, i + 1) for i in range(1, l)]
    if k > 0:
        edges.append((0, l + 1))
        edges.extend((l + j, l + j + 1) for j in range(1, k))
    return build_tree(edges, 0)


def star(l: int, n: int) -> RootedTree:
    """``n`` chains of length ``l`` glued at a common root.

    Vertices are numbered shell by shell: the root is 0 and the shell-``s``
    vertex of branch ``j`` (1-based) is ``(s-1)*n + j``.
    """
    if l < 1 or n < 1:
        raise InvalidParameter(f"star requires l >= 1 and n >= 1, got ({l}, {n})")
    edges = [(0, j) for j in range(1, n + 1)]
    for s in range(2, l + 1):
        base = (s - 2) * n
        edges.extend((base + j, base + n + j) for j in range(1, n + 1))
    return build_tree(edges, 0)


def radii(tree: RootedTree) -> tuple[int, int, bool]:
    """Return ``(inner_radius, outer_radius, spherical)``.

    The outer radius is the maximum norm; the inner radius is the minimum
    norm over terminal vertices (root excluded from the terminal set).
    """
    r_out = max(tree.norm.values())
    terms = tree.terminals()
    if not terms:
        raise InvalidParameter("tree has no terminal vertex")
    r_in = min(tree.norm[v] for v in terms)
    return r_in, r_out, r_in == r_out


def l_augment_at(tree: RootedTree, v: int, l: int) -> RootedTree:
    """Glue a chain of ``l`` new vertices below terminal vertex ``v``.

    Original ids are preserved; the new chain gets ids
    ``n, n+1, ..., n+l-1`` in root-to-tip order.
    """
    if l < 1:
        raise InvalidParameter(f"chain length must be >= 1, got {l}")
    if v not in tree.norm:
        raise UnknownVertex(f"vertex {v} not in tree")
    if v == tree.root or tree.degree(v) != 1:
        raise NotTerminal(f"vertex {v} is not a terminal vertex")
    edges = list(tree.edges())
    n = tree.vertex_count
    prev = v
    for i in range(l):
        edges.append((prev, n + i))
        prev = n + i
    return build_tree(edges, tree.root)


def spherical_augmentation(tree: RootedTree, l: int) -> AugmentedTree:
    """Augment every terminal branch out to radius ``outer_radius + l``.

    Each terminal vertex ``v`` receives a chain of ``R - norm(v) + l`` new
    vertices, where ``R`` is the outer radius of ``tree``.  New ids are
    assigned level by level (all new vertices at a given norm come before any
    deeper ones, ordered by terminal id within a level), which matches the
    shell enumeration used throughout the recovery machinery.
    """
    if l < 1:
        raise InvalidParameter(f"augmentation length must be >= 1, got {l}")
    if tree.vertex_count < 2:
        raise InvalidParameter("tree must have at least one edge")
    r_out = max(tree.norm.values())
    terms = tree.terminals()

    edges = list(tree.edges())
    next_id = tree.vertex_count
    tip: dict[int, int] = {v: v for v in terms}
    for level in range(1, r_out + l + 1):
        for v in terms:
            if tree.norm[v] < level:
                edges.append((tip[v], next_id))
                tip[v] = next_id
                next_id += 1
    full = build_tree(edges, tree.root)

    origin = {
        v: (ORIGINAL if v < tree.vertex_count else ADDED)
        for v in range(full.vertex_count)
    }
    inner = frozenset(v for v in range(full.vertex_count) if full.norm[v] == r_out + l - 1)
    outer = frozenset(v for v in range(full.vertex_count) if full.norm[v] == r_out + l)
    return AugmentedTree(tree, full, origin, r_out, l, inner, outer)


def random_tree(
    rout: int, seed: int, size: int | None = None, max_degree: int = 10
) -> RootedTree:
    """Reproducible random rooted tree with outer radius exactly ``rout``.

    A spine of length ``rout`` guarantees the radius; remaining vertices
    attach to uniformly chosen parents at norms below ``rout`` whose child
    count is below ``max_degree - 1``.  ``size`` is an upper bound (growth
    stops early once every eligible parent is saturated) and defaults to a
    seed-dependent draw; trees never exceed 40 vertices.
    """
    if rout < 1:
        raise InvalidParameter(f"rout must be >= 1, got {rout}")
    if max_degree < 3:
        raise InvalidParameter(f"max_degree must be >= 3, got {max_degree}")
    rng = np.random.default_rng(seed)
    if size is None:
        size = int(rng.integers(rout + 1, min(40, rout + 16) + 1))
    if size < rout + 1 or size > 40:
        raise InvalidParameter(f"size must lie in [rout+1, 40], got {size}")

    edges = [(i, i + 1) for i in range(rout)]
    norm = {i: i for i in range(rout + 1)}
    kids = {i: (1 if i < rout else 0) for i in range(rout + 1)}
    for v in range(rout + 1, size):
        shallow = [
            u for u in range(v) if norm[u] < rout and kids[u] < max_degree - 1
        ]
        if not shallow:
            break
        p = int(shallow[rng.integers(len(shallow))])
        edges.append((p, v))
        norm[v] = norm[p] + 1
        kids[p] += 1
        kids[v] = 0
    return build_tree(edges, 0)
