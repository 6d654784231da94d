"""Hierarchically compressed kernel operators.

The flattened point-interaction matrix is re-permuted by a binary cluster tree
over the 3D point cloud (median split along the longest bounding-box axis) and
tiled into blocks: pairs of clusters passing the admissibility test

    max(diam(B_I), diam(B_J)) <= eta * dist(B_I, B_J)

become low-rank leaves built by partially pivoted adaptive cross approximation
(ACA); inadmissible leaf pairs are stored densely.  The resulting operator
exposes the same ``apply`` / ``apply_transpose`` contract as the dense
operator class, so the Krylov solvers run on either interchangeably.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .collocation import PointSet
from .rbf_operator import HelmholtzProblem, MQKernel, helmholtz_block, kernel_block
from .tensor_core import as_shape


@dataclass
class ClusterNode:
    """Contiguous span [start, end) of a permuted point-index array, with the
    tight axis-parallel bounding box of its points; 0 or 2 children."""

    start: int
    end: int
    bbox_min: np.ndarray
    bbox_max: np.ndarray
    children: tuple = ()

    @property
    def size(self) -> int:
        return self.end - self.start

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def diameter(self) -> float:
        return float(np.linalg.norm(self.bbox_max - self.bbox_min))


@dataclass
class ClusterTree:
    root: ClusterNode
    perm: np.ndarray

    def leaves(self):
        out, stack = [], [self.root]
        while stack:
            node = stack.pop()
            if node.is_leaf:
                out.append(node)
            else:
                stack.extend(node.children)
        return out


def _build_node(coords, perm, start, end, leaf_threshold) -> ClusterNode:
    pts = coords[perm[start:end]]
    bbox_min = pts.min(axis=0)
    bbox_max = pts.max(axis=0)
    node = ClusterNode(start, end, bbox_min, bbox_max)
    if end - start > leaf_threshold:
        axis = int(np.argmax(bbox_max - bbox_min))
        order = np.argsort(pts[:, axis], kind="stable")
        perm[start:end] = perm[start:end][order]
        mid = start + (end - start) // 2
        node.children = (_build_node(coords, perm, start, mid, leaf_threshold),
                         _build_node(coords, perm, mid, end, leaf_threshold))
    return node


def build_cluster_tree(points: PointSet, leaf_threshold: int) -> ClusterTree:
    """Balanced binary tree over the point cloud; each split is a median split
    along the current bounding box's longest axis."""
    if leaf_threshold < 1:
        raise ValueError("leaf threshold must be >= 1")
    if points.total == 0:
        raise ValueError("empty point set")
    perm = np.arange(points.total)
    root = _build_node(points.coords, perm, 0, points.total, leaf_threshold)
    return ClusterTree(root, perm)


def box_distance(a: ClusterNode, b: ClusterNode) -> float:
    gaps = np.maximum(0.0, np.maximum(a.bbox_min - b.bbox_max, b.bbox_min - a.bbox_max))
    return float(np.linalg.norm(gaps))


def admissible(a: ClusterNode, b: ClusterNode, eta: float) -> bool:
    """Far-field test: max of the two box diagonals <= eta * box distance."""
    if not eta > 0:
        raise ValueError("eta must be positive")
    return max(a.diameter(), b.diameter()) <= eta * box_distance(a, b)


@dataclass
class LowRankBlock:
    """Cross approximation ``u @ v.T`` of a block; ``converged`` is False when
    the rank cap was hit before the stopping test fired."""

    u: np.ndarray
    v: np.ndarray
    converged: bool = True

    @property
    def rank(self) -> int:
        return self.u.shape[1]

    @property
    def nbytes(self) -> int:
        return self.u.nbytes + self.v.nbytes


def aca(entry_fn, rows, cols, tol: float, max_rank: int, first_row: int = 0) -> LowRankBlock:
    """Partially pivoted adaptive cross approximation of the block
    ``entry_fn(rows, cols)``.

    ``entry_fn(r_idx, c_idx)`` must return the dense sub-block for index
    arrays ``r_idx`` x ``c_idx``.  Crosses are appended until the new cross
    satisfies ``||u_k|| * ||v_k|| <= tol * ||approximation||_F`` (Frobenius
    norm tracked incrementally) or ``max_rank`` crosses were taken, in which
    case the block is flagged unconverged.  Zero-pivot rows are skipped;
    ``first_row`` selects the starting pivot row (position within ``rows``).
    """
    rows = np.asarray(rows, dtype=np.intp)
    cols = np.asarray(cols, dtype=np.intp)
    if not tol > 0:
        raise ValueError("tol must be positive")
    if len(rows) == 0 or len(cols) == 0:
        raise ValueError("empty span")
    nr, nc = len(rows), len(cols)
    us, vs = [], []
    frob2 = 0.0
    used = np.zeros(nr, dtype=bool)
    next_row = int(first_row)
    converged = True
    while len(us) < max_rank:
        # residual row at the pivot; skip rows whose residual vanishes
        pivot_col = -1
        while next_row >= 0:
            used[next_row] = True
            row = entry_fn(rows[next_row:next_row + 1], cols)[0]
            for u, v in zip(us, vs):
                row = row - u[next_row] * v
            pivot_col = int(np.argmax(np.abs(row)))
            if abs(row[pivot_col]) > 0.0:
                break
            remaining = np.flatnonzero(~used)
            next_row = int(remaining[0]) if len(remaining) else -1
        else:
            break
        if next_row < 0 or pivot_col < 0:
            break
        v_new = row / row[pivot_col]
        col = entry_fn(rows, cols[pivot_col:pivot_col + 1])[:, 0]
        for u, v in zip(us, vs):
            col = col - v[pivot_col] * u
        u_new = col
        nu, nv = np.linalg.norm(u_new), np.linalg.norm(v_new)
        cross = 0.0
        for u, v in zip(us, vs):
            cross += float(u_new @ u) * float(v @ v_new)
        frob2_new = frob2 + 2.0 * cross + (nu * nv) ** 2
        if frob2 > 0.0 and nu * nv <= tol * math.sqrt(frob2):
            break
        if nu * nv == 0.0:
            break
        us.append(u_new)
        vs.append(v_new)
        frob2 = max(frob2_new, 0.0)
        # next pivot row: largest new-column magnitude among unused rows
        masked = np.abs(u_new).copy()
        masked[used] = -1.0
        next_row = int(np.argmax(masked))
        if masked[next_row] < 0:
            break
    else:
        converged = False
    rank = len(us)
    u = np.stack(us, axis=1) if rank else np.zeros((nr, 0))
    v = np.stack(vs, axis=1) if rank else np.zeros((nc, 0))
    return LowRankBlock(u, v, converged)


@dataclass
class HStats:
    """Compression statistics, serializable as a key = value report."""

    n_points: int = 0
    n_blocks: int = 0
    n_dense: int = 0
    n_lowrank: int = 0
    n_densified: int = 0
    rank_min: int = 0
    rank_max: int = 0
    rank_sum: int = 0
    bytes_dense: int = 0
    bytes_lowrank: int = 0
    build_seconds: float = 0.0

    @property
    def bytes_total(self) -> int:
        return self.bytes_dense + self.bytes_lowrank

    @property
    def dense_equivalent_bytes(self) -> int:
        return self.n_points * self.n_points * 8

    @property
    def compression_ratio(self) -> float:
        return self.bytes_total / self.dense_equivalent_bytes if self.n_points else 0.0

    def to_report(self) -> str:
        mean_rank = self.rank_sum / self.n_lowrank if self.n_lowrank else 0.0
        lines = [
            f"points = {self.n_points}",
            f"blocks = {self.n_blocks}",
            f"dense_blocks = {self.n_dense}",
            f"lowrank_blocks = {self.n_lowrank}",
            f"densified_blocks = {self.n_densified}",
            f"rank_min = {self.rank_min}",
            f"rank_max = {self.rank_max}",
            f"rank_mean = {mean_rank:.3f}",
            f"bytes_dense = {self.bytes_dense}",
            f"bytes_lowrank = {self.bytes_lowrank}",
            f"bytes_total = {self.bytes_total}",
            f"dense_equivalent_bytes = {self.dense_equivalent_bytes}",
            f"compression_ratio = {self.compression_ratio:.6f}",
            f"build_seconds = {self.build_seconds:.6f}",
        ]
        return "\n".join(lines) + "\n"


class HOperator:
    """Hierarchically compressed operator with the dense-operator apply contract.

    ``blocks`` is a list of ``(row_node, col_node, payload)`` where the payload
    is either an ndarray (dense leaf) or a :class:`LowRankBlock`; together the
    block spans tile the permuted index square exactly once.
    """

    def __init__(self, shape, tree: ClusterTree, blocks, eta, aca_tol,
                 leaf_threshold, stats: HStats):
        self.shape = as_shape(shape)
        self.tree = tree
        self.perm = tree.perm
        self.inv_perm = np.argsort(tree.perm)
        self.blocks = blocks
        self.eta = eta
        self.aca_tol = aca_tol
        self.leaf_threshold = leaf_threshold
        self.stats = stats

    @property
    def nbytes(self) -> int:
        return self.stats.bytes_total

    def _apply_permuted(self, xt: np.ndarray, transpose: bool) -> np.ndarray:
        yt = np.zeros_like(xt)
        for rnode, cnode, payload in self.blocks:
            r0, r1 = rnode.start, rnode.end
            c0, c1 = cnode.start, cnode.end
            if isinstance(payload, LowRankBlock):
                if payload.rank == 0:
                    continue
                if transpose:
                    yt[c0:c1] += payload.v @ (payload.u.T @ xt[r0:r1])
                else:
                    yt[r0:r1] += payload.u @ (payload.v.T @ xt[c0:c1])
            else:
                if transpose:
                    yt[c0:c1] += payload.T @ xt[r0:r1]
                else:
                    yt[r0:r1] += payload @ xt[c0:c1]
        return yt

    def _apply(self, x: np.ndarray, transpose: bool) -> np.ndarray:
        if tuple(x.shape) != tuple(self.shape):
            raise ValueError(f"h_apply: tensor shape {x.shape} does not match "
                             f"operator shape {tuple(self.shape)}")
        xt = np.ravel(x)[self.perm]
        yt = self._apply_permuted(xt, transpose)
        y = yt[self.inv_perm]
        if not np.isfinite(y).all():
            raise FloatingPointError("hierarchical apply produced non-finite entries")
        return y.reshape(tuple(self.shape))

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self._apply(x, transpose=False)

    def apply_transpose(self, x: np.ndarray) -> np.ndarray:
        return self._apply(x, transpose=True)


def h_apply(h: HOperator, x: np.ndarray) -> np.ndarray:
    """Apply the compressed operator: sum of per-block contributions in tree
    order, permuted back to tensor ordering."""
    return h.apply(x)


def h_apply_transpose(h: HOperator, x: np.ndarray) -> np.ndarray:
    return h.apply_transpose(x)


def default_leaf_threshold(shape) -> int:
    """ceil(5 * (log M + log N + log P)^(3/2)), natural logarithm."""
    m, n, p = as_shape(shape)
    return math.ceil(5.0 * (math.log(m) + math.log(n) + math.log(p)) ** 1.5)


def _center_row(coords, perm, node: ClusterNode) -> int:
    pts = coords[perm[node.start:node.end]]
    center = pts.mean(axis=0)
    return int(np.argmin(np.sum((pts - center) ** 2, axis=1)))


def assemble_h(points: PointSet, kernel: MQKernel,
               problem: Optional[HelmholtzProblem] = None,
               eta: float = 2.0, aca_tol: float = 1e-6,
               leaf_threshold: Optional[int] = None) -> HOperator:
    """Build the compressed operator over the point set.

    With ``problem`` given the collocation operator entries are compressed,
    otherwise the plain kernel entries.  Admissible cluster pairs become ACA
    leaves (rank-capped at the storage break-even point; unconverged blocks
    are densified and counted); inadmissible leaf pairs are dense.
    """
    start_time = time.perf_counter()
    if leaf_threshold is None:
        leaf_threshold = default_leaf_threshold(points.shape)
    tree = build_cluster_tree(points, leaf_threshold)
    coords = points.coords
    perm = tree.perm

    if problem is None:
        def entry_fn(r_idx, c_idx):
            return kernel_block(points, kernel, r_idx, c_idx)
    else:
        def entry_fn(r_idx, c_idx):
            return helmholtz_block(points, kernel, problem, r_idx, c_idx)

    blocks = []
    stats = HStats(n_points=points.total)

    def visit(rnode: ClusterNode, cnode: ClusterNode):
        if admissible(rnode, cnode, eta):
            rows = perm[rnode.start:rnode.end]
            cols = perm[cnode.start:cnode.end]
            cap = max(1, min(len(rows), len(cols)) // 2)
            lr = aca(entry_fn, rows, cols, aca_tol, cap,
                     first_row=_center_row(coords, perm, rnode))
            if lr.converged:
                blocks.append((rnode, cnode, lr))
                stats.n_lowrank += 1
                stats.rank_min = lr.rank if stats.n_lowrank == 1 else min(stats.rank_min, lr.rank)
                stats.rank_max = max(stats.rank_max, lr.rank)
                stats.rank_sum += lr.rank
                stats.bytes_lowrank += lr.nbytes
            else:
                dense = entry_fn(rows, cols)
                blocks.append((rnode, cnode, dense))
                stats.n_dense += 1
                stats.n_densified += 1
                stats.bytes_dense += dense.nbytes
            return
        if rnode.is_leaf and cnode.is_leaf:
            rows = perm[rnode.start:rnode.end]
            cols = perm[cnode.start:cnode.end]
            dense = entry_fn(rows, cols)
            blocks.append((rnode, cnode, dense))
            stats.n_dense += 1
            stats.bytes_dense += dense.nbytes
            return
        rchildren = rnode.children if not rnode.is_leaf else (rnode,)
        cchildren = cnode.children if not cnode.is_leaf else (cnode,)
        for rc in rchildren:
            for cc in cchildren:
                visit(rc, cc)

    visit(tree.root, tree.root)
    stats.n_blocks = len(blocks)
    stats.build_seconds = time.perf_counter() - start_time
    return HOperator(points.shape, tree, blocks, eta, aca_tol, leaf_threshold, stats)
