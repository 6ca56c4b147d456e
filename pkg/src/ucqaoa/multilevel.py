"""Coarsening hierarchy: sphere embedding, K-D tree matching, P^T M P contraction."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.spatial import cKDTree

from .errors import ConfigurationError, UcqaoaError, ValidationError
from .ising import Assignment, IsingGraph

log = logging.getLogger(__name__)

STEP = 0.5


@dataclass
class Embedding:
    positions: np.ndarray
    objective_trace: list[float] = field(default_factory=list)

    @property
    def dim(self) -> int:
        return self.positions.shape[1]


def spread_objective(graph: IsingGraph, positions: np.ndarray) -> float:
    """``sum_i sum_{j in n(i)} |w_ij| * ||p_i - p_j||``; each edge counted from both ends."""
    if graph.n_edges == 0:
        return 0.0
    d = np.linalg.norm(positions[graph.rows] - positions[graph.cols], axis=1)
    return float(2.0 * (np.abs(graph.weights) * d).sum())


def _local_spread(graph, absw, positions, candidate):
    """Per-node weighted distance to neighbors, for ``candidate[i]`` against ``positions[j]``."""
    out = np.zeros(graph.n)
    A = absw.tocoo()
    d = np.linalg.norm(candidate[A.row] - positions[A.col], axis=1)
    np.add.at(out, A.row, A.data * d)
    return out


def embed(graph: IsingGraph, d: int = 4, iters: int = 20, seed: int = 0) -> Embedding:
    """Push every node away from the |w|-weighted centroid of its neighbors.

    Proposals are computed from the previous positions and accepted per node
    when they do not shrink that node's own spread. If the combined move
    lowers the global objective the iteration is rejected and the step halved.
    """
    if d < 2:
        raise ConfigurationError(f"embedding dimension must be >= 2, got {d}")
    if iters < 1:
        raise ConfigurationError(f"iters must be >= 1, got {iters}")
    rng = np.random.default_rng(seed)
    p = rng.normal(size=(graph.n, d))
    p /= np.linalg.norm(p, axis=1, keepdims=True)
    emb = Embedding(p, [spread_objective(graph, p)])
    if graph.n_edges == 0:
        return emb

    absw = abs(graph.adjacency)
    degree = np.asarray(absw.sum(axis=1)).ravel()
    active = degree > 0
    step = STEP
    current = emb.objective_trace[0]
    for _ in range(iters):
        centroid = np.zeros_like(p)
        centroid[active] = (absw @ p)[active] / degree[active, None]
        cand = p + step * (p - centroid)
        norms = np.linalg.norm(cand, axis=1, keepdims=True)
        ok = active & (norms[:, 0] > 1e-12)
        cand[ok] /= norms[ok]
        cand[~ok] = p[~ok]
        better = _local_spread(graph, absw, p, cand) >= _local_spread(graph, absw, p, p)
        new = np.where((ok & better)[:, None], cand, p)
        value = spread_objective(graph, new)
        if value >= current:
            p, current = new, value
        else:
            step *= 0.5
        emb.objective_trace.append(current)
    emb.positions = p
    return emb


@dataclass
class Matching:
    """Projection from fine nodes to coarse clusters."""

    cluster: np.ndarray
    n_coarse: int
    pairs: list[tuple[int, int]]
    singletons: list[int]

    @property
    def n_fine(self) -> int:
        return len(self.cluster)

    def projection(self) -> sp.csr_matrix:
        n = self.n_fine
        return sp.csr_matrix((np.ones(n), (np.arange(n), self.cluster)), shape=(n, self.n_coarse))

    def members(self) -> list[list[int]]:
        groups = [[] for _ in range(self.n_coarse)]
        for node, c in enumerate(self.cluster):
            groups[c].append(node)
        return groups

    @classmethod
    def identity(cls, n: int) -> Matching:
        return cls(np.arange(n), n, [], list(range(n)))

    @classmethod
    def from_pairs(cls, n: int, pairs) -> Matching:
        """Clusters numbered in order of first appearance of their smallest member."""
        partner = {}
        for a, b in pairs:
            partner[a] = b
            partner[b] = a
        cluster = np.full(n, -1, dtype=np.int64)
        singles = []
        k = 0
        for node in range(n):
            if cluster[node] >= 0:
                continue
            cluster[node] = k
            if node in partner:
                cluster[partner[node]] = k
            else:
                singles.append(node)
            k += 1
        return cls(cluster, k, [tuple(sorted(p)) for p in pairs], singles)

    def validate(self, n: int):
        if self.n_fine != n:
            raise ValidationError(f"matching covers {self.n_fine} nodes, graph has {n}")
        counts = np.bincount(self.cluster, minlength=self.n_coarse)
        if self.cluster.min() < 0 or self.cluster.max() >= self.n_coarse or counts.min() < 1 or counts.max() > 2:
            raise ValidationError("matching must place every node in exactly one pair or singleton")


def match_nodes(graph: IsingGraph, embedding: Embedding, seed: int = 0) -> Matching:
    """Greedy nearest-unpaired-neighbor pairing in seeded random order."""
    n = graph.n
    pos = embedding.positions
    if pos.shape[0] != n:
        raise ValidationError("embedding does not cover every node")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    paired = np.zeros(n, dtype=bool)
    pairs = []

    free = np.arange(n)
    tree = cKDTree(pos)
    n_free = n
    for node in order:
        if paired[node]:
            continue
        if n_free == 1:
            break
        # rebuild on the shrinking free set so k stays small
        if n_free <= len(free) // 2:
            free = np.flatnonzero(~paired)
            tree = cKDTree(pos[free])
        k = 2
        mate = -1
        while mate < 0:
            k = min(k, len(free))
            _, idx = tree.query(pos[node], k=k)
            for j in np.atleast_1d(idx):
                cand = free[j]
                if cand != node and not paired[cand]:
                    mate = cand
                    break
            if mate < 0:
                if k == len(free):
                    break
                k *= 2
        if mate < 0:
            break
        paired[node] = paired[mate] = True
        n_free -= 2
        pairs.append((int(node), int(mate)))
    return Matching.from_pairs(n, pairs)


def level_matrix(graph: IsingGraph) -> sp.csr_matrix:
    """Couplings off the diagonal, biases on it."""
    return (graph.adjacency + sp.diags(graph.h)).tocsr()


def contract(graph: IsingGraph, matching: Matching) -> sp.csr_matrix:
    """``P^T M P`` for the level matrix ``M``."""
    matching.validate(graph.n)
    P = matching.projection()
    return (P.T @ level_matrix(graph) @ P).tocsr()


def coarse_from_product(graph: IsingGraph, matching: Matching, product: sp.csr_matrix) -> IsingGraph:
    """Split a contracted matrix back into biases, couplings and offset.

    The product's diagonal is ``sum of member biases + 2 * intra-pair weight``;
    with both members sharing a spin the intra-pair term is constant.
    """
    P = matching.projection()
    h = P.T @ graph.h
    diag = product.diagonal()
    offset = graph.offset + float((diag - h).sum()) / 2.0
    upper = sp.triu(product, k=1).tocoo()
    couplings = {(int(i), int(j)): float(w) for i, j, w in zip(upper.row, upper.col, upper.data)}
    labels = np.array([graph.labels[m[0]] for m in matching.members()], dtype=np.int64)
    return IsingGraph.from_terms(matching.n_coarse, h, couplings, offset, labels)


def coarsen(graph: IsingGraph, matching: Matching) -> IsingGraph:
    return coarse_from_product(graph, matching, contract(graph, matching))


@dataclass
class Hierarchy:
    levels: list[IsingGraph]
    matchings: list[Matching]
    products: list[sp.csr_matrix]
    objectives: list[float]

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    def sizes(self) -> list[int]:
        return [g.n for g in self.levels]

    def to_dict(self) -> dict:
        return {
            "sizes": self.sizes(),
            "embedding_objectives": self.objectives,
            "projections": [m.cluster.tolist() for m in self.matchings],
        }


def build_hierarchy(graph: IsingGraph, m: int = 16, d: int = 4, iters: int = 20, seed: int = 0) -> Hierarchy:
    if m < 2:
        raise ConfigurationError(f"coarsest size m must be >= 2, got {m}")
    levels, matchings, products, objectives = [graph], [], [], []
    current = graph
    level = 0
    while current.n > m:
        level_seed = int(np.random.SeedSequence([seed, level]).generate_state(1)[0])
        emb = embed(current, d, iters, level_seed)
        matching = match_nodes(current, emb, level_seed)
        product = contract(current, matching)
        coarse = coarse_from_product(current, matching, product)
        if coarse.n >= current.n:
            raise UcqaoaError(f"coarsening did not shrink level {level} ({current.n} nodes)")
        log.debug("level %d: %d -> %d nodes, spread %.4g", level, current.n, coarse.n, emb.objective_trace[-1])
        levels.append(coarse)
        matchings.append(matching)
        products.append(product)
        objectives.append(emb.objective_trace[-1])
        current = coarse
        level += 1
    return Hierarchy(levels, matchings, products, objectives)


def interpolate(coarse: Assignment, matching: Matching, fine_graph: IsingGraph) -> Assignment:
    """Every fine node takes its cluster's bit."""
    if coarse.bits.shape != (matching.n_coarse,):
        raise ValidationError(f"coarse assignment has {coarse.bits.shape[0]} bits, matching has {matching.n_coarse} clusters")
    return Assignment.from_bits(fine_graph, coarse.bits[matching.cluster])
