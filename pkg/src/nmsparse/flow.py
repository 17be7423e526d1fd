"""Optimal N:M transposable masks through a min-cost flow reduction.

Every M x M tile becomes a bipartite network::

    source --(cap n, cost 0)--> row_i --(cap 1, cost |W_ij|)--> col_j --(cap n, cost 0)--> sink

A unit of flow on the coefficient edge ``(i, j)`` means ``W_ij`` is pruned.
A flow of value ``n * m`` prunes exactly ``n`` entries in every row and
column of the tile, and a minimum-cost flow prunes the least total
magnitude. Flows are computed with successive shortest augmenting paths;
node potentials keep reduced costs non-negative so each path search is a
plain Dijkstra.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numba import njit

from .exceptions import DimensionError, InfeasibleError
from .tensor_core import NmConfig, check_divisible, check_matrix, square_tile_view, untile

__all__ = [
    "MAX_BLOCK",
    "FlowNetwork",
    "FlowSolution",
    "build_network",
    "solve_min_cost",
    "check_optimality",
    "optimal_prune_set",
    "optimal_transposable_mask",
]

MAX_BLOCK = 64


@dataclass(frozen=True)
class FlowNetwork:
    """Network for one M x M tile.

    Nodes are numbered ``0`` (source), ``1..m`` (rows), ``m+1..2m`` (columns)
    and ``2m+1`` (sink). Edges are stored source edges first, then the
    ``m * m`` coefficient edges in row-major order, then sink edges.
    """

    m: int
    n: int
    tail: np.ndarray
    head: np.ndarray
    capacity: np.ndarray
    cost: np.ndarray

    @property
    def n_nodes(self) -> int:
        return 2 * self.m + 2

    @property
    def source(self) -> int:
        return 0

    @property
    def sink(self) -> int:
        return 2 * self.m + 1

    @property
    def demand(self) -> int:
        return self.n * self.m

    @property
    def coefficient_edges(self) -> slice:
        return slice(self.m, self.m + self.m * self.m)


@dataclass(frozen=True)
class FlowSolution:
    flow: np.ndarray  # (m, m) int8 flow on the coefficient edges, 1 = pruned
    cost: float
    potentials: np.ndarray
    edge_flow: np.ndarray  # flow on every edge of the network, same order


def build_network(block, cfg: NmConfig) -> FlowNetwork:
    arr = check_matrix(block, "block")
    m = cfg.m
    if arr.shape != (m, m):
        raise DimensionError(f"block must be {m}x{m}, got {arr.shape}")
    if m > MAX_BLOCK:
        raise DimensionError(f"block size {m} exceeds the supported maximum {MAX_BLOCK}")
    rows = np.arange(1, m + 1)
    cols = np.arange(m + 1, 2 * m + 1)
    sink = 2 * m + 1
    coef_tail = np.repeat(rows, m)
    coef_head = np.tile(cols, m)
    tail = np.concatenate([np.zeros(m, dtype=np.int64), coef_tail, cols])
    head = np.concatenate([rows, coef_head, np.full(m, sink, dtype=np.int64)])
    capacity = np.concatenate(
        [np.full(m, cfg.n), np.ones(m * m, dtype=np.int64), np.full(m, cfg.n)]
    ).astype(np.int64)
    cost = np.concatenate([np.zeros(m), np.abs(arr).ravel(), np.zeros(m)])
    return FlowNetwork(m, cfg.n, tail.astype(np.int64), head.astype(np.int64), capacity, cost)


def _residual_arrays(net: FlowNetwork):
    """Arc arrays: arc ``2k`` is edge ``k`` forward, ``2k + 1`` its reverse."""
    n_edges = len(net.tail)
    arc_tail = np.empty(2 * n_edges, dtype=np.int64)
    arc_head = np.empty(2 * n_edges, dtype=np.int64)
    arc_tail[0::2], arc_tail[1::2] = net.tail, net.head
    arc_head[0::2], arc_head[1::2] = net.head, net.tail
    arc_cap = np.zeros(2 * n_edges, dtype=np.int64)
    arc_cap[0::2] = net.capacity
    arc_cost = np.empty(2 * n_edges)
    arc_cost[0::2], arc_cost[1::2] = net.cost, -net.cost
    order = np.argsort(arc_tail, kind="stable")
    adj_start = np.searchsorted(arc_tail[order], np.arange(net.n_nodes + 1))
    return arc_head, arc_cap, arc_cost, order.astype(np.int64), adj_start.astype(np.int64)


@njit(cache=True, nogil=True)
def _successive_shortest_paths(
    n_nodes, arc_head, arc_cap, arc_cost, adj_arcs, adj_start, source, sink, demand
):
    pot = np.zeros(n_nodes)
    dist = np.empty(n_nodes)
    settled = np.empty(n_nodes, dtype=np.bool_)
    prev_arc = np.empty(n_nodes, dtype=np.int64)
    sent = 0
    while sent < demand:
        dist[:] = np.inf
        settled[:] = False
        prev_arc[:] = -1
        dist[source] = 0.0
        while True:
            u = -1
            best = np.inf
            for v in range(n_nodes):
                if not settled[v] and dist[v] < best:
                    best = dist[v]
                    u = v
            if u < 0:
                break
            settled[u] = True
            if u == sink:
                break
            for k in range(adj_start[u], adj_start[u + 1]):
                a = adj_arcs[k]
                if arc_cap[a] <= 0:
                    continue
                v = arc_head[a]
                if settled[v]:
                    continue
                rc = arc_cost[a] + pot[u] - pot[v]
                if rc < 0.0:
                    # rounding noise only; exact reduced costs are >= 0
                    rc = 0.0
                nd = dist[u] + rc
                if nd < dist[v]:
                    dist[v] = nd
                    prev_arc[v] = a
        if not settled[sink]:
            return -1, pot
        dsink = dist[sink]
        for v in range(n_nodes):
            pot[v] += dist[v] if settled[v] else dsink
        push = demand - sent
        v = sink
        while v != source:
            a = prev_arc[v]
            if arc_cap[a] < push:
                push = arc_cap[a]
            v = arc_head[a ^ 1]
        v = sink
        while v != source:
            a = prev_arc[v]
            arc_cap[a] -= push
            arc_cap[a ^ 1] += push
            v = arc_head[a ^ 1]
        sent += push
    return sent, pot


def solve_min_cost(net: FlowNetwork, check: bool = False) -> FlowSolution:
    """Send ``net.demand`` units from source to sink at minimum cost.

    With ``check=True`` the reduced-cost optimality certificate is verified
    before returning.
    """
    arc_head, arc_cap, arc_cost, adj_arcs, adj_start = _residual_arrays(net)
    sent, pot = _successive_shortest_paths(
        net.n_nodes, arc_head, arc_cap, arc_cost, adj_arcs, adj_start,
        net.source, net.sink, net.demand,
    )
    if sent != net.demand:
        raise InfeasibleError(f"network admits no flow of value {net.demand}")
    edge_flow = arc_cap[1::2].copy()  # reverse residual capacity == forward flow
    coef = edge_flow[net.coefficient_edges].reshape(net.m, net.m).astype(np.int8)
    cost = math.fsum(net.cost[net.coefficient_edges][coef.ravel() == 1].tolist())
    solution = FlowSolution(coef, cost, pot, edge_flow)
    if check and not check_optimality(net, solution):
        raise AssertionError("min-cost flow optimality certificate failed")
    return solution


def check_optimality(net: FlowNetwork, sol: FlowSolution, tol: float = 1e-9) -> bool:
    """Verify conservation, capacities and non-negative reduced costs.

    Non-negative reduced costs on every residual arc mean the residual graph
    has no negative cycle, which certifies a minimum-cost flow.
    """
    flow = sol.edge_flow
    if np.any(flow < 0) or np.any(flow > net.capacity):
        return False
    balance = np.zeros(net.n_nodes, dtype=np.int64)
    np.add.at(balance, net.tail, -flow)
    np.add.at(balance, net.head, flow)
    expected = np.zeros(net.n_nodes, dtype=np.int64)
    expected[net.source] = -net.demand
    expected[net.sink] = net.demand
    if not np.array_equal(balance, expected):
        return False
    pot = sol.potentials
    scale = tol * max(1.0, float(np.max(np.abs(net.cost))))
    reduced = net.cost + pot[net.tail] - pot[net.head]
    forward_ok = (flow == net.capacity) | (reduced >= -scale)
    backward_ok = (flow == 0) | (reduced <= scale)
    return bool(np.all(forward_ok) and np.all(backward_ok))


def optimal_prune_set(block, cfg: NmConfig) -> np.ndarray:
    """Boolean (m, m) array marking the entries an optimal tile mask prunes."""
    return solve_min_cost(build_network(block, cfg)).flow.astype(bool)


def _map_tiles(func, tiles, jobs):
    if jobs is None or jobs <= 1 or len(tiles) <= 1:
        return [func(t) for t in tiles]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, tiles))


def optimal_transposable_mask(mat, cfg: NmConfig, jobs: int = 1) -> np.ndarray:
    """Per M x M tile, keep the maximum-magnitude set with ``m - n`` entries
    in every row and column.

    Tiles are independent; ``jobs > 1`` solves them on a thread pool with
    identical results.
    """
    arr = check_matrix(mat)
    check_divisible(arr.shape, cfg.m, square=True)
    if cfg.m > MAX_BLOCK:
        raise DimensionError(f"block size {cfg.m} exceeds the supported maximum {MAX_BLOCK}")
    tiles = square_tile_view(arr, cfg.m)
    pruned = _map_tiles(lambda t: optimal_prune_set(t, cfg), list(tiles), jobs)
    return ~untile(np.stack(pruned), arr.shape)
