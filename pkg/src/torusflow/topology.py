"""2D torus topology, failure scenarios and connectivity queries.

Nodes are (row, col) tuples on an R x C wraparound grid with R, C >= 3, so
every node has four distinct neighbors. Links are undirected; a link is
identified canonically by its minimum-index endpoint plus the direction from
that endpoint. Failure scenarios freeze an i.i.d. Bernoulli draw over links
(bond mode) or nodes (site mode, which kills all incident links).
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from enum import Enum, IntEnum
from functools import cached_property

import numpy as np

NodeId = tuple[int, int]
LinkId = tuple[NodeId, "Direction"]


class Direction(IntEnum):
    """Port directions. N decreases the row, S increases it, E increases the
    column, W decreases it, all modulo the grid size. The cyclic order
    N, E, S, W is clockwise."""

    N = 0
    E = 1
    S = 2
    W = 3


DIRECTIONS = (Direction.N, Direction.E, Direction.S, Direction.W)

# lookup tables indexed by Direction value
_OPPOSITE = (2, 3, 0, 1)
_CLOCKWISE = (1, 2, 3, 0)
_COUNTERCW = (3, 0, 1, 2)


def opposite(d: Direction) -> Direction:
    return Direction(_OPPOSITE[d])


def clockwise(d: Direction) -> Direction:
    return Direction(_CLOCKWISE[d])


def counterclockwise(d: Direction) -> Direction:
    return Direction(_COUNTERCW[d])


class FailureMode(Enum):
    BOND = "bond"
    SITE = "site"


@dataclass(frozen=True)
class TorusTopology:
    rows: int
    cols: int

    def __post_init__(self):
        if self.rows < 3 or self.cols < 3:
            raise ValueError(
                f"torus requires rows >= 3 and cols >= 3, got {self.rows}x{self.cols}"
            )

    @property
    def num_nodes(self) -> int:
        return self.rows * self.cols

    @property
    def num_links(self) -> int:
        return 2 * self.rows * self.cols

    def node_index(self, node: NodeId) -> int:
        r, c = node
        if not (0 <= r < self.rows and 0 <= c < self.cols):
            raise ValueError(f"node {node} outside {self.rows}x{self.cols} torus")
        return r * self.cols + c

    def node_at(self, index: int) -> NodeId:
        return divmod(index, self.cols)


def build_torus(rows: int, cols: int) -> TorusTopology:
    return TorusTopology(rows, cols)


def diameter(topo: TorusTopology) -> int:
    """Largest hop distance between any two nodes."""
    return topo.rows // 2 + topo.cols // 2


@functools.lru_cache(maxsize=None)
def _neighbor_table(rows: int, cols: int):
    """Flat neighbor indices: entry 4*v + d is the index of v's neighbor in
    direction d. Shared by every hot loop; never mutated."""
    n = rows * cols
    nbr = [0] * (4 * n)
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            nbr[4 * v + Direction.N] = ((r - 1) % rows) * cols + c
            nbr[4 * v + Direction.E] = r * cols + (c + 1) % cols
            nbr[4 * v + Direction.S] = ((r + 1) % rows) * cols + c
            nbr[4 * v + Direction.W] = r * cols + (c - 1) % cols
    return nbr


def neighbor(topo: TorusTopology, node: NodeId, d: Direction) -> NodeId:
    nbr = _neighbor_table(topo.rows, topo.cols)
    return topo.node_at(nbr[4 * topo.node_index(node) + d])


def neighbors(topo: TorusTopology, node: NodeId) -> tuple[NodeId, ...]:
    """All four neighbors in N, E, S, W order."""
    return tuple(neighbor(topo, node, d) for d in DIRECTIONS)


def torus_distance(topo: TorusTopology, a: NodeId, b: NodeId) -> int:
    """Minimal hop count between a and b."""
    topo.node_index(a)
    topo.node_index(b)
    dr = abs(a[0] - b[0])
    dc = abs(a[1] - b[1])
    return min(dr, topo.rows - dr) + min(dc, topo.cols - dc)


def canonical_link(topo: TorusTopology, node: NodeId, d: Direction) -> LinkId:
    """Canonical id of the undirected link at node's port d: the endpoint
    with the smaller index, plus the direction from it to the other end."""
    other = neighbor(topo, node, d)
    if topo.node_index(node) <= topo.node_index(other):
        return (node, Direction(d))
    return (other, opposite(d))


def link_endpoints(topo: TorusTopology, link: LinkId) -> tuple[NodeId, NodeId]:
    node, d = link
    return node, neighbor(topo, node, d)


@functools.lru_cache(maxsize=None)
def _all_links(rows: int, cols: int) -> tuple[LinkId, ...]:
    topo = TorusTopology(rows, cols)
    out = []
    for r in range(rows):
        for c in range(cols):
            for d in (Direction.E, Direction.S):
                out.append(canonical_link(topo, (r, c), d))
    return tuple(out)


def all_links(topo: TorusTopology) -> list[LinkId]:
    """Canonical ids of all links, in the fixed draw order: the E link of
    node 0, its S link, then the same pair for node 1 and so on. This order
    defines which uniform draw decides which link in bond scenarios."""
    return list(_all_links(topo.rows, topo.cols))


class FailureScenario:
    """Frozen outcome of a failure draw on one topology.

    failed_links always includes the links induced by failed nodes, so the
    alive network is fully described by (failed_links, failed_nodes).
    """

    def __init__(
        self,
        topology: TorusTopology,
        mode: FailureMode,
        p: float,
        seed: int,
        failed_links: frozenset[LinkId] = frozenset(),
        failed_nodes: frozenset[NodeId] = frozenset(),
    ):
        self.topology = topology
        self.mode = mode
        self.p = p
        self.seed = seed
        self.failed_links = frozenset(failed_links)
        self.failed_nodes = frozenset(failed_nodes)

    @cached_property
    def _node_bits(self) -> bytes:
        alive = bytearray(b"\x01") * self.topology.num_nodes
        for v in self.failed_nodes:
            alive[self.topology.node_index(v)] = 0
        return bytes(alive)

    @cached_property
    def _port_bits(self) -> bytes:
        """Per-port aliveness: entry 4*v + d says whether the link at node
        v's port d is up. Symmetric across the two endpoints."""
        topo = self.topology
        nbr = _neighbor_table(topo.rows, topo.cols)
        alive = bytearray(b"\x01") * (4 * topo.num_nodes)
        for node, d in self.failed_links:
            a = topo.node_index(node)
            alive[4 * a + d] = 0
            alive[4 * nbr[4 * a + d] + _OPPOSITE[d]] = 0
        if self.failed_nodes:
            # defensive for hand-built scenarios; factory constructors
            # already fold induced links into failed_links
            for v in self.failed_nodes:
                a = topo.node_index(v)
                for d in range(4):
                    alive[4 * a + d] = 0
                    alive[4 * nbr[4 * a + d] + _OPPOSITE[d]] = 0
        return bytes(alive)

    @cached_property
    def _component_labels(self) -> list[int]:
        """Connected-component label per node index over the alive network;
        dead nodes get -1."""
        topo = self.topology
        n = topo.num_nodes
        nbr = _neighbor_table(topo.rows, topo.cols)
        ports = self._port_bits
        node_bits = self._node_bits
        labels = [-1] * n
        label = 0
        for start in range(n):
            if labels[start] != -1 or not node_bits[start]:
                continue
            labels[start] = label
            stack = [start]
            while stack:
                v = stack.pop()
                base = 4 * v
                for d in range(4):
                    if ports[base + d]:
                        u = nbr[base + d]
                        if labels[u] == -1:
                            labels[u] = label
                            stack.append(u)
            label += 1
        return labels

    def __repr__(self):
        return (
            f"FailureScenario({self.topology.rows}x{self.topology.cols}, "
            f"{self.mode.value}, p={self.p}, seed={self.seed}, "
            f"{len(self.failed_links)} dead links, {len(self.failed_nodes)} dead nodes)"
        )


def apply_bond_failures(topo: TorusTopology, p: float, seed: int) -> FailureScenario:
    """Fail each link independently with probability p."""
    _check_p(p)
    rng = np.random.default_rng(seed)
    mask = rng.random(topo.num_links) < p
    links = _all_links(topo.rows, topo.cols)
    failed = frozenset(links[k] for k in np.nonzero(mask)[0])
    return FailureScenario(topo, FailureMode.BOND, p, seed, failed_links=failed)


def apply_site_failures(topo: TorusTopology, p: float, seed: int) -> FailureScenario:
    """Fail each node independently with probability p; a dead node takes
    all four incident links with it."""
    _check_p(p)
    rng = np.random.default_rng(seed)
    mask = rng.random(topo.num_nodes) < p
    nodes = frozenset(topo.node_at(int(k)) for k in np.nonzero(mask)[0])
    return from_failed_nodes(topo, nodes, p=p, seed=seed)


def from_failed_links(
    topo: TorusTopology, links, p: float = 0.0, seed: int = 0
) -> FailureScenario:
    """Explicit bond scenario from an iterable of (node, direction) links;
    non-canonical forms are normalized."""
    failed = frozenset(canonical_link(topo, node, d) for node, d in links)
    return FailureScenario(topo, FailureMode.BOND, p, seed, failed_links=failed)


def from_failed_nodes(
    topo: TorusTopology, nodes, p: float = 0.0, seed: int = 0
) -> FailureScenario:
    """Explicit site scenario; induces failure of every incident link."""
    failed_nodes = frozenset(tuple(v) for v in nodes)
    failed_links = set()
    for v in failed_nodes:
        for d in DIRECTIONS:
            failed_links.add(canonical_link(topo, v, d))
    return FailureScenario(
        topo,
        FailureMode.SITE,
        p,
        seed,
        failed_links=frozenset(failed_links),
        failed_nodes=failed_nodes,
    )


def _check_p(p: float):
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"failure probability must be in [0, 1], got {p}")


def is_node_alive(scenario: FailureScenario, node: NodeId) -> bool:
    return bool(scenario._node_bits[scenario.topology.node_index(node)])


def is_link_alive(scenario: FailureScenario, node: NodeId, d: Direction) -> bool:
    return bool(scenario._port_bits[4 * scenario.topology.node_index(node) + d])


def alive_degree(scenario: FailureScenario, node: NodeId) -> int:
    base = 4 * scenario.topology.node_index(node)
    bits = scenario._port_bits
    return bits[base] + bits[base + 1] + bits[base + 2] + bits[base + 3]


def largest_component_fraction(scenario: FailureScenario) -> float:
    """Size of the largest alive connected component over the total node
    count. 0.0 if nothing is alive."""
    labels = scenario._component_labels
    counts = {}
    for lab in labels:
        if lab >= 0:
            counts[lab] = counts.get(lab, 0) + 1
    if not counts:
        return 0.0
    return max(counts.values()) / scenario.topology.num_nodes


def is_connected_pair(scenario: FailureScenario, a: NodeId, b: NodeId) -> bool:
    labels = scenario._component_labels
    la = labels[scenario.topology.node_index(a)]
    lb = labels[scenario.topology.node_index(b)]
    return la >= 0 and la == lb
