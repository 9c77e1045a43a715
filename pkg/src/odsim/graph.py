"""Append-only timing graph with incremental longest-path cycles.

Nodes are committed events (task boundaries and FIFO accesses); a node's
cycle is the longest path from the start node. Edge kinds:

  seq       intra-module ordering, weight = cycle offset between events
  data      write k -> read k of one FIFO, weight 1 (registered FIFO)
  capacity  read (w - S) -> write w for depth S, weight 1, added by finalize
  call      region -> subtask boundary, weight 1 (unused by flat designs)

One predecessor edge is stored inline with each node, the rest in an
overflow list, so the partial graph can be walked without building any
side structures.
"""
from __future__ import annotations

from dataclasses import dataclass, field

START = "start"
TASK_START = "task_start"
TASK_END = "task_end"
FIFO_WRITE = "fifo_write"
FIFO_READ = "fifo_read"
MARKER = "marker"

SEQ = "seq"
DATA = "data"
CAPACITY = "capacity"
CALL = "call"


@dataclass
class _Node:
    __slots__ = ("kind", "module", "fifo", "ordinal", "cycle",
                 "first_pred", "extra_preds")
    kind: str
    module: str | None
    fifo: str | None
    ordinal: int | None
    cycle: int
    first_pred: tuple[int, str, int] | None   # (src, edge kind, weight)
    extra_preds: list[tuple[int, str, int]]


@dataclass
class FinalizeOutcome:
    """Result of the capacity pass over a finished (or stuck) run."""
    total_cycles: int | None
    blocked_modules: tuple[str, ...]
    capacity_edges: int
    max_settled_cycle: int = 0
    settled: list[bool] = field(default_factory=list)

    @property
    def deadlocked(self) -> bool:
        return self.total_cycles is None


class GraphError(Exception):
    pass


class SimGraph:
    def __init__(self) -> None:
        self._nodes: list[_Node] = []
        self.start = self._append(_Node(START, None, None, None, 0, None, []))

    def _append(self, node: _Node) -> int:
        self._nodes.append(node)
        return len(self._nodes) - 1

    def __len__(self) -> int:
        return len(self._nodes)

    def copy(self) -> "SimGraph":
        dup = SimGraph.__new__(SimGraph)
        dup._nodes = [_Node(n.kind, n.module, n.fifo, n.ordinal, n.cycle,
                            n.first_pred, list(n.extra_preds))
                      for n in self._nodes]
        dup.start = self.start
        return dup

    def node(self, node_id: int) -> _Node:
        if not 0 <= node_id < len(self._nodes):
            raise GraphError(f"unknown node id {node_id}")
        return self._nodes[node_id]

    def node_cycle(self, node_id: int) -> int:
        return self.node(node_id).cycle

    def add_node(self, kind: str, module: str | None = None,
                 fifo: str | None = None, ordinal: int | None = None,
                 pred: int | None = None, weight: int = 0,
                 extra_preds: list[tuple[int, str, int]] | None = None) -> int:
        """Append a node; its cycle is fixed immediately from its
        predecessors, which must already exist."""
        first = None
        if pred is not None:
            self.node(pred)  # existence check
            first = (pred, SEQ, weight)
        extras = list(extra_preds or [])
        for src, _, _ in extras:
            self.node(src)
        cycle = 0
        for src, _, w in ([first] if first else []) + extras:
            cycle = max(cycle, self._nodes[src].cycle + w)
        return self._append(_Node(kind, module, fifo, ordinal, cycle, first, extras))

    def preds(self, node_id: int) -> list[tuple[int, str, int]]:
        n = self.node(node_id)
        out = [n.first_pred] if n.first_pred else []
        return out + list(n.extra_preds)

    def add_edge(self, src: int, dst: int, kind: str, weight: int = 1,
                 recompute: bool = True) -> int:
        """Attach a predecessor edge to dst and return dst's updated cycle.

        With recompute, cycles of dst's transitive successors are updated
        too; the engine only ever adds edges into freshly created nodes, so
        it never needs the propagation.
        """
        self.node(src)
        dst_node = self.node(dst)
        dst_node.extra_preds.append((src, kind, weight))
        candidate = self._nodes[src].cycle + weight
        if candidate <= dst_node.cycle:
            return dst_node.cycle
        dst_node.cycle = candidate
        if recompute:
            self._propagate(dst)
        return dst_node.cycle

    def _successors(self) -> list[list[tuple[int, int]]]:
        succ: list[list[tuple[int, int]]] = [[] for _ in self._nodes]
        for i, n in enumerate(self._nodes):
            for src, _, w in self.preds(i):
                succ[src].append((i, w))
        return succ

    def _propagate(self, root: int) -> None:
        succ = self._successors()
        work = [root]
        while work:
            cur = work.pop()
            base = self._nodes[cur].cycle
            for dst, w in succ[cur]:
                if base + w > self._nodes[dst].cycle:
                    self._nodes[dst].cycle = base + w
                    work.append(dst)

    def check_longest_path(self) -> None:
        """Assert the longest-path equation at every node (test hook)."""
        for i, n in enumerate(self._nodes):
            preds = self.preds(i)
            expect = max((self._nodes[s].cycle + w for s, _, w in preds), default=0)
            if n.cycle != expect:
                raise GraphError(f"node {i} cycle {n.cycle} != expected {expect}")

    def max_cycle(self) -> int:
        return max(n.cycle for n in self._nodes)

    # --- finalization -------------------------------------------------------

    def strip_capacity_edges(self) -> None:
        for n in self._nodes:
            n.extra_preds = [e for e in n.extra_preds if e[1] != CAPACITY]

    def finalize(self, access_nodes: dict[str, tuple[list[int], list[int]]],
                 depths: dict[str, int]) -> FinalizeOutcome:
        """Insert capacity edges for the given depths and recompute every
        cycle from scratch.

        access_nodes maps each FIFO to its (write node ids, read node ids)
        in ordinal order. For depth S, write w > S gains an edge from read
        (w - S). A write whose required read never happened can never
        settle, and a dependency cycle among capacity edges means the
        design stalls forever at these depths; both report the owning
        modules as blocked. Re-running with other depths is supported: old
        capacity edges are stripped first, so finalize is idempotent.
        """
        self.strip_capacity_edges()
        starved: set[int] = set()
        cap_count = 0
        for fifo, (writes, reads) in access_nodes.items():
            depth = depths[fifo]
            for idx in range(depth, len(writes)):
                # write ordinal w = idx + 1 needs read ordinal w - depth
                target_read = idx - depth
                if target_read < len(reads):
                    self._nodes[writes[idx]].extra_preds.append(
                        (reads[target_read], CAPACITY, 1))
                    cap_count += 1
                else:
                    starved.add(writes[idx])
        # longest path over the full edge set, Kahn order
        indeg = [0] * len(self._nodes)
        succ = self._successors()
        for i in range(len(self._nodes)):
            indeg[i] = len(self.preds(i))
        for i in starved:
            indeg[i] += 1  # never becomes ready
        for n in self._nodes:
            n.cycle = 0
        ready = [i for i, d in enumerate(indeg) if d == 0]
        settled = 0
        seen = [False] * len(self._nodes)
        max_settled = 0
        while ready:
            cur = ready.pop()
            seen[cur] = True
            settled += 1
            cycle = max((self._nodes[s].cycle + w for s, _, w in self.preds(cur)),
                        default=0)
            self._nodes[cur].cycle = cycle
            max_settled = max(max_settled, cycle)
            for dst, _ in succ[cur]:
                indeg[dst] -= 1
                if indeg[dst] == 0:
                    ready.append(dst)
        if settled < len(self._nodes):
            blocked = sorted({n.module for i, n in enumerate(self._nodes)
                              if not seen[i] and n.module})
            return FinalizeOutcome(None, tuple(blocked), cap_count, max_settled, seen)
        return FinalizeOutcome(self.max_cycle() + 1, (), cap_count, max_settled, seen)

    # --- serialization ------------------------------------------------------

    def dump(self, order: list[int] | None = None,
             meta: dict | None = None) -> dict:
        """JSON-ready snapshot. `order` remaps internal (creation-order,
        schedule-dependent) ids to a canonical order so dumps compare
        equal across scheduling jitter."""
        order = order if order is not None else list(range(len(self._nodes)))
        remap = {old: new for new, old in enumerate(order)}
        nodes = []
        edges = []
        for new_id, old_id in enumerate(order):
            n = self._nodes[old_id]
            nodes.append({
                "id": new_id, "kind": n.kind, "module": n.module,
                "fifo": n.fifo, "ordinal": n.ordinal, "cycle": n.cycle,
            })
            for src, kind, w in self.preds(old_id):
                edges.append({"src": remap[src], "dst": new_id,
                              "kind": kind, "weight": w})
        edges.sort(key=lambda e: (e["dst"], e["src"], e["kind"]))
        out = {"schema": "odsim-graph/1", "nodes": nodes, "edges": edges}
        if meta:
            out.update(meta)
        return out


def graph_from_dump(dump: dict, drop_capacity: bool = True) -> SimGraph:
    """Rebuild a graph from its dump; capacity edges are dropped by default
    so a new finalization can insert them for different depths.

    Edges may point across the dump's node ordering (capacity edges do),
    so nodes are created first and wired afterwards; cycles are taken from
    the dump as-is.
    """
    nodes = dump["nodes"]
    if not nodes or nodes[0]["kind"] != START:
        raise GraphError("dump must begin with the start node")
    g = SimGraph()
    for spec in nodes[1:]:
        nid = g._append(_Node(spec["kind"], spec["module"], spec["fifo"],
                              spec["ordinal"], spec["cycle"], None, []))
        if nid != spec["id"]:
            raise GraphError("dump node ids must be dense and ordered")
    count = len(g)
    for e in dump["edges"]:
        if drop_capacity and e["kind"] == CAPACITY:
            continue
        if not (0 <= e["src"] < count and 0 < e["dst"] < count):
            raise GraphError(f"edge references unknown node: {e}")
        g._nodes[e["dst"]].extra_preds.append((e["src"], e["kind"], e["weight"]))
    return g


def access_nodes_from_dump(dump: dict) -> dict[str, tuple[list[int], list[int]]]:
    """Recover per-FIFO (writes, reads) node lists, ordinal order."""
    acc: dict[str, tuple[list[tuple[int, int]], list[tuple[int, int]]]] = {}
    for n in dump["nodes"]:
        if n["kind"] in (FIFO_WRITE, FIFO_READ):
            writes, reads = acc.setdefault(n["fifo"], ([], []))
            target = writes if n["kind"] == FIFO_WRITE else reads
            target.append((n["ordinal"], n["id"]))
    out = {}
    for fifo, (writes, reads) in acc.items():
        writes.sort()
        reads.sort()
        out[fifo] = ([nid for _, nid in writes], [nid for _, nid in reads])
    return out
