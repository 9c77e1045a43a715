"""Per-FIFO ledgers of committed accesses.

Each committed read/write is recorded with its graph node, ordinal order.
The value queue carries the functional payload between modules, so timing
and data share one source of truth. Blocking writes are committed
optimistically (depth is enforced by capacity edges at finalization and by
query resolution), so the queue length is not bounded by the depth here.
"""
from __future__ import annotations

from collections import deque


class FifoUnderflow(Exception):
    """Read from an empty table; the engine must never let this happen."""


class FifoTable:
    def __init__(self, name: str, depth: int):
        self.name = name
        self.depth = depth
        self.write_nodes: list[int] = []   # index k holds ordinal k+1
        self.read_nodes: list[int] = []
        self.values: deque[int] = deque()

    @property
    def writes_committed(self) -> int:
        return len(self.write_nodes)

    @property
    def reads_committed(self) -> int:
        return len(self.read_nodes)

    @property
    def pending_data(self) -> int:
        return len(self.values)

    def record_write(self, node: int, value: int) -> int:
        self.write_nodes.append(node)
        self.values.append(value)
        return len(self.write_nodes)

    def record_read(self, node: int) -> tuple[int, int]:
        if not self.values:
            raise FifoUnderflow(f"read from empty FIFO {self.name!r}")
        self.read_nodes.append(node)
        assert len(self.read_nodes) <= len(self.write_nodes)
        return len(self.read_nodes), self.values.popleft()

    def nth_write(self, ordinal: int) -> int | None:
        """Node of the ordinal-th committed write, or None if not committed."""
        if ordinal < 1:
            raise ValueError("ordinals start at 1")
        if ordinal <= len(self.write_nodes):
            return self.write_nodes[ordinal - 1]
        return None

    def nth_read(self, ordinal: int) -> int | None:
        if ordinal < 1:
            raise ValueError("ordinals start at 1")
        if ordinal <= len(self.read_nodes):
            return self.read_nodes[ordinal - 1]
        return None
