"""Executable buffet and Tailor buffer state machines.

Both expose Fill / Read / Update / Shrink with credit accounting. A Tailor adds
the overwriting fill: once a full buffer is asked to take more of the current
tile, its last ``fifo_size`` slots become a FIFO that streams the bumped part
of the tile while the head of the buffer keeps its data.

Offsets in traces are logical: the FIFO region is reported with its oldest
entry at the FIFO head, even though hardware would use a rolling pointer.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import asdict, dataclass
from typing import Any, Iterable, List, Optional, Sequence

BUFFET = "buffet"
OVERBOOKED = "overbooked"


class Stall(Exception):
    """The addressed element is not resident yet; the driver has to supply it."""


class ContractViolation(RuntimeError):
    """An operation was issued while its precondition does not hold."""


@dataclass(frozen=True)
class BufferEvent:
    op: str
    element: Any
    tile: int
    index: Optional[int]
    offset: Optional[int]
    mode: str
    fifo_offset: int

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, default=str)


def dump_trace(events: Iterable[BufferEvent], fh) -> None:
    """Write one JSON record per line."""
    for e in events:
        fh.write(e.to_json())
        fh.write("\n")


def load_trace(fh) -> List[BufferEvent]:
    return [BufferEvent(**json.loads(line)) for line in fh if line.strip()]


class Buffet:
    """Queue-managed buffer: fills at the tail, reads relative to the head,
    shrinks free from the head and release credits to the parent."""

    def __init__(self, capacity: int, *, record: bool = True):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.credits = capacity
        self.tile = 0
        self.parent_fetches = 0
        self.events: List[BufferEvent] = []
        self._record = record
        self._data: List[Any] = []

    # accounting ---------------------------------------------------------
    @property
    def occupancy(self) -> int:
        return len(self._data)

    @property
    def mode(self) -> str:
        return BUFFET

    @property
    def fifo_offset(self) -> int:
        return 0

    def _log(self, op, element, index, offset):
        if self._record:
            self.events.append(BufferEvent(op, element, self.tile, index, offset, self.mode, self.fifo_offset))

    # operations ---------------------------------------------------------
    def fill(self, element) -> int:
        if self.credits == 0:
            raise ContractViolation("fill without credit: buffer is full")
        index = len(self._data)
        self._data.append(element)
        self.credits -= 1
        self.parent_fetches += 1
        self._log("Fill", element, index, index)
        return index

    def _check_index(self, index):
        if index < 0:
            raise ContractViolation(f"negative index {index}")

    def _resolve(self, index) -> int:
        self._check_index(index)
        if index >= len(self._data):
            raise Stall(f"index {index} not resident (occupancy {len(self._data)})")
        return index

    def read(self, index: int):
        offset = self._resolve(index)
        element = self._data[offset]
        self._log("Read", element, index, offset)
        return element

    def update(self, index: int, element) -> None:
        offset = self._resolve(index)
        self._data[offset] = element
        self._log("Update", element, index, offset)

    def shrink(self, num: int) -> None:
        if num < 0 or num > self.occupancy:
            raise ContractViolation(f"shrink({num}) with occupancy {self.occupancy}")
        del self._data[:num]
        self.credits += num
        self._log("Shrink", None, num, None)

    def end_tile(self) -> None:
        """Release everything held for the current tile and advance the tile id."""
        self.shrink(self.occupancy)
        self.tile += 1

    def resident(self) -> list:
        return list(self._data)


class Tailor(Buffet):
    """Buffet with overwriting fills for tiles larger than the buffer.

    ``fifo_size`` slots at the tail form the streaming region once the first
    overwriting fill arrives; slots ``[0, capacity - fifo_size)`` keep their
    data until a shrink. Index/offset translation for the FIFO region uses
    the FIFO offset: the tile index of the oldest streamed entry minus the
    FIFO head.
    """

    def __init__(self, capacity: int, fifo_size: int, *, record: bool = True):
        super().__init__(capacity, record=record)
        if not 1 <= fifo_size <= capacity:
            raise ValueError("fifo_size must lie in [1, capacity]")
        self.fifo_size = fifo_size
        self.fifo_head = capacity - fifo_size
        self._fifo: deque = deque()  # (index, element), oldest first
        self._split = False
        self._tile_elements: Optional[Sequence] = None
        self._base = 0  # tile position of buffer index 0
        self._stream_next = 0

    @property
    def mode(self) -> str:
        return OVERBOOKED if self._split else BUFFET

    @property
    def occupancy(self) -> int:
        if self._split:
            return self.capacity
        return len(self._data)

    @property
    def fifo_offset(self) -> int:
        if not self._fifo:
            return 0
        return self._fifo[0][0] - self.fifo_head

    @property
    def remaining(self) -> Optional[int]:
        """Elements of the current tile from the head onward, when the tile is known."""
        if self._tile_elements is None:
            return None
        return len(self._tile_elements) - self._base

    @property
    def overbooked_tile(self) -> bool:
        rem = self.remaining
        return self._split or (rem is not None and rem > self.capacity)

    def fifo_indices(self) -> list:
        return [i for i, _ in self._fifo]

    def start_tile(self, elements: Optional[Sequence] = None) -> None:
        """Announce the contents of the next tile (needed for streaming wrap and backfill)."""
        if len(self._data) or self._split:
            raise ContractViolation("start_tile on a non-empty buffer")
        self._tile_elements = elements
        self._base = 0
        self._stream_next = 0

    # operations ---------------------------------------------------------
    def fill(self, element) -> int:
        if self._split:
            raise ContractViolation("fill while streaming: overwriting fills own the tail")
        index = super().fill(element)
        self._stream_next = index + 1
        return index

    def _advance_stream(self, index):
        nxt = index + 1
        rem = self.remaining
        if rem is not None and nxt >= rem:
            nxt = self.fifo_head
        self._stream_next = nxt

    def owfill(self, element, index: Optional[int] = None) -> int:
        """Overwrite the tail with ``element``; returns the buffer offset written.

        ``index`` defaults to the next position in the tile's stream order,
        which wraps back to the FIFO head after the last element of the tile.
        """
        if not self._split:
            if len(self._data) < self.capacity:
                raise ContractViolation("overwriting fill on a buffer that still has credits")
            # first overwriting fill: the tail region becomes the FIFO
            del self._data[self.fifo_head:]
            self._split = True
        elif len(self._fifo) == self.fifo_size:
            self._fifo.popleft()
        if index is None:
            index = self._stream_next
        if index < self.fifo_head:
            raise ContractViolation(f"overwriting fill for index {index} inside the buffet-managed region")
        self._fifo.append((index, element))
        self._advance_stream(index)
        self.parent_fetches += 1
        offset = self.fifo_head + len(self._fifo) - 1
        self._log("OWFill", element, index, offset)
        return offset

    def resolve_offset(self, index: int) -> int:
        """Buffer offset of a FIFO-region index; raises Stall when not resident."""
        for pos, (i, _) in enumerate(self._fifo):
            if i == index:
                return self.fifo_head + pos
        raise Stall(f"index {index} not resident in the FIFO region")

    @staticmethod
    def fifo_offset_formula(index: int, fifo_head: int, fifo_size: int, fifo_offset: int) -> int:
        """Closed-form offset ``head + ((index - offset - head) mod F)``.

        Agrees with :meth:`resolve_offset` while the streamed cycle length is a
        multiple of ``fifo_size`` or the window has not wrapped.
        """
        return fifo_head + (index - fifo_offset - fifo_head) % fifo_size

    def _resolve(self, index) -> int:
        self._check_index(index)
        if not self._split:
            if index >= len(self._data):
                raise Stall(f"index {index} not resident (occupancy {len(self._data)})")
            return index
        if index < self.fifo_head:
            return index
        return self.resolve_offset(index)

    def read(self, index: int):
        offset = self._resolve(index)
        if self._split and index >= self.fifo_head:
            element = self._fifo[offset - self.fifo_head][1]
        else:
            element = self._data[offset]
        self._log("Read", element, index, offset)
        return element

    def update(self, index: int, element) -> None:
        offset = self._resolve(index)
        if self._split and index >= self.fifo_head:
            pos = offset - self.fifo_head
            self._fifo[pos] = (index, element)
        else:
            self._data[offset] = element
        self._log("Update", element, index, offset)

    def shrink(self, num: int) -> None:
        if not self._split:
            super().shrink(num)
            self._base += num
            self._stream_next = max(0, self._stream_next - num)
            return
        if num < 0 or num > self.capacity:
            raise ContractViolation(f"shrink({num}) with occupancy {self.capacity}")
        if self._tile_elements is None:
            raise ContractViolation("backfill needs the tile contents (call start_tile)")
        # survivors are the buffet-region entries past the shrunk head;
        # streamed data is re-supplied in tile order by the backfill below
        del self._data[:num]
        self._fifo.clear()
        self._split = False
        self._base += num
        self.credits = self.capacity - len(self._data)
        self._log("Shrink", None, num, None)
        rem = self.remaining
        while self.credits and len(self._data) < rem:
            index = len(self._data)
            element = self._tile_elements[self._base + index]
            self._data.append(element)
            self.credits -= 1
            self.parent_fetches += 1
            self._log("ParentRefetch", element, index, index)
        self._stream_next = len(self._data)
        if len(self._data) >= rem:
            self._stream_next = rem

    def end_tile(self) -> None:
        """Drop the finished tile without backfill and move to the next one."""
        n = self.occupancy
        self._data.clear()
        self._fifo.clear()
        self._split = False
        self.credits = self.capacity
        self._tile_elements = None
        self._base = 0
        self._stream_next = 0
        self._log("Shrink", None, n, None)
        self.tile += 1

    def resident(self) -> list:
        return list(self._data) + [e for _, e in self._fifo]


@dataclass
class ScanStats:
    fetches: int = 0
    reads: int = 0
    reread_hits: int = 0
    rereads: int = 0


def drive_scan(buf: Buffet, elements: Sequence, passes: int) -> ScanStats:
    """Read every element of one tile in order, ``passes`` times, fetching on stalls.

    A plain buffet can only free from the head, so a miss on data it cannot
    append drops the whole window and restarts from the missing element.
    """
    stats = ScanStats()
    before = buf.parent_fetches
    tailor = isinstance(buf, Tailor)
    if tailor:
        buf.start_tile(elements)
    base = 0
    n = len(elements)
    for p in range(passes):
        for i in range(n):
            stats.reads += 1
            if p:
                stats.rereads += 1
            rel = i - base
            try:
                if rel < 0:
                    raise Stall
                buf.read(rel)
                if p:
                    stats.reread_hits += 1
                continue
            except Stall:
                pass
            if tailor:
                if buf.mode == BUFFET and buf.credits:
                    buf.fill(elements[i])
                else:
                    idx = buf.fifo_indices()
                    buf.owfill(elements[i])
                    assert buf.fifo_indices()[-1] == i, (idx, i)
                buf.read(i)
            else:
                if not (buf.credits and rel == buf.occupancy):
                    buf.shrink(buf.occupancy)
                    base = i
                buf.fill(elements[i])
                buf.read(i - base)
    buf.end_tile()
    stats.fetches = buf.parent_fetches - before
    return stats


# names used by trace tooling and the equivalence checks
BuffetState = Buffet
TailorState = Tailor
