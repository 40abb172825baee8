"""Event-scheduling core: clock, future event list, capacity resource, RNG.

Everything here is single-threaded and deterministic.  The random stream
hands out uniforms from fixed-size blocks so the compiled event loop can
read the very same numbers straight out of the buffer.
"""

from __future__ import annotations

import enum
import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from bedsim.errors import (
    EmptyCalendarError,
    InvalidRangeError,
    InvalidRateError,
    PastEventError,
    UnderflowError,
)

__all__ = [
    "EventKind",
    "ScheduledEvent",
    "SimClock",
    "FutureEventList",
    "Acquisition",
    "CapacityResource",
    "RngStream",
    "Signals",
]

# substitute for an exact zero uniform so exponential draws stay > 0
_TINY_UNIFORM = 2.0**-54


class EventKind(enum.IntEnum):
    ARRIVAL = 0
    DEPARTURE = 1


@dataclass(frozen=True, slots=True)
class ScheduledEvent:
    kind: EventKind
    person_id: int
    scheduled_time: float


@dataclass(slots=True)
class SimClock:
    """Simulation time in days. Only moves forward."""

    now: float = 0.0


class FutureEventList:
    """Calendar of pending events ordered by ``(time, insertion sequence)``.

    The sequence number makes simultaneous events pop in FIFO order.
    Cancellation is lazy: a cancelled entry stays in the heap and is
    skipped when it reaches the top.
    """

    def __init__(self, clock: SimClock | None = None):
        self.clock = clock if clock is not None else SimClock()
        self._heap: list[tuple[float, int, ScheduledEvent]] = []
        self._cancelled: set[int] = set()
        self._seq = 0

    def __len__(self):
        return len(self._heap) - len(self._cancelled)

    def __bool__(self):
        return len(self) > 0

    def schedule(self, event: ScheduledEvent) -> int:
        """Insert ``event``; returns its sequence number (the cancel handle)."""
        if event.scheduled_time < self.clock.now:
            raise PastEventError(
                f"event at t={event.scheduled_time!r} is before now={self.clock.now!r}"
            )
        seq = self._seq
        self._seq += 1
        heapq.heappush(self._heap, (event.scheduled_time, seq, event))
        return seq

    def cancel(self, seq: int) -> None:
        self._cancelled.add(seq)

    def _drop_cancelled(self):
        heap = self._heap
        while heap and heap[0][1] in self._cancelled:
            self._cancelled.discard(heapq.heappop(heap)[1])

    def peek_time(self) -> float:
        """Time of the next live event, or ``inf`` when empty."""
        self._drop_cancelled()
        return self._heap[0][0] if self._heap else math.inf

    def advance(self) -> ScheduledEvent:
        """Pop the next event and move the clock to its timestamp."""
        self._drop_cancelled()
        if not self._heap:
            raise EmptyCalendarError("future event list is empty")
        time, _, event = heapq.heappop(self._heap)
        self.clock.now = time
        return event

    def snapshot(self) -> list[ScheduledEvent]:
        """Live entries in pop order."""
        live = [e for e in self._heap if e[1] not in self._cancelled]
        return [e[2] for e in sorted(live)]


class Acquisition(enum.Enum):
    GRANTED = "granted"
    REJECTED = "rejected"


@dataclass(slots=True)
class CapacityResource:
    """Loss-type resource: a request either gets a slot or is turned away."""

    capacity: int
    occupied: int = 0
    granted_total: int = field(default=0, repr=False)
    released_total: int = field(default=0, repr=False)

    def __post_init__(self):
        if self.capacity < 0:
            raise ValueError("capacity must be non-negative")
        if not 0 <= self.occupied <= self.capacity:
            raise ValueError("occupied must lie in [0, capacity]")

    def acquire(self) -> Acquisition:
        if self.occupied < self.capacity:
            self.occupied += 1
            self.granted_total += 1
            return Acquisition.GRANTED
        return Acquisition.REJECTED

    def release(self) -> None:
        if self.occupied == 0:
            raise UnderflowError("release on an empty resource")
        self.occupied -= 1
        self.released_total += 1


class RngStream:
    """Seeded stream of uniforms with inverse-transform variates.

    Uniforms come from a PCG64 generator in blocks of ``block_size``.
    Every variate consumes exactly one uniform, so the number of draws
    is what fixes the stream position, not the kind of variate.
    """

    block_size = 4096

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.PCG64(self.seed))
        self.block = np.empty(0, dtype=np.float64)
        self._values: list[float] = []
        self.pos = 0
        self._base = 0

    @property
    def draws(self) -> int:
        """Number of uniforms consumed so far."""
        return self._base + self.pos

    def refill(self) -> None:
        self._base += len(self.block)
        self.block = self._gen.random(self.block_size)
        self._values = self.block.tolist()
        self.pos = 0

    def random(self) -> float:
        """Next uniform in [0, 1)."""
        if self.pos >= len(self._values):
            self.refill()
        u = self._values[self.pos]
        self.pos += 1
        return u

    def exponential(self, rate: float) -> float:
        if not 0.0 < rate < math.inf:
            raise InvalidRateError(f"rate must be positive and finite, got {rate!r}")
        u = self.random() or _TINY_UNIFORM
        return -math.log1p(-u) / rate

    def uniform(self, lo: float, hi: float) -> float:
        if not lo < hi:
            raise InvalidRangeError(f"need lo < hi, got [{lo!r}, {hi!r})")
        x = lo + (hi - lo) * self.random()
        return x if x < hi else math.nextafter(hi, lo)

    def index(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        i = int(self.random() * n)
        return i if i < n else n - 1


class Signals:
    """Named suspend/reactivate points for generator-style processes."""

    def __init__(self):
        self._waiting: dict[str, list] = {}

    def suspend(self, name: str, callback) -> None:
        self._waiting.setdefault(name, []).append(callback)

    def is_suspended(self, name: str) -> bool:
        return bool(self._waiting.get(name))

    def reactivate(self, name: str) -> bool:
        """Resume everything parked on ``name``; False if nothing was."""
        callbacks = self._waiting.pop(name, [])
        for cb in callbacks:
            cb()
        return bool(callbacks)
