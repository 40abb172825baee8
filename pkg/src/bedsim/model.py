"""Population/hospital model: people get sick, heal, and get sick again.

Each of ``population`` people falls sick at rate ``sickness_rate``.  A sick
person targets the hospital with probability ``hospital_probability`` and
otherwise heals at home.  The hospital is a loss system with
``bed_count`` beds: a patient who finds it full is sent home and heals
``r ~ U[r_lo, r_hi)`` times slower than a hospital patient would.

Two arrival modes are available:

``exact``
    One pending arrival at a time, drawn at rate ``lam * |healthy|``.  When
    someone heals while an arrival is pending they compete for it with a
    fresh ``Exp(lam)`` clock, so the total sickness rate always equals
    ``lam * |healthy|`` and the process is the finite-source Markov chain.
``frozen``
    The pending arrival keeps the rate it was drawn with until it fires;
    healings in between do not raise it.  This undercounts sickness when
    the population is small.

Random draws happen in a fixed order so a run is a pure function of its
seed: seeding (person choice, heal duration per seeded patient); for each
arrival, routing, rejection factor (only if rejected), heal duration, then
the next arrival's person choice and interarrival time; on a healing, the
competing clock (exact mode) or the reactivated generator's draws.
"""

from __future__ import annotations

import enum
import math
import os
from dataclasses import dataclass

import numpy as np

from bedsim.errors import AllSickSuspension, ConfigError
from bedsim.kernel import (
    Acquisition,
    CapacityResource,
    EventKind,
    FutureEventList,
    RngStream,
    ScheduledEvent,
    Signals,
    SimClock,
)
from bedsim.metrics import HEAL, SICK, EventLog, summarize

try:
    from bedsim import _ccore
except ImportError:  # extension not built
    _ccore = None

__all__ = [
    "ModelParameters",
    "InitialHospitalStatus",
    "HealingPlace",
    "RateMode",
    "Person",
    "SicknessModel",
    "run",
    "simulate_log",
    "available_backends",
    "default_backend",
]


class HealingPlace(enum.IntEnum):
    HOSPITAL = 0
    HOME = 1
    REJECTED_HOME = 2


class InitialHospitalStatus(str, enum.Enum):
    EMPTY = "empty"
    HALF_FULL = "half-full"
    FULL = "full"

    def seeded_count(self, bed_count: int) -> int:
        if self is InitialHospitalStatus.EMPTY:
            return 0
        if self is InitialHospitalStatus.HALF_FULL:
            return bed_count // 2
        return bed_count

    @classmethod
    def parse(cls, value) -> "InitialHospitalStatus":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        if key == "halffull":
            key = "half-full"
        try:
            return cls(key)
        except ValueError:
            raise ConfigError("hospital_status", f"unknown status {value!r}") from None


class RateMode(str, enum.Enum):
    EXACT = "exact"
    FROZEN = "frozen"


@dataclass(frozen=True)
class ModelParameters:
    population: int = 1582
    sickness_rate: float = 1 / 300
    hospital_probability: float = 0.2
    bed_count: int = 66
    mu1: float = 1 / 6
    mu2: float = 1 / 10
    r_lo: float = 1.0
    r_hi: float = 2.0

    def __post_init__(self):
        if not isinstance(self.population, (int, np.integer)) or self.population <= 0:
            raise ConfigError("population", "must be a positive integer")
        if not isinstance(self.bed_count, (int, np.integer)) or self.bed_count < 0:
            raise ConfigError("bed_count", "must be a non-negative integer")
        if self.bed_count > self.population:
            raise ConfigError("bed_count", "cannot exceed population")
        if not 0.0 <= self.hospital_probability <= 1.0:
            raise ConfigError("hospital_probability", "must lie in [0, 1]")
        for name in ("sickness_rate", "mu1", "mu2"):
            value = getattr(self, name)
            if not 0.0 < value < math.inf:
                raise ConfigError(name, "must be a positive finite rate")
        if not 1.0 <= self.r_lo:
            raise ConfigError("r_lo", "rejection factor must be >= 1")
        if not self.r_lo < self.r_hi < math.inf:
            raise ConfigError("r_hi", "must be finite and greater than r_lo")

    @property
    def mean_rejection_factor(self) -> float:
        return 0.5 * (self.r_lo + self.r_hi)


@dataclass
class Person:
    id: int
    sick: bool = False
    healing_place: HealingPlace | None = None
    heal_duration: float | None = None
    departure_time: float | None = None


class SicknessModel:
    """Pure-Python event loop over the kernel primitives.

    The compiled core in ``bedsim._ccore`` reproduces this loop draw for
    draw; the two produce identical event logs for the same seed.
    """

    def __init__(self, params: ModelParameters, status, seed: int, rate_mode="exact"):
        self.params = params
        self.status = InitialHospitalStatus.parse(status)
        self.rate_mode = RateMode(rate_mode)
        self.stream = seed if isinstance(seed, RngStream) else RngStream(seed)
        self.clock = SimClock()
        self.fel = FutureEventList(self.clock)
        self.hospital = CapacityResource(params.bed_count)
        self.signals = Signals()

        n = params.population
        self.people = [Person(i) for i in range(n)]
        self.healthy = list(range(n))
        self._healthy_pos = list(range(n))
        self.sick_count = 0
        self.pending: tuple[int, float, int] | None = None  # (person, time, seq)
        self._last_arrival = 0.0
        self._rows: list[tuple] = []
        self._initial_departures: list[tuple[float, int]] = []
        self._initial_arrival: tuple[float, int] | None = None
        self._initialized = False

    # -- healthy-set bookkeeping: swap-remove keeps selection O(1) and the
    # -- array order reproducible across backends
    def _take_healthy(self, index: int) -> int:
        healthy, pos = self.healthy, self._healthy_pos
        person = healthy[index]
        last = healthy.pop()
        if last != person:
            healthy[index] = last
            pos[last] = index
        pos[person] = -1
        return person

    def _add_healthy(self, person: int) -> None:
        self._healthy_pos[person] = len(self.healthy)
        self.healthy.append(person)

    @property
    def will_arrive(self) -> set[tuple[int, float]]:
        return set() if self.pending is None else {self.pending[:2]}

    @property
    def sick_people(self) -> set[int]:
        return {p.id for p in self.people if p.sick}

    @property
    def hospital_count(self) -> int:
        return self.hospital.occupied

    def initialize(self) -> None:
        """Seed the hospital per ``status`` and draw the first arrival."""
        if self._initialized:
            raise RuntimeError("model already initialized")
        self._initialized = True
        p = self.params
        for _ in range(self.status.seeded_count(p.bed_count)):
            person = self.people[self._take_healthy(self.stream.index(len(self.healthy)))]
            self.hospital.acquire()
            duration = self.stream.exponential(p.mu1)
            self._make_sick(person, HealingPlace.HOSPITAL, duration)
            self._initial_departures.append((person.departure_time, person.id))
        try:
            self.next_arrival()
            self._initial_arrival = self.pending[1], self.pending[0]
        except AllSickSuspension:
            self.signals.suspend("generator", self.next_arrival)

    def next_arrival(self) -> tuple[int, float]:
        """Pick the next person to fall sick and schedule their arrival."""
        h = len(self.healthy)
        if h == 0:
            raise AllSickSuspension("everyone is sick")
        person = self._take_healthy(self.stream.index(h))
        gap = self.stream.exponential(self.params.sickness_rate * h)
        self._schedule_arrival(person, self.clock.now + gap)
        return person, gap

    def _schedule_arrival(self, person: int, when: float) -> None:
        seq = self.fel.schedule(ScheduledEvent(EventKind.ARRIVAL, person, when))
        self.pending = (person, when, seq)

    def route(self, person: Person) -> tuple[HealingPlace, float]:
        """Decide where an arriving patient heals and for how long."""
        p, stream = self.params, self.stream
        if stream.random() < p.hospital_probability:
            if self.hospital.acquire() is Acquisition.GRANTED:
                return HealingPlace.HOSPITAL, stream.exponential(p.mu1)
            r = stream.uniform(p.r_lo, p.r_hi)
            return HealingPlace.REJECTED_HOME, stream.exponential(p.mu1 / r)
        return HealingPlace.HOME, stream.exponential(p.mu2)

    def _make_sick(self, person: Person, place: HealingPlace, duration: float) -> None:
        person.sick = True
        person.healing_place = place
        person.heal_duration = duration
        person.departure_time = self.clock.now + duration
        self.sick_count += 1
        self.fel.schedule(ScheduledEvent(EventKind.DEPARTURE, person.id, person.departure_time))

    def depart(self, person: Person) -> float:
        """Heal ``person``; returns the completed heal duration."""
        if person.healing_place is HealingPlace.HOSPITAL:
            self.hospital.release()
        duration = person.heal_duration
        person.sick = False
        person.healing_place = person.heal_duration = person.departure_time = None
        self.sick_count -= 1
        self._add_healthy(person.id)
        if self.signals.is_suspended("generator"):
            self.signals.reactivate("generator")
        elif self.rate_mode is RateMode.EXACT and self.pending is not None:
            self._compete(person.id)
        return duration

    def _compete(self, person: int) -> None:
        challenger = self.clock.now + self.stream.exponential(self.params.sickness_rate)
        old_person, old_time, old_seq = self.pending
        if challenger < old_time:
            self.fel.cancel(old_seq)
            self._take_healthy(self._healthy_pos[person])
            self._add_healthy(old_person)
            self._schedule_arrival(person, challenger)

    def _on_arrival(self, pid: int) -> None:
        now = self.clock.now
        self.pending = None
        person = self.people[pid]
        place, duration = self.route(person)
        self._make_sick(person, place, duration)
        gap = now - self._last_arrival
        self._last_arrival = now
        try:
            self.next_arrival()
        except AllSickSuspension:
            self.signals.suspend("generator", self.next_arrival)
        self._log(pid, SICK, int(place), math.nan, gap, person.departure_time)

    def _on_departure(self, pid: int) -> None:
        person = self.people[pid]
        place = int(person.healing_place)
        duration = self.depart(person)
        self._log(pid, HEAL, place, duration, math.nan, math.nan)

    def _log(self, pid, kind, place, heal_time, gap, departure):
        pending = self.pending
        self._rows.append((
            self.clock.now, pid, kind, place, heal_time, gap,
            self.sick_count, self.hospital.occupied, departure,
            pending[1] if pending else math.nan,
            pending[0] if pending else -1,
        ))

    def run_until(self, until: float) -> EventLog:
        if not self._initialized:
            self.initialize()
        fel = self.fel
        while fel.peek_time() <= until:
            event = fel.advance()
            if event.kind is EventKind.ARRIVAL:
                self._on_arrival(event.person_id)
            else:
                self._on_departure(event.person_id)
        return self.event_log(until)

    def event_log(self, until: float) -> EventLog:
        seeded = len(self._initial_departures)
        return EventLog.from_rows(
            self._rows,
            population=self.params.population,
            bed_count=self.params.bed_count,
            until=until,
            initial_sick=seeded,
            initial_hospital=seeded,
            initial_departures=self._initial_departures,
            initial_arrival=self._initial_arrival,
        )


def available_backends() -> list[str]:
    return ["compiled", "python"] if _ccore is not None else ["python"]


def default_backend() -> str:
    """``compiled`` when the extension is importable, unless overridden by
    the ``BEDSIM_BACKEND`` environment variable."""
    forced = os.environ.get("BEDSIM_BACKEND", "").strip().lower()
    if forced:
        if forced not in available_backends():
            raise ConfigError("backend", f"{forced!r} is not available")
        return forced
    return available_backends()[0]


def simulate_log(params: ModelParameters, status, seed: int, until: float,
                 rate_mode="exact", backend: str | None = None) -> EventLog:
    """Run the model and return only the event log."""
    backend = backend or default_backend()
    status = InitialHospitalStatus.parse(status)
    rate_mode = RateMode(rate_mode)
    if backend == "python":
        return SicknessModel(params, status, seed, rate_mode).run_until(until)
    if backend != "compiled" or _ccore is None:
        raise ConfigError("backend", f"{backend!r} is not available")
    stream = seed if isinstance(seed, RngStream) else RngStream(seed)
    seeded = status.seeded_count(params.bed_count)
    cols = _ccore.simulate(
        params.population, params.sickness_rate, params.hospital_probability,
        params.bed_count, params.mu1, params.mu2, params.r_lo, params.r_hi,
        seeded, float(until), stream, rate_mode is RateMode.EXACT,
    )
    init_dep = cols.pop("initial_departures")
    init_arr = cols.pop("initial_arrival")
    return EventLog(
        population=params.population,
        bed_count=params.bed_count,
        until=float(until),
        initial_sick=seeded,
        initial_hospital=seeded,
        initial_departures=[(float(t), int(p)) for t, p in init_dep],
        initial_arrival=init_arr,
        **cols,
    )


def run(config, backend: str | None = None):
    """Simulate one configuration; returns ``(EventLog, SummaryResponses)``."""
    log = simulate_log(
        config.params, config.hospital_status, config.seed, config.until,
        rate_mode=config.rate_mode, backend=backend,
    )
    responses, _ = summarize(log, warmup=config.warmup)
    return log, responses
