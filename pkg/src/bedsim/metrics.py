"""Event log container and steady-state response estimators.

Population-level responses are time-weighted over the horizon: the sick
count and bed occupancy are piecewise constant between events, so their
means are integrals divided by elapsed time.  Episode-level responses
(hospital share, sickness time) are plain averages over episodes.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from bedsim.errors import TimeRegressionError

SICK = 0
HEAL = 1
EVENT_TYPES = {SICK: "Sick", HEAL: "Heal"}
PLACES = {0: "Hospital", 1: "Home", 2: "RejectedHome"}
_NO_PERSON = -1

_COLUMNS = {
    "time": np.float64,
    "person": np.int32,
    "kind": np.int8,
    "place": np.int8,
    "heal_time": np.float64,
    "interarrival": np.float64,
    "num_sick": np.int32,
    "num_hospital": np.int32,
    "departure": np.float64,
    "next_arrival_time": np.float64,
    "next_arrival_person": np.int32,
}


@dataclass(frozen=True)
class EventLogRow:
    sim_time: float
    person_id: int
    event_type: str
    healing_place: str | None
    heal_time: float | None
    interarrival: float | None
    num_sick: int
    num_in_hospital: int
    fel_snapshot: list[tuple[float, str, int]]


@dataclass(eq=False)
class EventLog:
    """Column-oriented record of every sickness and healing event.

    Counts are the state *after* the row's event.  ``departure`` is the
    scheduled healing time on Sick rows; ``next_arrival_*`` describe the
    pending arrival once the row has been processed (NaN / -1 while the
    generator is suspended).
    """

    population: int
    bed_count: int
    until: float
    initial_sick: int
    initial_hospital: int
    initial_departures: list[tuple[float, int]]
    initial_arrival: tuple[float, int] | None
    time: np.ndarray
    person: np.ndarray
    kind: np.ndarray
    place: np.ndarray
    heal_time: np.ndarray
    interarrival: np.ndarray
    num_sick: np.ndarray
    num_hospital: np.ndarray
    departure: np.ndarray
    next_arrival_time: np.ndarray
    next_arrival_person: np.ndarray

    @classmethod
    def from_rows(cls, rows, **meta) -> "EventLog":
        if rows:
            transposed = list(zip(*rows))
        else:
            transposed = [()] * len(_COLUMNS)
        cols = {
            name: np.asarray(values, dtype=dtype)
            for (name, dtype), values in zip(_COLUMNS.items(), transposed)
        }
        return cls(**meta, **cols)

    def __len__(self):
        return len(self.time)

    def columns(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in _COLUMNS}

    def same_events(self, other: "EventLog") -> bool:
        """Bitwise equality of every column and of the initial state."""
        if (self.initial_departures != other.initial_departures
                or self.initial_arrival != other.initial_arrival
                or len(self) != len(other)):
            return False
        for name in _COLUMNS:
            a, b = getattr(self, name), getattr(other, name)
            if a.dtype != b.dtype or a.tobytes() != b.tobytes():
                return False
        return True

    def fel_snapshots(self):
        """Yield, per row, the pending events sorted by time as
        ``(time, kind, person_id)`` with kind ``"arrival"``/``"departure"``."""
        pending = {p: t for t, p in self.initial_departures}
        kind, person, departure = self.kind, self.person, self.departure
        na_t, na_p = self.next_arrival_time, self.next_arrival_person
        for i in range(len(self)):
            pid = int(person[i])
            if kind[i] == SICK:
                pending[pid] = float(departure[i])
            else:
                del pending[pid]
            snap = [(t, "departure", p) for p, t in pending.items()]
            if na_p[i] != _NO_PERSON:
                snap.append((float(na_t[i]), "arrival", int(na_p[i])))
            snap.sort()
            yield snap

    def rows(self, with_fel: bool = True):
        snaps = self.fel_snapshots() if with_fel else None
        for i in range(len(self)):
            sick = self.kind[i] == SICK
            yield EventLogRow(
                sim_time=float(self.time[i]),
                person_id=int(self.person[i]),
                event_type=EVENT_TYPES[int(self.kind[i])],
                healing_place=PLACES.get(int(self.place[i])),
                heal_time=None if sick else float(self.heal_time[i]),
                interarrival=float(self.interarrival[i]) if sick else None,
                num_sick=int(self.num_sick[i]),
                num_in_hospital=int(self.num_hospital[i]),
                fel_snapshot=next(snaps) if snaps is not None else [],
            )


@dataclass
class TimeWeightedAccumulator:
    """Running integral of a piecewise-constant series."""

    last_time: float = 0.0
    last_value: float = 0.0
    integral: float = 0.0
    integral_sq: float = 0.0
    zero_time: float = 0.0
    start_time: float = 0.0

    def record(self, time: float, new_value: float) -> None:
        if time < self.last_time:
            raise TimeRegressionError(f"t={time!r} precedes last t={self.last_time!r}")
        dt = time - self.last_time
        v = self.last_value
        self.integral += v * dt
        self.integral_sq += v * v * dt
        if v == 0:
            self.zero_time += dt
        self.last_time = time
        self.last_value = new_value

    def elapsed(self) -> float:
        return self.last_time - self.start_time

    def mean(self) -> float:
        h = self.elapsed()
        return self.integral / h if h > 0 else 0.0

    def std(self) -> float:
        h = self.elapsed()
        if h <= 0:
            return 0.0
        m = self.integral / h
        return math.sqrt(max(self.integral_sq / h - m * m, 0.0))

    def zero_fraction(self) -> float:
        h = self.elapsed()
        return self.zero_time / h if h > 0 else 0.0

    @classmethod
    def from_steps(cls, initial: float, times, values, start: float, end: float):
        """Accumulate a whole series at once over ``[start, end]``.

        ``values[i]`` holds from ``times[i]`` until the next change;
        ``initial`` holds before the first change.  Same result as replaying
        ``record`` over the clipped series.
        """
        times = np.asarray(times, dtype=np.float64)
        if len(times) and np.any(np.diff(times) < 0):
            raise TimeRegressionError("times must be non-decreasing")
        bounds = np.concatenate(([start], np.clip(times, start, end), [end]))
        seg = np.diff(bounds)
        vals = np.concatenate(([initial], np.asarray(values, dtype=np.float64)))
        return cls(
            last_time=float(end),
            last_value=float(vals[-1]),
            integral=float(np.dot(vals, seg)),
            integral_sq=float(np.dot(vals * vals, seg)),
            zero_time=float(seg[vals == 0].sum()),
            start_time=float(start),
        )


@dataclass(frozen=True)
class SummaryResponses:
    p_hospital_empty: float
    proportion_healed_in_hospital: float
    avg_sick: float
    avg_proportion_sick: float
    std_sick: float
    avg_beds: float
    std_beds: float
    avg_sickness_time: float

    def to_dict(self) -> dict[str, float]:
        return asdict(self)

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


@dataclass(frozen=True)
class EpisodeCounts:
    episodes: int = 0
    hospital: int = 0
    home: int = 0
    rejected: int = 0
    completed: int = 0
    total_heal_time: float = 0.0


def finalize(sick: TimeWeightedAccumulator, beds: TimeWeightedAccumulator,
             counts: EpisodeCounts, population: int) -> SummaryResponses:
    horizon = sick.elapsed()
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    avg_sick = sick.integral / horizon
    return SummaryResponses(
        p_hospital_empty=beds.zero_time / horizon,
        proportion_healed_in_hospital=(
            counts.hospital / counts.episodes if counts.episodes else 0.0),
        avg_sick=avg_sick,
        avg_proportion_sick=avg_sick / population,
        std_sick=sick.std(),
        avg_beds=beds.integral / horizon,
        std_beds=beds.std(),
        avg_sickness_time=(
            counts.total_heal_time / counts.completed if counts.completed else 0.0),
    )


def episode_counts(log: EventLog, warmup: float = 0.0) -> EpisodeCounts:
    keep = log.time >= warmup
    sick = keep & (log.kind == SICK)
    heal = keep & (log.kind == HEAL)
    places = log.place[sick]
    return EpisodeCounts(
        episodes=int(sick.sum()),
        hospital=int((places == 0).sum()),
        home=int((places == 1).sum()),
        rejected=int((places == 2).sum()),
        completed=int(heal.sum()),
        total_heal_time=float(log.heal_time[heal].sum()),
    )


def summarize(log: EventLog, warmup: float = 0.0):
    """Responses over ``[warmup, until]``; returns ``(responses, counts)``."""
    if not 0.0 <= warmup < log.until:
        raise ValueError("need 0 <= warmup < until")
    sick = TimeWeightedAccumulator.from_steps(
        log.initial_sick, log.time, log.num_sick, warmup, log.until)
    beds = TimeWeightedAccumulator.from_steps(
        log.initial_hospital, log.time, log.num_hospital, warmup, log.until)
    counts = episode_counts(log, warmup)
    return finalize(sick, beds, counts, log.population), counts
