"""CSV/JSON output: event table, time series, run summaries.

Floats in CSV files are written with 6 significant digits.  The FEL
column lists pending events as ``time:kind:person_id`` joined by ``;`` in
time order.
"""

from __future__ import annotations

import bisect
import csv
import json
import math
from dataclasses import asdict
from pathlib import Path

import numpy as np

from bedsim.errors import BedSimError
from bedsim.metrics import (
    EVENT_TYPES,
    HEAL,
    PLACES,
    SICK,
    EpisodeCounts,
    SummaryResponses,
    TimeWeightedAccumulator,
    finalize,
)

__all__ = [
    "IoError",
    "EVENT_LOG_HEADER",
    "emit_event_log",
    "emit_timeseries",
    "emit_summary",
    "summary_document",
    "read_summary",
    "read_event_log",
    "summary_from_event_csv",
]

EVENT_LOG_HEADER = [
    "sim_time", "person_id", "event_type", "healing_place", "heal_time",
    "interarrival", "num_sick", "num_in_hospital", "fel",
]
TIMESERIES_HEADER = ["time", "num_sick", "num_in_hospital"]


class IoError(BedSimError, OSError):
    pass


def fmt(x: float) -> str:
    return format(x, ".6g")


def _open_for_write(path):
    path = Path(path)
    try:
        return path.open("w", newline="")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def _fel_strings(log):
    """Per-row FEL cells, built incrementally from a sorted pending list."""
    keys: list[tuple[float, int]] = []
    cells: list[str] = []

    def insert(t, person, kind):
        k = (t, person)
        i = bisect.bisect_left(keys, k)
        keys.insert(i, k)
        cells.insert(i, f"{fmt(t)}:{kind}:{person}")

    def remove(t, person):
        i = bisect.bisect_left(keys, (t, person))
        del keys[i]
        del cells[i]

    for t, p in log.initial_departures:
        insert(t, p, "departure")
    departure_of = {p: t for t, p in log.initial_departures}
    kind = log.kind.tolist()
    person = log.person.tolist()
    dep = log.departure.tolist()
    na_t = log.next_arrival_time.tolist()
    na_p = log.next_arrival_person.tolist()
    for i in range(len(kind)):
        pid = person[i]
        if kind[i] == SICK:
            departure_of[pid] = dep[i]
            insert(dep[i], pid, "departure")
        else:
            remove(departure_of.pop(pid), pid)
        if na_p[i] >= 0:
            arrival = f"{fmt(na_t[i])}:arrival:{na_p[i]}"
            j = bisect.bisect_left(keys, (na_t[i], na_p[i]))
            yield ";".join(cells[:j] + [arrival] + cells[j:])
        else:
            yield ";".join(cells)


def emit_event_log(log, path, with_fel: bool = True) -> None:
    """Write the event table; ``with_fel=False`` leaves the fel column empty."""
    fels = _fel_strings(log) if with_fel else None
    with _open_for_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EVENT_LOG_HEADER)
        cols = zip(log.time.tolist(), log.person.tolist(), log.kind.tolist(),
                   log.place.tolist(), log.heal_time.tolist(), log.interarrival.tolist(),
                   log.num_sick.tolist(), log.num_hospital.tolist())
        for t, pid, kind, place, heal, gap, ns, nh in cols:
            w.writerow([
                fmt(t), pid, EVENT_TYPES[kind], PLACES.get(place, ""),
                fmt(heal) if kind == HEAL else "",
                fmt(gap) if kind == SICK else "",
                ns, nh, next(fels) if fels is not None else "",
            ])


def emit_timeseries(log, path) -> None:
    """Sick count and occupancy: a ``t=0`` row for the initial state, then
    one row per event."""
    with _open_for_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TIMESERIES_HEADER)
        w.writerow([fmt(0.0), log.initial_sick, log.initial_hospital])
        for t, ns, nh in zip(log.time.tolist(), log.num_sick.tolist(), log.num_hospital.tolist()):
            w.writerow([fmt(t), ns, nh])


_ANALYTIC_KEYS = {
    "analytic_L": lambda a: a.machine_repair.L,
    "analytic_W": lambda a: a.machine_repair.W,
    "analytic_lambda_e": lambda a: a.machine_repair.lambda_e,
    "analytic_L_over_N": lambda a: a.machine_repair.L / a.machine_repair.population,
    "analytic_p0h": lambda a: a.erlang.p0h,
    "analytic_Lh": lambda a: a.erlang.Lh,
    "analytic_blocking": lambda a: a.erlang.blocking,
}


def summary_document(responses: SummaryResponses, analytic=None, validation=None,
                     config=None, counts: EpisodeCounts | None = None) -> dict:
    doc = {}
    if config is not None:
        doc["config"] = config.to_dict()
    doc.update(responses.to_dict())
    if counts is not None:
        doc["episodes"] = asdict(counts)
    if analytic is not None:
        for key, get in _ANALYTIC_KEYS.items():
            doc[key] = get(analytic)
        doc["analytic"] = analytic.to_dict()
    if validation is not None:
        doc["comparisons"] = validation.to_dict()["comparisons"]
        doc["verdict"] = validation.verdict
    return doc


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def write_json(doc, path) -> None:
    with _open_for_write(path) as fh:
        json.dump(_json_safe(doc), fh, indent=2, allow_nan=False)
        fh.write("\n")


def emit_summary(responses, analytic, validation, path, config=None, counts=None) -> dict:
    doc = summary_document(responses, analytic, validation, config, counts)
    write_json(doc, path)
    return doc


def read_summary(path) -> SummaryResponses:
    doc = json.loads(Path(path).read_text())
    return SummaryResponses(**{k: doc[k] for k in SummaryResponses.field_names()})


def read_event_log(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


def summary_from_event_csv(path, population: int, until: float,
                           initial: tuple[int, int] | None = None) -> SummaryResponses:
    """Recompute the responses from an emitted event table.

    The state before the first row is inferred from that row unless
    ``initial`` (sick, in hospital) is given.
    """
    rows = read_event_log(path)
    times = [float(r["sim_time"]) for r in rows]
    sick = [int(r["num_sick"]) for r in rows]
    beds = [int(r["num_in_hospital"]) for r in rows]
    if initial is None:
        if rows:
            first = rows[0]
            step = 1 if first["event_type"] == "Sick" else -1
            bed_step = step if first["healing_place"] == "Hospital" else 0
            initial = (sick[0] - step, beds[0] - bed_step)
        else:
            initial = (0, 0)
    sick_acc = TimeWeightedAccumulator.from_steps(initial[0], times, sick, 0.0, until)
    bed_acc = TimeWeightedAccumulator.from_steps(initial[1], times, beds, 0.0, until)
    sick_rows = [r for r in rows if r["event_type"] == "Sick"]
    heal_rows = [r for r in rows if r["event_type"] == "Heal"]
    counts = EpisodeCounts(
        episodes=len(sick_rows),
        hospital=sum(r["healing_place"] == "Hospital" for r in sick_rows),
        home=sum(r["healing_place"] == "Home" for r in sick_rows),
        rejected=sum(r["healing_place"] == "RejectedHome" for r in sick_rows),
        completed=len(heal_rows),
        total_heal_time=math.fsum(float(r["heal_time"]) for r in heal_rows),
    )
    return finalize(sick_acc, bed_acc, counts, population)
