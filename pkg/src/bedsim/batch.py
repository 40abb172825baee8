"""Run many configurations and tabulate their responses side by side."""

from __future__ import annotations

import csv
import logging
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from bedsim import io
from bedsim.analytics import analytic_oracle, validate
from bedsim.config import BatchSpec, SimulationConfig
from bedsim.errors import BedSimError
from bedsim.metrics import SummaryResponses, summarize
from bedsim.model import simulate_log

log = logging.getLogger(__name__)

__all__ = ["BatchRun", "BatchResult", "run_batch", "write_batch_outputs", "run_name"]


@dataclass
class BatchRun:
    entry: dict
    config: SimulationConfig | None = None
    responses: SummaryResponses | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class BatchResult:
    runs: list[BatchRun]
    mean: dict[str, float] = field(default_factory=dict)
    std: dict[str, float] = field(default_factory=dict)

    @property
    def succeeded(self) -> list[BatchRun]:
        return [r for r in self.runs if r.ok]

    @property
    def failed(self) -> list[BatchRun]:
        return [r for r in self.runs if not r.ok]

    def to_dict(self) -> dict:
        return {
            "runs": [
                {
                    "config": r.config.to_dict() if r.config else dict(r.entry),
                    "responses": r.responses.to_dict() if r.responses else None,
                    "error": r.error,
                }
                for r in self.runs
            ],
            "aggregate": {"mean": self.mean, "std": self.std},
        }


def run_name(config: SimulationConfig) -> str:
    return f"until{config.until:g}_{config.hospital_status.value}_seed{config.seed}"


def _simulate_one(config: SimulationConfig, backend, out_dir, write_events, with_fel):
    sim = simulate_log(config.params, config.hospital_status, config.seed, config.until,
                       rate_mode=config.rate_mode, backend=backend)
    responses, counts = summarize(sim, warmup=config.warmup)
    if out_dir is not None:
        run_dir = Path(out_dir) / run_name(config)
        run_dir.mkdir(parents=True, exist_ok=True)
        analytic = analytic_oracle(config.params)
        report = validate(responses, analytic.machine_repair, analytic.erlang)
        io.emit_summary(responses, analytic, report, run_dir / "summary.json", config, counts)
        io.emit_timeseries(sim, run_dir / "timeseries.csv")
        if write_events:
            io.emit_event_log(sim, run_dir / "events.csv", with_fel=with_fel)
    return responses


def _worker(args):
    config, backend, out_dir, write_events, with_fel = args
    try:
        return _simulate_one(config, backend, out_dir, write_events, with_fel), None
    except (BedSimError, ValueError, OSError) as exc:
        return None, f"{type(exc).__name__}: {exc}"


def aggregate(responses: list[SummaryResponses]):
    """Mean and sample standard deviation of each response across runs."""
    mean, std = {}, {}
    for name in SummaryResponses.field_names():
        values = [getattr(r, name) for r in responses]
        if not values:
            continue
        mean[name] = statistics.fmean(values)
        std[name] = statistics.stdev(values) if len(values) > 1 else 0.0
    return mean, std


def run_batch(spec: BatchSpec, jobs: int = 1, backend: str | None = None,
              out_dir=None, write_events: bool = False, with_fel: bool = False) -> BatchResult:
    """Simulate every entry of ``spec``; a failing entry is recorded and
    skipped, the rest still run."""
    if len(spec) == 0:
        raise ValueError("batch spec is empty")
    if out_dir is not None and not Path(out_dir).is_dir():
        raise io.IoError(f"output directory {out_dir} does not exist")
    runs, work = [], []
    for entry, cfg in spec.configs():
        if isinstance(cfg, BedSimError):
            runs.append(BatchRun(entry, error=f"{type(cfg).__name__}: {cfg}"))
        else:
            run = BatchRun(entry, config=cfg)
            runs.append(run)
            work.append((run, (cfg, backend, out_dir, write_events, with_fel)))

    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_worker, [w[1] for w in work]))
    else:
        outcomes = [_worker(w[1]) for w in work]

    for (run, _), (responses, error) in zip(work, outcomes):
        run.responses, run.error = responses, error
        if error:
            log.warning("batch entry %s failed: %s", run.entry, error)

    result = BatchResult(runs)
    result.mean, result.std = aggregate([r.responses for r in result.succeeded])
    if out_dir is not None:
        write_batch_outputs(result, out_dir)
    return result


def write_batch_outputs(result: BatchResult, out_dir) -> None:
    out = Path(out_dir)
    if not out.is_dir():
        raise io.IoError(f"output directory {out} does not exist")
    names = SummaryResponses.field_names()
    with (out / "batch_table.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["until", "hospital_status", "seed", *names, "error"])
        for r in result.runs:
            if r.config is not None:
                key = [io.fmt(r.config.until), r.config.hospital_status.value, r.config.seed]
            else:
                key = [r.entry.get("until", ""), r.entry.get("hospital_status", r.entry.get("status", "")),
                       r.entry.get("seed", "")]
            vals = [io.fmt(getattr(r.responses, n)) for n in names] if r.responses else [""] * len(names)
            w.writerow([*key, *vals, r.error or ""])
        for label, agg in (("mean", result.mean), ("std", result.std)):
            w.writerow([label, "", "", *(io.fmt(agg[n]) if n in agg else "" for n in names), ""])
    io.write_json(result.to_dict(), out / "batch_summary.json")
