"""Compare the compiled and pure-Python event loops.

    python3 benchmarks/bench_kernel.py [--until 100000] [--repeat 3]
"""

import argparse
import time

from bedsim.model import ModelParameters, available_backends, simulate_log


def best_time(backend, until, repeat):
    best, events = float("inf"), 0
    for _ in range(repeat):
        start = time.perf_counter()
        log = simulate_log(ModelParameters(), "empty", 978, until, backend=backend)
        best = min(best, time.perf_counter() - start)
        events = len(log)
    return best, events


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--until", type=float, default=100_000.0)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    results = {}
    for backend in available_backends():
        seconds, events = best_time(backend, args.until, args.repeat)
        results[backend] = seconds
        print(f"{backend:>9}: {events} events in {seconds:.3f} s ({events / seconds / 1e6:.2f} M events/s)")
    if len(results) == 2:
        print(f"  speedup: {results['python'] / results['compiled']:.1f}x")
    else:
        print("  compiled core not built; only the Python loop was timed")


if __name__ == "__main__":
    main()
