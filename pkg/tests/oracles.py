"""Independent oracles used to check the simulation and the calculators.

None of these share code with the paths they check.
"""

import itertools
import math

import mpmath
import numpy as np

HEALTHY, HOSPITAL, HOME, REJECTED = range(4)


def ctmc_stationary(population, lam, p, beds, mu1, mu2, mean_rejected_time):
    """Stationary law of (sick count, occupancy) for the per-person chain.

    States list every person as healthy / in hospital / home / rejected
    home; the generator is built by enumerating transitions.  Rejected
    patients leave at rate ``1 / mean_rejected_time``.
    """
    states = [s for s in itertools.product(range(4), repeat=population)
              if s.count(HOSPITAL) <= beds]
    index = {s: i for i, s in enumerate(states)}
    q = np.zeros((len(states), len(states)))
    leave = {HOSPITAL: mu1, HOME: mu2, REJECTED: 1.0 / mean_rejected_time}
    for s in states:
        i = index[s]
        full = s.count(HOSPITAL) >= beds
        for person, st in enumerate(s):
            moves = []
            if st == HEALTHY:
                moves.append((REJECTED if full else HOSPITAL, lam * p))
                moves.append((HOME, lam * (1 - p)))
            else:
                moves.append((HEALTHY, leave[st]))
            for new, rate in moves:
                if rate == 0:
                    continue
                t = list(s)
                t[person] = new
                q[i, index[tuple(t)]] += rate
    np.fill_diagonal(q, -q.sum(axis=1))
    # pi Q = 0 with sum(pi) = 1
    a = np.vstack([q.T, np.ones(len(states))])
    b = np.zeros(len(states) + 1)
    b[-1] = 1.0
    pi = np.linalg.lstsq(a, b, rcond=None)[0]
    dist = {}
    for s, w in zip(states, pi):
        key = (population - s.count(HEALTHY), s.count(HOSPITAL))
        dist[key] = dist.get(key, 0.0) + w
    return dist


def time_weighted_distribution(log):
    """Fraction of [0, until] spent in each (sick, occupancy) pair."""
    t = np.concatenate(([0.0], log.time, [log.until]))
    sick = np.concatenate(([log.initial_sick], log.num_sick))
    occ = np.concatenate(([log.initial_hospital], log.num_hospital))
    dt = np.diff(t)
    dist = {}
    for s, o, w in zip(sick.tolist(), occ.tolist(), dt.tolist()):
        dist[(s, o)] = dist.get((s, o), 0.0) + w
    return {k: v / log.until for k, v in dist.items()}


def total_variation(p, q):
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


def erlang_b_recurrence(a, k, dps=60):
    """B(k) = a B(k-1) / (k + a B(k-1)), B(0) = 1, in high precision."""
    with mpmath.workdps(dps):
        a = mpmath.mpf(a)
        b = mpmath.mpf(1)
        for j in range(1, k + 1):
            b = a * b / (j + a * b)
        return b


def machine_repair_closed_form(n, rho):
    """Binomial identity: sum C(n,k) rho^k = (1 + rho)^n."""
    return {
        "log_p0": -n * math.log1p(rho),
        "L": n * rho / (1 + rho),
    }


def sample_mean(draw, n):
    return math.fsum(draw() for _ in range(n)) / n
