# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled event loop; mirrors ``SicknessModel`` draw for draw."""

import numpy as np

from libc.math cimport log1p, nextafter, NAN, INFINITY

cdef double TINY_UNIFORM = 2.0 ** -54

cdef enum:
    SICK = 0
    HEAL = 1
    HOSPITAL = 0
    HOME = 1
    REJECTED = 2


cdef class _Uniforms:
    """Reads the RngStream block buffer in place; refills through Python."""
    cdef object stream
    cdef double[::1] buf
    cdef Py_ssize_t pos, n

    def __cinit__(self, stream):
        self.stream = stream
        self._grab()
        self.pos = stream.pos

    cdef void _grab(self):
        self.buf = self.stream.block
        self.n = self.buf.shape[0]

    cdef double next(self) except? -1.0:
        if self.pos >= self.n:
            self.stream.pos = self.pos
            self.stream.refill()
            self._grab()
            self.pos = 0
        self.pos += 1
        return self.buf[self.pos - 1]

    cdef double exponential(self, double rate) except? -1.0:
        cdef double u = self.next()
        if u == 0.0:
            u = TINY_UNIFORM
        return -log1p(-u) / rate

    cdef double uniform(self, double lo, double hi) except? -1.0:
        cdef double x = lo + (hi - lo) * self.next()
        return x if x < hi else nextafter(hi, lo)

    cdef Py_ssize_t index(self, Py_ssize_t n) except -1:
        cdef Py_ssize_t i = <Py_ssize_t>(self.next() * n)
        return i if i < n else n - 1

    cdef void sync(self):
        self.stream.pos = self.pos


cdef class _Log:
    cdef public object time, person, kind, place, heal_time, interarrival
    cdef public object num_sick, num_hospital, departure, na_time, na_person
    cdef double[::1] t_v, ht_v, ia_v, dep_v, nat_v
    cdef int[::1] p_v, ns_v, nh_v, nap_v
    cdef signed char[::1] k_v, pl_v
    cdef Py_ssize_t size, cap

    def __cinit__(self, Py_ssize_t cap):
        self.size = 0
        self.cap = 0
        self._resize(max(cap, 16))

    cdef void _resize(self, Py_ssize_t cap):
        if self.cap == 0:
            self.time = np.empty(cap, np.float64)
            self.person = np.empty(cap, np.int32)
            self.kind = np.empty(cap, np.int8)
            self.place = np.empty(cap, np.int8)
            self.heal_time = np.empty(cap, np.float64)
            self.interarrival = np.empty(cap, np.float64)
            self.num_sick = np.empty(cap, np.int32)
            self.num_hospital = np.empty(cap, np.int32)
            self.departure = np.empty(cap, np.float64)
            self.na_time = np.empty(cap, np.float64)
            self.na_person = np.empty(cap, np.int32)
        else:
            for name in ("time", "person", "kind", "place", "heal_time",
                         "interarrival", "num_sick", "num_hospital",
                         "departure", "na_time", "na_person"):
                old = getattr(self, name)
                new = np.empty(cap, old.dtype)
                new[:self.size] = old[:self.size]
                setattr(self, name, new)
        self.cap = cap
        self.t_v = self.time
        self.p_v = self.person
        self.k_v = self.kind
        self.pl_v = self.place
        self.ht_v = self.heal_time
        self.ia_v = self.interarrival
        self.ns_v = self.num_sick
        self.nh_v = self.num_hospital
        self.dep_v = self.departure
        self.nat_v = self.na_time
        self.nap_v = self.na_person

    cdef void append(self, double t, int pid, int kind, int place, double ht,
                     double ia, int ns, int nh, double dep, double nat, int nap):
        cdef Py_ssize_t i = self.size
        if i == self.cap:
            self._resize(2 * self.cap)
        self.t_v[i] = t
        self.p_v[i] = pid
        self.k_v[i] = kind
        self.pl_v[i] = place
        self.ht_v[i] = ht
        self.ia_v[i] = ia
        self.ns_v[i] = ns
        self.nh_v[i] = nh
        self.dep_v[i] = dep
        self.nat_v[i] = nat
        self.nap_v[i] = nap
        self.size = i + 1

    def finish(self):
        n = self.size
        return {
            "time": self.time[:n].copy(),
            "person": self.person[:n].copy(),
            "kind": self.kind[:n].copy(),
            "place": self.place[:n].copy(),
            "heal_time": self.heal_time[:n].copy(),
            "interarrival": self.interarrival[:n].copy(),
            "num_sick": self.num_sick[:n].copy(),
            "num_hospital": self.num_hospital[:n].copy(),
            "departure": self.departure[:n].copy(),
            "next_arrival_time": self.na_time[:n].copy(),
            "next_arrival_person": self.na_person[:n].copy(),
        }


cdef class _DepartureHeap:
    """Binary min-heap on (time, seq) holding person ids."""
    cdef double[::1] t
    cdef long long[::1] s
    cdef int[::1] p
    cdef Py_ssize_t n

    def __cinit__(self, Py_ssize_t cap):
        self.t = np.empty(cap + 1, np.float64)
        self.s = np.empty(cap + 1, np.int64)
        self.p = np.empty(cap + 1, np.int32)
        self.n = 0

    cdef inline bint _less(self, Py_ssize_t a, Py_ssize_t b):
        return self.t[a] < self.t[b] or (self.t[a] == self.t[b] and self.s[a] < self.s[b])

    cdef inline void _swap(self, Py_ssize_t a, Py_ssize_t b):
        cdef double tt = self.t[a]
        cdef long long ss = self.s[a]
        cdef int pp = self.p[a]
        self.t[a] = self.t[b]; self.s[a] = self.s[b]; self.p[a] = self.p[b]
        self.t[b] = tt; self.s[b] = ss; self.p[b] = pp

    cdef void push(self, double t, long long s, int p):
        cdef Py_ssize_t i = self.n, parent
        self.t[i] = t; self.s[i] = s; self.p[i] = p
        self.n += 1
        while i > 0:
            parent = (i - 1) >> 1
            if self._less(i, parent):
                self._swap(i, parent)
                i = parent
            else:
                break

    cdef void pop(self):
        cdef Py_ssize_t i = 0, l, r, m
        self.n -= 1
        if self.n == 0:
            return
        self.t[0] = self.t[self.n]; self.s[0] = self.s[self.n]; self.p[0] = self.p[self.n]
        while True:
            l = 2 * i + 1
            r = l + 1
            m = i
            if l < self.n and self._less(l, m):
                m = l
            if r < self.n and self._less(r, m):
                m = r
            if m == i:
                break
            self._swap(i, m)
            i = m


def simulate(int population, double lam, double p_hosp, int beds,
             double mu1, double mu2, double r_lo, double r_hi,
             int seeded, double until, stream, bint exact):
    """Run the model; returns log columns plus the initial calendar."""
    cdef _Uniforms rng = _Uniforms(stream)
    cdef _DepartureHeap heap = _DepartureHeap(population)
    cdef _Log log = _Log(<Py_ssize_t>(min(until, 1e7) * lam * population * 2.2) + 64)

    cdef int[::1] healthy = np.arange(population, dtype=np.int32)
    cdef int[::1] hpos = np.arange(population, dtype=np.int32)
    cdef signed char[::1] place = np.full(population, -1, np.int8)
    cdef double[::1] heal = np.zeros(population, np.float64)
    cdef double[::1] dep = np.zeros(population, np.float64)
    cdef Py_ssize_t nh = population
    cdef int sick = 0, occupied = 0
    cdef long long seq = 0

    cdef int arr_p = -1
    cdef double arr_t = INFINITY
    cdef long long arr_s = 0
    cdef bint suspended = False

    cdef double now = 0.0, last_arrival = 0.0, d, rate, t_new, gap, r
    cdef Py_ssize_t idx
    cdef int pid, last, pl, old_p
    cdef bint take_arrival

    initial_departures = []
    initial_arrival = None

    # seed the hospital
    for _ in range(seeded):
        idx = rng.index(nh)
        pid = healthy[idx]
        nh -= 1
        last = healthy[nh]
        if last != pid:
            healthy[idx] = last
            hpos[last] = idx
        hpos[pid] = -1
        occupied += 1
        d = rng.exponential(mu1)
        place[pid] = HOSPITAL
        heal[pid] = d
        dep[pid] = now + d
        sick += 1
        heap.push(dep[pid], seq, pid)
        seq += 1
        initial_departures.append((dep[pid], pid))

    # first arrival
    if nh == 0:
        suspended = True
    else:
        idx = rng.index(nh)
        pid = healthy[idx]
        rate = lam * nh
        nh -= 1
        last = healthy[nh]
        if last != pid:
            healthy[idx] = last
            hpos[last] = idx
        hpos[pid] = -1
        arr_t = now + rng.exponential(rate)
        arr_p = pid
        arr_s = seq
        seq += 1
        initial_arrival = (arr_t, arr_p)

    while True:
        if heap.n > 0 and (arr_p < 0 or heap.t[0] < arr_t
                           or (heap.t[0] == arr_t and heap.s[0] < arr_s)):
            take_arrival = False
            if heap.t[0] > until:
                break
        elif arr_p >= 0:
            take_arrival = True
            if arr_t > until:
                break
        else:
            break

        if take_arrival:
            now = arr_t
            pid = arr_p
            arr_p = -1
            arr_t = INFINITY
            # routing
            if rng.next() < p_hosp:
                if occupied < beds:
                    occupied += 1
                    pl = HOSPITAL
                    d = rng.exponential(mu1)
                else:
                    r = rng.uniform(r_lo, r_hi)
                    pl = REJECTED
                    d = rng.exponential(mu1 / r)
            else:
                pl = HOME
                d = rng.exponential(mu2)
            place[pid] = pl
            heal[pid] = d
            dep[pid] = now + d
            sick += 1
            heap.push(dep[pid], seq, pid)
            seq += 1
            gap = now - last_arrival
            last_arrival = now
            # generator: next sick person
            if nh == 0:
                suspended = True
            else:
                idx = rng.index(nh)
                old_p = healthy[idx]
                rate = lam * nh
                nh -= 1
                last = healthy[nh]
                if last != old_p:
                    healthy[idx] = last
                    hpos[last] = idx
                hpos[old_p] = -1
                arr_t = now + rng.exponential(rate)
                arr_p = old_p
                arr_s = seq
                seq += 1
            log.append(now, pid, SICK, pl, NAN, gap, sick, occupied, dep[pid],
                       arr_t if arr_p >= 0 else NAN, arr_p)
        else:
            now = heap.t[0]
            pid = heap.p[0]
            heap.pop()
            pl = place[pid]
            if pl == HOSPITAL:
                occupied -= 1
            d = heal[pid]
            place[pid] = -1
            sick -= 1
            hpos[pid] = nh
            healthy[nh] = pid
            nh += 1
            if suspended:
                suspended = False
                idx = rng.index(nh)
                old_p = healthy[idx]
                rate = lam * nh
                nh -= 1
                last = healthy[nh]
                if last != old_p:
                    healthy[idx] = last
                    hpos[last] = idx
                hpos[old_p] = -1
                arr_t = now + rng.exponential(rate)
                arr_p = old_p
                arr_s = seq
                seq += 1
            elif exact and arr_p >= 0:
                t_new = now + rng.exponential(lam)
                if t_new < arr_t:
                    # pid is the last healthy entry: pop it, return the loser
                    nh -= 1
                    hpos[pid] = -1
                    old_p = arr_p
                    hpos[old_p] = nh
                    healthy[nh] = old_p
                    nh += 1
                    arr_p = pid
                    arr_t = t_new
                    arr_s = seq
                    seq += 1
            log.append(now, pid, HEAL, pl, d, NAN, sick, occupied, NAN,
                       arr_t if arr_p >= 0 else NAN, arr_p)

    rng.sync()
    cols = log.finish()
    cols["initial_departures"] = initial_departures
    cols["initial_arrival"] = initial_arrival
    return cols
