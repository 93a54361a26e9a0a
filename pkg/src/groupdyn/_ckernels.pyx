# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled birth-death event loop. Must stay bit-identical to _pykernels."""


def advance(long long size,
            const double[::1] join,
            const double[::1] leave,
            const double[::1] exp_draws,
            const double[::1] unif,
            long long skip,
            double[::1] weights,
            long long[::1] log_before,
            double[::1] log_dt):
    cdef Py_ssize_t i, n_events = exp_draws.shape[0]
    cdef bint logging = log_before.shape[0] > 0
    cdef bint stuck = False
    cdef double lam, total, dt
    if unif.shape[0] != n_events:
        raise ValueError("draw arrays differ in length")
    if logging and (log_before.shape[0] != n_events or log_dt.shape[0] != n_events):
        raise ValueError("log arrays must match the number of events")
    with nogil:
        for i in range(n_events):
            lam = join[size]
            total = lam + leave[size]
            if total <= 0.0:
                stuck = True
                break
            dt = exp_draws[i] / total
            if i >= skip:
                weights[size] += dt
            if logging:
                log_before[i] = size
                log_dt[i] = dt
            if unif[i] * total < lam:
                size += 1
            else:
                size -= 1
    if stuck:
        raise ZeroDivisionError("no transition enabled at size %d" % size)
    return size
