"""Pure-Python birth-death event loop, used when the extension is not built."""


def advance(size, join, leave, exp_draws, unif, skip, weights, log_before, log_dt):
    """Run ``len(exp_draws)`` jump events starting from ``size``.

    Sojourn time ``exp_draw / total_rate`` in the current size is added to
    ``weights`` for every event at index >= ``skip``. A join happens when
    ``unif * total_rate < join_rate``. Returns the final size.
    """
    n_events = len(exp_draws)
    if len(unif) != n_events:
        raise ValueError("draw arrays differ in length")
    logging = len(log_before) > 0
    if logging and (len(log_before) != n_events or len(log_dt) != n_events):
        raise ValueError("log arrays must match the number of events")
    join_l = join.tolist()
    leave_l = leave.tolist()
    acc = weights.tolist()
    befores = [0] * n_events if logging else None
    dts = [0.0] * n_events if logging else None
    for i, (e, u) in enumerate(zip(exp_draws.tolist(), unif.tolist())):
        lam = join_l[size]
        total = lam + leave_l[size]
        if total <= 0.0:
            raise ZeroDivisionError(f"no transition enabled at size {size}")
        dt = e / total
        if i >= skip:
            acc[size] += dt
        if logging:
            befores[i] = size
            dts[i] = dt
        if u * total < lam:
            size += 1
        else:
            size -= 1
    weights[:] = acc
    if logging:
        log_before[:] = befores
        log_dt[:] = dts
    return size
