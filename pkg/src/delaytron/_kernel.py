"""Compiled run loop.

Mirrors the object-level loop in ``learners._run_reference`` operation for
operation: the same probability expressions, the same CDF inversion, and the
same per-round batching ``W + eta * (U_1 + ... + U_n)``. Features arrive in
CSR form so each round touches only the active coordinates.

All indices here are 0-based.
"""
import numba as nb
import numpy as np


@nb.njit(cache=True)
def _row_scores(w, idx, val, out):
    k = w.shape[0]
    for r in range(k):
        acc = 0.0
        for p in range(idx.shape[0]):
            acc += w[r, idx[p]] * val[p]
        out[r] = acc


@nb.njit(cache=True)
def run_loop(indptr, indices, values, labels, k, d, delays, uniforms, gamma,
             eta, adaptive, eta_scale):
    T = delays.shape[0]
    w = np.zeros((k, d))

    # delivery buckets: events due at round t (1-based) sorted by origin
    counts = np.zeros(T + 2, dtype=np.int64)
    for s in range(T):
        due = s + 1 + delays[s]
        if due <= T:
            counts[due] += 1
    due_ptr = np.zeros(T + 2, dtype=np.int64)
    for t in range(1, T + 2):
        due_ptr[t] = due_ptr[t - 1] + counts[t - 1]
    fill = due_ptr.copy()
    due_origin = np.zeros(due_ptr[T + 1], dtype=np.int64)
    for s in range(T):
        due = s + 1 + delays[s]
        if due <= T:
            due_origin[fill[due]] = s
            fill[due] += 1

    p_other = gamma / k
    p_hat = (1.0 - gamma) + gamma / k

    y_hat = np.zeros(T, dtype=np.int64)
    y_tilde = np.zeros(T, dtype=np.int64)
    loss = np.zeros(T)
    received = np.zeros(T, dtype=np.int64)
    epochs = np.zeros(T, dtype=np.int64)
    etas = np.zeros(T)
    missing_sum = np.zeros(T, dtype=np.int64)

    s_buf = np.zeros(k)
    acc = np.zeros((k, d))
    e = 0
    cum_missing = 0
    cum_received = 0
    eta_now = eta
    if adaptive:
        eta_now = eta_scale * 2.0 ** (-e / 2)

    for t0 in range(T):
        t = t0 + 1
        lo, hi = indptr[t0], indptr[t0 + 1]
        idx = indices[lo:hi]
        val = values[lo:hi]
        _row_scores(w, idx, val, s_buf)

        best = 0
        for r in range(1, k):
            if s_buf[r] > s_buf[best]:
                best = r
        y_hat[t0] = best

        y = labels[t0]
        rival = -np.inf
        for r in range(k):
            if r != y and s_buf[r] > rival:
                rival = s_buf[r]
        loss[t0] = max(0.0, 1.0 - s_buf[y] + rival)

        u = uniforms[t0]
        c = 0.0
        pick = k - 1
        for r in range(k):
            c += p_hat if r == best else p_other
            if u < c:
                pick = r
                break
        y_tilde[t0] = pick

        first, last = due_ptr[t], due_ptr[t + 1]
        n_due = last - first
        cum_received += n_due
        received[t0] = cum_received

        cum_missing += t - cum_received
        if adaptive:
            while cum_missing >= 2 ** e:
                e += 1
            eta_now = eta_scale * 2.0 ** (-e / 2)
        missing_sum[t0] = cum_missing
        epochs[t0] = e
        etas[t0] = eta_now

        if n_due == 0:
            continue
        for q in range(first, last):
            s = due_origin[q]
            sl, sh = indptr[s], indptr[s + 1]
            ys, yh = y_tilde[s], y_hat[s]
            if ys == labels[s]:
                prob = p_hat if ys == yh else p_other
                coef = 0.0
                coef += 1.0 / prob
                if ys == yh:
                    coef -= 1.0
                for p in range(sl, sh):
                    acc[ys, indices[p]] += coef * values[p]
                if ys != yh:
                    for p in range(sl, sh):
                        acc[yh, indices[p]] += -1.0 * values[p]
            else:
                for p in range(sl, sh):
                    acc[yh, indices[p]] += -1.0 * values[p]
        for q in range(first, last):
            s = due_origin[q]
            sl, sh = indptr[s], indptr[s + 1]
            for r in (y_tilde[s], y_hat[s]):
                for p in range(sl, sh):
                    j = indices[p]
                    if acc[r, j] != 0.0:
                        w[r, j] = w[r, j] + eta_now * acc[r, j]
                        acc[r, j] = 0.0

    return (w, y_hat, y_tilde, loss, received, epochs, etas, missing_sum,
            due_ptr[1:T + 2] - due_ptr[1], due_origin)


@nb.njit(cache=True)
def averaged_subgradient(indptr, indices, values, labels, k, d, order, c):
    """Per-example hinge subgradient descent, step ``c / sqrt(step)``.

    Returns the last iterate and the uniform average of all iterates visited
    before each step, the latter kept lazily through ``sum_i i * u_i``.
    """
    w = np.zeros((k, d))
    weighted = np.zeros((k, d))
    s_buf = np.zeros(k)
    n = order.shape[0]
    for i in range(n):
        step_no = i + 1
        ex = order[i]
        lo, hi = indptr[ex], indptr[ex + 1]
        _row_scores(w, indices[lo:hi], values[lo:hi], s_buf)
        y = labels[ex]
        rival = -1
        for r in range(k):
            if r != y and (rival < 0 or s_buf[r] > s_buf[rival]):
                rival = r
        if 1.0 - s_buf[y] + s_buf[rival] <= 0.0:
            continue
        step = c / np.sqrt(step_no)
        for p in range(lo, hi):
            j = indices[p]
            g = step * values[p]
            w[y, j] += g
            w[rival, j] -= g
            weighted[y, j] += step_no * g
            weighted[rival, j] -= step_no * g
    avg = w - weighted / n
    return w, avg
