"""Pure-Python reference implementation of the hot loops.

``_kernels.pyx`` mirrors these functions statement for statement so the two
backends agree bit for bit. Change both together.

Device parameter vector layout (float64, length 12)::

    0 hrs          4 alpha         8  knee_fraction
    1 lrs          5 beta          9  knee_dose
    2 v_set        6 alpha_reset   10 linear_dose
    3 v_reset      7 beta_reset    11 seed_fraction
"""
import math

import numpy as np

EXP_CAP = 700.0


def programmed_fraction(dose, prm):
    a = prm[8]
    y0 = prm[11]
    arg = dose * (1.0 + y0) / prm[10]
    if arg > EXP_CAP:
        arg = EXP_CAP
    e = y0 * math.exp(arg)
    y = 1.0 - (1.0 + y0) / (1.0 + e)  # monotone in e under rounding
    x = a * (1.0 - math.exp(-dose / prm[9])) + (1.0 - a) * y
    if x > 1.0:
        x = 1.0
    return x


def memristance(dose, prm):
    return prm[0] - programmed_fraction(dose, prm) * (prm[0] - prm[1])


def integrate_dose(dose, volts, h, r_series, prm, gain, out=None):
    """Advance the programming dose through ``volts`` (one entry per step of ``h`` s).

    ``r_series`` > 0 puts a resistor in series, so the device sees the divided
    voltage. ``gain`` scales both drift rates (cycle-to-cycle noise). When
    ``out`` is given, the dose after every step is written into it.
    """
    v_set = prm[2]
    v_reset = prm[3]
    a_set = prm[4] * gain
    b_set = prm[5]
    a_reset = prm[6] * gain
    b_reset = prm[7]
    n = len(volts)
    for k in range(n):
        v = float(volts[k])
        if r_series > 0.0:
            m = memristance(dose, prm)
            v = v * m / (m + r_series)
        if v >= v_set:
            dose = dose + a_set * math.pow(v - v_set, b_set) * h
        elif v <= v_reset:
            dose = dose - a_reset * math.pow(v_reset - v, b_reset) * h
            if dose < 0.0:
                dose = 0.0
        if out is not None:
            out[k] = dose
    return dose


def _update(h, current, hold):
    if h > 0.0:
        return 1
    if h < 0.0:
        return -1
    return current if hold else 1


def _field(J, s, i, n):
    h = 0.0
    for j in range(n):
        h = h + J[i][j] * s[j]
    return h


def _is_fixed(J, s, n, hold):
    for i in range(n):
        if _update(_field(J, s, i, n), s[i], hold) != s[i]:
            return False
    return True


def retrieve_batch(J, starts, idx, updates_per_iter, hold):
    """Asynchronous retrieval for a batch of start states.

    ``idx[t]`` holds the pre-drawn neuron indices for trial ``t``
    (``max_iter * updates_per_iter`` of them). Iteration stops early once the
    state is a fixed point of every local field.
    """
    Jl = np.asarray(J, dtype=np.float64).tolist()
    starts = np.asarray(starts, dtype=np.int64)
    idx = np.asarray(idx, dtype=np.int64)
    T, n = starts.shape
    max_iter = idx.shape[1] // updates_per_iter
    finals = np.empty_like(starts)
    iters = np.zeros(T, dtype=np.int64)
    converged = np.zeros(T, dtype=np.uint8)
    for t in range(T):
        s = starts[t].tolist()
        row = idx[t].tolist()
        conv = 0
        it = 0
        while it < max_iter:
            if _is_fixed(Jl, s, n, hold):
                conv = 1
                break
            base = it * updates_per_iter
            for u in range(updates_per_iter):
                i = row[base + u]
                s[i] = _update(_field(Jl, s, i, n), s[i], hold)
            it += 1
        if not conv and _is_fixed(Jl, s, n, hold):
            conv = 1
        finals[t] = s
        iters[t] = it
        converged[t] = conv
    return finals, iters, converged
