"""Compiled inner loops. Everything here is order-dependent and sequential."""
import numba
import numpy as np


@numba.njit(cache=True)
def compensated_cumsum(terms):
    """Running sums ``out[k] = sum(terms[:k])`` with Neumaier compensation.

    ``out`` has one more entry than ``terms`` and starts at exactly 0.
    """
    m = terms.shape[0]
    out = np.empty(m + 1)
    out[0] = 0.0
    s = 0.0
    c = 0.0
    for i in range(m):
        x = terms[i]
        t = s + x
        if abs(s) >= abs(x):
            c += (s - t) + x
        else:
            c += (x - t) + s
        s = t
        out[i + 1] = s + c
    return out


@numba.njit(cache=True)
def riemann_clock(f, n, trapezoid):
    """Compensated running clock from integrand values ``f`` on a 1/n grid."""
    m = f.shape[0] - 1
    out = np.empty(m + 1)
    out[0] = 0.0
    s = 0.0
    c = 0.0
    for i in range(m):
        if trapezoid:
            x = (f[i] + f[i + 1]) / (2.0 * n)
        else:
            x = f[i] / n
        t = s + x
        if abs(s) >= abs(x):
            c += (s - t) + x
        else:
            c += (x - t) + s
        s = t
        out[i + 1] = s + c
    return out


@numba.njit(cache=True)
def window_extrema(values, lo, hi):
    """(min, max) of ``values[lo:hi + 1]``."""
    vmin = values[lo]
    vmax = values[lo]
    for i in range(lo + 1, hi + 1):
        v = values[i]
        if v < vmin:
            vmin = v
        elif v > vmax:
            vmax = v
    return vmin, vmax
