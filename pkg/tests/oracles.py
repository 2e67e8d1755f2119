"""Independent reference computations for the test suite.

These use plain Python loops and central differences of metric *values*
(never jets), so they share no derivative code with the engine.
"""

import math

import numpy as np


def metric_values(chart, p):
    n = chart.dim
    return np.array([[chart.metric[i][j].eval(p) for j in range(n)] for i in range(n)])


def fd_metric_derivative(chart, p, h=1e-5):
    p = np.asarray(p, dtype=float)
    n = chart.dim
    dg = np.zeros((n, n, n))
    for m in range(n):
        step = h * max(1.0, abs(p[m]))
        e = np.zeros(n)
        e[m] = step
        dg[m] = (metric_values(chart, p + e) - metric_values(chart, p - e)) / (2 * step)
    return dg


def christoffel_loops(chart, p, h=1e-5):
    n = chart.dim
    ginv = np.linalg.inv(metric_values(chart, p))
    dg = fd_metric_derivative(chart, p, h)
    gamma = np.zeros((n, n, n))
    for k in range(n):
        for i in range(n):
            for j in range(n):
                s = 0.0
                for l in range(n):
                    s += ginv[k, l] * (dg[i, j, l] + dg[j, i, l] - dg[l, i, j])
                gamma[k, i, j] = 0.5 * s
    return gamma


def ricci_loops(chart, p, h=1e-3):
    """Ricci from five-point differences of the loop-computed Christoffel symbols."""
    p = np.asarray(p, dtype=float)
    n = chart.dim
    gamma = christoffel_loops(chart, p)
    dgamma = np.zeros((n, n, n, n))
    for m in range(n):
        step = h * max(1.0, abs(p[m]))
        e = np.zeros(n)
        e[m] = step
        G = lambda k: christoffel_loops(chart, p + k * e)
        dgamma[m] = (8 * (G(1) - G(-1)) - (G(2) - G(-2))) / (12 * step)
    ric = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            s = 0.0
            for k in range(n):
                s += dgamma[k, k, i, j] - dgamma[i, k, k, j]
                for l in range(n):
                    s += gamma[k, k, l] * gamma[l, i, j] - gamma[k, i, l] * gamma[l, k, j]
            ric[i, j] = s
    return ric


def central_diff_grad(f, p, h=1e-5):
    p = np.asarray(p, dtype=float)
    out = np.zeros(len(p))
    for i in range(len(p)):
        step = h * max(1.0, abs(p[i]))
        e = np.zeros(len(p))
        e[i] = step
        out[i] = (f(p + e) - f(p - e)) / (2 * step)
    return out


def central_diff_hess(f, p, h=1e-4):
    p = np.asarray(p, dtype=float)
    n = len(p)
    H = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            si = h * max(1.0, abs(p[i]))
            sj = h * max(1.0, abs(p[j]))
            ei = np.zeros(n)
            ej = np.zeros(n)
            ei[i] = si
            ej[j] = sj
            H[i, j] = (f(p + ei + ej) - f(p + ei - ej) - f(p - ei + ej) + f(p - ei - ej)) / (4 * si * sj)
    return H


def close(a, b, rel):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b))) <= rel * max(1.0, float(np.max(np.abs(b))))


def f_star_cosh(t):
    # hand value for f = cosh t on a Riemannian interval with a 2-dim fiber
    return math.cosh(t) ** 2 + math.sinh(t) ** 2
