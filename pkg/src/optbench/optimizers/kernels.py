"""Compiled per-weight update loops for all ten algorithms.

Each kernel mutates its state arrays in place and writes the applied
weight delta into ``delta``.  The loop bodies keep one floating-point
operation order, shared with the documented scalar update rules, so
trajectories are reproducible bit for bit (numba default options do not
fuse or reassociate IEEE arithmetic).  Scalar quantities that depend on
the step counter (scheduled decay, bias corrections) are computed by the
callers and passed in.
"""

import math

from numba import njit


@njit(cache=True)
def all_finite(x):
    for i in range(x.shape[0]):
        if not math.isfinite(x[i]):
            return False
    return True


@njit(cache=True)
def core_step(
    w, grad, g, h, s, S, g_prev, P, d, delta, u_out,
    tau, b1t, bc1, bc2, beta2, eps,
    eta_minus, eta_plus, s_min, s_max, t_hist, inv_t,
):
    for i in range(w.shape[0]):
        G = grad[i]
        gn = b1t * g[i] + (1.0 - b1t) * G
        hn = beta2 * h[i] + (1.0 - beta2) * (G * G)
        u = (gn / bc1) / (math.sqrt(hn / bc2) + eps)
        prod = g_prev[i] * gn * P[i]
        if prod > 0.0:
            sn = min(eta_plus * s[i], s_max)
        elif prod < 0.0:
            sn = max(eta_minus * s[i], s_min)
        else:
            sn = s[i]
        wn = (1.0 - d[i] * abs(u) * P[i] * sn) * w[i] - u * P[i] * sn
        term = gn * u * P[i] * sn
        if tau <= t_hist:
            S[i] = S[i] + inv_t * term
        else:
            S[i] = (1.0 - inv_t) * S[i] + inv_t * term
        delta[i] = wn - w[i]
        u_out[i] = u
        w[i] = wn
        g[i] = gn
        g_prev[i] = gn
        h[i] = hn
        s[i] = sn


@njit(cache=True)
def sgd_step(w, grad, delta, gamma):
    for i in range(w.shape[0]):
        wn = w[i] - gamma * grad[i]
        delta[i] = wn - w[i]
        w[i] = wn


@njit(cache=True)
def momentum_step(w, grad, m, delta, gamma, mu, first):
    for i in range(w.shape[0]):
        if first:
            mn = grad[i]
        else:
            mn = mu * m[i] + grad[i]
        wn = w[i] - gamma * mn
        delta[i] = wn - w[i]
        w[i] = wn
        m[i] = mn


@njit(cache=True)
def nag_step(w, grad, m, delta, gamma, mu, first):
    for i in range(w.shape[0]):
        G = grad[i]
        if first:
            mn = G
        else:
            mn = mu * m[i] + G
        n = mu * mn + G
        wn = w[i] - gamma * n
        delta[i] = wn - w[i]
        w[i] = wn
        m[i] = mn


@njit(cache=True)
def adam_step(w, grad, m, h, delta, u_out, gamma, beta1, beta2, eps, bc1, bc2):
    for i in range(w.shape[0]):
        G = grad[i]
        mn = beta1 * m[i] + (1.0 - beta1) * G
        hn = beta2 * h[i] + (1.0 - beta2) * (G * G)
        u = (mn / bc1) / (math.sqrt(hn / bc2) + eps)
        wn = w[i] - gamma * u
        delta[i] = wn - w[i]
        u_out[i] = u
        w[i] = wn
        m[i] = mn
        h[i] = hn


@njit(cache=True)
def adamax_step(w, grad, m, k, delta, gamma, beta1, beta2, eps, bc1):
    for i in range(w.shape[0]):
        G = grad[i]
        mn = beta1 * m[i] + (1.0 - beta1) * G
        kn = max(beta2 * k[i], abs(G + eps))
        u = (mn / bc1) / kn
        wn = w[i] - gamma * u
        delta[i] = wn - w[i]
        w[i] = wn
        m[i] = mn
        k[i] = kn


@njit(cache=True)
def rmsprop_step(w, grad, h, delta, gamma, beta2, eps):
    for i in range(w.shape[0]):
        G = grad[i]
        hn = beta2 * h[i] + (1.0 - beta2) * (G * G)
        wn = w[i] - gamma * G / (math.sqrt(hn) + eps)
        delta[i] = wn - w[i]
        w[i] = wn
        h[i] = hn


@njit(cache=True)
def adagrad_step(w, grad, b, delta, gamma, eps):
    for i in range(w.shape[0]):
        G = grad[i]
        bn = b[i] + G * G
        wn = w[i] - gamma * G / (math.sqrt(bn) + eps)
        delta[i] = wn - w[i]
        w[i] = wn
        b[i] = bn


@njit(cache=True)
def adadelta_step(w, grad, h, l, delta, gamma, beta2, eps):
    for i in range(w.shape[0]):
        G = grad[i]
        hn = beta2 * h[i] + (1.0 - beta2) * (G * G)
        ratio = (l[i] + eps) / (hn + eps)
        wn = w[i] - gamma * G * math.sqrt(ratio)
        ln = beta2 * l[i] + (1.0 - beta2) * ratio * (G * G)
        delta[i] = wn - w[i]
        w[i] = wn
        h[i] = hn
        l[i] = ln


@njit(cache=True)
def rprop_step(w, grad, g_prev, s, delta, eta_minus, eta_plus, s_min, s_max):
    for i in range(w.shape[0]):
        G = grad[i]
        prod = g_prev[i] * G
        if prod > 0.0:
            sn = min(eta_plus * s[i], s_max)
        elif prod < 0.0:
            sn = max(eta_minus * s[i], s_min)
            G = 0.0  # backtracking: neutral sign product next step
        else:
            sn = s[i]
        if G > 0.0:
            wn = w[i] - sn
        elif G < 0.0:
            wn = w[i] + sn
        else:
            wn = w[i]
        delta[i] = wn - w[i]
        w[i] = wn
        g_prev[i] = G
        s[i] = sn
