"""Numba kernels for the sequential recursions.

Everything here is a plain function of float64 scalars/arrays so the hot
loops (volatility recursion, inverted filter, derivative propagation,
log-Lipschitz sums) JIT-compile once and stay allocation-light. The
wrappers in model/inversion/estimation own validation and error mapping;
kernels only report overflow via a flag.
"""

from __future__ import annotations

import numpy as np
from numba import njit

# |log sigma^2| guard: beyond this exp() leaves double range; callers raise.
LOG_VAR_GUARD = 700.0


@njit(cache=True)
def simulate_core(alpha, beta, gamma, delta, z, burn_in):
    """Run the EGARCH(1,1) recursion over innovations z, discarding burn_in draws.

    State starts at the unconditional mean alpha/(1-beta). Returns
    (x, log_var, overflow) where x/log_var have length len(z)-burn_in.
    """
    total = z.shape[0]
    n = total - burn_in
    x = np.empty(n)
    log_var = np.empty(n)
    g = alpha / (1.0 - beta)
    for i in range(total):
        if np.abs(g) > LOG_VAR_GUARD:
            return x, log_var, True
        zi = z[i]
        if i >= burn_in:
            log_var[i - burn_in] = g
            x[i - burn_in] = np.exp(0.5 * g) * zi
        g = alpha + beta * g + gamma * zi + delta * np.abs(zi)
    return x, log_var, False


@njit(cache=True)
def filter_core(alpha, beta, gamma, delta, x, g0):
    """Inverted-SRE filter with projection onto K = [alpha/(1-beta), inf).

    The guard is one-sided (state < -700): filtering only evaluates
    exp(-g/2), which merely underflows for large positive states, and the
    chaos diagnostic relies on surviving such excursions. exp(g) consumers
    (variance, forecast) check the +700 side at the point of use.

    Returns (g, g_next, clamp_count, overflow): g[t] is the state paired
    with x[t], g_next the one-step-ahead state after consuming x[-1].
    """
    n = x.shape[0]
    floor = alpha / (1.0 - beta)
    g = np.empty(n)
    clamps = 0
    state = g0
    if state < floor:
        state = floor
        clamps += 1
    for t in range(n):
        if state < -LOG_VAR_GUARD:
            return g, state, clamps, True
        g[t] = state
        w = gamma * x[t] + delta * np.abs(x[t])
        state = alpha + beta * state + w * np.exp(-0.5 * state)
        if state < floor:
            state = floor
            clamps += 1
    return g, state, clamps, False


@njit(cache=True)
def filter_grad_core(alpha, beta, gamma, delta, x, g0):
    """Filter plus first-derivative SRE d g_t / d theta, theta=(alpha,beta,gamma,delta).

    d g_1 = 0 (the initial value is a constant w.r.t. theta). A clamped
    step pins the state to the K boundary, whose own theta-derivative is
    used so the path stays consistent with finite differences.

    Returns (g, grad, g_next, grad_next, clamp_count, overflow).
    """
    n = x.shape[0]
    ib = 1.0 / (1.0 - beta)
    floor = alpha / (1.0 - beta)
    g = np.empty(n)
    grad = np.empty((n, 4))
    state = g0
    d0 = 0.0
    d1 = 0.0
    d2 = 0.0
    d3 = 0.0
    clamps = 0
    if state < floor:
        state = floor
        d0 = ib
        d1 = alpha * ib * ib
        clamps += 1
    for t in range(n):
        if state < -LOG_VAR_GUARD:
            out = np.empty(4)
            out[0] = d0
            out[1] = d1
            out[2] = d2
            out[3] = d3
            return g, grad, state, out, clamps, True
        g[t] = state
        grad[t, 0] = d0
        grad[t, 1] = d1
        grad[t, 2] = d2
        grad[t, 3] = d3
        absx = np.abs(x[t])
        e = np.exp(-0.5 * state)
        w = gamma * x[t] + delta * absx
        slope = beta - 0.5 * w * e
        new = alpha + beta * state + w * e
        n0 = 1.0 + slope * d0
        n1 = state + slope * d1
        n2 = x[t] * e + slope * d2
        n3 = absx * e + slope * d3
        if new < floor:
            state = floor
            d0 = ib
            d1 = alpha * ib * ib
            d2 = 0.0
            d3 = 0.0
            clamps += 1
        else:
            state = new
            d0 = n0
            d1 = n1
            d2 = n2
            d3 = n3
    out = np.empty(4)
    out[0] = d0
    out[1] = d1
    out[2] = d2
    out[3] = d3
    return g, grad, state, out, clamps, False


@njit(cache=True)
def filter_grad_hess_core(alpha, beta, gamma, delta, x, g0):
    """Filter plus first- and second-derivative SREs.

    H g_{t+1} = phi' H g_t + phi'' dg dg^T + u dg^T + dg u^T with
    phi'' = (w/4) exp(-g/2) and u = d_theta phi' = (0, 1, -x e/2, -|x| e/2).

    Returns (g, grad, hess, g_next, clamp_count, overflow) with hess of
    shape (n, 4, 4).
    """
    n = x.shape[0]
    ib = 1.0 / (1.0 - beta)
    floor = alpha / (1.0 - beta)
    g = np.empty(n)
    grad = np.empty((n, 4))
    hess = np.empty((n, 4, 4))
    d = np.zeros(4)
    h = np.zeros((4, 4))
    state = g0
    clamps = 0
    if state < floor:
        state = floor
        d[0] = ib
        d[1] = alpha * ib * ib
        h[:] = 0.0
        h[0, 1] = ib * ib
        h[1, 0] = ib * ib
        h[1, 1] = 2.0 * alpha * ib * ib * ib
        clamps += 1
    u = np.empty(4)
    nd = np.empty(4)
    nh = np.empty((4, 4))
    for t in range(n):
        if state < -LOG_VAR_GUARD:
            return g, grad, hess, state, clamps, True
        g[t] = state
        for i in range(4):
            grad[t, i] = d[i]
            for j in range(4):
                hess[t, i, j] = h[i, j]
        absx = np.abs(x[t])
        e = np.exp(-0.5 * state)
        w = gamma * x[t] + delta * absx
        slope = beta - 0.5 * w * e
        curv = 0.25 * w * e
        u[0] = 0.0
        u[1] = 1.0
        u[2] = -0.5 * x[t] * e
        u[3] = -0.5 * absx * e
        new = alpha + beta * state + w * e
        nd[0] = 1.0 + slope * d[0]
        nd[1] = state + slope * d[1]
        nd[2] = x[t] * e + slope * d[2]
        nd[3] = absx * e + slope * d[3]
        for i in range(4):
            for j in range(i, 4):
                v = slope * h[i, j] + curv * d[i] * d[j] + u[i] * d[j] + d[i] * u[j]
                nh[i, j] = v
                nh[j, i] = v
        if new < floor:
            state = floor
            d[0] = ib
            d[1] = alpha * ib * ib
            d[2] = 0.0
            d[3] = 0.0
            h[:] = 0.0
            h[0, 1] = ib * ib
            h[1, 0] = ib * ib
            h[1, 1] = 2.0 * alpha * ib * ib * ib
            clamps += 1
        else:
            state = new
            for i in range(4):
                d[i] = nd[i]
                for j in range(4):
                    h[i, j] = nh[i, j]
    return g, grad, hess, state, clamps, False


@njit(cache=True)
def ql_terms(x, g):
    """Per-observation quasi-likelihood terms x_t^2 exp(-g_t) + g_t."""
    n = x.shape[0]
    out = np.empty(n)
    for t in range(n):
        out[t] = x[t] * x[t] * np.exp(-g[t]) + g[t]
    return out


@njit(cache=True)
def ql_value_grad(x, g, grad):
    """QL value and gradient: value = (2n)^-1 sum terms, grad via chain rule."""
    n = x.shape[0]
    value = 0.0
    gv = np.zeros(4)
    for t in range(n):
        r2 = x[t] * x[t] * np.exp(-g[t])
        value += r2 + g[t]
        c = 1.0 - r2
        for i in range(4):
            gv[i] += grad[t, i] * c
    value /= 2.0 * n
    for i in range(4):
        gv[i] /= 2.0 * n
    return value, gv


@njit(cache=True)
def ql_hessian(x, g, grad, hess):
    """QL Hessian: (2n)^-1 sum [Hg (1 - r2) + dg dg^T r2], r2 = x^2 exp(-g)."""
    n = x.shape[0]
    hv = np.zeros((4, 4))
    for t in range(n):
        r2 = x[t] * x[t] * np.exp(-g[t])
        c = 1.0 - r2
        for i in range(4):
            for j in range(i, 4):
                hv[i, j] += hess[t, i, j] * c + grad[t, i] * grad[t, j] * r2
    for i in range(4):
        for j in range(i, 4):
            hv[i, j] /= 2.0 * n
            hv[j, i] = hv[i, j]
    return hv


@njit(cache=True)
def lyapunov_terms(alpha, beta, gamma, delta, x):
    """Per-observation log Lipschitz coefficients of the inverted SRE on K.

    log max{beta, (gamma x + delta |x|)/2 * exp(-alpha/(2(1-beta))) - beta}.
    """
    n = x.shape[0]
    out = np.empty(n)
    ea = np.exp(-0.5 * alpha / (1.0 - beta))
    for t in range(n):
        s = 0.5 * (gamma * x[t] + delta * np.abs(x[t])) * ea - beta
        lam = beta if beta > s else s
        out[t] = np.log(lam)
    return out


@njit(cache=True)
def lyapunov_sum_grad(alpha, beta, gamma, delta, x):
    """Sum of log Lipschitz coefficients and its theta-gradient.

    On the beta branch the term is log(beta); on the shock branch
    log(c*E - beta) with c = (gamma x + delta|x|)/2, E = exp(-a),
    a = alpha/(2(1-beta)).
    """
    n = x.shape[0]
    ib = 1.0 / (1.0 - beta)
    a = 0.5 * alpha * ib
    ea = np.exp(-a)
    total = 0.0
    grad = np.zeros(4)
    for t in range(n):
        absx = np.abs(x[t])
        c = 0.5 * (gamma * x[t] + delta * absx)
        s = c * ea - beta
        if beta > s:
            total += np.log(beta)
            grad[1] += 1.0 / beta
        else:
            total += np.log(s)
            inv = 1.0 / s
            grad[0] += -c * ea * 0.5 * ib * inv
            grad[1] += (-c * ea * 0.5 * alpha * ib * ib - 1.0) * inv
            grad[2] += 0.5 * x[t] * ea * inv
            grad[3] += 0.5 * absx * ea * inv
    return total, grad


@njit(cache=True)
def score_terms_at_truth(alpha, beta, gamma, delta, log_var, z):
    """Per-t score terms 0.5 * dg_t * (1 - z_t^2) from the latent-state SRE.

    dg_{t+1} = U_t + V_t dg_t with U_t = (1, log sigma_t^2, z_t, |z_t|)
    and V_t = beta - (gamma z_t + delta |z_t|)/2; dg_1 = 0.
    """
    n = z.shape[0]
    terms = np.empty((n, 4))
    d0 = 0.0
    d1 = 0.0
    d2 = 0.0
    d3 = 0.0
    for t in range(n):
        c = 0.5 * (1.0 - z[t] * z[t])
        terms[t, 0] = d0 * c
        terms[t, 1] = d1 * c
        terms[t, 2] = d2 * c
        terms[t, 3] = d3 * c
        absz = np.abs(z[t])
        v = beta - 0.5 * (gamma * z[t] + delta * absz)
        n0 = 1.0 + v * d0
        n1 = log_var[t] + v * d1
        n2 = z[t] + v * d2
        n3 = absz + v * d3
        d0 = n0
        d1 = n1
        d2 = n2
        d3 = n3
    return terms
