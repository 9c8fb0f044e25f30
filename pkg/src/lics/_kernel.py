"""Compiled right-hand side and Dormand-Prince 5(4) stepper.

State vector layout (7 reals): Re/Im of a_m, a_n, a_f, then W.
Parameter vector: eta_m, eta_n, eta_f, delta_mn, delta_nf, q_nn, q_ff, q_nf.
"""

import math

import numpy as np
from numba import njit

OK = 0
STEP_UNDERFLOW = 1
MAX_STEPS = 2
NON_FINITE = 3

# Dormand-Prince 5(4) tableau
C2, C3, C4, C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
A21 = 1.0 / 5.0
A31, A32 = 3.0 / 40.0, 9.0 / 40.0
A41, A42, A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
A51, A52, A53, A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
A61, A62, A63, A64, A65 = (
    9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0,
)
B1, B3, B4, B5, B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
# 5th minus embedded 4th order weights
E1, E3, E4, E5, E6, E7 = (
    71.0 / 57600.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0,
)

SAFETY = 0.9
FAC_MIN = 0.2
FAC_MAX = 10.0


@njit(cache=True, nogil=True)
def couplings(t, env):
    x1 = env[2] * (t - env[1]) ** 2
    x2 = env[5] * (t - env[4]) ** 2
    x3 = env[8] * (t - env[7]) ** 2
    return (
        env[0] * math.exp(-x1),
        env[3] * math.exp(-x2),
        env[6] * math.exp(-x3),
        env[9] * math.exp(-0.5 * (x2 + x3)),
    )


@njit(cache=True, nogil=True)
def deriv_from_couplings(y, gmn, gnn, gff, gnf, par, dy):
    am = complex(y[0], y[1])
    an = complex(y[2], y[3])
    af = complex(y[4], y[5])
    eta_m, eta_n, eta_f = par[0], par[1], par[2]
    dmn, dnf = par[3], par[4]
    qnn, qff, qnf = par[5], par[6], par[7]
    cross = gnf * complex(1.0, qnf)
    dam = -1j * gmn * an - complex(eta_m, dmn - dnf) * am
    dan = -1j * gmn * am - cross * af - complex(eta_n + gnn, dnf + qnn * gnn) * an
    daf = -cross * an - complex(eta_f + gff, qff * gff) * af
    anf = an * af.conjugate()
    dw = 2.0 * (
        gnn * (an.real * an.real + an.imag * an.imag)
        + gff * (af.real * af.real + af.imag * af.imag)
        + 2.0 * gnf * anf.real
    )
    dy[0] = dam.real
    dy[1] = dam.imag
    dy[2] = dan.real
    dy[3] = dan.imag
    dy[4] = daf.real
    dy[5] = daf.imag
    dy[6] = dw


@njit(cache=True, nogil=True)
def deriv(t, y, env, par, dy):
    gmn, gnn, gff, gnf = couplings(t, env)
    deriv_from_couplings(y, gmn, gnn, gff, gnf, par, dy)


@njit(cache=True, nogil=True)
def _rms_norm(v, y, ynew, rtol, atol):
    acc = 0.0
    for i in range(v.shape[0]):
        sk = atol + rtol * max(abs(y[i]), abs(ynew[i]))
        acc += (v[i] / sk) ** 2
    return math.sqrt(acc / v.shape[0])


@njit(cache=True, nogil=True)
def _initial_step(t, y, f0, env, par, rtol, atol, max_step, span):
    n = y.shape[0]
    d0 = 0.0
    d1 = 0.0
    for i in range(n):
        sk = atol + rtol * abs(y[i])
        d0 += (y[i] / sk) ** 2
        d1 += (f0[i] / sk) ** 2
    d0 = math.sqrt(d0 / n)
    d1 = math.sqrt(d1 / n)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    h0 = min(h0, span)
    y1 = y + h0 * f0
    f1 = np.empty(n)
    deriv(t + h0, y1, env, par, f1)
    d2 = 0.0
    for i in range(n):
        sk = atol + rtol * abs(y[i])
        d2 += ((f1[i] - f0[i]) / sk) ** 2
    d2 = math.sqrt(d2 / n) / h0
    dmax = max(d1, d2)
    if dmax <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / dmax) ** 0.2
    return min(100.0 * h0, h1, max_step, span)


@njit(cache=True, nogil=True)
def dopri5(y0, t0, t1, env, par, rtol, atol, max_step, h_min, max_steps, t_out, out):
    """Integrate from t0 to t1, landing a step exactly on every t_out value.

    ``t_out`` must be sorted and lie in [t0, t1]; ``out[j]`` receives the state
    at ``t_out[j]``.  Returns (status, t_reached, n_accepted, n_rejected, n_fev).
    """
    n = y0.shape[0]
    y = y0.copy()
    ynew = np.empty(n)
    ytmp = np.empty(n)
    err = np.empty(n)
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    k5 = np.empty(n)
    k6 = np.empty(n)
    k7 = np.empty(n)

    n_out = t_out.shape[0]
    j = 0
    t = t0
    while j < n_out and t_out[j] <= t:
        out[j, :] = y
        j += 1

    deriv(t, y, env, par, k1)
    nfev = 1
    if t1 <= t0:
        return OK, t, 0, 0, nfev
    h = _initial_step(t, y, k1, env, par, rtol, atol, max_step, t1 - t0)
    nfev += 1
    n_acc = 0
    n_rej = 0
    rejected = False

    while t < t1:
        if n_acc + n_rej >= max_steps:
            return MAX_STEPS, t, n_acc, n_rej, nfev
        if h < h_min:
            return STEP_UNDERFLOW, t, n_acc, n_rej, nfev

        target = t_out[j] if j < n_out else t1
        landing = False
        hs = h
        if t + hs >= target:
            hs = target - t
            landing = True

        for i in range(n):
            ytmp[i] = y[i] + hs * A21 * k1[i]
        deriv(t + C2 * hs, ytmp, env, par, k2)
        for i in range(n):
            ytmp[i] = y[i] + hs * (A31 * k1[i] + A32 * k2[i])
        deriv(t + C3 * hs, ytmp, env, par, k3)
        for i in range(n):
            ytmp[i] = y[i] + hs * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
        deriv(t + C4 * hs, ytmp, env, par, k4)
        for i in range(n):
            ytmp[i] = y[i] + hs * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
        deriv(t + C5 * hs, ytmp, env, par, k5)
        for i in range(n):
            ytmp[i] = y[i] + hs * (
                A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]
            )
        deriv(t + hs, ytmp, env, par, k6)
        for i in range(n):
            ynew[i] = y[i] + hs * (
                B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]
            )
        deriv(t + hs, ynew, env, par, k7)
        nfev += 6
        for i in range(n):
            err[i] = hs * (
                E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]
            )
        enorm = _rms_norm(err, y, ynew, rtol, atol)
        if not math.isfinite(enorm):
            return NON_FINITE, t, n_acc, n_rej, nfev

        if enorm <= 1.0:
            n_acc += 1
            t = target if landing else t + hs
            for i in range(n):
                y[i] = ynew[i]
                k1[i] = k7[i]
            if enorm == 0.0:
                fac = FAC_MAX
            else:
                fac = min(FAC_MAX, max(FAC_MIN, SAFETY * enorm ** -0.2))
            if rejected:
                fac = min(fac, 1.0)
            h_next = min(hs * fac, max_step)
            if landing:
                # a short landing step says nothing about the natural step size
                h_next = max(h_next, min(h, max_step))
            h = h_next
            rejected = False
            while j < n_out and t_out[j] <= t:
                out[j, :] = y
                j += 1
        else:
            n_rej += 1
            h = hs * max(FAC_MIN, SAFETY * enorm ** -0.2)
            rejected = True

    return OK, t, n_acc, n_rej, nfev
