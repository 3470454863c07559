"""Double-double power-series and asymptotic kernels for Mittag-Leffler sums.

The Taylor series of E_{a,b} on the negative half-plane cancels by up to
exp(|z|^(1/a)); a double-double accumulator (~32 digits) keeps 1e-14 relative
accuracy as long as |z|^(1/a) stays below ~40.  Arithmetic follows Dekker / Knuth
error-free transformations; no FMA contraction is assumed.
"""

import numpy as np
from numba import njit

_SPLITTER = 134217729.0  # 2**27 + 1


@njit(cache=True, inline="always")
def _two_sum(a, b):
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


@njit(cache=True, inline="always")
def _quick_two_sum(a, b):
    s = a + b
    return s, b - (s - a)


@njit(cache=True, inline="always")
def _split(a):
    t = _SPLITTER * a
    hi = t - (t - a)
    return hi, a - hi


@njit(cache=True, inline="always")
def _two_prod(a, b):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    err = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, err


@njit(cache=True, inline="always")
def _dd_add(ah, al, bh, bl):
    s, e = _two_sum(ah, bh)
    t, f = _two_sum(al, bl)
    e += t
    s, e = _quick_two_sum(s, e)
    e += f
    return _quick_two_sum(s, e)


@njit(cache=True, inline="always")
def _dd_mul(ah, al, bh, bl):
    p, e = _two_prod(ah, bh)
    e += ah * bl + al * bh
    return _quick_two_sum(p, e)


@njit(cache=True, inline="always")
def _dd_mul_d(ah, al, b):
    p, e = _two_prod(ah, b)
    e += al * b
    return _quick_two_sum(p, e)


@njit(cache=True)
def taylor_dd(x, y, coef_hi, coef_lo, deriv, out):
    """Sum sum_k w_k c_k z^k in double-double for z = x + iy.

    ``w_k`` is 1, or k + 1 when ``deriv`` is set (coefficients are then those
    of the shifted index).  Writes (re, im, abs_err, n_terms, converged) into
    ``out``.
    """
    # running power z^k
    pr_h, pr_l = 1.0, 0.0
    pi_h, pi_l = 0.0, 0.0
    sr_h, sr_l = 0.0, 0.0
    si_h, si_l = 0.0, 0.0
    abs_sum = 0.0
    small_run = 0
    prev_mag = np.inf
    n = coef_hi.shape[0]
    converged = 0.0
    k = 0
    last_mag = 0.0
    while k < n:
        ch, cl = coef_hi[k], coef_lo[k]
        if deriv:
            ch, cl = _dd_mul_d(ch, cl, float(k + 1))
        tr_h, tr_l = _dd_mul(pr_h, pr_l, ch, cl)
        ti_h, ti_l = _dd_mul(pi_h, pi_l, ch, cl)
        sr_h, sr_l = _dd_add(sr_h, sr_l, tr_h, tr_l)
        si_h, si_l = _dd_add(si_h, si_l, ti_h, ti_l)
        mag = np.hypot(tr_h, ti_h)
        abs_sum += mag
        last_mag = mag
        smag = np.hypot(sr_h, si_h)
        if ch != 0.0 and mag <= prev_mag and mag < 1e-17 * smag:
            small_run += 1
            if small_run >= 3:
                converged = 1.0
                k += 1
                break
        elif ch != 0.0 or mag > 0.0:
            small_run = 0
        if ch != 0.0:
            prev_mag = mag
        # z^(k+1) = z^k * (x + iy)
        a_h, a_l = _dd_mul_d(pr_h, pr_l, x)
        b_h, b_l = _dd_mul_d(pi_h, pi_l, y)
        c_h, c_l = _dd_mul_d(pr_h, pr_l, y)
        d_h, d_l = _dd_mul_d(pi_h, pi_l, x)
        pr_h, pr_l = _dd_add(a_h, a_l, -b_h, -b_l)
        pi_h, pi_l = _dd_add(c_h, c_l, d_h, d_l)
        k += 1
    out[0] = sr_h + sr_l
    out[1] = si_h + si_l
    # a few dd ulps of the largest partial sums, plus truncation
    out[2] = 8.0 * 1.2e-32 * abs_sum + last_mag
    out[3] = float(k)
    out[4] = converged


@njit(cache=True)
def taylor_dd_many(xs, ys, coef_hi, coef_lo, deriv, res):
    out = np.empty(5)
    for j in range(xs.shape[0]):
        taylor_dd(xs[j], ys[j], coef_hi, coef_lo, deriv, out)
        for q in range(5):
            res[j, q] = out[q]


@njit(cache=True)
def asymptotic(x, y, alpha, beta, rg, env_log, deriv, out):
    """Large-|z| expansion of E_{a,b}(z) (or its derivative) at z = x + iy.

    Exponential part: (1/a) sum zeta^(1-b) exp(zeta) over the roots
    zeta = z^(1/a) on the principal sheet; roots on |arg zeta| = pi get weight
    1/2.  Algebraic part: -sum_r z^-r / Gamma(b - a r), truncated at the
    smallest envelope term Gamma(1 - b + a r) / (pi |z|^r).
    ``rg[r-1]`` = 1/Gamma(b - a r), ``env_log[r-1]`` = log Gamma(1 - b + a r) - log pi.
    Writes (re, im, err_estimate, overflow_flag).
    """
    z = complex(x, y)
    absz = abs(z)
    logz = np.log(absz)
    w = 1.0 / z
    # algebraic part
    s = 0j
    p = w
    prev = np.inf
    err = 0.0
    nr = rg.shape[0]
    r = 1
    cut = nr + 1
    while r <= nr:
        if deriv:
            le = env_log[r - 1] + np.log(float(r)) - (r + 1) * logz
        else:
            le = env_log[r - 1] - r * logz
        if le > prev:
            cut = r
            break
        if deriv:
            term = r * rg[r - 1] * p * w
        else:
            term = -rg[r - 1] * p
        s += term
        prev = le
        if r > 1 and abs(s) > 0.0 and le < np.log(abs(s)) - 44.0:
            cut = r + 1
            p = p * w
            break
        p = p * w
        r += 1
    # error: actual size of the first two omitted terms (zero when the
    # reciprocal-Gamma coefficients vanish identically)
    for q in range(cut, min(cut + 2, nr + 1)):
        if deriv:
            mag = q * abs(rg[q - 1]) * np.exp(-(q + 1) * logz)
        else:
            mag = abs(rg[q - 1]) * np.exp(-q * logz)
        err = max(err, mag)
    if cut > nr:
        err = max(err, np.exp(prev))
    # exponential part
    theta = np.arctan2(y, x)
    lim = alpha * np.pi
    tol = 8.0 * 2.220446049250313e-16 * np.pi * (1.0 + alpha)
    rho = absz ** (1.0 / alpha)
    logrho = logz / alpha
    kmin = int(np.floor((-lim - theta) / (2.0 * np.pi))) - 1
    kmax = int(np.ceil((lim - theta) / (2.0 * np.pi))) + 1
    overflow = 0.0
    for k in range(kmin, kmax + 1):
        phi = theta + 2.0 * np.pi * k
        dist = abs(phi) - lim
        if dist > tol:
            continue
        wgt = 0.5 if abs(dist) <= tol else 1.0
        ang = phi / alpha
        lmag = (1.0 - beta) * logrho + rho * np.cos(ang) - np.log(alpha) + np.log(wgt)
        if lmag > 709.0:
            overflow = 1.0
            s += complex(np.inf, 0.0)
            continue
        if lmag < -745.0:
            continue
        phase = (1.0 - beta) * ang + rho * np.sin(ang)
        term = np.exp(lmag) * complex(np.cos(phase), np.sin(phase))
        if deriv:
            zeta = rho * complex(np.cos(ang), np.sin(ang))
            term = term * (1.0 - beta + zeta) / (alpha * z)
        s += term
        # phase of exp(zeta) is only known to ~rho * eps
        err += abs(term) * rho * 2.220446049250313e-16
    out[0] = s.real
    out[1] = s.imag
    out[2] = err
    out[3] = overflow


@njit(cache=True)
def asymptotic_many(xs, ys, alpha, beta, rg, env_log, deriv, res):
    out = np.empty(4)
    for j in range(xs.shape[0]):
        asymptotic(xs[j], ys[j], alpha, beta, rg, env_log, deriv, out)
        for q in range(4):
            res[j, q] = out[q]
