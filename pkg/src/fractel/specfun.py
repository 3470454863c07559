"""Special functions: two-parameter Mittag-Leffler function and modified Bessel I0/I1.

The Mittag-Leffler function

    E_{a,b}(z) = sum_{k>=0} z^k / Gamma(a k + b)

is evaluated with two branches chosen by rho = |z|^(1/a):

* ``taylor`` (rho <= 36): the power series summed in double-double
  arithmetic, with 1/Gamma(a k + b) tabulated once per (a, b) at 40 digits.
  The ~32-digit accumulator absorbs the cancellation on the negative
  half-plane.
* ``asymptotic`` (rho > 36): exponential terms from the roots of
  zeta^a = z plus the optimally truncated algebraic series
  -sum z^-r / Gamma(b - a r).

Near the switch, a point the first branch cannot certify is retried on the
other one and the smaller error estimate wins.

1/Gamma at non-positive integers is taken as 0, so indices such as b = 0 need
no special casing.
"""

from __future__ import annotations

import enum
import math
import threading
import warnings
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy import special

from fractel import _ddseries
from fractel.errors import NumericalError, ParameterError

__all__ = [
    "AccuracyWarning",
    "Branch",
    "EvalResult",
    "MLAccuracyError",
    "MLArgs",
    "MLDomainError",
    "Z_MAX",
    "bessel_i",
    "bessel_i_scaled",
    "mittag_leffler",
    "mittag_leffler_deriv",
    "ml",
    "ml_deriv",
]

Z_MAX = 1e4
RHO_TAYLOR = 36.0
RHO_RETRY_LOW = 15.0
RHO_RETRY_HIGH = 48.0
REL_TOL = 1e-12  # target when choosing between branches
CERT_TOL = 1e-10  # accuracy contract for certification
ABS_FLOOR = 1e-16
_MAX_TERMS = 10_000
_COEF_DPS = 40
_BESSEL_MAX = 700.0


class MLDomainError(ParameterError):
    """Order or index outside the supported range."""


class MLAccuracyError(NumericalError):
    """Requested point lies outside the certified evaluation domain."""


class AccuracyWarning(UserWarning):
    """Some evaluated points could not be certified to the target accuracy."""


class Branch(str, enum.Enum):
    taylor = "taylor"
    asymptotic = "asymptotic"


@dataclass(frozen=True)
class MLArgs:
    alpha: float
    beta: float
    z: complex

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and math.isfinite(self.beta)):
            raise MLDomainError("alpha and beta must be finite")
        if not cmath_isfinite(self.z):
            raise MLDomainError("z must be finite")
        if self.alpha <= 0:
            raise MLDomainError(f"alpha must be > 0, got {self.alpha}")


@dataclass(frozen=True)
class EvalResult:
    value: complex
    est_abs_error: float
    branch_used: Branch
    certified: bool = True


def cmath_isfinite(z) -> bool:
    z = complex(z)
    return math.isfinite(z.real) and math.isfinite(z.imag)


# ---------------------------------------------------------------------------
# coefficient tables

_lock = threading.Lock()
_taylor_cache: dict[tuple[float, float], tuple[np.ndarray, np.ndarray]] = {}
_asym_cache: dict[tuple[float, float], tuple[np.ndarray, np.ndarray]] = {}


def _taylor_coefficients(alpha: float, beta: float, n: int):
    """(hi, lo) double-double tables of 1/Gamma(alpha k + beta), k < n."""
    key = (alpha, beta)
    with _lock:
        cached = _taylor_cache.get(key)
    if cached is not None and cached[0].shape[0] >= n:
        return cached
    size = max(n, 64 if cached is None else 2 * cached[0].shape[0])
    size = min(size, _MAX_TERMS)
    hi = np.empty(size)
    lo = np.empty(size)
    start = 0
    if cached is not None:
        start = cached[0].shape[0]
        hi[:start] = cached[0]
        lo[:start] = cached[1]
    with mpmath.workdps(_COEF_DPS):
        a = mpmath.mpf(alpha)
        b = mpmath.mpf(beta)
        for k in range(start, size):
            c = mpmath.rgamma(a * k + b)
            h = float(c)
            hi[k] = h
            lo[k] = float(c - h)
    with _lock:
        _taylor_cache[key] = (hi, lo)
    return hi, lo


def _asymptotic_coefficients(alpha: float, beta: float):
    key = (alpha, beta)
    with _lock:
        cached = _asym_cache.get(key)
    if cached is not None:
        return cached
    # the envelope minimum sits near r ~ rho / alpha; beyond rho ~ 60 the sum
    # converges before reaching it
    n = min(20_000, int(100.0 / alpha) + 50)
    r = np.arange(1, n + 1, dtype=float)
    rg = special.rgamma(beta - alpha * r)
    env = special.gammaln(1.0 - beta + alpha * r) - math.log(math.pi)
    with _lock:
        _asym_cache[key] = (rg, env)
    return rg, env


def _terms_needed(alpha: float, beta: float, absz: float, deriv: bool) -> int:
    if absz == 0.0:
        return 4
    k = np.arange(0, _MAX_TERMS, dtype=float)
    shift = alpha if deriv else 0.0
    logt = k * math.log(absz) - special.gammaln(alpha * k + beta + shift)
    if deriv:
        logt += np.log1p(k)
    peak = int(np.argmax(logt))
    below = np.nonzero((k > peak) & (logt < logt[peak] - 85.0) & (k > 8))[0]
    if below.size == 0:
        return _MAX_TERMS
    return int(below[0]) + 8


# ---------------------------------------------------------------------------
# evaluation core


def _check_order(alpha: float, beta: float):
    if not (0.0 < alpha <= 2.0):
        raise MLDomainError(f"alpha must lie in (0, 2], got {alpha}")
    if not math.isfinite(beta):
        raise MLDomainError("beta must be finite")


def _evaluate(z: np.ndarray, alpha: float, beta: float, deriv: bool):
    """Vectorised core; returns (values, abs_err, is_taylor, certified)."""
    z = np.asarray(z, dtype=complex).ravel()
    absz = np.abs(z)
    if not np.all(np.isfinite(absz)):
        raise MLDomainError("z must be finite")
    rho = absz ** (1.0 / alpha)
    values = np.empty(z.shape, dtype=complex)
    err = np.zeros(z.shape)
    certified = absz <= Z_MAX
    use_taylor = rho <= RHO_TAYLOR
    b_eff = beta + alpha if deriv else beta

    if np.any(use_taylor):
        idx = np.nonzero(use_taylor)[0]
        v, e, ok = _taylor_branch(z[idx], alpha, beta, b_eff, deriv)
        values[idx], err[idx] = v, e
        certified[idx] &= ok
    if not np.all(use_taylor):
        idx = np.nonzero(~use_taylor)[0]
        v, e, ok = _asymptotic_branch(z[idx], alpha, beta, deriv)
        values[idx], err[idx] = v, e
        certified[idx] &= ok

    # near the switch, retry the other branch where the first is not certified
    # (e.g. a = 1, b = 1 on the negative axis, where E = exp(z) and the
    # series cancels by exp(2 rho))
    weak = ~_within_tol(values, err) & (rho > RHO_RETRY_LOW) & (rho < RHO_RETRY_HIGH)
    if np.any(weak):
        idx = np.nonzero(weak)[0]
        flip = ~use_taylor[idx]
        for sel, taylor in ((idx[flip], True), (idx[~flip], False)):
            if sel.size == 0:
                continue
            if taylor:
                v, e, ok = _taylor_branch(z[sel], alpha, beta, b_eff, deriv)
            else:
                v, e, ok = _asymptotic_branch(z[sel], alpha, beta, deriv)
            better = ok & (e < err[sel])
            tgt = sel[better]
            values[tgt], err[tgt] = v[better], e[better]
            use_taylor[tgt] = taylor
            certified[tgt] = absz[tgt] <= Z_MAX

    # the absolute floor covers exact zeros (e.g. d/dz z e^z at z = -1),
    # where no relative bound can hold
    certified &= _within_tol(values, err, CERT_TOL) | (np.isfinite(values) & (err <= ABS_FLOOR))
    return values, err, use_taylor, certified


def _within_tol(values, err, tol=REL_TOL):
    return np.isfinite(values) & (err <= tol * np.abs(values) + 1e-300)


def _taylor_branch(z, alpha, beta, b_eff, deriv):
    n = _terms_needed(alpha, beta, float(np.abs(z).max()), deriv)
    hi, lo = _taylor_coefficients(alpha, b_eff, n)
    res = np.empty((z.size, 5))
    _ddseries.taylor_dd_many(z.real.copy(), z.imag.copy(), hi, lo, deriv, res)
    return res[:, 0] + 1j * res[:, 1], res[:, 2], res[:, 4] > 0


def _asymptotic_branch(z, alpha, beta, deriv):
    rg, env = _asymptotic_coefficients(alpha, beta)
    res = np.empty((z.size, 4))
    _ddseries.asymptotic_many(z.real.copy(), z.imag.copy(), alpha, beta, rg, env, deriv, res)
    return res[:, 0] + 1j * res[:, 1], res[:, 2], res[:, 3] == 0


def _shape_output(values: np.ndarray, z_in, shape):
    real_input = np.isrealobj(z_in)
    out = values.real.copy() if real_input else values
    out = out.reshape(shape)
    if out.ndim == 0:
        return out.item()
    return out


def _vector(z, alpha, beta, deriv, strict):
    alpha = float(alpha)
    beta = float(beta)
    _check_order(alpha, beta)
    z_arr = np.asarray(z)
    values, _, _, certified = _evaluate(z_arr, alpha, beta, deriv)
    if not np.all(certified):
        msg = (
            f"{np.count_nonzero(~certified)} point(s) of E_{{{alpha},{beta}}}"
            f"{' derivative' if deriv else ''} outside the certified domain"
        )
        if strict:
            raise MLAccuracyError(msg)
        warnings.warn(msg, AccuracyWarning, stacklevel=3)
    return _shape_output(values, z, z_arr.shape)


def mittag_leffler(z, alpha: float, beta: float = 1.0, *, strict: bool = False):
    """Vectorised E_{alpha,beta}(z); real input gives real output.

    Uncertified points trigger :class:`AccuracyWarning` (or
    :class:`MLAccuracyError` with ``strict=True``).
    """
    return _vector(z, alpha, beta, False, strict)


def mittag_leffler_deriv(z, alpha: float, beta: float = 1.0, *, strict: bool = False):
    """Vectorised d/dz E_{alpha,beta}(z)."""
    return _vector(z, alpha, beta, True, strict)


def _scalar(args: MLArgs, deriv: bool, strict: bool) -> EvalResult:
    _check_order(args.alpha, args.beta)
    values, err, taylor, certified = _evaluate(
        np.array([complex(args.z)]), args.alpha, args.beta, deriv
    )
    value = complex(values[0])
    if complex(args.z).imag == 0.0:
        value = complex(value.real, 0.0)
    result = EvalResult(
        value=value,
        est_abs_error=float(err[0]),
        branch_used=Branch.taylor if taylor[0] else Branch.asymptotic,
        certified=bool(certified[0]),
    )
    if strict and not result.certified:
        raise MLAccuracyError(
            f"E_{{{args.alpha},{args.beta}}}({args.z}) outside the certified domain"
        )
    return result


def ml(args: MLArgs, *, strict: bool = False) -> EvalResult:
    """Evaluate E_{alpha,beta}(z) for a single argument.

    >>> round(ml(MLArgs(1.0, 1.0, 1.0)).value.real, 12)
    2.718281828459
    """
    return _scalar(args, False, strict)


def ml_deriv(args: MLArgs, *, strict: bool = False) -> EvalResult:
    """Evaluate d/dz E_{alpha,beta}(z) = sum (k+1) z^k / Gamma(alpha(k+1) + beta)."""
    return _scalar(args, True, strict)


def bessel_i(order: int, x: float) -> float:
    """Modified Bessel function of the first kind, orders 0 and 1."""
    if order not in (0, 1):
        raise ParameterError("order must be 0 or 1")
    x = float(x)
    if not x >= 0.0:
        raise ParameterError(f"x must be >= 0, got {x}")
    if x > _BESSEL_MAX:
        raise OverflowError(f"I_{order}({x}) overflows; guard is x <= {_BESSEL_MAX}")
    return float(special.i0(x) if order == 0 else special.i1(x))


def bessel_i_scaled(order: int, x):
    """exp(-x) I_order(x), vectorised; finite for every x >= 0."""
    if order not in (0, 1):
        raise ParameterError("order must be 0 or 1")
    x = np.asarray(x, dtype=float)
    if np.any(~(x >= 0.0)):
        raise ParameterError("x must be >= 0")
    out = special.i0e(x) if order == 0 else special.i1e(x)
    return float(out) if out.ndim == 0 else out
