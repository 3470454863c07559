"""Fractional operators in computable form.

* :func:`riesz_feller_symbol` is the Fourier multiplier psi(beta) of the
  Riesz-Feller derivative: the operator acts as ``-psi(beta) f*(beta)``.
* :func:`caputo_hadamard_deriv` is a product-integration quadrature for the
  Caputo-type Hadamard derivative ``(t d/dt)^nu f`` of order 0 < nu < 1.
* :func:`kernel_laplace` gives the three s-domain kernels of the Hilfer
  telegraph problem.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from fractel.errors import NumericalError, ParameterError

__all__ = [
    "HadamardEvaluationError",
    "HadamardQuadSpec",
    "KernelKind",
    "KernelPoleError",
    "RieszFellerParams",
    "caputo_hadamard_deriv",
    "hadamard_mesh",
    "kernel_laplace",
    "riesz_feller_symbol",
]

POLE_TOL = 1e-12


class HadamardEvaluationError(NumericalError):
    """The integrand was not finite on the quadrature mesh."""


class KernelPoleError(NumericalError):
    """s sits on (or numerically at) a root of s^2g + 2 lam s^g + b."""


@dataclass(frozen=True)
class RieszFellerParams:
    alpha: float
    theta: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.alpha <= 2.0):
            raise ParameterError(f"alpha must lie in (0, 2], got {self.alpha}")
        bound = min(self.alpha, 2.0 - self.alpha)
        if not abs(self.theta) <= bound:
            raise ParameterError(f"|theta| must be <= min(alpha, 2 - alpha) = {bound}, got {self.theta}")


def riesz_feller_symbol(p: RieszFellerParams, beta):
    """psi(beta) = |beta|^alpha exp(i theta pi sign(beta) / 2), vectorised in beta.

    Conjugate symmetry in beta is exact: the phase factor is built from
    cos and sign * sin, not from a complex exponential of a signed angle.
    """
    beta = np.asarray(beta, dtype=float)
    mod = np.abs(beta) ** p.alpha
    half = 0.5 * math.pi * p.theta
    out = mod * (math.cos(half) + 1j * np.sign(beta) * math.sin(half))
    if out.ndim == 0:
        return complex(out)
    return out


# ---------------------------------------------------------------------------
# Caputo-Hadamard derivative


@dataclass(frozen=True)
class HadamardQuadSpec:
    """Mesh for :func:`caputo_hadamard_deriv`.

    ``n_nodes`` panels cover u = ln(tau/t0) in [0, U].  Each half of the
    interval is graded with exponent ``grading`` toward its outer end:
    toward u = 0, where derivatives of ln-power integrands blow up, and
    toward u = U, where the kernel is singular.  Each panel carries a
    midpoint, so f is evaluated at 2 n_nodes + 1 points.
    """

    t0: float = 1.0
    n_nodes: int = 256
    grading: float = 2.0

    def __post_init__(self):
        if not (math.isfinite(self.t0) and self.t0 > 0):
            raise ParameterError(f"t0 must be > 0, got {self.t0}")
        if int(self.n_nodes) != self.n_nodes or self.n_nodes < 16:
            raise ParameterError(f"n_nodes must be an integer >= 16, got {self.n_nodes}")
        if not (math.isfinite(self.grading) and self.grading >= 1.0):
            raise ParameterError(f"grading must be >= 1, got {self.grading}")


def hadamard_mesh(t: float, spec: HadamardQuadSpec):
    """Panel ends and midpoints in u = ln(tau/t0) for evaluation time t."""
    U = math.log(t / spec.t0)
    n = int(spec.n_nodes)
    x = np.arange(n + 1) / n
    left = x <= 0.5
    ends = np.where(
        left,
        0.5 * U * (2.0 * x) ** spec.grading,
        U - 0.5 * U * (2.0 * (1.0 - x)) ** spec.grading,
    )
    ends[0], ends[-1] = 0.0, U
    mids = 0.5 * (ends[:-1] + ends[1:])
    return ends, mids


def _eval_f(f, tau):
    try:
        vals = np.asarray(f(tau), dtype=float)
        if vals.shape != tau.shape:
            raise ValueError
    except (TypeError, ValueError):
        vals = np.array([float(f(x)) for x in tau])
    if not np.all(np.isfinite(vals)):
        bad = tau[~np.isfinite(vals)][0]
        raise HadamardEvaluationError(f"integrand not finite at tau = {bad!r}")
    return vals


def caputo_hadamard_deriv(f, nu: float, t: float, spec: HadamardQuadSpec | None = None) -> float:
    """Caputo-type Hadamard derivative of order nu in (0, 1) at time t > t0.

    With u = ln(tau/t0) and g(u) = f(t0 e^u) the operator becomes

        1/Gamma(1-nu) int_0^U (U - u)^(-nu) g'(u) du,   U = ln(t/t0),

    since tau d/dtau = d/du and dtau/tau = du.  g is replaced on every panel
    by its quadratic interpolant through the panel ends and midpoint; the
    kernel moments against the resulting linear g' are integrated exactly,
    so the endpoint singularity of the kernel costs nothing.
    """
    if spec is None:
        spec = HadamardQuadSpec()
    if not (0.0 < nu < 1.0):
        raise ParameterError(f"nu must lie in (0, 1), got {nu}")
    if not (math.isfinite(t) and t > spec.t0):
        raise ParameterError(f"t must exceed t0 = {spec.t0}, got {t}")
    ends, mids = hadamard_mesh(t, spec)
    U = ends[-1]
    g_end = _eval_f(f, spec.t0 * np.exp(ends))
    g_mid = _eval_f(f, spec.t0 * np.exp(mids))
    g0, gm, g1 = g_end[:-1], g_mid, g_end[1:]
    h = np.diff(ends)

    # on a panel, with s = (u - u_j)/h: h g'(u) = a + 2 c s
    # written with differences so that a constant g gives exactly zero
    dm, d1 = gm - g0, g1 - g0
    a = 4.0 * dm - d1
    c = 2.0 * d1 - 4.0 * dm

    w0 = U - ends[:-1]
    s0, s1 = _panel_moments(h / w0, nu)
    total = np.sum(w0**-nu * (a * s0 + 2.0 * c * s1))
    return float(total / math.gamma(1.0 - nu))


_SERIES_TERMS = 64


def _panel_moments(eps, nu):
    """int_0^1 (1 - eps s)^-nu s^q ds for q = 0, 1, with eps = h / w0 in (0, 1].

    These are the panel moments of the kernel (U - u)^-nu divided by
    h w0^-nu.  Far from U (small eps) the closed forms cancel badly, so the
    binomial series sum_k (nu)_k / k! eps^k / (k + 1 + q) is used instead.
    """
    eps = np.asarray(eps, dtype=float)
    s0 = np.empty_like(eps)
    s1 = np.empty_like(eps)
    small = eps < 0.5
    if np.any(small):
        e = eps[small]
        k = np.arange(_SERIES_TERMS)
        coef = np.cumprod(np.concatenate(([1.0], (nu + k[:-1]) / (k[:-1] + 1.0))))
        powers = e[:, None] ** k[None, :] * coef[None, :]
        s0[small] = powers @ (1.0 / (k + 1.0))
        s1[small] = powers @ (1.0 / (k + 2.0))
    big = ~small
    if np.any(big):
        e = eps[big]
        r = np.maximum(1.0 - e, 0.0)  # w1 / w0
        p1, p2 = 1.0 - nu, 2.0 - nu
        m0 = (1.0 - r**p1) / p1
        m1 = (1.0 - r**p2) / p2
        s0[big] = m0 / e
        s1[big] = (m0 - m1) / (e * e)
    return s0, s1


# ---------------------------------------------------------------------------
# s-domain kernels


class KernelKind(str, enum.Enum):
    Delta = "Delta"
    Xi = "Xi"
    Omega = "Omega"


def _check_hilfer_orders(gamma: float, delta: float, extended: bool):
    if not (0.0 < gamma <= 1.0):
        raise ParameterError(f"gamma must lie in (0, 1], got {gamma}")
    top = 1.5 if extended else 1.0
    if not (0.0 <= delta <= top):
        hint = "" if extended else " (pass extended=True for delta up to 3/2)"
        raise ParameterError(f"delta must lie in [0, {top}], got {delta}{hint}")


def numerator_exponent(kind: KernelKind, gamma: float, delta: float) -> float:
    """Power of s in the kernel numerator."""
    kind = KernelKind(kind)
    if kind is KernelKind.Delta:
        return 1.0 - delta * (2.0 - 2.0 * gamma)
    if kind is KernelKind.Xi:
        return -delta * (1.0 - gamma)
    return 0.0


def kernel_laplace(kind, gamma: float, delta: float, lam: float, b, s, *, extended: bool = False):
    """s^p / (s^(2 gamma) + 2 lam s^gamma + b) with p set by ``kind``.

    Delta: p = 1 - delta (2 - 2 gamma); Xi: p = -delta (1 - gamma);
    Omega: p = 0.  Powers use the principal branch.  Vectorised in s.
    """
    _check_hilfer_orders(gamma, delta, extended)
    p = numerator_exponent(kind, gamma, delta)
    s = np.asarray(s, dtype=complex)
    sg = s**gamma
    den = sg * sg + 2.0 * lam * sg + complex(b)
    if np.any(np.abs(den) < POLE_TOL):
        raise KernelPoleError(f"denominator vanishes at s = {s[np.abs(den) < POLE_TOL].ravel()[0]}")
    out = s**p / den if p != 0.0 else 1.0 / den
    if out.ndim == 0:
        return complex(out)
    return out
