"""Independent oracles for the analytic modules.

* :func:`laplace_forward` integrates a time-domain function against e^{-st}
  directly; :func:`check_kernel` compares it with the s-domain kernels.
* :func:`check_eigen` runs the Caputo-Hadamard quadrature on the
  Mittag-Leffler eigenfunctions.
* :func:`mc_compare` measures an analytic characteristic function against a
  Monte-Carlo estimate in units of its standard error.

Every check returns a :class:`CheckReport`, which serialises to JSON.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import poch, rgamma

from fractel.errors import NumericalError, ParameterError
from fractel.operators import HadamardQuadSpec, KernelKind, caputo_hadamard_deriv, kernel_laplace
from fractel.solutions import hilfer_kernel, kernel_index, roots
from fractel.specfun import mittag_leffler

__all__ = [
    "CheckReport",
    "DEFAULT_S",
    "HeadSeries",
    "HorizonPolicy",
    "LaplaceConvergenceError",
    "check_eigen",
    "check_kernel",
    "kernel_growth_rate",
    "kernel_head",
    "laplace_forward",
    "mc_compare",
]

DEFAULT_S = (2.0, 3.0, 5.0, 2.0 + 1.0j)


class LaplaceConvergenceError(NumericalError):
    """The quadrature or its tail bound did not reach the requested accuracy."""


# ---------------------------------------------------------------------------
# reports


def _jsonable(v):
    if isinstance(v, (complex, np.complexfloating)):
        v = complex(v)
        return [v.real, v.imag]
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


@dataclass
class CheckReport:
    """Outcome of one check.

    Each point is (descriptor, expected, observed, tolerance).  ``worst_ratio``
    is max |observed - expected| / tolerance over the points that must pass;
    for Monte-Carlo comparisons, which only require a fraction of points in
    band, it is the ratio at that fraction (see :func:`mc_compare`).
    """

    name: str
    points: list = field(default_factory=list)
    passed: bool = False
    worst_ratio: float = math.inf

    def to_dict(self) -> dict:
        pts = [
            {"input": _jsonable(d), "expected": _jsonable(e), "observed": _jsonable(o), "tolerance": float(t)}
            for d, e, o, t in self.points
        ]
        return {"name": self.name, "points": pts, "passed": bool(self.passed), "worst_ratio": float(self.worst_ratio)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _ratio(err, tol):
    if err == 0.0:
        return 0.0
    if not math.isfinite(err):
        return math.inf
    return err / tol if tol > 0 else math.inf


def _finish(name, points, ratios, failures=()):
    worst = max(ratios) if ratios else math.inf
    if failures:
        worst = math.inf
    return CheckReport(name=name, points=points, passed=worst <= 1.0, worst_ratio=worst)


# ---------------------------------------------------------------------------
# forward Laplace transform


@dataclass(frozen=True)
class HorizonPolicy:
    """Where to stop integrating.

    ``growth`` bounds the exponential growth rate of f; Re(s) must exceed it
    by ``margin``.  The integral is extended (doubling T) until the tail
    bound  safety * M(T) e^{-(Re s - growth) T} / (Re s - growth)  falls below
    ``tail_rel`` times the result, where M(T) is the largest
    |f(t)| e^{-growth t} seen on [T/2, T].
    """

    growth: float = 0.0
    margin: float = 0.25
    tail_rel: float = 1e-10
    safety: float = 10.0
    t_max: float = 5000.0


@dataclass(frozen=True)
class HeadSeries:
    """f(t) = sum_k coef[k] t^(a[k]-1) / Gamma(a[k]) on (0, eps].

    Lets :func:`laplace_forward` integrate the head analytically, including
    the finite-part value when some a[k] <= 0.
    """

    eps: float
    coef: np.ndarray
    a: np.ndarray


_GL_NODES = 24
_GL_X, _GL_W = np.polynomial.legendre.leggauss(_GL_NODES)
_MAX_PANELS = 20000


def _gauss(f, lo, hi, s):
    """Gauss-Legendre estimate of int e^{-st} f(t) per panel, plus node data."""
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    t = mid[:, None] + half[:, None] * _GL_X[None, :]
    vals = np.asarray(f(t.ravel()), dtype=complex).reshape(t.shape)
    if not np.all(np.isfinite(vals)):
        raise LaplaceConvergenceError("integrand not finite on the quadrature nodes")
    return half * ((np.exp(-s * t) * vals) @ _GL_W), t, vals


def _adaptive(f, lo, hi, s, rtol):
    """Adaptive panel-splitting Gauss-Legendre; returns sum and node data.

    A panel is accepted when its 24-point estimate and the sum over its two
    halves agree to rtol relative, or to rtol times the panel's share of
    the largest integrand magnitude seen (an absolute floor).
    """
    total = 0.0j
    nodes, values = [], []
    whole, t, v = _gauss(f, lo, hi, s)
    peak = float(np.max(np.abs(np.exp(-s * t) * v)))
    panels = 0
    while lo.size:
        panels += lo.size
        if panels > _MAX_PANELS:
            raise LaplaceConvergenceError("adaptive quadrature did not converge")
        mid = 0.5 * (lo + hi)
        left, tl, vl = _gauss(f, lo, mid, s)
        right, tr, vr = _gauss(f, mid, hi, s)
        halves = left + right
        ok = np.abs(halves - whole) <= rtol * (np.abs(halves) + peak * (hi - lo))
        total += np.sum(halves[ok])
        nodes.append(np.concatenate([tl[ok], tr[ok]]).ravel())
        values.append(np.concatenate([vl[ok], vr[ok]]).ravel())
        bad = ~ok
        lo = np.concatenate([lo[bad], mid[bad]])
        hi = np.concatenate([mid[bad], hi[bad]])
        whole = np.concatenate([left[bad], right[bad]])
    return total, np.concatenate(nodes), np.concatenate(values)


def _head_integral(head: HeadSeries, s: complex) -> complex:
    """int_0^eps e^{-st} sum_k c_k t^(a_k-1)/Gamma(a_k) dt, term by term.

    Expanding e^{-st} gives sum_n (-s)^n eps^(a+n) / (n! (a+n) Gamma(a)) per
    head term; 1/((a+n) Gamma(a)) = (a)_n / Gamma(a+n+1) keeps each piece
    finite at a = 0, -1, ... (the finite-part value).
    """
    total = 0.0j
    eps = head.eps
    for c, a in zip(head.coef, head.a):
        if c == 0:
            continue
        acc = 0.0j
        term_s = 1.0 + 0.0j
        for n in range(200):
            piece = term_s * eps ** (a + n) * poch(a, n) * rgamma(a + n + 1.0)
            acc += piece
            if n > 2 and abs(piece) <= 1e-18 * max(abs(acc), 1e-300):
                break
            term_s *= -s / (n + 1)
        total += c * acc
    return complex(total)


def laplace_forward(f, s, policy: HorizonPolicy | None = None, head: HeadSeries | None = None) -> complex:
    """int_0^infinity e^{-st} f(t) dt by quadrature, never by transform tables.

    f must accept arrays of t.  Near t = 0 either ``head`` supplies an exact
    series (required when f is not integrable at 0), or f is taken to behave
    like a power of t on the first 1e-12 of the range and that sliver is
    integrated from the power law fitted there.  Panels are geometric from
    the origin up to 1/|s| and of width 1/|s| beyond.
    """
    policy = policy or HorizonPolicy()
    s = complex(s)
    gap = s.real - policy.growth
    if gap < policy.margin:
        raise ParameterError(f"Re(s) = {s.real} must exceed the growth rate {policy.growth} by {policy.margin}")
    scale = 1.0 / abs(s)

    if head is not None:
        t_lo = float(head.eps)
        start = _head_integral(head, s)
    else:
        t_lo = 1e-12 * scale
        f1 = complex(np.asarray(f(np.array([t_lo])), dtype=complex)[0])
        f2 = complex(np.asarray(f(np.array([0.5 * t_lo])), dtype=complex)[0])
        if f1 == 0:
            start = 0.0j
        else:
            p = math.log2(abs(f1) / abs(f2)) if f2 != 0 else 0.0
            if p <= 0.0 - 1.0 + 1e-3:
                raise LaplaceConvergenceError(f"f looks non-integrable at 0 (t^{p:.3g}); supply a head series")
            # f ~ f1 (t/t_lo)^(p) on (0, t_lo]
            start = f1 * t_lo / (1.0 + p)

    # geometric panels up to `scale`, uniform beyond
    k_geo = max(1, math.ceil(math.log2(scale / t_lo))) if t_lo < scale else 0
    geo = t_lo * 2.0 ** np.arange(k_geo + 1)
    geo[-1] = max(scale, t_lo)
    width = scale
    k_uni = max(1, math.ceil((16.0 / gap) / width))
    edges = np.concatenate([geo, geo[-1] + width * np.arange(1, k_uni + 1)])
    T = edges[-1]

    def run(lo, hi):
        return _adaptive(f, lo, hi, s, 1e-12)

    total, nodes, values = run(edges[:-1], edges[1:])
    total += start
    while True:
        window = (nodes >= 0.5 * T) & (nodes <= T)
        env = np.max(np.abs(values[window]) * np.exp(-policy.growth * nodes[window])) if np.any(window) else 0.0
        bound = policy.safety * env * math.exp(-gap * T) / gap
        if bound <= policy.tail_rel * abs(total) or (total == 0 and env == 0):
            return complex(total)
        if 2.0 * T > policy.t_max:
            raise LaplaceConvergenceError(f"tail bound {bound:.3g} not met by T = {T:.4g}")
        k = max(1, math.ceil(T / width))
        new = T + (T / k) * np.arange(k + 1)
        new[-1] = 2.0 * T
        add, n2, v2 = run(new[:-1], new[1:])
        total += add
        nodes, values = n2, v2
        T = 2.0 * T


# ---------------------------------------------------------------------------
# kernel check


def kernel_growth_rate(gamma: float, lam: float, b) -> float:
    """Exponential growth rate of the time-domain kernels.

    Poles of 1/(s^(2 gamma) + 2 lam s^gamma + b) on the principal sheet are
    s = r^(1/gamma) for the roots r with |arg r| < gamma pi; the rest of the
    inverse transform decays algebraically, hence the floor at 0.
    """
    rt = roots(lam, complex(b))
    g = 0.0
    for r in (complex(rt.xi), complex(rt.eta)):
        if r == 0:
            continue
        if abs(math.atan2(r.imag, r.real)) < gamma * math.pi:
            g = max(g, (r ** (1.0 / gamma)).real)
    return g


def kernel_head(kind, gamma: float, delta: float, lam: float, b, s_max: float, terms: int = 80) -> HeadSeries:
    """Small-t series of a kernel from the Mittag-Leffler definition.

    kernel = t^(q-1) sum_j d_j t^(gamma j) / Gamma(gamma j + q) with
    d_j = (xi^j - eta^j)/(xi - eta), generated by d_{j+1} = -2 lam d_j - b d_{j-1}
    (so equal roots need no special case).
    """
    q = kernel_index(kind, gamma, delta)
    b = complex(b)
    rmax = max(abs(lam) + abs(cmath_sqrt(lam * lam - b)), 1e-3)
    eps = min(0.25 / s_max, (0.25 / rmax) ** (1.0 / gamma))
    d = np.zeros(terms, dtype=complex)
    d[1] = 1.0
    for j in range(1, terms - 1):
        d[j + 1] = -2.0 * lam * d[j] - b * d[j - 1]
    a = gamma * np.arange(terms) + q
    return HeadSeries(eps=eps, coef=d, a=a)


def cmath_sqrt(z):
    return complex(z) ** 0.5


def check_kernel(kind, gamma: float, delta: float, lam: float, b, s_list=DEFAULT_S, tol: float = 1e-6, *, extended: bool = False) -> CheckReport:
    """Forward Laplace transform of :func:`~fractel.solutions.hilfer_kernel` vs :func:`~fractel.operators.kernel_laplace`."""
    kind = KernelKind(kind)
    s_list = [complex(s) for s in s_list]
    growth = kernel_growth_rate(gamma, lam, b)
    head = kernel_head(kind, gamma, delta, lam, b, max(abs(s) for s in s_list))

    def f(t):
        return hilfer_kernel(kind, gamma, delta, lam, b, t, extended=extended)

    points, ratios, failures = [], [], []
    for s in s_list:
        desc = {"kind": kind.value, "gamma": gamma, "delta": delta, "lambda": lam, "b": complex(b), "s": s}
        expected = kernel_laplace(kind, gamma, delta, lam, b, s, extended=extended)
        tol_abs = tol * abs(expected)
        try:
            observed = laplace_forward(f, s, HorizonPolicy(growth=growth), head)
        except (NumericalError, ParameterError) as exc:
            failures.append(str(exc))
            points.append((desc | {"error": str(exc)}, expected, None, tol_abs))
            continue
        points.append((desc, expected, observed, tol_abs))
        ratios.append(_ratio(abs(observed - expected), tol_abs))
    return _finish(f"kernel:{kind.value}", points, ratios, failures)


# ---------------------------------------------------------------------------
# eigenfunction check


def check_eigen(nu: float, eta_values, t0: float, t_list, tol: float = 1e-4, spec: HadamardQuadSpec | None = None) -> CheckReport:
    """(t d/dt)^nu E_nu(eta ln^nu(t/t0)) against eta E_nu(eta ln^nu(t/t0)).

    The left side comes from the quadrature alone; the tolerance is relative
    to the expected value.
    """
    if not (0.0 < nu < 1.0):
        raise ParameterError(f"nu must lie in (0, 1), got {nu}")
    spec = spec or HadamardQuadSpec(t0=t0)
    if spec.t0 != t0:
        spec = HadamardQuadSpec(t0=t0, n_nodes=spec.n_nodes, grading=spec.grading)
    points, ratios = [], []
    for eta in eta_values:

        def f(tau, eta=eta):
            u = np.log(np.asarray(tau, dtype=float) / t0)
            return mittag_leffler(eta * np.maximum(u, 0.0) ** nu, nu)

        for t in t_list:
            if not t > t0:
                raise ParameterError(f"t must exceed t0 = {t0}, got {t}")
            observed = caputo_hadamard_deriv(f, nu, t, spec)
            expected = eta * float(mittag_leffler(eta * math.log(t / t0) ** nu, nu))
            tol_abs = tol * abs(expected)
            points.append(({"nu": nu, "eta": eta, "t0": t0, "t": t}, expected, observed, tol_abs))
            ratios.append(_ratio(abs(observed - expected), tol_abs))
    return _finish(f"eigen:nu={nu}", points, ratios)


# ---------------------------------------------------------------------------
# Monte-Carlo comparison


def mc_compare(analytic, empirical, band_multiplier: float = 4.0, min_fraction: float = 0.95, name: str = "mc") -> CheckReport:
    """Analytic CF against an empirical one, frequency by frequency.

    Point tolerance is band_multiplier * stderr.  The check passes when at
    least ``min_fraction`` of the frequencies are in band; accordingly
    ``worst_ratio`` is the smallest ratio r such that that fraction of
    points has ratio <= r, so passed <=> worst_ratio <= 1 still holds.
    """
    if band_multiplier < 3:
        raise ParameterError(f"band_multiplier must be >= 3, got {band_multiplier}")
    if not (0.0 < min_fraction <= 1.0):
        raise ParameterError(f"min_fraction must lie in (0, 1], got {min_fraction}")
    betas = np.asarray(empirical.betas, dtype=float)
    expected = np.asarray(analytic(betas), dtype=complex) * np.ones(betas.shape)
    points, ratios = [], []
    for beta, e, o, se in zip(betas, expected, empirical.estimate, empirical.stderr):
        tol_abs = band_multiplier * float(se)
        points.append(({"beta": float(beta)}, complex(e), complex(o), tol_abs))
        ratios.append(_ratio(abs(complex(o) - complex(e)), tol_abs))
    if not ratios:
        raise ParameterError("empty frequency grid")
    k = math.ceil(min_fraction * len(ratios) - 1e-9)
    worst = sorted(ratios)[k - 1]
    return CheckReport(name=name, points=points, passed=worst <= 1.0, worst_ratio=worst)


# ---------------------------------------------------------------------------
# suite


def random_kernel_cases(n: int, seed: int, s_list=DEFAULT_S):
    """Randomised (kind, gamma, delta, lam, b) draws for :func:`check_kernel`.

    b = omega + c^2 psi(beta) with a Riesz-Feller symbol psi; half the draws
    use theta != 0, which makes b complex.  Draws whose kernel grows faster
    than min Re(s) - 1 are rejected (outside the forward transform's domain).
    """
    from fractel.operators import RieszFellerParams, riesz_feller_symbol

    gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(0xC0DE,))))
    kinds = list(KernelKind)
    limit = min(complex(s).real for s in s_list) - 1.0
    cases = []
    while len(cases) < n:
        kind = kinds[len(cases) % 3]
        gamma = float(gen.uniform(0.3, 1.0))
        delta = float(gen.uniform(0.0, 1.0))
        lam = float(gen.uniform(0.1, 2.0))
        alpha = float(gen.uniform(0.5, 2.0))
        bound = min(alpha, 2.0 - alpha)
        theta = float(gen.uniform(-bound, bound)) if len(cases) % 2 else 0.0
        beta = float(gen.uniform(-2.0, 2.0))
        omega = float(gen.uniform(0.0, 1.0))
        c = float(gen.uniform(0.5, 1.5))
        b = omega + c * c * riesz_feller_symbol(RieszFellerParams(alpha, theta), beta)
        if kernel_growth_rate(gamma, lam, b) > limit:
            continue
        cases.append((kind, gamma, delta, lam, complex(b)))
    return cases


EIGEN_NUS = (0.25, 0.5, 0.75)
EIGEN_ETAS = (-0.5, -1.0, -2.0)
EIGEN_RATIOS = (1.5, math.e, 4.0)


def run_suite(seed: int = 42, which: str = "all", *, n_kernel: int = 20, workers: int | None = None) -> list[CheckReport]:
    """The validation suite behind ``fractel validate``.

    ``which`` is one of kernels, eigen, mc, all.  All randomness derives
    from ``seed``; each Monte-Carlo check has its own stream id.
    """
    from fractel.solutions import HadamardModel, HilferModel, hadamard_cf, hilfer_cf, space_hadamard_cf
    from fractel.stochastic import (
        RngSpec,
        empirical_cf,
        sample_stable_symmetric,
        sim_brownian_time_telegraph,
        sim_space_hadamard,
        sim_telegraph,
        sim_telegraph_brownian_clock,
    )

    if which not in ("kernels", "eigen", "mc", "all"):
        raise ParameterError(f"unknown suite {which!r}")
    reports = []
    if which in ("kernels", "all"):
        for case in random_kernel_cases(n_kernel, seed):
            reports.append(check_kernel(*case))
    if which in ("eigen", "all"):
        for nu in EIGEN_NUS:
            reports.append(check_eigen(nu, EIGEN_ETAS, 1.0, EIGEN_RATIOS))
    if which in ("mc", "all"):
        lam, c, t0 = 1.0, 1.0, 1.0
        t = math.e
        betas21 = np.linspace(-3.0, 3.0, 21)

        batch = sample_stable_symmetric(2.0, 0.5, 10**6, RngSpec(seed, 1), workers=workers)
        reports.append(mc_compare(lambda b: np.exp(-0.5 * b * b), empirical_cf(batch, betas21), name="mc:gaussian"))

        tau = 1.5
        batch = sim_telegraph(lam, c, tau, 10**6, RngSpec(seed, 2), workers=workers)
        model = HadamardModel(1.0, lam, c, t0)
        reports.append(
            mc_compare(lambda b: hadamard_cf(model, t0 * math.exp(tau), b), empirical_cf(batch, betas21), name="mc:telegraph-nu1")
        )

        batch = sim_brownian_time_telegraph(lam, c, t0, t, 10**6, RngSpec(seed, 3), workers=workers)
        model = HadamardModel(0.5, lam, c, t0)
        reports.append(mc_compare(lambda b: hadamard_cf(model, t, b), empirical_cf(batch, betas21), name="mc:brownian-time-nu0.5"))

        betas15 = np.linspace(-3.0, 3.0, 15)
        for k, alpha in enumerate((1.5, 2.0)):
            batch = sim_space_hadamard(alpha, 0.5, lam, c, t0, t, 10**5, RngSpec(seed, 10 + 2 * k), workers=workers)
            model = HadamardModel(0.5, lam, c, t0, alpha)
            reports.append(
                mc_compare(
                    lambda b, model=model: space_hadamard_cf(model, 0.0, t, b),
                    empirical_cf(batch, betas15),
                    min_fraction=0.9,
                    name=f"mc:space-hadamard-alpha{alpha}",
                )
            )

        # telegraph on a Brownian clock without the logarithm, against the
        # gamma = 1/2 Hilfer solution with f1 = f2 = 1
        s_time = 1.0
        batch = sim_telegraph_brownian_clock(lam, c, s_time, 10**6, RngSpec(seed, 4), workers=workers)
        hm = HilferModel(0.5, 1.0, lam, c)
        reports.append(
            mc_compare(lambda b: hilfer_cf(hm, s_time, b, 1.0, 1.0), empirical_cf(batch, betas21), name="mc:hilfer-brownian-time")
        )
    return reports
