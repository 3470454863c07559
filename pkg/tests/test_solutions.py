import cmath
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from fractel.errors import NumericalError, ParameterError
from fractel.operators import RieszFellerParams
from fractel.solutions import (
    CONFLUENT_TOL,
    CFGrid,
    DensityEval,
    FormalExtensionWarning,
    HadamardModel,
    HilferModel,
    KernelSingularityError,
    SymmetryError,
    _telegraph_like,
    hadamard_cf,
    hilfer_cf,
    hilfer_kernel,
    invert_cf,
    roots,
    space_hadamard_cf,
    telegraph_cf,
    telegraph_density,
    telegraph_edge_value,
)
from fractel.specfun import mittag_leffler
from fractel.stochastic import RngSpec, empirical_cf, sim_telegraph, sim_telegraph_brownian_clock


def test_roots_examples():
    r = roots(1.0, 0.0)
    assert (r.xi, r.eta) == (0.0, -2.0)
    r = roots(0.0, 4.0)
    assert r.xi == pytest.approx(2j) and r.eta == pytest.approx(-2j)
    r = roots(1.0, 2.0)
    assert r.xi == pytest.approx(-1 + 1j) and r.eta == pytest.approx(-1 - 1j)
    assert not r.confluent
    assert roots(1.0, 1.0).confluent


# ---------------------------------------------------------------------------
# Hadamard-type problems


def test_hadamard_examples():
    m = HadamardModel(0.6, 1.3, 0.7, t0=2.0)
    assert hadamard_cf(m, 5.0, 0.0) == pytest.approx(1.0, abs=1e-12)
    assert hadamard_cf(m, 2.0, 3.0) == 1.0
    m1 = HadamardModel(1.0, 1.0, 1.0, 1.0)
    ref = math.exp(-1) * (math.cos(math.sqrt(3)) + math.sin(math.sqrt(3)) / math.sqrt(3))
    assert hadamard_cf(m1, math.e, 2.0).real == pytest.approx(ref, rel=1e-13)


def test_hadamard_rejects():
    with pytest.raises(ParameterError):
        HadamardModel(1.5, 1.0, 1.0)
    with pytest.raises(ParameterError):
        HadamardModel(0.5, 0.0, 1.0)
    with pytest.raises(ParameterError):
        hadamard_cf(HadamardModel(0.5, 1.0, 1.0, t0=2.0), 1.0, 1.0)
    with pytest.raises(ParameterError):
        hadamard_cf(HadamardModel(0.5, 1.0, 1.0, alpha=1.5), 2.0, 1.0)


@settings(max_examples=60, deadline=None)
@given(
    nu=st.floats(0.1, 1.0),
    lam=st.floats(0.05, 3.0),
    c=st.floats(0.1, 3.0),
    ratio=st.floats(1.001, 50.0),
    alpha=st.floats(0.3, 2.0),
)
def test_normalisation(nu, lam, c, ratio, alpha):
    t0 = 1.5
    m = HadamardModel(nu, lam, c, t0)
    assert abs(hadamard_cf(m, t0 * ratio, 0.0) - 1.0) <= 1e-12
    ms = HadamardModel(nu, lam, c, t0, alpha)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", FormalExtensionWarning)
        assert abs(space_hadamard_cf(ms, 0.0, t0 * ratio, 0.0) - 1.0) <= 1e-12
        theta = 0.5 * min(alpha, 2 - alpha)
        assert abs(space_hadamard_cf(ms, theta, t0 * ratio, 0.0) - 1.0) <= 1e-12


PARAM_SETS = [
    (0.5, 1.0, 1.0, 1.0, 2.0, 2.0),
    (1.0, 1.0, 1.0, 1.0, 2.0, 2.0),
    (0.25, 0.5, 2.0, 1.0, 1.5, 5.0),
    (0.75, 2.0, 0.5, 0.5, 1.0, 3.0),
    (0.4, 1.5, 1.0, 2.0, 0.8, 20.0),
    (0.9, 0.3, 1.2, 1.0, 1.2, 1.1),
    (0.5, 3.0, 1.0, 1.0, 2.0, 100.0),
    (0.1, 1.0, 1.0, 1.0, 0.5, 4.0),
    (1.0, 0.7, 0.3, 3.0, 1.9, 9.0),
    (0.6, 1.0, 2.0, 1.0, 1.7, math.e),
]


@pytest.mark.parametrize("nu,lam,c,t0,alpha,t", PARAM_SETS)
def test_hermitian_symmetry(nu, lam, c, t0, alpha, t):
    betas = np.linspace(-10, 10, 101)
    g = CFGrid.evaluate(lambda b: hadamard_cf(HadamardModel(nu, lam, c, t0), t, b), 10.0, 101)
    assert g.hermitian_defect() <= 1e-10
    ms = HadamardModel(nu, lam, c, t0, alpha)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", FormalExtensionWarning)
        for theta in (0.0, 0.7 * min(alpha, 2 - alpha)):
            v = space_hadamard_cf(ms, theta, t, betas)
            assert np.max(np.abs(v[::-1] - np.conj(v))) <= 1e-10


def test_space_reduces_to_hadamard():
    betas = np.linspace(-5, 5, 41)
    m = HadamardModel(0.4, 1.2, 0.8, 1.0, 2.0)
    np.testing.assert_array_equal(space_hadamard_cf(m, 0.0, 3.0, betas), hadamard_cf(m, 3.0, betas))


def test_space_flags():
    m = HadamardModel(0.5, 1.0, 1.0, 1.0, 1.5)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        space_hadamard_cf(m, 0.0, 2.0, 1.0)
    with pytest.warns(FormalExtensionWarning):
        space_hadamard_cf(m, 0.2, 2.0, 1.0)
    with pytest.warns(FormalExtensionWarning):
        space_hadamard_cf(HadamardModel(0.8, 1.0, 1.0, 1.0, 1.5), 0.0, 2.0, 1.0)


@settings(max_examples=100, deadline=None)
@given(
    lam=st.floats(0.01, 5.0),
    br=st.floats(0.0, 40.0),
    bi=st.floats(-10.0, 10.0),
    u=st.floats(0.01, 4.0),
    nu=st.sampled_from([0.3, 0.5, 0.8, 1.0]),
)
def test_branch_invariance(lam, br, bi, u, nu):
    m = np.sqrt(np.array([lam * lam - complex(br, bi)]))
    if abs(m[0]) < 1e-3:
        m = m + 1e-3
    a = _telegraph_like(lam, m, u, nu)
    b = _telegraph_like(lam, -m, u, nu)
    assert abs(a[0] - b[0]) <= 1e-12 * max(1.0, abs(a[0]))


@pytest.mark.parametrize("lam", [0.5, 1.0, 3.0])
@pytest.mark.parametrize("direction", [1.0, 1j, cmath.exp(0.7j)])
def test_confluent_continuity_hadamard(lam, direction):
    edge = CONFLUENT_TOL * max(1.0, lam)
    m = np.array([edge * 0.999, edge * 1.001]) * direction
    for nu in (0.5, 0.9, 1.0):
        v = _telegraph_like(lam, m, 1.3, nu)
        assert abs(v[0] - v[1]) <= 1e-8


def test_boundedness():
    betas = np.linspace(-20, 20, 401)
    for nu in (0.5, 1.0):
        for lam, c, t in ((1.0, 1.0, 2.0), (0.2, 3.0, 50.0), (4.0, 0.5, 1.01), (1.0, 1.0, 1e4)):
            v = hadamard_cf(HadamardModel(nu, lam, c, 1.0), t, betas)
            assert np.max(np.abs(v)) <= 1 + 1e-9


def test_nu_one_is_telegraph_in_log_time():
    betas = np.linspace(-8, 8, 161)
    for lam, c, tau in ((1.0, 1.0, 1.5), (0.3, 2.0, 0.7), (2.5, 0.5, 3.0)):
        got = hadamard_cf(HadamardModel(1.0, lam, c, 2.0), 2.0 * math.exp(tau), betas)
        np.testing.assert_allclose(got.real, telegraph_cf(lam, c, tau, betas), rtol=0, atol=1e-12)


# ---------------------------------------------------------------------------
# Hilfer kernels and assembly


def test_kernel_examples():
    v = hilfer_kernel("Omega", 1.0, 0.0, 1.0, 0.0, 1.0)
    assert v.real == pytest.approx((1 - math.exp(-2)) / 2, rel=1e-14)
    xi, eta, t = -1 + 1j, -1 - 1j, 0.5
    ref = (xi * cmath.exp(xi * t) - eta * cmath.exp(eta * t)) / (xi - eta)
    assert hilfer_kernel("Delta", 1.0, 1.0, 1.0, 2.0, t) == pytest.approx(ref, rel=1e-13)


def test_kernel_vectorised_in_t():
    t = np.array([0.1, 0.5, 2.0])
    v = hilfer_kernel("Xi", 0.5, 0.5, 1.0, 2.0, t)
    for tj, vj in zip(t, v):
        assert vj == hilfer_kernel("Xi", 0.5, 0.5, 1.0, 2.0, float(tj))


def test_kernel_singularity_flag():
    # Delta at delta = 0, gamma = 1/2: t^(2 gamma - 2) = t^-1
    with pytest.raises(KernelSingularityError):
        hilfer_kernel("Delta", 0.5, 0.0, 1.0, 2.0, 1e-12)
    hilfer_kernel("Delta", 0.5, 0.0, 1.0, 2.0, 1e-3)
    with pytest.raises(ParameterError):
        hilfer_kernel("Omega", 0.5, 0.0, 1.0, 2.0, 0.0)


@pytest.mark.parametrize("kind", ["Delta", "Xi", "Omega"])
def test_kernel_branch_invariance(kind):
    for lam, b in ((1.0, 3.0), (0.5, 0.1 + 0.4j), (2.0, 1.0)):
        r = roots(lam, b)
        t = np.array([0.05, 0.7, 3.0])
        a = hilfer_kernel(kind, 0.6, 0.4, lam, b, t, root_pair=(r.xi, r.eta))
        c = hilfer_kernel(kind, 0.6, 0.4, lam, b, t, root_pair=(r.eta, r.xi))
        assert np.max(np.abs(a - c) / np.maximum(1.0, np.abs(a))) <= 1e-12


@pytest.mark.parametrize("kind", ["Delta", "Xi", "Omega"])
@pytest.mark.parametrize("direction", [1.0, 1j])
def test_kernel_confluent_continuity(kind, direction):
    lam = 1.0
    t = np.array([0.2, 1.0, 4.0])
    vals = []
    for f in (0.9999, 1.0001):
        m = CONFLUENT_TOL * f * direction
        vals.append(hilfer_kernel(kind, 0.7, 0.5, lam, None, t, root_pair=(-lam + m, -lam - m)))
    assert np.max(np.abs(vals[0] - vals[1])) <= 1e-8


def test_hilfer_model_rejects():
    with pytest.raises(ParameterError):
        HilferModel(1.2, 0.5, 1.0, 1.0)
    with pytest.raises(ParameterError):
        HilferModel(0.5, 1.5, 1.0, 1.0)
    HilferModel(0.5, 1.5, 1.0, 1.0, extended=True)
    with pytest.raises(ParameterError):
        HilferModel(0.5, 0.5, 1.0, 0.0)


def test_hilfer_cf_confluent_example():
    m = HilferModel(1.0, 1.0, 1.0, 1.0)
    assert hilfer_cf(m, 1.0, 1.0, 1.0, 1.0) == pytest.approx(2 * math.exp(-1), rel=1e-12)


def test_hilfer_cf_zero_data():
    m = HilferModel(0.6, 0.3, 1.0, 1.0, 0.5, RieszFellerParams(1.5, 0.2))
    assert hilfer_cf(m, 2.0, 1.3, 0.0, 0.0) == 0.0
    assert hilfer_cf(m, 2.0, 1.3, 0.0, 0.0, lambda b, s: 0.0 * b) == 0.0


@pytest.mark.parametrize("gamma", [1.0, 0.7, 0.4])
def test_forcing_convolution_constant(gamma):
    # int_0^t tau^(g-1) E_{g,g}(r tau^g) dtau = t^g E_{g,g+1}(r t^g)
    lam, c, beta, t = 1.0, 1.0, 0.5, 1.7
    m = HilferModel(gamma, 0.5, lam, c)
    r = roots(lam, c * c * beta * beta)
    tg = t**gamma
    ref = tg * (mittag_leffler(r.xi * tg, gamma, gamma + 1) - mittag_leffler(r.eta * tg, gamma, gamma + 1)) / (r.xi - r.eta)
    got = hilfer_cf(m, t, beta, 0.0, 0.0, lambda b, s: np.ones_like(b))
    assert got == pytest.approx(complex(ref), rel=1e-10)


def test_forcing_not_finite():
    m = HilferModel(0.5, 0.5, 1.0, 1.0)
    with pytest.raises(NumericalError):
        hilfer_cf(m, 1.0, 1.0, 0.0, 0.0, lambda b, s: np.full_like(b, np.inf))


def test_gamma_one_omega_is_exponential_difference():
    for lam in (0.3, 1.0, 2.5):
        for b in (0.0, 0.5, 2.0, 7.0, 1.0 + 2.0j):
            r = roots(lam, b)
            t = np.linspace(0.05, 5.0, 25)
            ref = (np.exp(r.xi * t) - np.exp(r.eta * t)) / (r.xi - r.eta)
            got = hilfer_kernel("Omega", 1.0, 0.3, lam, b, t)
            assert np.max(np.abs(got - ref)) <= 1e-10


@pytest.mark.parametrize("lam", [0.4, 1.0, 2.0])
@pytest.mark.parametrize("t", [0.3, 1.0, 2.5])
def test_two_lambda_convention(lam, t):
    m = HilferModel(1.0, 0.6, lam, 1.0)
    lap = hilfer_cf(m, t, 0.0, 0.0, 1.0)
    assert abs(lap - (1 - math.exp(-2 * lam * t))) <= 1e-10
    printed = hilfer_cf(m, t, 0.0, 0.0, 1.0, variant="printed")
    assert lap / printed == pytest.approx(2 * lam, rel=1e-14)


def test_printed_exponent_differs_below_gamma_one():
    # at gamma < 1 the printed f2 term carries t^(gamma-1) instead of the Xi power
    g, d, lam, t = 0.6, 0.5, 1.0, 2.0
    m = HilferModel(g, d, lam, 1.0)
    lap = hilfer_cf(m, t, 0.7, 0.0, 1.0)
    printed = hilfer_cf(m, t, 0.7, 0.0, 1.0, variant="printed")
    q_xi = g + d - g * d
    assert lap / printed == pytest.approx(2 * lam * t ** (q_xi - g), rel=1e-13)
    assert abs(lap / printed - 2 * lam) > 0.1


def test_gamma_one_delta_alone():
    # Delta by itself gives cosh - (lam/m) sinh; f2 = f1 restores the telegraph CF
    lam, c, t = 1.0, 1.0, 1.3
    betas = np.array([0.2, 0.6, 1.7, 3.0])
    m = HilferModel(1.0, 0.8, lam, c)
    mm = np.sqrt(lam * lam - (c * betas) ** 2 + 0j)
    minus = np.exp(-lam * t) * (np.cosh(mm * t) - lam / mm * np.sinh(mm * t))
    np.testing.assert_allclose(hilfer_cf(m, t, betas, 1.0, 0.0), minus, rtol=1e-12)
    np.testing.assert_allclose(hilfer_cf(m, t, betas, 1.0, 1.0).real, telegraph_cf(lam, c, t, betas), rtol=1e-12)


def test_odd_switch_part_needs_lambda():
    # E[exp(i beta T(t)); N(t) odd] = e^{-lam t} (lam/m) sinh(m t), which is lam times the
    # Omega kernel (e^{xi t} - e^{eta t})/(xi - eta) at gamma = 1
    lam, c, t = 2.0, 1.0, 0.8
    betas = np.array([0.0, 0.5, 1.5, 3.0])
    batch = sim_telegraph(lam, c, t, 400_000, RngSpec(11, 0))
    odd = batch.counts % 2 == 1
    z = np.exp(1j * np.outer(betas, batch.values)) * odd
    est = z.mean(axis=1)
    se = np.sqrt(np.var(z, axis=1) / batch.n)
    omega = np.array([hilfer_kernel("Omega", 1.0, 0.0, lam, (c * b) ** 2, t) for b in betas])
    assert np.all(np.abs(est - lam * omega) <= 4 * se + 1e-12)
    assert np.all(np.abs(est - omega) > 10 * se)


BT_BETAS = np.linspace(-3, 3, 21)


@pytest.fixture(scope="module")
def brownian_clock_cf():
    batch = sim_telegraph_brownian_clock(1.0, 1.0, 1.0, 10**6, RngSpec(42, 5))
    return empirical_cf(batch, BT_BETAS)


def _in_band_fraction(analytic, e):
    return np.mean(np.abs(analytic - e.estimate) <= 4 * e.stderr)


@pytest.mark.xfail(strict=True, reason="printed Brownian-time configuration (delta = 3/2, f2 = 0) is not the process CF")
def test_brownian_time_printed_configuration(brownian_clock_cf):
    m = HilferModel(0.5, 1.5, 1.0, 1.0, extended=True)
    assert _in_band_fraction(hilfer_cf(m, 1.0, BT_BETAS, 1.0, 0.0), brownian_clock_cf) >= 0.95


def test_brownian_time_corrected_configuration(brownian_clock_cf):
    m = HilferModel(0.5, 1.0, 1.0, 1.0)
    assert _in_band_fraction(hilfer_cf(m, 1.0, BT_BETAS, 1.0, 1.0), brownian_clock_cf) >= 0.95


# ---------------------------------------------------------------------------
# telegraph density


def test_density_support_and_atoms():
    d = telegraph_density(1.0, 2.0, 1.5, np.array([-4.0, -3.0, 0.0, 3.0, 3.5]))
    assert d.pdf[0] == 0.0 and d.pdf[-1] == 0.0
    assert d.pdf[2] > 0
    assert d.atoms == [(-3.0, 0.5 * math.exp(-1.5)), (3.0, 0.5 * math.exp(-1.5))]


@pytest.mark.parametrize("lam,c,t", [(1.0, 1.0, 2.0), (0.1, 3.0, 1.0), (5.0, 0.5, 3.0), (2.0, 1.0, 40.0)])
def test_density_mass(lam, c, t):
    d = telegraph_density(lam, c, t, np.zeros(1))
    f = lambda x: float(telegraph_density(lam, c, t, np.array([x])).pdf[0])  # noqa: E731
    cont, _ = integrate.quad(f, -c * t, c * t, epsabs=1e-13, epsrel=1e-12, limit=200)
    assert abs(cont + sum(w for _, w in d.atoms) - 1.0) <= 1e-8


@pytest.mark.parametrize("lam,c", [(1.0, 1.0), (0.5, 2.0), (3.0, 0.7)])
def test_density_pde_residual(lam, c):
    # u_tt + 2 lam u_t = c^2 u_xx inside the light cone
    t = 1.5
    h = 1e-3
    x = np.linspace(-0.8 * c * t, 0.8 * c * t, 17)

    def u(tt, xx):
        return telegraph_density(lam, c, tt, xx).pdf

    u0 = u(t, x)
    ut = (u(t + h, x) - u(t - h, x)) / (2 * h)
    utt = (u(t + h, x) - 2 * u0 + u(t - h, x)) / h**2
    uxx = (u(t, x + h) - 2 * u0 + u(t, x - h)) / h**2
    res = utt + 2 * lam * ut - c * c * uxx
    scale = np.max(np.abs(np.stack([utt, 2 * lam * ut, c * c * uxx])))
    assert np.max(np.abs(res)) <= 1e-3 * scale


def test_density_edge_value():
    lam, c, t = 1.3, 0.8, 2.0
    x = c * t * (1 - 1e-12)
    assert telegraph_density(lam, c, t, np.array([x])).pdf[0] == pytest.approx(telegraph_edge_value(lam, c, t), rel=1e-9)


def test_density_eval_invariants():
    with pytest.raises(ValueError):
        DensityEval(np.zeros(2), np.array([0.1, -1e-6]), [])
    with pytest.raises(ValueError):
        DensityEval(np.zeros(1), np.zeros(1), [(0.0, 1.5)])


# ---------------------------------------------------------------------------
# inversion


def test_invert_gaussian():
    x = np.linspace(-5, 5, 201)
    d = invert_cf(lambda b: np.exp(-0.5 * b * b), x)
    ref = np.exp(-0.5 * x * x) / math.sqrt(2 * math.pi)
    assert np.max(np.abs(d.pdf - ref)) <= 1e-6
    assert not d.resolution_limited
    assert d.mass_in_grid == pytest.approx(1.0, abs=1e-6)


def _log_time_chain(lam, c, tau, x, boxes):
    t0 = 1.0
    model = HadamardModel(1.0, lam, c, t0)
    w = 0.5 * math.exp(-lam * tau)
    atoms = [(-c * tau, w), (c * tau, w)]
    box = [(-c * tau, c * tau, telegraph_edge_value(lam, c, tau))] if boxes else None
    return invert_cf(lambda b: hadamard_cf(model, t0 * math.exp(tau), b), x, atoms=atoms, boxes=box)


@pytest.mark.parametrize("lam,c,tau", [(1.0, 1.0, 1.5), (0.5, 2.0, 1.0), (2.0, 0.5, 2.0)])
def test_invert_nu_one_matches_density(lam, c, tau):
    x = np.linspace(-1.5 * c * tau, 1.5 * c * tau, 600)  # the jump points are not grid points
    d = _log_time_chain(lam, c, tau, x, boxes=True)
    ref = telegraph_density(lam, c, tau, x)
    assert np.max(np.abs(d.pdf - ref.pdf)) <= 1e-3
    assert d.atoms == ref.atoms


def test_invert_nu_one_atoms_only_guard_band():
    # without the jump subtracted, Gibbs oscillation stays near +-c tau
    lam, c, tau = 1.0, 1.0, 1.5
    x = np.linspace(-2.25, 2.25, 600)
    d = _log_time_chain(lam, c, tau, x, boxes=False)
    ref = telegraph_density(lam, c, tau, x)
    far = np.abs(np.abs(x) - c * tau) > 0.05 * c * tau
    assert np.max(np.abs(d.pdf - ref.pdf)[far]) <= 1e-3
    assert np.max(np.abs(d.pdf - ref.pdf)[~far]) > 1e-3


def test_invert_delta_is_resolution_limited():
    x = np.linspace(-1, 1, 101)
    d = invert_cf(lambda b: np.ones_like(b, dtype=complex), x)
    assert d.resolution_limited
    assert d.mass_in_grid >= 0.99


def test_invert_symmetry_error():
    with pytest.raises(SymmetryError):
        invert_cf(lambda b: np.exp(-0.5 * b * b) * (1 + 1j * b * b), np.linspace(-2, 2, 11))


def test_cfgrid_hermitian():
    g = CFGrid.evaluate(lambda b: np.exp(1j * b - b * b), 5.0, 51)
    assert g.hermitian_defect() <= 1e-15
    g.check_hermitian()
    bad = CFGrid(g.betas, g.values * (1 + 1e-6j))
    with pytest.raises(SymmetryError):
        bad.check_hermitian()
