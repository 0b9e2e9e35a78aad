import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from xxzdressed import (
    CutProximityError,
    DomainError,
    ModelParams,
    PoleProximityError,
    StripError,
    asymptotic_constant,
    asymptotic_im,
    certify_bounds,
    eval_eps_complex,
    jump_check,
    omega_eval,
    residue_check,
    solve_fermi,
    trace_curve,
)
from xxzdressed.complexplane import (
    curve_samples,
    harmonicity_check,
    laurent_constant,
    monotonicity_check,
    region_bounds,
    symmetry_check,
    x_max,
)

PI = np.pi
# frozen oracles from an independent n = 2048 Nystrom solver
EPS_C_ORACLE = 0.44592931186614715 + 2.2556998593918562j  # eps(0.5 + 0.4i), h = 2.535
C_ORACLE = 2.1968262890250885  # multiprecision tail quadrature at double truncation
X_QUARTER_ORACLE = 0.4760808516090087  # x(gamma/4), h = h_c/2, bisection
IM_QUARTER_ORACLE = 1.893771698854001


@pytest.fixture(scope="module")
def half_field():
    return solve_fermi(ModelParams.from_ratio(1.0, 1.3, 0.5))


@pytest.fixture(scope="module")
def asym(fermi_ref):
    return asymptotic_constant(fermi_ref)


# --- evaluation ------------------------------------------------------------------

def test_eps_vanishes_at_fermi_point(fermi_ref):
    assert abs(eval_eps_complex(fermi_ref, fermi_ref.Q_F + 0j)) < 1e-12


def test_eps_complex_oracle(fermi_ref):
    assert abs(eval_eps_complex(fermi_ref, 0.5 + 0.4j) - EPS_C_ORACLE) < 1e-12


def test_eps_complex_normalized(fermi_ref):
    a = eval_eps_complex(fermi_ref, 0.5 + 0.4j)
    assert abs(eval_eps_complex(fermi_ref, 0.5 + 0.4j + 2j * PI) - a) < 1e-12


@given(x=st.floats(0.0, 4.0), y=st.floats(0.0, 1.5))
def test_eps_symmetries_property(fermi_ref, x, y):
    lam = complex(x, y)
    try:
        e = eval_eps_complex(fermi_ref, lam, pole_guard=1e-2, cut_guard=1e-2)
    except DomainError:
        return
    for m in (complex(-x, y), complex(x, -y), complex(-x, -y)):
        other = eval_eps_complex(fermi_ref, m, pole_guard=1e-2, cut_guard=1e-2)
        assert abs(other.real - e.real) <= 1e-10 * max(1.0, abs(e))
    assert abs(eval_eps_complex(fermi_ref, complex(-x, y)).imag + e.imag) <= 1e-10 * max(1, abs(e))


def test_guards(fermi_ref):
    g = fermi_ref.params.gamma
    with pytest.raises(PoleProximityError):
        eval_eps_complex(fermi_ref, 0.5j * g + 1e-4)
    with pytest.raises(PoleProximityError):
        eval_eps_complex(fermi_ref, -0.5j * g + 1j * PI)
    with pytest.raises(CutProximityError):
        eval_eps_complex(fermi_ref, 0.1 + 1j * g + 1e-4j)


def test_limit_at_large_x(fermi_ref):
    h = fermi_ref.params.h
    for y in (0.0, 0.3, 0.65, 1.0, 1.5):
        assert abs(eval_eps_complex(fermi_ref, complex(30.0, y)).real - h) < 1e-6


# --- residue and jump ------------------------------------------------------------

@pytest.mark.parametrize("J,g", [(1.0, 1.3), (2.0, 0.9)])
def test_residue(J, g):
    fd = solve_fermi(ModelParams.from_ratio(J, g, 0.5))
    r = residue_check(fd)
    assert abs(r - 2j * J * np.sin(g)) < 1e-6 * 2 * J * np.sin(g)


def test_residue_radius_stability(fermi_ref):
    a = residue_check(fermi_ref, radii=(1e-2,))
    b = residue_check(fermi_ref, radii=(1e-3,))
    assert abs(a - b) < 1e-5
    r = residue_check(fermi_ref)
    assert abs(r.real) < 1e-12 and abs(r.imag - 1.9270) < 2e-4


def test_jump_condition(fermi_ref):
    scale = abs(float(eval_eps_complex(fermi_ref, 0.0 + 0j).real))
    assert jump_check(fermi_ref, 0.0) < 1e-3 * scale


def test_jump_linear_in_delta(fermi_ref):
    x = 0.3 * fermi_ref.Q_F
    a = jump_check(fermi_ref, x, delta=1e-4)
    b = jump_check(fermi_ref, x, delta=5e-5)
    assert abs(a / b - 2) < 0.05


def test_jump_guard(fermi_ref):
    with pytest.raises(CutProximityError):
        jump_check(fermi_ref, fermi_ref.Q_F)
    with pytest.raises(CutProximityError):
        jump_check(fermi_ref, -fermi_ref.Q_F + 1e-4)


# --- curve -------------------------------------------------------------------------

def test_curve_starts_at_fermi_point(fermi_ref):
    pt = trace_curve(fermi_ref, [0.0])[0]
    assert abs(pt.x - fermi_ref.Q_F) < 1e-8
    assert abs(pt.im_eps) < 1e-12


def test_curve_invariants(fermi_ref):
    g = fermi_ref.params.gamma
    ys = curve_samples(g, 30)
    pts = trace_curve(fermi_ref, ys)
    assert all(0 <= q.y < g / 2 and q.x > 0 and q.residual < 1e-10 for q in pts)
    assert np.all(np.diff([q.im_eps for q in pts]) > 0)
    assert ys[0] == 0 and g / 2 - ys[-1] == pytest.approx(1e-3)
    assert np.all(np.diff(np.diff(ys)) < 0)


def test_curve_oracle_quarter(half_field):
    pt = trace_curve(half_field, [1.3 / 4])[0]
    assert abs(pt.x - X_QUARTER_ORACLE) < 1e-10
    assert abs(pt.im_eps - IM_QUARTER_ORACLE) < 1e-10


def test_curve_strip_error(fermi_ref):
    with pytest.raises(StripError):
        trace_curve(fermi_ref, [0.65])
    with pytest.raises(StripError):
        trace_curve(fermi_ref, [-0.1])


def test_curve_encloses_negative_region(fermi_ref):
    pts = trace_curve(fermi_ref, [0.1, 0.4])
    for q in pts:
        assert eval_eps_complex(fermi_ref, complex(0.5 * q.x, q.y)).real < 0
        assert eval_eps_complex(fermi_ref, complex(1.5 * q.x, q.y)).real > 0


# --- asymptotics -------------------------------------------------------------------

def test_asymptotic_constant_oracle(asym):
    assert abs(asym.c - C_ORACLE) < 1e-12
    assert asym.c > 0
    assert asym.tail_bound < 1e-12


def test_asymptotic_constant_matches_laurent(fermi_ref, asym):
    assert abs(asym.c - laurent_constant(fermi_ref)) < 1e-10
    assert abs(asym.c_laurent - asym.c) < 1e-10


def test_asymptotic_constant_tail_doubling(fermi_ref, asym):
    b = asymptotic_constant(fermi_ref, tail=2 * asym.tail_length, fit=False)
    assert abs(b.c - asym.c) < 1e-13


def test_asymptotic_fit(fermi_ref, asym):
    p = fermi_ref.params
    assert 0.45 < asym.x_exponent < 0.55
    assert -0.55 < asym.im_exponent < -0.45
    pref = np.sqrt(2 * p.J * np.sin(p.gamma) / asym.c)
    assert abs(asym.x_prefactor / pref - 1) < 0.03


def test_leading_order_at_1e3(fermi_ref, asym):
    p = fermi_ref.params
    y = p.gamma / 2 - 1e-3
    pt = trace_curve(fermi_ref, [y])[0]
    x_pred = np.sqrt(2 * p.J * np.sin(p.gamma) * 1e-3 / asym.c)
    assert abs(pt.x / x_pred - 1) < 0.03
    assert abs(pt.im_eps / asymptotic_im(fermi_ref, asym.c, y) - 1) < 0.05


def test_asymptotic_im_behaviour(fermi_ref, asym):
    g = fermi_ref.params.gamma
    a = asymptotic_im(fermi_ref, asym.c, g / 2 - 1e-3)
    b = asymptotic_im(fermi_ref, asym.c, g / 2 - 1e-6)
    assert b > 30 * a
    with pytest.raises(StripError):
        asymptotic_im(fermi_ref, asym.c, 0.0)


@pytest.mark.parametrize("ratio", [0.1, 0.5, 0.9])
def test_c_positive_sweep(ratio):
    for g in (0.6, 1.3):
        fd = solve_fermi(ModelParams.from_ratio(1.0, g, ratio))
        assert asymptotic_constant(fd, fit=False).c > 0


# --- bounds ------------------------------------------------------------------------

def test_region_geometry():
    p = ModelParams(1.0, 1.3, 2.0)
    assert region_bounds(p, "lower")[2] == min(1.0, 2.0 * 1.3 / (PI - 1.3))
    assert region_bounds(p, "middle")[2] == 1.0
    assert region_bounds(p, "upper") == ((PI / 2 + 1.3) / 2, PI / 2, 2.0)
    with pytest.raises(ValueError):
        region_bounds(p, "everywhere")


@pytest.mark.parametrize("region", ["strip", "lower", "middle", "upper"])
def test_bounds_pass(fermi_h2, region):
    rep = certify_bounds(fermi_h2, region, nx=80, ny=80)
    assert rep.passed and rep.margin > 0 and not rep.skipped
    if region == "middle":
        assert rep.min_value > 1.0
    if region == "upper":
        assert rep.min_value > 2.0


def test_bounds_empty_grid(fermi_h2):
    with pytest.raises(DomainError):
        # x = 0 only, y at a quarter of the way from the pole and from the cut
        certify_bounds(fermi_h2, "lower", nx=1, ny=2, guard=0.2, refine=False)


def test_bounds_degenerate_region():
    fd = solve_fermi(ModelParams.from_ratio(1.0, PI / 2 - 1e-3, 0.5))
    rep = certify_bounds(fd, "upper", nx=10, ny=10)
    assert rep.skipped and rep.passed


def test_bounds_refinement_on_failure(fermi_h2, monkeypatch):
    import xxzdressed.complexplane as cp
    calls = []
    real = cp._scan

    def fake(*args):
        calls.append(args)
        vmin, arg, n = real(*args)
        return -1.0, arg, n

    monkeypatch.setattr(cp, "_scan", fake)
    rep = cp.certify_bounds(fermi_h2, "middle", nx=10, ny=10)
    assert not rep.passed and rep.refined and rep.nx == 20 and len(calls) == 2


# --- omega representation -------------------------------------------------------------

def test_omega_matches_eps_at_origin(fermi_ref):
    assert abs(omega_eval(fermi_ref, 0.0) - eval_eps_complex(fermi_ref, 0.5j * PI)) < 1e-6


def test_omega_real_line(fermi_ref):
    z = np.linspace(-8, 8, 33)
    om = omega_eval(fermi_ref, z)
    assert np.max(np.abs(om - eval_eps_complex(fermi_ref, z + 0.5j * PI))) < 1e-6
    assert np.max(np.abs(om - om[::-1])) < 1e-12
    assert abs(omega_eval(fermi_ref, 25.0) - fermi_ref.params.h) < 1e-6


def test_omega_off_axis(fermi_ref):
    for z in (0.3 + 0.1j, -1.0 - 0.15j):
        assert abs(omega_eval(fermi_ref, z) - eval_eps_complex(fermi_ref, z + 0.5j * PI)) < 1e-6


def test_omega_margin(fermi_ref):
    with pytest.raises(StripError):
        omega_eval(fermi_ref, 0.3j)


# --- property suites ---------------------------------------------------------------------

def test_harmonicity(fermi_ref):
    assert np.max(harmonicity_check(fermi_ref, count=100)) < 1e-4


def test_symmetry_suite(fermi_ref):
    assert symmetry_check(fermi_ref) < 1e-10


def test_monotone_in_x(fermi_ref):
    assert monotonicity_check(fermi_ref) > 0


def test_x_max_formula(fermi_ref):
    p = fermi_ref.params
    ref = 5 * max(fermi_ref.Q_F, 1) + np.arcsinh(np.sqrt(2 * p.J * np.sin(p.gamma) ** 2 / p.h))
    assert x_max(p, fermi_ref.Q_F) == pytest.approx(ref, rel=1e-15)
