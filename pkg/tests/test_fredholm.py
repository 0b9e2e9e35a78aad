import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from xxzdressed import (
    CutProximityError,
    ModelParams,
    ParameterError,
    SolverError,
    bare_energy,
    build_grid,
    complementary_eval,
    eps_inf,
    evaluate,
    kernel_K,
    neumann_oracle,
    resolvent_eval,
    resolvent_inf,
    resolvent_table,
    solve_fredholm,
)
from xxzdressed.fermi import bracket_endpoints
from xxzdressed.fredholm import constant, integral_term

PI = np.pi
P2 = ModelParams(1.0, 1.3, 2.0)


def eps0(lam):
    return bare_energy(lam, P2)


# --- grids -------------------------------------------------------------------

def test_grid_small():
    g = build_grid(1.0, 4)
    assert g.n == 4
    assert np.all(np.diff(g.nodes) > 0)
    assert np.array_equal(g.nodes, -g.nodes[::-1])
    assert np.array_equal(g.weights, g.weights[::-1])
    assert abs(g.weights.sum() - 2.0) < 1e-15


def test_grid_sinh_squared():
    g = build_grid(2.0, 64)
    val = np.dot(g.weights, np.sinh(g.nodes) ** 2)
    assert abs(val - (np.sinh(4.0) / 2 - 2.0)) < 1e-12


@given(Q=st.floats(0.01, 20.0), half=st.integers(2, 200))
def test_grid_invariants(Q, half):
    g = build_grid(Q, 2 * half)
    assert np.all(np.diff(g.nodes) > 0)
    assert np.array_equal(g.nodes, -g.nodes[::-1])
    assert abs(g.weights.sum() - 2 * Q) < 1e-12 * max(1.0, Q)
    assert np.all(g.weights > 0)


@pytest.mark.parametrize("Q,n", [(1.0, 5), (0.0, 8), (-1.0, 8), (1.0, 2), (np.inf, 8)])
def test_grid_rejects(Q, n):
    with pytest.raises(ParameterError):
        build_grid(Q, n)


# --- solves ------------------------------------------------------------------

def test_zero_driving_term():
    sol = solve_fredholm(constant(0.0), build_grid(1.0, 32), 1.3)
    assert np.all(sol.values == 0)
    it = neumann_oracle(constant(0.0), build_grid(1.0, 32), 1.3)
    assert it.iterations == 1 and np.all(it.values == 0)


def test_constant_driving_term():
    g = 1.3
    sol = solve_fredholm(constant(1.0), build_grid(3.0, 256), g)
    assert np.all(sol.values > 1 / (2 * (1 - g / PI))) and np.all(sol.values < 1)
    # interior values approach pi/(2(pi - gamma)) as Q grows
    limit = PI / (2 * (PI - g))
    assert abs(limit - 0.85295) < 1e-5
    d3 = abs(float(evaluate(sol, 0.0)) - limit)
    d6 = abs(float(evaluate(solve_fredholm(constant(1.0), build_grid(6.0, 256), g), 0.0)) - limit)
    assert d6 < d3


def test_eps0_against_neumann():
    _, Q0 = bracket_endpoints(P2)
    grid = build_grid(Q0, 256)
    a = solve_fredholm(eps0, grid, 1.3)
    b = neumann_oracle(eps0, grid, 1.3, tol=1e-13)
    assert np.max(np.abs(a.values - b.values)) < 1e-10


def test_neumann_iteration_count():
    g, tol = 1.3, 1e-12
    it = neumann_oracle(eps0, build_grid(1.0, 128), g, tol=tol)
    assert it.iterations <= np.log(tol) / np.log(1 - 2 * g / PI) + 5


def test_neumann_distance_at_tol():
    grid = build_grid(1.0, 256)
    a = solve_fredholm(eps0, grid, 1.3)
    b = neumann_oracle(eps0, grid, 1.3, tol=1e-10)
    assert np.max(np.abs(a.values - b.values)) < 1e-9


def test_neumann_damping_agrees():
    grid = build_grid(1.0, 64)
    a = neumann_oracle(eps0, grid, 0.9, tol=1e-13)
    b = neumann_oracle(eps0, grid, 0.9, tol=1e-13, damping=0.3)
    assert np.max(np.abs(a.values - b.values)) < 1e-11


def test_neumann_cap():
    with pytest.raises(SolverError):
        neumann_oracle(eps0, build_grid(1.0, 16), 0.3, max_iter=3)


@pytest.mark.parametrize("Q", [0.5, 1.0, 2.0, 5.0])
@pytest.mark.parametrize("g", [0.4, 0.9, 1.3])
def test_backend_equivalence(Q, g):
    p = ModelParams.from_ratio(1.0, g, 0.5)
    f0 = lambda lam: bare_energy(lam, p)  # noqa: E731
    grid = build_grid(Q, 256)
    a = solve_fredholm(f0, grid, g)
    b = neumann_oracle(f0, grid, g, tol=1e-13)
    assert np.max(np.abs(a.values - b.values)) < 1e-9


def test_grid_refinement():
    a = solve_fredholm(eps0, build_grid(1.0, 128), 1.3)
    b = solve_fredholm(eps0, build_grid(1.0, 256), 1.3)
    x = np.linspace(-1, 1, 21)
    assert np.max(np.abs(evaluate(a, x) - evaluate(b, x))) < 1e-8


def test_even_driving_gives_even_solution():
    sol = solve_fredholm(eps0, build_grid(1.5, 128), 1.3)
    assert np.max(np.abs(sol.values - sol.values[::-1])) < 1e-10


def test_nodes_residual():
    sol = solve_fredholm(eps0, build_grid(1.0, 128), 1.3)
    nu, w = sol.grid.nodes, sol.grid.weights
    res = sol.values + kernel_K(nu[:, None] - nu[None, :], 1.3) @ (w * sol.values) - eps0(nu)
    assert np.max(np.abs(res)) < 1e-12 * np.max(np.abs(eps0(nu)))


# --- evaluation ----------------------------------------------------------------

@pytest.fixture(scope="module")
def sol_eps():
    return solve_fredholm(eps0, build_grid(1.0, 256), 1.3)


def test_evaluate_reproduces_nodes(sol_eps):
    assert np.max(np.abs(evaluate(sol_eps, sol_eps.grid.nodes) - sol_eps.values)) < 1e-12


def test_evaluate_schwarz_reflection(sol_eps):
    z = 0.3 + 0.2j
    assert abs(evaluate(sol_eps, z) - np.conj(evaluate(sol_eps, np.conj(z)))) < 1e-14


def test_evaluate_periodic(sol_eps):
    for x in (0.0, 0.4, 2.0):
        assert abs(evaluate(sol_eps, x + 1j * PI) - evaluate(sol_eps, x)) < 1e-12


def test_evaluate_cut_guard(sol_eps):
    with pytest.raises(CutProximityError):
        evaluate(sol_eps, 0.3 + 1.3j)
    with pytest.raises(CutProximityError):
        evaluate(sol_eps, -0.5 + (PI - 1.3) * 1j + 1e-6j)
    # beyond the cut end the function is regular
    assert np.isfinite(evaluate(sol_eps, 1.2 + 1.3j))


def test_near_cut_subtraction_converges(sol_eps):
    # the subtracted evaluation next to the cut agrees with a much finer plain solve
    fine = solve_fredholm(eps0, build_grid(1.0, 2048), 1.3)
    for z in (0.3 + 1.3j - 0.01j, -0.7 + 1.3j + 0.02j, 0.1 - 1.3j + 0.005j):
        assert abs(evaluate(sol_eps, z) - evaluate(fine, z)) < 1e-9


def test_integral_term(sol_eps):
    z = np.array([0.2, 0.4 + 0.3j])
    assert np.max(np.abs(eps0(z) - integral_term(sol_eps, z) - evaluate(sol_eps, z))) < 1e-14


# --- resolvent table -------------------------------------------------------------

@pytest.fixture(scope="module")
def table():
    return resolvent_table(build_grid(1.0, 128), 1.3)


def test_resolvent_symmetry_parity(table):
    r = table.entries
    assert np.max(np.abs(r - r.T)) < 1e-10
    assert np.max(np.abs(r - r[::-1, ::-1])) < 1e-10


def test_resolvent_exceeds_infinite_line(table):
    nu = table.grid.nodes
    rinf = resolvent_inf(nu[:, None] - nu[None, :], 1.3)
    assert np.all(table.entries > rinf)


def test_resolvent_commutation(table):
    # R + K W R = K and R + R W K = K
    nu, w = table.grid.nodes, table.grid.weights
    k = kernel_K(nu[:, None] - nu[None, :], 1.3)
    r = table.entries
    assert np.max(np.abs(r + (k * w) @ r - k)) < 1e-10
    assert np.max(np.abs(r + (r * w) @ k - k)) < 1e-10


def test_resolvent_representation():
    grid = build_grid(1.0, 128)
    tab = resolvent_table(grid, 1.3)
    sol = solve_fredholm(eps0, grid, 1.3)
    nu, w = grid.nodes, grid.weights
    rep = eps0(nu) - tab.entries @ (w * eps0(nu))
    assert np.max(np.abs(rep - sol.values)) < 1e-9


def test_resolvent_antisymmetric_difference(table):
    nu = table.grid.nodes
    pos = nu[nu > 0]
    lam, mu = pos[:, None], pos[None, :]
    lhs = resolvent_eval(table, lam, mu) - resolvent_eval(table, lam, -mu)
    mid = resolvent_inf(lam - mu, 1.3) - resolvent_inf(lam + mu, 1.3)
    assert np.all(lhs > mid) and np.all(mid > 0)


def test_resolvent_eval_off_grid_matches_table(table):
    nu = table.grid.nodes
    vals = resolvent_eval(table, nu[:, None], nu[None, :])
    assert np.max(np.abs(vals - table.entries)) < 1e-12


def test_resolvent_complex_real_part_bound(table):
    d = 0.05
    y = np.linspace(-(1.3 / 2 - d), 1.3 / 2 - d, 7)
    lam = (np.linspace(-2, 2, 9)[:, None] + 1j * y[None, :]).ravel()
    for mu in (-0.8, 0.0, 0.5):
        rq = resolvent_eval(table, lam, mu).real
        rinf = resolvent_inf(lam - mu, 1.3).real
        assert np.all(rq > rinf) and np.all(rinf > 0)


def test_resolvent_small_q_limit():
    tab = resolvent_table(build_grid(1e-6, 4), 1.3)
    lam, mu = 0.3 + 0.1j, -0.2
    assert abs(resolvent_eval(tab, lam, mu) - kernel_K(lam - mu, 1.3)) < 1e-6


# --- complementary equation ---------------------------------------------------------

def test_complementary_matches_evaluate(sol_eps):
    f_inf = lambda lam: eps_inf(lam, P2)  # noqa: E731
    for lam in (0.0, 0.6, 2.5, 0.3 + 0.2j):
        a = complementary_eval(sol_eps, f_inf, lam)
        assert abs(a - evaluate(sol_eps, lam)) < 1e-6


def test_complementary_correction_sign():
    from xxzdressed import solve_fermi
    fd = solve_fermi(P2)
    sol = fd.solution.eps
    x = np.array([fd.Q_F + 0.1, 1.5, 3.0, 6.0])
    assert np.all(evaluate(sol, x) - eps_inf(x, P2) >= 0)


def test_complementary_large_q_limit():
    sol = solve_fredholm(eps0, build_grid(12.0, 512), 1.3)
    assert abs(float(evaluate(sol, 0.0)) - eps_inf(0.0, P2)) < 1e-8


def test_complementary_tail_error(sol_eps):
    with pytest.raises(SolverError):
        complementary_eval(sol_eps, lambda lam: eps_inf(lam, P2), 0.0, tail=1.0)
