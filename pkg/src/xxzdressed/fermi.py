"""Fermi rapidity: the unique positive zero of Q -> eps(Q|Q)."""

import logging
from dataclasses import dataclass, field

import numpy as np

from .dressed import dressed_solution, eps_prime, total_q_derivative
from .errors import BracketError, ParameterError, SolverError
from .fredholm import evaluate
from .kernels import PI, ModelParams

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class FermiData:
    params: ModelParams
    Q_F: float
    Q_0: float
    Q_u: float  # None when eps_u has no positive zero
    g_residual: float
    dQF_dh: float
    bisection_steps: int
    newton_steps: int
    bracket_width: float
    n: int
    solution: object = field(default=None, repr=False)

    def as_dict(self):
        return {
            "Q_F": self.Q_F,
            "Q_0": self.Q_0,
            "Q_u": self.Q_u,
            "dQF_dh": self.dQF_dh,
            "g_residual": self.g_residual,
            "solver": {
                "bisection_steps": self.bisection_steps,
                "newton_steps": self.newton_steps,
                "bracket_width": self.bracket_width,
                "n": self.n,
            },
        }


def _check_regime(params):
    if not 0 < params.h < params.h_c:
        raise ParameterError(f"h = {params.h} outside (0, h_c = {params.h_c})")


def bracket_endpoints(params):
    """Zeros of the bare energy and of the upper bound eps_u.

    Returns ``(Q_u, Q_0)`` with ``Q_u = None`` when eps_u has no positive
    zero, i.e. when h >= 2 pi J sin(gamma)/gamma.
    """
    _check_regime(params)
    J, g, h = params.J, params.gamma, params.h
    Q_0 = float(np.arcsinh(np.sqrt(2 * J * np.sin(g) ** 2 / h - np.sin(g / 2) ** 2)))
    ratio = 2 * PI * J * np.sin(g) / (g * h)
    # at the boundary h = 2 pi J sin(gamma)/gamma the zero sits at 0 and is reported absent
    Q_u = float(g / PI * np.arccosh(ratio)) if ratio > 1 + 1e-12 else None
    return Q_u, Q_0


def boundary_function(params, Q, n=256):
    """g(Q) = eps(Q|Q), with a fresh Nystrom solve at this Q."""
    return dressed_solution(params, Q, n).eps_at_Q


def boundary_derivative(params, Q, n=256):
    """``(g(Q), dg/dQ)`` with the derivative from the resolvent identity."""
    sol = dressed_solution(params, Q, n)
    return sol.eps_at_Q, total_q_derivative(sol)


def solve_fermi(params, tol=1e-12, n=256, n_final=512, switch_width=1e-3, max_newton=50):
    """Locate the Fermi rapidity Q_F with eps(Q_F|Q_F) = 0.

    Bisection on the analytic bracket (Q_u or 1e-8, Q_0) down to
    ``switch_width``, then safeguarded Newton steps with the exact derivative
    of g; the last three Newton steps are done on an ``n_final``-node grid.
    """
    _check_regime(params)
    Q_u, Q_0 = bracket_endpoints(params)
    lo = Q_u if Q_u is not None else 1e-8
    hi = Q_0
    g_lo = boundary_function(params, lo, n)
    g_hi = boundary_function(params, hi, n)
    if not (g_lo < 0 < g_hi):
        raise BracketError(
            f"no sign change of eps(Q|Q) on [{lo}, {hi}]: g = ({g_lo}, {g_hi}); grid too coarse?")
    nbis = 0
    while hi - lo > switch_width:
        mid = 0.5 * (lo + hi)
        if boundary_function(params, mid, n) < 0:
            lo = mid
        else:
            hi = mid
        nbis += 1

    bracket = [lo, hi]

    def newton(Q, grid_n):
        sol = dressed_solution(params, Q, grid_n)
        g = sol.eps_at_Q
        if g < 0:
            bracket[0] = max(bracket[0], Q)
        elif g > 0:
            bracket[1] = min(bracket[1], Q)
        dg = total_q_derivative(sol)
        new = Q - g / dg if dg > 0 else np.nan
        if not bracket[0] <= new <= bracket[1]:
            new = 0.5 * (bracket[0] + bracket[1])
        return g, new

    Q = 0.5 * (lo + hi)
    nnewton = 0
    for _ in range(max_newton):
        g, new = newton(Q, n)
        nnewton += 1
        done = abs(new - Q) < 1e-10 or abs(g) < tol
        Q = new
        if done:
            break
    # the coarse bracket belongs to the coarse discretization; restart from the analytic one
    bracket[:] = [Q_u if Q_u is not None else 1e-8, Q_0]
    for _ in range(3):
        g, Q = newton(Q, n_final)
        nnewton += 1
    sol = dressed_solution(params, Q, n_final)
    g = sol.eps_at_Q
    while abs(g) >= tol:
        if nnewton > max_newton:
            raise SolverError(f"Newton iteration for Q_F stalled at Q={Q}, g={g}")
        _, Q = newton(Q, n_final)
        nnewton += 1
        sol = dressed_solution(params, Q, n_final)
        g = sol.eps_at_Q
    lo, hi = bracket
    grid_n = n_final
    log.debug("Q_F=%r after %d bisection and %d Newton steps", Q, nbis, nnewton)
    dqdh = fermi_derivative(None, sol)
    return FermiData(params, float(Q), Q_0, Q_u, float(abs(g)), dqdh, nbis, nnewton,
                     float(hi - lo), grid_n, sol)


def fermi_derivative(fermi, solution=None):
    """dQ_F/dh = -Z(Q_F|Q_F)/eps'(Q_F)."""
    sol = solution if solution is not None else fermi.solution
    Q = sol.Q
    z = float(evaluate(sol.Z, Q))
    de = float(np.real(eps_prime(sol, Q)))
    if de < 1e-10:
        raise SolverError(f"eps'(Q_F) = {de} is not positive; discretization failure")
    return -z / de
