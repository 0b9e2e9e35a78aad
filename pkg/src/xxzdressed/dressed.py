"""Dressed energy, dressed charge and root density at finite Q.

The three functions solve the same integral equation with driving terms
eps0, 1 and K(.|gamma/2). They share one grid and one factorization, so the
linear relation eps = h Z - 4 pi J sin(gamma) rho holds to solver precision.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ._quad import adaptive_panels
from .errors import StripError
from .fredholm import (
    CUT_GUARD,
    DensityVector,
    NystromOperator,
    build_grid,
    constant,
    evaluate,
    resolvent_eval,
    resolvent_table,
)
from .kernels import PI, bare_energy, bare_energy_prime, eps_inf_prime, kernel_K, kernel_K_prime


@dataclass(frozen=True, eq=False)
class DressedSolution:
    params: object
    Q: float
    eps: DensityVector
    Z: DensityVector
    rho: DensityVector
    operator: NystromOperator

    @property
    def grid(self):
        return self.operator.grid

    @cached_property
    def resolvent(self):
        """Resolvent table R_Q on this solution's grid (built on first use)."""
        return resolvent_table(self.grid, self.params.gamma, operator=self.operator)

    def __call__(self, lam, guard=CUT_GUARD):
        return evaluate(self.eps, lam, guard=guard)

    @property
    def eps_at_Q(self):
        """eps(Q|Q), the boundary value whose zero defines the Fermi rapidity."""
        return float(evaluate(self.eps, self.Q))


def dressed_solution(params, Q, n=256):
    """Solve for eps, Z and rho on a shared ``n``-node Gauss-Legendre grid on [-Q, Q]."""
    p = params
    op = NystromOperator(build_grid(Q, n), p.gamma)

    def eps0(lam):
        return bare_energy(lam, p)

    def rho0(lam):
        return kernel_K(lam, p.gamma / 2)

    eps = op.solve(eps0, "eps")
    Z = op.solve(constant(1.0), "Z")
    rho = op.solve(rho0, "rho")
    return DressedSolution(p, float(Q), eps, Z, rho, op)


def _tail_rule(Q, lam, gamma):
    # eps_inf' decays like exp(-pi mu/gamma); cut where that is below 1e-17
    L = 40.0 * gamma / PI
    y = abs(np.imag(lam))
    return adaptive_panels(Q, Q + L, (np.real(lam), Q), (gamma - y, gamma), wmax=0.25)


def eps_prime(solution, lam, method="resolvent"):
    """Rapidity derivative of the dressed energy eps(lam|Q).

    ``method="resolvent"`` (default) uses

        eps'(lam) = eps(Q|Q) (R_Q(lam, Q) - R_Q(lam, -Q)) + eps_inf'(lam)
                    + int_Q^inf (R_Q(lam, mu) - R_Q(lam, -mu)) eps_inf'(mu) dmu

    and requires |Im lam| < gamma/2. ``method="direct"`` differentiates the
    Nystrom extension term by term and is valid anywhere off the cuts.
    """
    sol = solution
    p = sol.params
    g = p.gamma
    scalar = np.ndim(lam) == 0
    lam = np.atleast_1d(np.asarray(lam))
    if method == "direct":
        nu, w = sol.grid.nodes, sol.grid.weights
        out = (bare_energy_prime(lam, p)
               - kernel_K_prime(lam[:, None] - nu[None, :], g, guard=0) @ (w * sol.eps.values))
        return out[0] if scalar else out
    if method != "resolvent":
        raise ValueError(f"unknown method {method!r}")
    if np.any(np.abs(lam.imag) >= g / 2):
        raise StripError("resolvent route for eps' needs |Im lam| < gamma/2")
    table = sol.resolvent
    Q = sol.Q
    bval = sol.eps_at_Q
    out = np.empty(lam.shape, dtype=np.result_type(lam, float))
    for i, z in enumerate(lam):
        mu, w = _tail_rule(Q, z, g)
        diff = resolvent_eval(table, z, mu) - resolvent_eval(table, z, -mu)
        boundary = resolvent_eval(table, z, Q) - resolvent_eval(table, z, -Q)
        out[i] = bval * boundary + eps_inf_prime(z, p) + np.dot(w, diff * eps_inf_prime(mu, p))
    return out[0] if scalar else out


def eps_q_derivative(solution, lam):
    """Partial derivative in Q: -eps(Q|Q) (R_Q(lam, Q) + R_Q(lam, -Q))."""
    sol = solution
    lam = np.asarray(lam)
    return -sol.eps_at_Q * (resolvent_eval(sol.resolvent, lam, sol.Q)
                            + resolvent_eval(sol.resolvent, lam, -sol.Q))


def total_q_derivative(solution):
    """d eps(Q|Q)/dQ = -2 eps(Q|Q) R_Q(Q,-Q) + eps_inf'(Q) + int_Q^inf (R_Q(Q,mu) - R_Q(Q,-mu)) eps_inf'(mu)."""
    sol = solution
    p, Q = sol.params, sol.Q
    table = sol.resolvent
    mu, w = _tail_rule(Q, Q, p.gamma)
    diff = resolvent_eval(table, Q, mu) - resolvent_eval(table, Q, -mu)
    return float(-2 * sol.eps_at_Q * resolvent_eval(table, Q, -Q)
                 + eps_inf_prime(Q, p) + np.dot(w, diff * eps_inf_prime(mu, p)))
