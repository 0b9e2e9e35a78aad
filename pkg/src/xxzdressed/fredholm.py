"""Nystrom solution of f = f0 - K f on [-Q, Q] and evaluation off the contour.

The integral operator has the difference kernel K(lam - mu | gamma). After
Gauss-Legendre discretization the equation becomes the dense linear system
(I + K W) f = f0. Off the nodes the solution is extended through the
equation itself,

    f(lam) = f0(lam) - sum_j w_j K(lam - nu_j) f_j,

which is a holomorphic i*pi-periodic function away from the cuts
[-Q, Q] +- i gamma. Close to a cut the discrete sum is inaccurate, because
the kernel has a pole at distance ``dist`` from the contour; there the
pole's principal part is subtracted and integrated exactly.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg

from ._quad import adaptive_panels, gauss_legendre
from .errors import CutProximityError, ParameterError, SolverError
from .kernels import PI, kernel_K, resolvent_inf

#: default guard distance around the cuts [-Q, Q] +- i gamma
CUT_GUARD = 1e-4


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    """Nodes and weights of a symmetric quadrature rule on [-Q, Q]."""

    Q: float
    nodes: np.ndarray
    weights: np.ndarray
    rule: str

    @property
    def n(self):
        return self.nodes.size


def build_grid(Q, n=256, rule="gauss-legendre"):
    """Symmetric quadrature grid of ``n`` nodes on [-Q, Q].

    Only the Gauss-Legendre family is provided. ``n`` must be even so that
    the node set is closed under negation without a node at the origin.
    """
    if not (np.isfinite(Q) and Q > 0):
        raise ParameterError(f"Q must be positive, got {Q}")
    if int(n) != n or n < 4 or n % 2:
        raise ParameterError(f"node count must be an even integer >= 4, got {n}")
    if rule != "gauss-legendre":
        raise ParameterError(f"unknown quadrature rule {rule!r}")
    x, w = gauss_legendre(int(n))
    # enforce exact symmetry of the rule
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    nodes, weights = Q * x, Q * w
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureGrid(float(Q), nodes, weights, f"{rule}-{int(n)}")


class NystromOperator:
    """Factorized Nystrom matrix I + K W for one grid and one anisotropy.

    All solves sharing a grid go through one LU factorization.
    """

    def __init__(self, grid, gamma):
        if not 0 < gamma < PI / 2:
            raise ParameterError(f"gamma must lie in (0, pi/2), got {gamma}")
        self.grid = grid
        self.gamma = float(gamma)
        nu, w = grid.nodes, grid.weights
        self.kmat = kernel_K(nu[:, None] - nu[None, :], gamma)
        self.matrix = np.eye(grid.n) + self.kmat * w[None, :]
        self.lu = scipy.linalg.lu_factor(self.matrix)

    def solve_vector(self, rhs):
        rhs = np.asarray(rhs)
        x = scipy.linalg.lu_solve(self.lu, rhs)
        res = self.matrix @ x - rhs
        scale = max(np.max(np.abs(rhs)), np.finfo(float).tiny)
        if not np.all(np.isfinite(x)) or np.max(np.abs(res)) > 1e-12 * scale * 10:
            raise SolverError(
                f"Nystrom solve residual {np.max(np.abs(res)) / scale:.3e} too large")
        return x

    def solve(self, f0, label=None):
        values = self.solve_vector(f0(self.grid.nodes))
        values.setflags(write=False)
        return DensityVector(self.grid, values, f0, self.gamma, label, operator=self)


@dataclass(frozen=True, eq=False)
class DensityVector:
    """Node values of the solution of the integral equation for one driving term."""

    grid: QuadratureGrid
    values: np.ndarray
    f0: object
    gamma: float
    label: str = None
    iterations: int = None
    operator: NystromOperator = None

    def __call__(self, lam, guard=CUT_GUARD):
        return evaluate(self, lam, guard=guard)

    @cached_property
    def fine(self):
        """A denser Gauss-Legendre rule on [-Q, Q] with the solution sampled on it.

        Only used for the singularity-subtracted evaluation next to the cuts.
        """
        m = max(4 * self.grid.n, 1024)
        x, w = gauss_legendre(m)
        t, wt = self.grid.Q * x, self.grid.Q * w
        ft = _plain(self, t)
        return t, wt, ft


def constant(c):
    """Driving term identically equal to ``c``."""
    def f0(lam):
        return np.full(np.shape(lam), c, dtype=np.result_type(np.asarray(lam), float))
    f0.__name__ = f"constant({c})"
    return f0


def solve_fredholm(f0, grid, gamma, label=None):
    """Solve the discretized equation (I + K W) f = f0(nodes) by LU factorization.

    The operator norm of K is below 1 - 2 gamma/pi < 1, so the matrix is
    well conditioned for every Q; a large residual is reported as
    :class:`SolverError`.
    """
    return NystromOperator(grid, gamma).solve(f0, label)


def neumann_oracle(f0, grid, gamma, tol=1e-12, max_iter=100000, damping=0.0):
    """Fixed-point iteration f <- f0 - K W f, independent of any factorization.

    Converges geometrically with rate at most 1 - 2 gamma/pi. ``damping``
    mixes in the previous iterate: f <- (1 - d)(f0 - K W f) + d f.
    """
    if not 0 < gamma < PI / 2:
        raise ParameterError(f"gamma must lie in (0, pi/2), got {gamma}")
    nu, w = grid.nodes, grid.weights
    kw = kernel_K(nu[:, None] - nu[None, :], gamma) * w[None, :]
    b = np.asarray(f0(nu))
    f = b.copy()
    for it in range(1, max_iter + 1):
        new = b - kw @ f
        if damping:
            new = (1 - damping) * new + damping * f
        diff = np.max(np.abs(new - f))
        f = new
        if diff < tol:
            f.setflags(write=False)
            return DensityVector(grid, f, f0, float(gamma), "neumann", iterations=it)
    raise SolverError(f"Neumann iteration did not reach tol={tol} in {max_iter} steps")


# --------------------------------------------------------------------------
# evaluation off the nodes

def _cut_geometry(lam, Q, gamma):
    """Nearest cut for each point: distance, cut height and orientation sign.

    Cuts sit at [-Q, Q] + i c with c in {gamma, -gamma} mod i pi. The sign is
    +1 for the family where K(lam - mu) contains +coth(lam - mu - i gamma)/(2 pi i).
    """
    x = lam.real
    y = lam.imag - PI * np.floor(lam.imag / PI + 0.5)
    dx = np.maximum(np.abs(x) - Q, 0.0)
    # heights of the cut images that can be nearest inside one period
    heights = np.array([gamma, gamma - PI, -gamma, PI - gamma])
    signs = np.array([1.0, 1.0, -1.0, -1.0])
    d = np.hypot(dx[..., None], y[..., None] - heights)
    k = np.argmin(d, axis=-1)
    dist = np.take_along_axis(d, k[..., None], -1)[..., 0]
    shift = lam.imag - y  # multiple of pi removed by the reduction
    return dist, heights[k] + shift, signs[k]


def _plain(sol, lam):
    """Nystrom extension by the discrete sum, in chunks."""
    lam = np.asarray(lam)
    flat = lam.ravel()
    nu, w = sol.grid.nodes, sol.grid.weights
    fw = w * sol.values
    out = np.empty(flat.shape, dtype=np.result_type(flat, sol.values, float))
    step = max(1, 4_000_000 // max(nu.size, 1))
    for s in range(0, flat.size, step):
        z = flat[s:s + step]
        out[s:s + step] = sol.f0(z) - kernel_K(z[:, None] - nu[None, :], sol.gamma, guard=0) @ fw
    return out.reshape(lam.shape)


def _subtracted(sol, lam, height, sign):
    """Evaluation next to a cut with the kernel's principal part integrated exactly.

    With mu0 = lam - i*height the kernel behaves like sign/(2 pi i (mu0 - mu)),
    and

        int f(mu)/(mu0 - mu) dmu = int (f(mu) - f(mu0))/(mu0 - mu) dmu
                                  + f(mu0) [log(mu0 + Q) - log(mu0 - Q)].
    """
    t, wt, ft = sol.fine
    Q = sol.grid.Q
    mu0 = lam - 1j * height
    f_mu0 = _plain(sol, mu0)
    out = np.empty(lam.shape, dtype=complex)
    for i in range(lam.size):
        z, m0, fm0, sg = lam.flat[i], mu0.flat[i], f_mu0.flat[i], sign.flat[i]
        kern = kernel_K(z - t + 0j, sol.gamma, guard=0)
        sing = sg / (2j * PI * (m0 - t))
        integral = np.dot(wt, kern * ft - sing * fm0)
        integral += sg * fm0 / (2j * PI) * (np.log(m0 + Q) - np.log(m0 - Q))
        out.flat[i] = sol.f0(z) - integral
    return out


def near_cut_distance(grid):
    """Distance below which evaluation switches to singularity subtraction."""
    return 25.0 * grid.Q / grid.n


def evaluate(solution, lam, guard=CUT_GUARD):
    """Value of the solution at arbitrary complex ``lam`` through the integral equation.

    Raises :class:`CutProximityError` within ``guard`` of a cut. Real points
    inside [-Q, Q] use the same formula, so nodes are reproduced exactly.
    """
    sol = solution
    scalar = np.ndim(lam) == 0
    if np.isrealobj(lam):
        out = _plain(sol, np.asarray(lam, dtype=float))
        return out[()] if scalar else out
    lam = np.asarray(lam, dtype=complex)
    dist, height, sign = _cut_geometry(lam, sol.grid.Q, sol.gamma)
    if np.any(dist < guard):
        bad = lam.ravel()[np.argmin(dist.ravel())]
        raise CutProximityError(f"{bad} within {guard:g} of a cut at height +-{sol.gamma}")
    d_sub = min(near_cut_distance(sol.grid), sol.gamma / 2, PI / 2 - sol.gamma)
    near = dist < d_sub
    out = np.empty(lam.shape, dtype=complex)
    if np.any(~near):
        out[~near] = _plain(sol, lam[~near])
    if np.any(near):
        out[near] = _subtracted(sol, lam[near], height[near], sign[near])
    return out[()] if scalar else out


def integral_term(solution, lam):
    """The discrete integral sum_j w_j K(lam - nu_j) f_j alone (plain route)."""
    sol = solution
    lam = np.asarray(lam)
    nu, w = sol.grid.nodes, sol.grid.weights
    return kernel_K(lam[..., None] - nu, sol.gamma, guard=0) @ (w * sol.values)


# --------------------------------------------------------------------------
# resolvent kernel at finite Q

@dataclass(frozen=True, eq=False)
class ResolventTable:
    """R_Q(nu_i, nu_j) on the grid, with the factorized operator for off-grid use."""

    grid: QuadratureGrid
    entries: np.ndarray
    operator: NystromOperator

    @property
    def gamma(self):
        return self.operator.gamma


def resolvent_table(grid, gamma, operator=None):
    """Resolvent kernel on the nodes: column j solves the equation with driving K(. - nu_j)."""
    op = operator if operator is not None else NystromOperator(grid, gamma)
    entries = op.solve_vector(op.kmat)
    entries.setflags(write=False)
    return ResolventTable(grid, entries, op)


def resolvent_eval(table, lam, mu):
    """R_Q(lam, mu) for complex ``lam`` off the cuts and real ``mu`` (broadcast elementwise).

    Uses R_Q(nu_k, mu) = [(I + K W)^{-1} K(nu - mu)]_k and the Nystrom
    extension in the first argument.
    """
    op = table.operator
    nu, w = table.grid.nodes, table.grid.weights
    lam, mu = np.broadcast_arrays(np.asarray(lam), np.asarray(mu, dtype=float))
    shape = lam.shape
    lam, mu = lam.ravel(), mu.ravel()
    umu, inv = np.unique(mu, return_inverse=True)
    cols = op.solve_vector(kernel_K(nu[:, None] - umu[None, :], op.gamma))
    r = cols[:, inv]  # n x P
    klam = kernel_K(lam[:, None] - nu[None, :], op.gamma, guard=0)
    out = kernel_K(lam - mu, op.gamma) - np.einsum("pj,j,jp->p", klam, w, r)
    return out.reshape(shape)


def complementary_eval(solution, f_inf, lam, tail=None, tol=1e-10):
    """Evaluate through the equation on the complementary contour R minus [-Q, Q].

    f(lam) = f_inf(lam) + int_{|mu| > Q} R(lam - mu | gamma) f(mu) dmu, with
    ``f_inf`` the solution on the whole line. The tails are cut at Q + tail
    (default 40 gamma); a :class:`SolverError` is raised if the estimated
    neglected remainder exceeds ``tol``.
    """
    sol = solution
    gamma, Q = sol.gamma, sol.grid.Q
    L = 40.0 * gamma if tail is None else float(tail)
    scalar = np.ndim(lam) == 0
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    out = np.empty(lam.shape, dtype=complex)
    p = min(PI / gamma, 2 * PI / (PI - gamma))
    for i, z in enumerate(lam.flat):
        sx = (z.real, -z.real, 0.0, Q, -Q)
        sd = (gamma - abs(z.imag), gamma - abs(z.imag), gamma / 2, gamma, gamma)
        mu, w = adaptive_panels(Q, Q + L, sx, sd, wmax=0.5)
        mu = np.concatenate([-mu[::-1], mu])
        w = np.concatenate([w[::-1], w])
        fmu = evaluate(sol, mu)
        rk = resolvent_inf(z - mu, gamma)
        dist = Q + L - abs(z.real)
        bound = 10.0 * np.max(np.abs(fmu)) * abs(resolvent_inf(complex(dist, z.imag), gamma)) / p
        if dist <= 0 or bound > tol:
            raise SolverError(f"tail remainder bound {bound:.2e} exceeds {tol:.1e} at lam={z}")
        out.flat[i] = f_inf(z) + np.dot(w, rk * fmu)
    if np.isrealobj(solution.values) and np.all(lam.imag == 0):
        out = out.real
    return out[0] if scalar else out
