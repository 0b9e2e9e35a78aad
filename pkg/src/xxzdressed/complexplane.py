"""The dressed energy at the Fermi rapidity, continued into the complex plane.

On the cylinder -pi/2 <= Im lam < pi/2 the dressed energy is meromorphic
apart from the cuts [-Q_F, Q_F] +- i gamma, with simple poles at +-i gamma/2.
The zero set of Re eps inside the strip |Im lam| < gamma/2 is a closed curve
through +-Q_F and +-i gamma/2; this module traces it, checks its behaviour at
the poles, and certifies the lower bounds on Re eps away from it.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from ._quad import adaptive_panels
from .errors import CutProximityError, DomainError, PoleProximityError, SolverError, StripError
from .fredholm import _cut_geometry, evaluate, integral_term
from .kernels import PI, bare_energy, gamma_prime, kernel_K, pole_distance, upper_energy

log = logging.getLogger(__name__)

#: default guard radius around the poles +-i gamma/2 and around the cuts
GUARD = 1e-3
#: pole guard used by curve tracing, small enough for the asymptotic fit window
CURVE_GUARD = 1e-5
#: window in gamma/2 - y used for the asymptotic power-law fits
FIT_WINDOW = (1e-4, 1e-2)

REGIONS = ("strip", "lower", "middle", "upper")


@dataclass(frozen=True)
class CurvePoint:
    y: float
    x: float
    im_eps: float
    residual: float


@dataclass(frozen=True)
class AsymptoticData:
    c: float
    tail_length: float
    tail_bound: float
    c_laurent: float
    x_exponent: float = None
    x_prefactor: float = None
    im_exponent: float = None
    im_prefactor: float = None
    fit_window: tuple = FIT_WINDOW

    def as_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass(frozen=True)
class BoundReport:
    region: str
    y_range: tuple
    x_max: float
    nx: int
    ny: int
    n_points: int
    min_value: float
    argmin: tuple
    bound: float
    margin: float
    passed: bool
    refined: bool = False
    skipped: bool = False
    metadata: dict = field(default_factory=dict)

    def as_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _solution(fermi, solution):
    sol = solution if solution is not None else fermi.solution
    if sol is None:
        raise ValueError("no dressed solution attached to the Fermi data")
    return sol


def _normalize(lam):
    lam = np.asarray(lam, dtype=complex)
    y = lam.imag - PI * np.floor(lam.imag / PI + 0.5)
    return lam.real + 1j * y


def x_max(params, Q_F):
    """Right end of the root bracket for the zero curve."""
    p = params
    return 5.0 * max(Q_F, 1.0) + float(np.arcsinh(np.sqrt(2 * p.J * np.sin(p.gamma) ** 2 / p.h)))


def eval_eps_complex(fermi, lam, solution=None, pole_guard=GUARD, cut_guard=GUARD):
    """eps(lam) on the cut cylinder, with guards around the poles and the cuts."""
    sol = _solution(fermi, solution)
    g = sol.params.gamma
    lam = _normalize(lam)
    d = pole_distance(lam, (0.5j * g, -0.5j * g), PI)
    if np.any(d < pole_guard):
        bad = lam.ravel()[np.argmin(d.ravel())]
        raise PoleProximityError(f"{bad} within {pole_guard:g} of the pole at +-i gamma/2")
    return evaluate(sol.eps, lam, guard=cut_guard)


def residue_check(fermi, solution=None, radii=(1e-2, 1e-3), m=64, stability=1e-5):
    """Residue of eps at i gamma/2 from circle means of (lam - i gamma/2) eps(lam).

    The mean over ``m`` equispaced points is exact for the regular part up to
    terms of order r**m, so the estimate is essentially radius independent;
    a change larger than ``stability`` between the radii raises SolverError.
    """
    sol = _solution(fermi, solution)
    a = 0.5j * sol.params.gamma
    theta = 2 * PI * np.arange(m) / m
    est = []
    for r in radii:
        t = r * np.exp(1j * theta)
        est.append(complex(np.mean(t * evaluate(sol.eps, a + t))))
    if abs(est[-1] - est[0]) > stability * abs(est[-1]):
        raise SolverError(f"residue estimate unstable: {est}")
    return est[-1]


def jump_check(fermi, x, solution=None, delta=1e-4, guard=GUARD):
    """|eps(x + i gamma + i delta) - eps(x + i gamma - i delta) - eps(x)| across the upper cut."""
    sol = _solution(fermi, solution)
    Q, g = sol.Q, sol.params.gamma
    if not abs(x) < Q - guard:
        raise CutProximityError(f"x = {x} is not inside (-Q_F, Q_F) by the guard {guard:g}")
    z = np.array([x + 1j * (g + delta), x + 1j * (g - delta)])
    up, down = evaluate(sol.eps, z, guard=0.5 * delta)
    return float(abs(up - down - evaluate(sol.eps, float(x))))


def curve_samples(gamma, m=40, eta_min=GUARD):
    """Chebyshev-type y values on [0, gamma/2 - eta_min], clustered at the top."""
    top = 0.5 * gamma - eta_min
    return top * np.sin(0.5 * PI * np.arange(m) / (m - 1))


def trace_curve(fermi, y_samples, solution=None, tol=1e-13, pole_guard=CURVE_GUARD):
    """Points of the zero curve Re eps(x + iy) = 0, x > 0, for each y in ``y_samples``.

    Re eps(iy) < 0 and Re eps(X_max + iy) > 0, and the zero in between is
    unique, so any sign-changing subinterval isolates it. The bracket is
    first sought around the previous root.
    """
    sol = _solution(fermi, solution)
    p = sol.params
    g = p.gamma
    X = x_max(p, sol.Q)

    def re_eps(x, y):
        return float(np.real(evaluate(sol.eps, complex(x, y))))

    points = []
    prev = None
    for y in np.asarray(y_samples, dtype=float):
        if not 0 <= y < 0.5 * g - pole_guard:
            raise StripError(f"y = {y} outside [0, gamma/2 - {pole_guard:g})")
        if y == 0:
            # on the real axis the zero is Q_F itself
            f = lambda x: float(evaluate(sol.eps, x))  # noqa: E731
        else:
            f = lambda x, y=y: re_eps(x, y)  # noqa: E731
        lo, hi = 0.0, X
        if prev is not None:
            a, b = 0.5 * prev, min(2.0 * prev, X)
            if f(a) < 0 < f(b):
                lo, hi = a, b
        flo, fhi = f(lo), f(hi)
        if not flo < 0 < fhi:
            raise SolverError(f"no sign change of Re eps on [{lo}, {hi}] at y = {y}")
        x = brentq(f, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=200)
        e = complex(evaluate(sol.eps, complex(x, y)))
        points.append(CurvePoint(float(y), float(x), float(e.imag), float(abs(e.real))))
        prev = x
    return points


def _tail_bound(L, scale, gam, amp):
    # int_L^inf K(u/scale | gam) amp du with K(u) <= (2 sin 2gam/pi) e^{-2u}/(1-e^{-2u})^2
    e = np.exp(-2 * L / scale)
    return amp * scale * np.sin(2 * gam) / PI * e / (1 - e) ** 2


def laurent_constant(fermi, solution=None):
    """Constant term of eps at i gamma/2: h - 2J cos(gamma) - sum_j w_j K(i gamma/2 - nu_j) eps_j."""
    sol = _solution(fermi, solution)
    p = sol.params
    # the regular part of h - 4 pi J sin(g) K(lam | g/2) at i g/2 is h - 2 J cos(g)
    reg = p.h - 2 * p.J * np.cos(p.gamma)
    return float(np.real(reg - integral_term(sol.eps, 0.5j * p.gamma)))


def asymptotic_constant(fermi, solution=None, tail=None, fit=True, n_fit=21, tol=1e-13):
    """The constant c of the square-root behaviour of the zero curve at i gamma/2.

        c = (h/2 + int_{Q_F}^inf K(mu/s | gamma') eps(mu) dmu) / s,  s = 1 - gamma/pi.

    The integral is truncated at Q_F + ``tail`` (default 20 s) with a bound on
    the remainder. With ``fit`` the zero curve is traced at
    gamma/2 - y in FIT_WINDOW and power laws are fitted to x(y) and Im eps.
    """
    sol = _solution(fermi, solution)
    p = sol.params
    g, Q = p.gamma, sol.Q
    s = 1.0 - g / PI
    gp = gamma_prime(g)
    L = 20.0 * s if tail is None else float(tail)
    mu, w = adaptive_panels(Q, Q + L, (0.0, Q), (0.5 * g, g), wmax=0.25)
    integral = np.dot(w, kernel_K(mu / s, gp) * evaluate(sol.eps, mu))
    bound = _tail_bound(L + Q, s, gp, p.h)
    if bound > 1e-12:
        raise SolverError(f"tail bound {bound:.2e} too large; increase the truncation length")
    c = float((0.5 * p.h + integral) / s)
    c_laurent = laurent_constant(fermi, sol)
    if not fit:
        return AsymptoticData(c, L, float(bound), c_laurent)
    eta = np.geomspace(FIT_WINDOW[1], FIT_WINDOW[0], n_fit)
    pts = trace_curve(fermi, 0.5 * g - eta, sol, tol=tol)
    xs = np.array([q.x for q in pts])
    ims = np.array([q.im_eps for q in pts])
    ax, bx = np.polyfit(np.log(eta), np.log(xs), 1)
    ai, bi = np.polyfit(np.log(eta), np.log(ims), 1)
    return AsymptoticData(c, L, float(bound), c_laurent,
                          float(ax), float(np.exp(bx)), float(ai), float(np.exp(bi)))


def asymptotic_x(params, c, y):
    """Leading-order zero curve x(y) ~ sqrt(2 J sin(gamma) (gamma/2 - y)/c)."""
    p = params
    return np.sqrt(2 * p.J * np.sin(p.gamma) * (0.5 * p.gamma - np.asarray(y)) / c)


def asymptotic_im(fermi, c, y):
    """Leading-order Im eps on the zero curve, sqrt(2 J sin(gamma) c/(gamma/2 - y))."""
    p = fermi.params
    eta = 0.5 * p.gamma - np.asarray(y, dtype=float)
    if np.any(eta <= 0) or np.any(eta >= 0.1 * p.gamma):
        raise StripError("asymptotic form needs 0 < gamma/2 - y < gamma/10")
    return np.sqrt(2 * p.J * np.sin(p.gamma) * c / eta)


def region_bounds(params, region):
    """``(y_lo, y_hi, claimed lower bound)`` for a certification region (y >= 0 half)."""
    g, h = params.gamma, params.h
    mid = PI / 2 - 0.5 * (PI / 2 - g)
    if region == "strip":
        return 0.0, 0.5 * g, 0.0
    if region == "lower":
        return 0.5 * g, g, min(0.5 * h, h * g / (PI - g))
    if region == "middle":
        return g, mid, 0.5 * h
    if region == "upper":
        return mid, PI / 2, h
    raise ValueError(f"unknown region {region!r}; expected one of {REGIONS}")


def _grid(region, y_lo, y_hi, X, nx, ny):
    x = np.linspace(0.0, X, nx)
    if region == "strip":
        # the strip is open at gamma/2 only; y = 0 is the real axis
        y = np.linspace(y_lo, y_hi, ny, endpoint=False)
    else:
        y = y_lo + (y_hi - y_lo) * (np.arange(ny) + 0.5) / ny
    return (x[:, None] + 1j * y[None, :]).ravel()


def _scan(sol, region, y_lo, y_hi, X, nx, ny, guard):
    p = sol.params
    g = p.gamma
    lam = _grid(region, y_lo, y_hi, X, nx, ny)
    keep = pole_distance(lam, (0.5j * g, -0.5j * g), PI) >= guard
    keep &= _cut_geometry(lam, sol.Q, g)[0] >= guard
    lam = lam[keep]
    if lam.size == 0:
        raise DomainError(f"region {region!r}: no grid points outside the guards")
    if region == "strip":
        # Re eps - Re eps0 is minus the integral term, computed without cancellation
        lower = -np.real(integral_term(sol.eps, lam))
        eps = np.real(bare_energy(lam, p, guard=0)) + lower
        upper = np.real(upper_energy(lam, p, guard=0)) - eps
        vals = np.minimum(lower, upper)
    else:
        vals = np.real(evaluate(sol.eps, lam, guard=guard))
    k = int(np.argmin(vals))
    return float(vals[k]), (float(lam[k].real), float(lam[k].imag)), int(lam.size)


def certify_bounds(fermi, region, solution=None, nx=200, ny=200, guard=GUARD, refine=True):
    """Check the lower bound on Re eps over a rectangular grid of one region.

    Regions (y >= 0 by evenness, 0 <= x <= X_max):

    ``strip``   0 <= y < gamma/2, Re eps0 < Re eps < Re eps_u; the reported
                value is the smaller of the two differences, claimed bound 0.
    ``lower``   gamma/2 < y < gamma, bound min(h/2, h gamma/(pi - gamma)).
    ``middle``  gamma < y < (pi/2 + gamma)/2, bound h/2.
    ``upper``   (pi/2 + gamma)/2 < y < pi/2, bound h.

    A failed margin triggers one refinement of the grid by 2x in each direction.
    """
    sol = _solution(fermi, solution)
    p = sol.params
    y_lo, y_hi, bound = region_bounds(p, region)
    X = x_max(p, sol.Q)
    meta = {"guard": guard, "omega_margin": PI / 2 - p.gamma}
    if y_hi - y_lo <= 2 * guard:
        return BoundReport(region, (y_lo, y_hi), X, nx, ny, 0, float("nan"), (), bound,
                           float("nan"), True, skipped=True, metadata=meta)
    vmin, arg, npts = _scan(sol, region, y_lo, y_hi, X, nx, ny, guard)
    refined = False
    if not vmin > bound and refine:
        nx, ny, refined = 2 * nx, 2 * ny, True
        vmin, arg, npts = _scan(sol, region, y_lo, y_hi, X, nx, ny, guard)
    passed = bool(vmin > bound)
    if not passed:
        log.warning("bound %s failed: min %r at %r vs %r", region, vmin, arg, bound)
    return BoundReport(region, (y_lo, y_hi), X, nx, ny, npts, vmin, arg, bound,
                       vmin - bound, passed, refined, metadata=meta)


def omega_eval(fermi, z, solution=None, tol=1e-12):
    """eps on the line Im lam = pi/2 from its representation by the exterior values:

        omega(z) = h/s - (1/s) int_{|w| > Q_F} K((z - w)/s | pi/2 - gamma') eps(w) dw

    with s = 1 - gamma/pi, valid for |Im z| < pi/2 - gamma.
    """
    sol = _solution(fermi, solution)
    p = sol.params
    g, Q = p.gamma, sol.Q
    s = 1.0 - g / PI
    ga = PI / 2 - gamma_prime(g)
    margin = PI / 2 - g
    scalar = np.ndim(z) == 0
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if np.any(np.abs(z.imag) >= margin):
        raise StripError(f"omega representation needs |Im z| < {margin}")
    out = np.empty(z.shape, dtype=complex)
    for i, zi in enumerate(z.flat):
        d = margin - abs(zi.imag)
        L = abs(zi.real) + 20.0 * s
        mu, w = adaptive_panels(Q, Q + L, (zi.real, -zi.real, Q, 0.0), (d, d, g, 0.5 * g),
                                wmax=0.25)
        bound = 2 * _tail_bound(Q + L - abs(zi.real), s, ga, p.h)
        if bound > tol:
            raise SolverError(f"omega tail bound {bound:.2e} exceeds {tol:.1e}")
        e = evaluate(sol.eps, mu)
        right = kernel_K((zi - mu) / s, ga, guard=0)
        left = kernel_K((zi + mu) / s, ga, guard=0)
        out.flat[i] = (p.h - np.dot(w, (right + left) * e)) / s
    if np.all(z.imag == 0):
        out = out.real
    return out[0] if scalar else out


# --------------------------------------------------------------------------
# property checks

def interior_points(fermi, count, seed=0, exclusion=0.1, solution=None):
    """Random points of the cylinder at least ``exclusion`` away from cuts and poles."""
    sol = _solution(fermi, solution)
    g = sol.params.gamma
    X = x_max(sol.params, sol.Q)
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        lam = complex(rng.uniform(-X, X), rng.uniform(-PI / 2, PI / 2))
        if pole_distance(lam, (0.5j * g, -0.5j * g), PI) < exclusion:
            continue
        if _cut_geometry(np.asarray(lam), sol.Q, g)[0] < exclusion:
            continue
        out.append(lam)
    return np.array(out)


def harmonicity_check(fermi, count=100, seed=0, step=5e-4, solution=None):
    """Relative 5-point Laplacian |f_xx + f_yy|/(|f_xx| + |f_yy| + |f|) of Re eps at random points."""
    sol = _solution(fermi, solution)
    lam = interior_points(fermi, count, seed, solution=sol)
    offs = np.array([0, step, -step, 1j * step, -1j * step])
    f = np.real(evaluate(sol.eps, lam[:, None] + offs[None, :]))
    fxx = (f[:, 1] + f[:, 2] - 2 * f[:, 0]) / step ** 2
    fyy = (f[:, 3] + f[:, 4] - 2 * f[:, 0]) / step ** 2
    return np.abs(fxx + fyy) / (np.abs(fxx) + np.abs(fyy) + np.abs(f[:, 0]))


def symmetry_check(fermi, count=100, seed=1, solution=None):
    """Largest deviation from Re eps even and Im eps odd in x and in y, at mirrored quadruples."""
    sol = _solution(fermi, solution)
    lam = interior_points(fermi, count, seed, solution=sol)
    x, y = lam.real, lam.imag
    e = evaluate(sol.eps, np.stack([x + 1j * y, -x + 1j * y, x - 1j * y, -x - 1j * y]))
    ref = e[0]
    scale = np.maximum(np.abs(ref), 1.0)
    dev = [np.abs(e[1] - np.conj(ref)),  # x -> -x: Re even, Im odd
           np.abs(e[2] - np.conj(ref)),  # y -> -y
           np.abs(e[3] - ref)]
    return float(np.max(np.array(dev) / scale))


def monotonicity_check(fermi, nx=200, ny=20, guard=GUARD, solution=None):
    """Smallest forward difference in x of Re eps(x + iy) on a grid with x > 0, 0 <= y < gamma/2."""
    sol = _solution(fermi, solution)
    g = sol.params.gamma
    X = x_max(sol.params, sol.Q)
    x = np.linspace(X / nx, X, nx)
    y = np.linspace(0.0, 0.5 * g - 2 * guard, ny)
    f = np.real(evaluate(sol.eps, x[:, None] + 1j * y[None, :]))
    return float(np.min(np.diff(f, axis=0)))
