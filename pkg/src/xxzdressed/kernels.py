"""Closed-form special functions of the XXZ dressed-function equations.

All functions accept scalars or arrays of complex rapidities. Real input
takes a real-arithmetic path and returns real output; complex input returns
complex output. Each evaluation near a pole raises instead of returning a
huge number, since downstream quadrature must never straddle a pole
silently.
"""

from dataclasses import dataclass, field

import numpy as np

from ._quad import adaptive_panels, panels
from .errors import ParameterError, PoleProximityError, StripError

PI = np.pi

#: default guard radius around poles, in rapidity units
POLE_GUARD = 1e-6


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters of the XXZ chain in the critical regime.

    Parameters
    ----------
    J : float
        Exchange coupling, J > 0.
    gamma : float
        Anisotropy angle, 0 < gamma < pi/2, so that ``delta = cos(gamma)``.
    h : float
        Magnetic field, 0 < h < h_c = 4J(1 + delta).
    """

    J: float
    gamma: float
    h: float
    delta: float = field(init=False)
    h_c: float = field(init=False)

    def __post_init__(self):
        J, gamma, h = float(self.J), float(self.gamma), float(self.h)
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "h", h)
        if not np.isfinite(J) or J <= 0:
            raise ParameterError(f"J must be positive, got {J}")
        if not 0 < gamma < PI / 2:
            raise ParameterError(f"gamma must lie in (0, pi/2), got {gamma}")
        delta = float(np.cos(gamma))
        h_c = critical_field(J, gamma)
        if not 0 < h < h_c:
            raise ParameterError(f"h = {h} outside the critical regime (0, {h_c})")
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "h_c", h_c)

    @classmethod
    def from_ratio(cls, J, gamma, ratio):
        """Parameters with the field given in units of the critical field."""
        if not 0 < ratio < 1:
            raise ParameterError(f"h/h_c ratio must lie in (0, 1), got {ratio}")
        return cls(J, gamma, ratio * critical_field(J, gamma))

    @property
    def ratio(self):
        return self.h / self.h_c

    def as_dict(self):
        return {"J": self.J, "gamma": self.gamma, "h": self.h,
                "delta": self.delta, "h_c": self.h_c}


def critical_field(J, gamma):
    """Upper critical field 4J(1 + cos gamma)."""
    return 4.0 * J * (1.0 + np.cos(gamma))


def gamma_prime(gamma):
    """The rescaled angle (gamma/2)/(1 - gamma/pi)."""
    return 0.5 * gamma / (1.0 - gamma / PI)


def _wrap(x, period):
    """Reduce ``x`` into [-period/2, period/2)."""
    return x - period * np.floor(x / period + 0.5)


def pole_distance(lam, centers, period):
    """Distance of ``lam`` to the nearest point ``c + i*period*m`` for c in ``centers``."""
    lam = np.asarray(lam, dtype=complex)
    d = np.full(lam.shape, np.inf)
    for c in centers:
        z = lam - c
        d = np.minimum(d, np.hypot(z.real, _wrap(z.imag, period)))
    return d


def _check_poles(lam, centers, period, guard, what):
    if not guard or np.isrealobj(lam):
        return
    d = pole_distance(lam, centers, period)
    if np.any(d < guard):
        bad = np.asarray(lam).ravel()[np.argmin(d.ravel())]
        raise PoleProximityError(
            f"{what}: argument {bad} within {guard:g} of a pole")


def _ret(out, scalar):
    return out[()] if scalar else out


def kernel_K(lam, gamma, guard=POLE_GUARD):
    """The kernel (1/2 pi i)(coth(lam - i gamma) - coth(lam + i gamma)).

    Evaluated in the form 2 sin(2g) q / (pi expm1(2ig - 2s) expm1(-2ig - 2s))
    with s = +-lam, Re s >= 0 and q = exp(-2s), which neither overflows for
    large |Re lam| nor loses relative accuracy next to the poles at
    +-i gamma mod i pi.
    """
    scalar = np.ndim(lam) == 0
    if not 0 < gamma < PI:
        raise ParameterError(f"gamma must lie in (0, pi), got {gamma}")
    s2g = np.sin(2 * gamma)
    if np.isrealobj(lam):
        q = np.exp(-2.0 * np.abs(np.asarray(lam, dtype=float)))
        out = 2 * s2g * q / (PI * ((1 - q) ** 2 + 4 * q * np.sin(gamma) ** 2))
        return _ret(out, scalar)
    lam = np.asarray(lam, dtype=complex)
    _check_poles(lam, (1j * gamma, -1j * gamma), PI, guard, "kernel_K")
    s = np.where(lam.real >= 0, lam, -lam)
    s = s.real + 1j * _wrap(s.imag, PI)
    q = np.exp(-2 * s)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = 2 * s2g * q / (PI * np.expm1(2j * gamma - 2 * s) * np.expm1(-2j * gamma - 2 * s))
    return _ret(out, scalar)


def kernel_K_prime(lam, gamma, guard=POLE_GUARD):
    """Derivative of :func:`kernel_K` with respect to ``lam``.

    K' = -(2 pi / sin 2g) K^2 sinh(2 lam), rearranged around q = exp(-2s) so
    that sinh never overflows.
    """
    scalar = np.ndim(lam) == 0
    s2g = np.sin(2 * gamma)
    if np.isrealobj(lam):
        lam = np.asarray(lam, dtype=float)
        q = np.exp(-2.0 * np.abs(lam))
        den = (1 - q) ** 2 + 4 * q * np.sin(gamma) ** 2
        kq = 2 * s2g / (PI * den)
        out = -np.sign(lam) * (2 * PI / s2g) * (kq * q) * kq * (1 - q * q) / 2
        return _ret(out, scalar)
    lam = np.asarray(lam, dtype=complex)
    _check_poles(lam, (1j * gamma, -1j * gamma), PI, guard, "kernel_K_prime")
    flip = lam.real < 0
    s = np.where(flip, -lam, lam)
    s = s.real + 1j * _wrap(s.imag, PI)
    q = np.exp(-2 * s)
    with np.errstate(divide="ignore", invalid="ignore"):
        kq = 2 * s2g / (PI * np.expm1(2j * gamma - 2 * s) * np.expm1(-2j * gamma - 2 * s))
    out = -(2 * PI / s2g) * (kq * q) * kq * (1 - q * q) / 2
    return _ret(np.where(flip, -out, out), scalar)


def kernel_fourier(k, gamma):
    """Fourier transform sinh((pi/2 - gamma)k)/sinh(pi k/2) of the kernel."""
    scalar = np.ndim(k) == 0
    k = np.abs(np.asarray(k, dtype=float))
    a, b = PI / 2 - gamma, PI / 2
    small = k < 1e-4
    ks = np.where(small, 1.0, k)
    # even in k; written with decaying exponentials only
    sign = np.sign(a) if a != 0 else 0.0
    big = sign * np.exp((abs(a) - b) * ks) * (-np.expm1(-2 * abs(a) * ks)) / (-np.expm1(-2 * b * ks))
    series = (a / b) * (1 + (a * a - b * b) * k * k / 6)
    return _ret(np.where(small, series, big), scalar)


def _sech(z, guard, gamma):
    """sech(z) with z = pi lam/gamma; the guard is measured in lam units."""
    if np.isrealobj(z):
        z = np.abs(np.asarray(z, dtype=float))
        e = np.exp(-z)
        return 2 * e / (1 + e * e)
    z = np.asarray(z, dtype=complex)
    if guard:
        lam = z * gamma / PI
        _check_poles(lam, (0.5j * gamma,), gamma, guard, "sech")
    s = np.where(z.real >= 0, z, -z)
    s = s.real + 1j * _wrap(s.imag, 2 * PI)
    shift = np.where(s.imag >= 0, 1j * PI, -1j * PI)
    with np.errstate(divide="ignore", invalid="ignore"):
        return -2 * np.exp(-s) / np.expm1(shift - 2 * s)


def _tanh(z):
    if np.isrealobj(z):
        return np.tanh(z)
    z = np.asarray(z, dtype=complex)
    flip = z.real < 0
    s = np.where(flip, -z, z)
    e = np.exp(-2 * s)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (1 - e) / (1 + e)
    return np.where(flip, -t, t)


def bare_energy(lam, params, guard=POLE_GUARD):
    """Driving term h - 4 pi J sin(gamma) K(lam | gamma/2) of the dressed energy."""
    p = params
    return p.h - 4 * PI * p.J * np.sin(p.gamma) * kernel_K(lam, p.gamma / 2, guard)


def bare_energy_prime(lam, params, guard=POLE_GUARD):
    """Derivative of :func:`bare_energy`."""
    p = params
    return -4 * PI * p.J * np.sin(p.gamma) * kernel_K_prime(lam, p.gamma / 2, guard)


def upper_energy(lam, params, guard=POLE_GUARD):
    """Upper bound h - 2 pi J sin(gamma)/(gamma cosh(pi lam/gamma)) on the real axis."""
    p = params
    scalar = np.ndim(lam) == 0
    z = np.asarray(lam) * (PI / p.gamma)
    out = p.h - 2 * PI * p.J * np.sin(p.gamma) / p.gamma * _sech(z, guard, p.gamma)
    return _ret(out, scalar)


def eps_inf(lam, params, guard=POLE_GUARD):
    """Dressed energy at Q = infinity."""
    p = params
    scalar = np.ndim(lam) == 0
    z = np.asarray(lam) * (PI / p.gamma)
    out = (p.h / (2 * (1 - p.gamma / PI))
           - 2 * PI * p.J * np.sin(p.gamma) / p.gamma * _sech(z, guard, p.gamma))
    return _ret(out, scalar)


def eps_inf_prime(lam, params, guard=POLE_GUARD):
    """Derivative of :func:`eps_inf` with respect to the rapidity."""
    p = params
    scalar = np.ndim(lam) == 0
    z = np.asarray(lam) * (PI / p.gamma)
    pref = 2 * PI * p.J * np.sin(p.gamma) / p.gamma * (PI / p.gamma)
    out = pref * _tanh(z) * _sech(z, guard, p.gamma)
    return _ret(out, scalar)


def rho_inf(lam, gamma, guard=POLE_GUARD):
    """Root density at Q = infinity, 1/(2 gamma cosh(pi lam/gamma))."""
    scalar = np.ndim(lam) == 0
    z = np.asarray(lam) * (PI / gamma)
    return _ret(_sech(z, guard, gamma) / (2 * gamma), scalar)


def re_sech(x, y, gamma):
    """Re 1/cosh(pi(x + iy)/gamma) from its explicit real form.

    cosh(u) cos(v)/(sinh(u)^2 + cos(v)^2), rewritten in e = exp(-|u|).
    """
    u, v = PI * np.asarray(x) / gamma, PI * np.asarray(y) / gamma
    e = np.exp(-np.abs(u))
    den = (1 - e * e) ** 2 + 4 * e * e * np.cos(v) ** 2
    return 2 * e * (1 + e * e) * np.cos(v) / den


def dx_re_sech(x, y, gamma):
    """x-derivative of :func:`re_sech`."""
    u, v = PI * np.asarray(x) / gamma, PI * np.asarray(y) / gamma
    e = np.exp(-np.abs(u))
    den = (1 - e * e) ** 2 + 4 * e * e * np.cos(v) ** 2
    num = 2 * e * (1 - e * e) * np.cos(v) * ((1 + e * e) ** 2 + 4 * e * e * np.sin(v) ** 2)
    return -(PI / gamma) * np.sign(u) * num / den ** 2


# --------------------------------------------------------------------------
# resolvent of the infinite-line equation

def resolvent_fourier_transform(k, gamma):
    """Fourier transform of R(.|gamma): sinh((pi/2-g)k)/(2 cosh(gk/2) sinh((pi-g)k/2))."""
    k = np.abs(np.asarray(k, dtype=float))
    return 0.5 * np.exp(-gamma * k) * _rhat_scaled(k, gamma)


def _rhat_scaled(k, gamma):
    """exp(gk) sinh(ak)/(cosh(gk/2) sinh((pi-g)k/2)) for k >= 0, a = pi/2 - g.

    The unscaled function decays like 2 exp(-gk); the scaled one tends to 2.
    """
    a, b, c = PI / 2 - gamma, gamma / 2, (PI - gamma) / 2
    small = k < 1e-4
    ks = np.where(small, 1.0, k)
    big = (2 * (-np.expm1(-2 * a * ks))
           / ((1 + np.exp(-gamma * ks)) * (-np.expm1(-2 * c * ks))))
    series = np.exp(gamma * k) * (a / c) * (
        1 + (a * a - c * c) * k * k / 6 - b * b * k * k / 2)
    return np.where(small, series, big)


def _resolvent_fourier(lam, gamma, chunk=256):
    lam = np.asarray(lam, dtype=complex)
    flat = lam.ravel()
    out = np.empty(flat.shape, dtype=complex)
    # poles of the transform closest to the real k axis
    pdist = min(PI / gamma, 2 * PI / (PI - gamma))
    order = np.argsort(np.abs(flat.real))
    for start in range(0, flat.size, chunk):
        idx = order[start:start + chunk]
        z = flat[idx]
        # R is even: fold into Re z >= 0 without changing anything
        xmax = float(np.max(np.abs(z.real)))
        ymax = float(np.max(np.abs(z.imag)))
        decay = gamma - ymax
        kmax = (38.0 + np.log(1.0 / decay) + np.log(2.0)) / decay
        width = min(pdist / 1.5, 10.0 / max(xmax, 1e-300))
        k, w = panels(0.0, kmax, width)
        rest = _rhat_scaled(k, gamma) * w
        kz = np.multiply.outer(z, k)
        # cos(k z) exp(-gamma k), combined so that nothing overflows
        ex = -gamma * k
        vals = 0.5 * (np.exp(1j * kz + ex) + np.exp(-1j * kz + ex)) @ rest
        out[idx] = vals / (2 * PI)
    return out.reshape(lam.shape)


def _resolvent_conv(lam, gamma):
    lam = np.asarray(lam, dtype=complex)
    flat = lam.ravel()
    out = np.empty(flat.shape, dtype=complex)
    gp = gamma_prime(gamma)
    scale = 1 - gamma / PI
    pref = PI / (2 * gamma * (PI - gamma))
    # both factors decay at least like exp(-2|mu|/scale) or exp(-pi|mu|/gamma)
    tail = 40.0 / min(2.0 / scale, PI / gamma)
    for i, z in enumerate(flat):
        d = gamma / 2 - abs(z.imag)
        lo = min(0.0, z.real) - tail
        hi = max(0.0, z.real) + tail
        mu, w = adaptive_panels(lo, hi, (0.0, z.real), (gamma / 2, d), wmax=0.5)
        f = kernel_K(mu / scale, gp) * _sech((z - mu) * (PI / gamma), None, gamma)
        out[i] = pref * np.dot(w, f)
    return out.reshape(lam.shape)


def resolvent_inf(lam, gamma, method="fourier"):
    """Resolvent kernel R(lam|gamma) of the equation on the whole real line.

    ``method="fourier"`` integrates the explicit Fourier transform and is
    valid for |Im lam| < gamma. ``method="convolution"`` uses the
    representation as a convolution of a rescaled kernel with a sech and is
    valid for |Im lam| < gamma/2 only.
    """
    if not 0 < gamma < PI / 2:
        raise ParameterError(f"gamma must lie in (0, pi/2), got {gamma}")
    scalar = np.ndim(lam) == 0
    lam_c = np.asarray(lam, dtype=complex)
    ymax = float(np.max(np.abs(lam_c.imag))) if lam_c.size else 0.0
    if method == "fourier":
        if ymax >= gamma * (1 - 1e-6):
            raise StripError(f"|Im lam| = {ymax} outside the strip |Im lam| < gamma = {gamma}")
        out = _resolvent_fourier(lam_c, gamma)
    elif method == "convolution":
        if ymax >= gamma / 2 * (1 - 1e-6):
            raise StripError(
                f"|Im lam| = {ymax} outside the strip |Im lam| < gamma/2 = {gamma / 2}")
        out = _resolvent_conv(lam_c, gamma)
    else:
        raise ValueError(f"unknown method {method!r}")
    if np.isrealobj(lam):
        out = out.real
    return _ret(out, scalar)
