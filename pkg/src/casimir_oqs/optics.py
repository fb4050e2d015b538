"""
Optical response of the oscillator medium and scattering by the slabs.

The medium is a density of damped oscillators of frequency ``omega0`` and
plasma frequency ``omega_p``; its permittivity is

    eps(w) = 1 + omega_p**2 / (omega0**2 - w**2 - i w gamma~(-i w))

and ``n = sqrt(eps)`` with ``Im n >= 0``. A scalar field with wavenumber
``k = w`` scatters off two identical slabs of thickness ``d`` placed at
``[-a/2 - d, -a/2]`` and ``[a/2, a/2 + d]``; the mode amplitudes in the five
regions follow from continuity of the field and its derivative.

Slab formulas are written with ``expm1(2iknd)`` so that thin or weakly
absorbing slabs, and the neighbourhood of ``n = 0``, do not lose digits.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy import integrate

from .environment import Cutoff, EnvironmentSpec, damping_laplace, gamma_of_k
from .errors import DomainError, RootPolishError, SingularityError

__all__ = [
    "MediumSpec",
    "Geometry",
    "SlabOpticalState",
    "permittivity",
    "refractive_index",
    "interface_coeffs",
    "slab_coeffs",
    "two_slab_coeffs",
    "susceptibility",
    "cubic_roots_alpha3",
    "kramers_kronig_real",
    "permittivity_imaginary_axis",
    "refractive_index_imaginary_axis",
]

_SINGULAR = 1e-14


@dataclass(frozen=True)
class MediumSpec:
    """
    Oscillator medium.

    Parameters
    ----------
    omega0 : float
        Oscillator frequency, ``>= 0``. Zero gives the Drude (``gamma0 > 0``)
        or plasma (``gamma0 = 0``) model.
    omega_p : float
        Plasma frequency, ``>= 0``. Zero is vacuum.
    env : EnvironmentSpec
        Bath of the oscillators.
    """

    omega0: float = 1.0
    omega_p: float = 0.0
    env: EnvironmentSpec = EnvironmentSpec()

    def __post_init__(self):
        for name in ("omega0", "omega_p"):
            value = float(getattr(self, name))
            if not (math.isfinite(value) and value >= 0):
                raise DomainError(f"{name} must be finite and >= 0")
            object.__setattr__(self, name, value)

    @property
    def lossless(self):
        return self.env.gamma0 == 0

    @property
    def scale(self):
        """Largest frequency scale of the medium."""
        s = [self.omega0, self.omega_p, self.env.gamma0]
        if self.env.cutoff is not Cutoff.NONE:
            s.append(self.env.lambda_cut)
        return max(s)


@dataclass(frozen=True)
class Geometry:
    """Slab thickness ``d`` and gap ``a``, both positive and finite."""

    thickness: float
    gap: float

    def __post_init__(self):
        for name in ("thickness", "gap"):
            value = float(getattr(self, name))
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be finite and > 0")
            object.__setattr__(self, name, value)


@dataclass(frozen=True)
class SlabOpticalState:
    """
    Scattering coefficients at wavenumber(s) ``k``.

    ``R, T`` are reflection and transmission of the two-slab system for a
    wave incident from the left, and ``A, B``, ``C, D``, ``E, F`` the
    forward/backward amplitudes inside slab II, gap III and slab IV, all
    referred to plane waves centred at the origin ``x = 0``. For strongly
    evanescent fields ``A, B, E, F`` may overflow; the force never uses them.
    """

    k: np.ndarray
    n: np.ndarray
    n1: np.ndarray
    n2: np.ndarray
    r_n: np.ndarray
    t_n: np.ndarray
    r: np.ndarray
    t: np.ndarray
    R: np.ndarray
    T: np.ndarray
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    E: np.ndarray
    F: np.ndarray
    z1: np.ndarray
    z2: np.ndarray


def _as_positive(k, name="k"):
    kk = np.asarray(k, dtype=float)
    if np.any(~(kk > 0)):
        raise DomainError(f"{name} must be > 0")
    return kk, kk.ndim == 0


def _ret(arr, scalar):
    return arr[()] if scalar else arr


def _susceptibility_denominator(med, w):
    return med.omega0 ** 2 - w * w - 1j * w * gamma_of_k(med.env, w)


def permittivity(med: MediumSpec, omega):
    """
    Complex permittivity ``eps(omega)`` for ``omega > 0``.

    Raises
    ------
    SingularityError
        If the oscillator denominator vanishes (lossless resonance).
    """
    w, scalar = _as_positive(omega, "omega")
    if med.omega_p == 0:
        return _ret(np.ones(w.shape, dtype=complex), scalar)
    den = _susceptibility_denominator(med, w)
    # With loss the Drude divergence at omega -> 0 is integrable; only a
    # lossless denominator can actually vanish.
    hit = (np.abs(den) < _SINGULAR) & (den.imag == 0)
    if np.any(hit):
        raise SingularityError("permittivity pole on the real axis "
                               f"(omega = {w[hit].flat[0]!r}, lossless medium)")
    return _ret(1.0 + med.omega_p ** 2 / den, scalar)


def _branch(n2):
    """Square root with Im >= 0, and Re >= 0 when Im = 0."""
    n = np.sqrt(n2)
    flip = (n.imag < 0) | ((n.imag == 0) & (n.real < 0))
    return np.where(flip, -n, n)


def refractive_index(med: MediumSpec, k):
    """Refractive index ``n(k) = sqrt(eps(k))`` on the physical branch."""
    return _branch(np.asarray(permittivity(med, k), dtype=complex))[()]


def interface_coeffs(n):
    """
    Single-interface coefficients ``r_n = (n-1)/(n+1)``, ``t_n = 2n/(n+1)``.
    """
    nn = np.asarray(n, dtype=complex)
    if np.any(np.abs(nn + 1) < _SINGULAR):
        raise SingularityError("interface coefficients are singular at n = -1")
    return (nn - 1) / (nn + 1), 2 * nn / (nn + 1)


def _slab_parts(n, k, d):
    """
    Stable single-slab pieces.

    Returns ``(r, tau, em, den)`` with ``em = expm1(2iknd)``,
    ``den = 4n - (n-1)^2 em = (n+1)^2 (1 - r_n^2 e^{2iknd})`` and
    ``tau = (1 - r_n^2) e^{iknd}/(1 - r_n^2 e^{2iknd})`` the face-to-face
    transmission amplitude.
    """
    q = k * n
    em = np.expm1(2j * q * d)
    den = 4 * n - (n - 1) ** 2 * em
    if np.any(np.abs(den) < _SINGULAR * np.abs(n + 1) ** 2):
        raise SingularityError("slab guided-mode resonance on the real axis")
    r = (n * n - 1) * em / den
    tau = 4 * n * np.exp(1j * q * d) / den
    return r, tau, em, den


def slab_coeffs(med: MediumSpec, d, k):
    """
    Reflection and transmission of one slab of thickness ``d >= 0``.

    ``r = r_n (e^{2iknd} - 1)/(1 - r_n^2 e^{2iknd})`` and
    ``t = 4n/(n+1)^2 e^{iknd} e^{-ikd}/(1 - r_n^2 e^{2iknd})``.
    """
    kk, scalar = _as_positive(k)
    if not d >= 0:
        raise DomainError("thickness must be >= 0")
    n = np.asarray(refractive_index(med, kk), dtype=complex)
    r, tau, _, _ = _slab_parts(n, kk, d)
    t = tau * np.exp(-1j * kk * d)
    return _ret(r, scalar), _ret(t, scalar)


@dataclass(frozen=True)
class _GapSolution:
    """Face-referenced quantities shared by the force integrands."""

    k: np.ndarray
    n: np.ndarray
    eps: np.ndarray
    r: np.ndarray
    tau: np.ndarray
    phase: np.ndarray   # e^{2ika}
    delta: np.ndarray   # 1 - r^2 e^{2ika}


def _gap_solution(med, geom, k):
    kk = np.asarray(k, dtype=float)
    eps = np.asarray(permittivity(med, kk), dtype=complex)
    n = _branch(eps)
    r, tau, _, _ = _slab_parts(n, kk, geom.thickness)
    phase = np.exp(2j * kk * geom.gap)
    delta = 1 - r * r * phase
    if np.any(np.abs(delta) < _SINGULAR):
        raise SingularityError("gap resonance 1 - r^2 e^{2ika} = 0")
    return _GapSolution(kk, n, eps, r, tau, phase, delta)


def two_slab_coeffs(med: MediumSpec, geom: Geometry, k):
    """
    All scattering coefficients of the two-slab system at ``k > 0``.

    Returns
    -------
    SlabOpticalState
    """
    kk, _ = _as_positive(k)
    d, a = geom.thickness, geom.gap
    g = _gap_solution(med, geom, kk)
    n, r, delta = g.n, g.r, g.delta
    r_n, t_n = interface_coeffs(n)
    t = g.tau * np.exp(-1j * kk * d)
    e = lambda x: np.exp(1j * x)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        R = e(-kk * (a + 2 * d)) * (r + g.tau ** 2 * r * g.phase / delta)
        T = t * t / delta
        A = (e(-kk * a / 2) * e(kk * n * a / 2) * t * (1 + r_n * r * g.phase)
             / (t_n * delta))
        B = (e(-kk * a / 2) * e(-kk * n * a / 2) * t * (r_n + r * g.phase)
             / (t_n * delta))
        C = t / delta
        D = t * r * e(kk * a) / delta
        E = (t * t / (t_n * delta) * e(kk * a / 2) * e(kk * d)
             * e(-kk * n * a / 2) * e(-kk * n * d))
        F = (t * t * r_n / (t_n * delta) * e(kk * a / 2) * e(kk * d)
             * e(kk * n * a / 2) * e(kk * n * d))
    return SlabOpticalState(
        k=kk, n=n, n1=n.real, n2=n.imag, r_n=r_n, t_n=t_n, r=r, t=t,
        R=R, T=T, A=A, B=B, C=C, D=D, E=E, F=F,
        z1=2 * kk * n.real * d, z2=2 * kk * n.imag * d,
    )


def permittivity_imaginary_axis(med: MediumSpec, xi):
    """
    ``eps(i xi) = 1 + omega_p^2/(omega0^2 + xi^2 + xi gamma~(xi))``, real.

    Uses the Laplace transform at real positive argument, so no analytic
    continuation is involved.
    """
    x, scalar = _as_positive(xi, "xi")
    if med.omega_p == 0:
        return _ret(np.ones(x.shape), scalar)
    gam = np.asarray(damping_laplace(med.env, x)).real
    return _ret(1.0 + med.omega_p ** 2 / (med.omega0 ** 2 + x * x + x * gam),
                scalar)


def refractive_index_imaginary_axis(med: MediumSpec, xi):
    """``n(i xi) = sqrt(eps(i xi)) >= 1``."""
    return np.sqrt(permittivity_imaginary_axis(med, xi))


def _alpha3_lorentzian(med, what):
    env = med.env
    if not (env.cutoff is Cutoff.LORENTZIAN and env.alpha == 3.0):
        raise DomainError(f"{what} requires the alpha = 3 Lorentzian bath")
    if med.omega0 <= 0:
        raise DomainError(f"{what} requires omega0 > 0")


def cubic_roots_alpha3(med: MediumSpec):
    """
    Roots of ``L w0^2 - i w0^2 w - (2 g0 + L) w^2 + i w^3`` in units of w0.

    With ``x = -i y`` the cubic becomes the real polynomial
    ``-w0 y^3 + (2 g0 + L) y^2 - w0 y + L``, so one root is purely
    imaginary and the other two satisfy ``x3 = -conj(x2)`` whenever the
    real cubic has a complex pair. Roots are Newton-polished.

    Returns
    -------
    (x1, x2, x3) : complex
        ``x1`` purely imaginary, ``Re x2 > 0``. If all three roots are
        imaginary they are returned in order of decreasing imaginary part.

    Raises
    ------
    RootPolishError
        If the relative residual exceeds 1e-12 after polishing.
    """
    _alpha3_lorentzian(med, "cubic_roots_alpha3")
    w0, g0, lam = med.omega0, med.env.gamma0, med.env.lambda_cut
    coef = np.array([-w0, 2 * g0 + lam, -w0, lam])
    ys = np.roots(coef)

    def polish(y):
        for _ in range(50):
            p = np.polyval(coef, y)
            dp = np.polyval(np.polyder(coef), y)
            if dp == 0:
                break
            step = p / dp
            y = y - step
            if abs(step) <= 1e-16 * abs(y):
                break
        return y

    real = np.sort([polish(y.real) for y in ys if y.imag == 0])
    cplx = [polish(complex(y)) for y in ys if y.imag > 0]
    if len(real) == 3:
        roots = [complex(-1j * y) for y in real]
    else:
        y2 = cplx[0]
        x2 = -1j * y2
        x2 = x2 if x2.real > 0 else -np.conj(x2)
        roots = [complex(-1j * real[0]), complex(x2), complex(-np.conj(x2))]
    cx = np.array([1j * w0, -(2 * g0 + lam), -1j * w0, lam])
    for x in roots:
        size = np.polyval(np.abs(cx), abs(x))
        if abs(np.polyval(cx, x)) > 1e-12 * size:
            raise RootPolishError(f"cubic root {x!r} failed to polish")
    return tuple(roots)


def _chi_analytic(med, tau):
    w0, wp, lam = med.omega0, med.omega_p, med.env.lambda_cut
    x = np.array(cubic_roots_alpha3(med))
    out = np.zeros(tau.shape)
    pos = tau >= 0
    if np.any(pos):
        acc = np.zeros(np.count_nonzero(pos), dtype=complex)
        for j in range(3):
            others = np.prod([x[j] - x[l] for l in range(3) if l != j])
            acc += (lam - 1j * w0 * x[j]) * np.exp(-1j * w0 * x[j] * tau[pos]) / others
        out[pos] = -(wp / w0) ** 2 * acc.real
    return out


def _chi_numeric(med, tau):
    """chi(tau) = (1/pi) int_0^inf [Re(eps-1) cos(w tau) + Im(eps-1) sin(w tau)] dw."""
    split = 4.0 * max(med.scale, 1e-300)
    re = lambda w: float((permittivity(med, w) - 1).real)
    im = lambda w: float((permittivity(med, w) - 1).imag)
    pts = [p for p in (med.omega0, med.omega_p) if 0 < p < split]
    opts = dict(limit=1000, epsabs=1e-12, epsrel=1e-11)
    out = np.empty(tau.shape)
    for i, t in enumerate(tau.ravel()):
        if t == 0:
            head = integrate.quad(re, 0, split, points=pts or None, **opts)[0]
            tail = integrate.quad(re, split, np.inf, **opts)[0]
        else:
            g = lambda w: re(w) * math.cos(w * t) + im(w) * math.sin(w * t)
            head = integrate.quad(g, 0, split, points=pts or None, **opts)[0]
            sgn = math.copysign(1.0, t)
            qawf = dict(wvar=abs(t), epsabs=1e-12, limlst=200)
            tail = (integrate.quad(re, split, np.inf, weight="cos", **qawf)[0]
                    + sgn * integrate.quad(im, split, np.inf, weight="sin",
                                           **qawf)[0])
        out.flat[i] = (head + tail) / math.pi
    return out


def susceptibility(med: MediumSpec, tau, method="analytic"):
    """
    Susceptibility kernel ``chi(tau) = (1/2pi) int (eps(w)-1) e^{-i w tau} dw``.

    Parameters
    ----------
    med : MediumSpec
    tau : float or array_like
    method : {"analytic", "numeric"}
        ``"analytic"`` sums the residues at the three roots of
        :func:`cubic_roots_alpha3` (alpha = 3 Lorentzian bath only) and
        returns exactly zero for ``tau < 0``. ``"numeric"`` evaluates the
        Fourier integral by Fourier-weighted quadrature on the half line and
        returns its raw value for every ``tau`` so that causality can be
        tested.
    """
    tt = np.asarray(tau, dtype=float)
    scalar = tt.ndim == 0
    tt = np.atleast_1d(tt)
    if method == "analytic":
        _alpha3_lorentzian(med, "analytic susceptibility")
        out = _chi_analytic(med, tt)
    elif method == "numeric":
        out = _chi_numeric(med, tt)
    else:
        raise ValueError(f"unknown method {method!r}")
    return out[0] if scalar else out


def kramers_kronig_real(med: MediumSpec, omega):
    """
    ``(2/pi) PV int_0^inf w' Im eps(w') / (w'^2 - w^2) dw'``.

    For a causal medium this reproduces ``Re eps(w) - 1``.
    """
    w, scalar = _as_positive(omega, "omega")
    im = lambda x: float(permittivity(med, x).imag)
    opts = dict(limit=1000, epsabs=1e-13, epsrel=1e-11)
    out = np.empty(w.shape)
    top = 50.0 * med.scale
    for i, wi in enumerate(w.ravel()):
        upper = max(top, 4.0 * wi)
        lo_pts = [p for p in (med.omega0,) if 0 < p < 0.5 * wi]
        head = integrate.quad(lambda x: x * im(x) / (x * x - wi * wi),
                              0.0, 0.5 * wi, points=lo_pts or None, **opts)[0]
        pv = integrate.quad(lambda x: x * im(x) / (x + wi), 0.5 * wi, upper,
                            weight="cauchy", wvar=wi, **opts)[0]
        tail = integrate.quad(lambda x: x * im(x) / (x * x - wi * wi),
                              upper, np.inf, **opts)[0]
        out.flat[i] = 2.0 / math.pi * (head + pv + tail)
    return _ret(out, scalar)
