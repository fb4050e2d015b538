"""
Bath kernels of the quantum Brownian oscillators that make up the slabs.

The bath is characterized by its spectral density

    J(w) = (2/pi) m gamma0 w (w/L)**(alpha-1) f(w/L)

with one of three cutoff functions ``f``: none, Gaussian ``exp(-x**2)`` or
Lorentzian ``1/(1+x**2)``. From it follow the damping kernel ``gamma(t)``,
its Laplace transform ``gamma~(s)``, the boundary value ``gamma~(-ik)`` on
the imaginary axis, and the dissipation and noise kernels of the bath force.

Units are natural, hbar = k_B = c = 1.
"""

from dataclasses import dataclass
import enum
import math

import numpy as np
from scipy import integrate, special

from .errors import DomainError, QuadratureError, SingularityError

__all__ = [
    "Cutoff",
    "EnvironmentSpec",
    "ThermalState",
    "cutoff_function",
    "spectral_density",
    "damping_kernel_time",
    "damping_laplace",
    "gamma_of_k",
    "dissipation_kernel",
    "noise_kernel",
    "green_laplace",
    "thermal_weight",
]

_SQRT_PI = math.sqrt(math.pi)
# Beyond these |s|/L (Laplace) or k/L (boundary value) the large-argument
# series of the Gaussian-cutoff kernel is used.
_ASYMPTOTIC_ODD = 30.0
_ASYMPTOTIC_GENERAL = 8.0
_QUAD_OPTS = dict(epsabs=1e-13, epsrel=1e-11, limit=400)


class Cutoff(str, enum.Enum):
    """Cutoff family of the spectral density."""

    NONE = "none"
    GAUSSIAN = "gaussian"
    LORENTZIAN = "lorentzian"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        if value is None:
            return cls.NONE
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            names = ", ".join(c.value for c in cls)
            raise DomainError(f"unknown cutoff {value!r}; expected one of {names}")


@dataclass(frozen=True)
class EnvironmentSpec:
    """
    Parameters of the oscillator bath.

    Parameters
    ----------
    alpha : float
        Exponent of the low-frequency power law, ``0 < alpha < 4``. One for
        an ohmic bath, larger for supraohmic baths.
    gamma0 : float
        Relaxation constant, ``>= 0``.
    lambda_cut : float
        Cutoff frequency. Ignored for ``cutoff = NONE``.
    cutoff : Cutoff or str
        ``"none"``, ``"gaussian"`` or ``"lorentzian"``.
    mass : float
        Oscillator mass.

    Notes
    -----
    A Lorentzian cutoff needs an odd integer exponent (1 or 3), since only
    then is the Laplace transform a rational function with the required
    pole structure. Without a cutoff only ``alpha = 1`` gives a causal
    response.
    """

    alpha: float = 1.0
    gamma0: float = 0.0
    lambda_cut: float = 1.0
    cutoff: Cutoff = Cutoff.NONE
    mass: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "cutoff", Cutoff.parse(self.cutoff))
        for name in ("alpha", "gamma0", "lambda_cut", "mass"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise DomainError(f"{name} must be finite")
            object.__setattr__(self, name, value)
        if self.gamma0 < 0:
            raise DomainError("gamma0 must be >= 0")
        if self.mass <= 0:
            raise DomainError("mass must be > 0")
        if self.cutoff is not Cutoff.NONE and self.lambda_cut <= 0:
            raise DomainError("lambda_cut must be > 0 when a cutoff is used")
        if not 0 < self.alpha < 4:
            raise DomainError("alpha must lie in (0, 4)")
        if self.cutoff is Cutoff.LORENTZIAN and self.alpha not in (1.0, 3.0):
            raise DomainError("Lorentzian cutoff requires alpha in {1, 3}")
        if self.cutoff is Cutoff.NONE and self.alpha != 1.0:
            raise DomainError("cutoff 'none' is causal only for alpha = 1")

    @property
    def odd_integer_alpha(self):
        return self.alpha in (1.0, 3.0)


@dataclass(frozen=True)
class ThermalState:
    """Thermal equilibrium at ``temperature`` (``beta = 1/temperature``)."""

    temperature: float = 0.0

    def __post_init__(self):
        t = float(self.temperature)
        if not (math.isfinite(t) and t >= 0):
            raise DomainError("temperature must be finite and >= 0")
        object.__setattr__(self, "temperature", t)

    @property
    def beta(self):
        return math.inf if self.temperature == 0 else 1.0 / self.temperature


def _as_array(x, dtype=float):
    arr = np.asarray(x, dtype=dtype)
    return arr, arr.ndim == 0


def _ret(arr, scalar):
    return arr[()] if scalar else arr


def cutoff_function(cutoff, x):
    """Cutoff function ``f(x)`` of the given family."""
    cutoff = Cutoff.parse(cutoff)
    x = np.asarray(x, dtype=float)
    if cutoff is Cutoff.NONE:
        return np.ones_like(x)
    if cutoff is Cutoff.GAUSSIAN:
        return np.exp(-x * x)
    return 1.0 / (1.0 + x * x)


def spectral_density(env: EnvironmentSpec, omega):
    """
    Spectral density ``J(omega)``.

    Parameters
    ----------
    env : EnvironmentSpec
    omega : float or array_like
        Frequencies, ``>= 0``.

    Returns
    -------
    float or ndarray
    """
    w, scalar = _as_array(omega)
    if np.any(w < 0) or np.any(np.isnan(w)):
        raise DomainError("spectral density requires omega >= 0")
    pref = 2.0 / math.pi * env.mass * env.gamma0
    if env.cutoff is Cutoff.NONE:
        out = pref * w
    else:
        lam = env.lambda_cut
        x = w / lam
        # w * (w/L)**(alpha-1) written so that w = 0 gives 0 for any alpha.
        out = pref * lam * x ** env.alpha * cutoff_function(env.cutoff, x)
    return _ret(out, scalar)


def _require_regular_time_kernel(env, what):
    if env.cutoff is Cutoff.NONE:
        raise DomainError(f"{what} needs a cutoff; without one it is a "
                          "distribution, not a function")
    if env.cutoff is Cutoff.LORENTZIAN and env.alpha == 3.0:
        raise DomainError(f"{what} of the alpha = 3 Lorentzian bath contains "
                          "a delta-function part and is not a function")


def _fourier_half_line(g, omega, kind, end=None):
    """
    ``int_0^inf g(u) cos|sin(omega u) du`` for smooth decaying ``g``.

    ``end`` truncates the half line where ``g`` is negligible (Gaussian
    decay), which avoids the extrapolation of the infinite-range rule.
    """
    if omega == 0:
        if kind == "sin":
            return 0.0
        head = integrate.quad(g, 0.0, 1.0, **_QUAD_OPTS)[0]
        return head + integrate.quad(g, 1.0, np.inf if end is None else end,
                                     **_QUAD_OPTS)[0]
    trig = np.cos if kind == "cos" else np.sin
    w = abs(omega)
    sign = -1.0 if (kind == "sin" and omega < 0) else 1.0
    # Plain adaptive rule near the origin (possible endpoint singularity of
    # g), Fourier-weighted rule on the rest of the half line.
    split = max(1.0, math.pi / w)
    head = integrate.quad(lambda u: g(u) * trig(w * u), 0.0, split,
                          **_QUAD_OPTS)[0]
    # The Fourier rule needs an absolute tolerance on the scale of g.
    scale = integrate.quad(lambda u: abs(g(u)), 0.0, split, **_QUAD_OPTS)[0]
    tol = 1e-13 * max(scale, 1e-300)
    if end is not None:
        tail = (integrate.quad(g, split, end, weight=kind, wvar=w, epsabs=tol,
                               epsrel=1e-12, limit=500)[0] if end > split else 0.0)
    else:
        tail = integrate.quad(g, split, np.inf, weight=kind, wvar=w,
                              epsabs=tol, limlst=200)[0]
    out = sign * (head + tail)
    if not math.isfinite(out):
        raise QuadratureError(f"Fourier integral at omega = {omega} did not converge",
                              value=out, abs_error=math.inf, evaluations=0)
    return out


def _end(env):
    # exp(-u^2) underflows long before u = 40
    return 40.0 if env.cutoff is Cutoff.GAUSSIAN else None


def damping_kernel_time(env: EnvironmentSpec, t):
    """
    Damping kernel ``gamma(t) = (2/m) int J(w)/w cos(w t) dw``.

    Evaluated by quadrature in the dimensionless frequency ``u = w/L``.
    Even in ``t``.

    Raises
    ------
    DomainError
        For cutoff ``none`` and for the alpha = 3 Lorentzian bath, whose
        kernels are distributions.
    """
    _require_regular_time_kernel(env, "damping kernel")
    tt, scalar = _as_array(t)
    lam, a = env.lambda_cut, env.alpha
    f = lambda u: u ** (a - 1) * cutoff_function(env.cutoff, u)
    pref = 4.0 * env.gamma0 * lam / math.pi
    out = np.array([pref * _fourier_half_line(f, lam * abs(ti), "cos", _end(env))
                    for ti in tt.ravel()]).reshape(tt.shape)
    return _ret(out, scalar)


def dissipation_kernel(env: EnvironmentSpec, dt):
    """
    Dissipation kernel ``D(dt) = i <[F(t), F(t')]>``.

    Computed as ``D(dt) = 2 int J(w) sin(w dt) dw`` so that
    ``d gamma/dt = -D/m`` holds. Odd in ``dt``.
    """
    _require_regular_time_kernel(env, "dissipation kernel")
    tt, scalar = _as_array(dt)
    lam, a = env.lambda_cut, env.alpha
    f = lambda u: u ** a * cutoff_function(env.cutoff, u)
    pref = 4.0 * env.mass * env.gamma0 * lam ** 2 / math.pi
    out = np.array([pref * _fourier_half_line(f, lam * ti, "sin", _end(env))
                    for ti in tt.ravel()]).reshape(tt.shape)
    return _ret(out, scalar)


def noise_kernel(env: EnvironmentSpec, thermal: ThermalState, dt):
    """
    Noise kernel ``D1(dt) = <{F(t), F(t')}> = 2 int J coth(w/2T) cos(w dt) dw``.

    At zero temperature ``coth`` is replaced by one. Even in ``dt``.
    """
    _require_regular_time_kernel(env, "noise kernel")
    tt, scalar = _as_array(dt)
    lam, a, T = env.lambda_cut, env.alpha, thermal.temperature
    if env.cutoff is Cutoff.LORENTZIAN and np.any(tt == 0):
        raise DomainError("noise kernel of the Lorentzian bath diverges at dt = 0")

    def f(u):
        if T == 0:
            return u ** a * cutoff_function(env.cutoff, u)
        # u^a coth(x) = u^(a-1) (2T/L) x coth(x), finite at u = 0
        x = 0.5 * lam * u / T
        xcoth = 1.0 if x < 1e-8 else x / math.tanh(x)
        return u ** (a - 1) * cutoff_function(env.cutoff, u) * (2 * T / lam) * xcoth

    pref = 4.0 * env.mass * env.gamma0 * lam ** 2 / math.pi
    out = np.array([pref * _fourier_half_line(f, lam * abs(ti), "cos", _end(env))
                    for ti in tt.ravel()]).reshape(tt.shape)
    return _ret(out, scalar)


def _gaussian_series(alpha, sigma2, nmax=60):
    """
    Large-argument series of ``I(sigma) = int u**(a-1) e^{-u^2}/(sigma^2+u^2)``.

    ``I ~ sum_j (-1)**j Gamma(a/2 + j) / (2 sigma**(2j+2))``, truncated at
    the smallest term.
    """
    inv = 1.0 / sigma2
    term = 0.5 * math.gamma(alpha / 2) * inv
    total = np.zeros_like(inv) + term
    b = alpha / 2
    for j in range(1, nmax):
        nxt = term * (-(b + j - 1)) * inv
        if np.all(np.abs(nxt) < 1e-17 * np.abs(total)):
            break
        term = nxt
        total = total + term
    return total


def _gaussian_laplace(env, s):
    """Laplace transform for the Gaussian cutoff at complex ``s``, Re s > 0."""
    sigma = s / env.lambda_cut
    g0, a = env.gamma0, env.alpha
    big = np.abs(sigma) > (_ASYMPTOTIC_ODD if env.odd_integer_alpha
                           else _ASYMPTOTIC_GENERAL)
    out = np.empty(sigma.shape, dtype=complex)
    if np.any(big):
        sg = sigma[big]
        out[big] = 4 * g0 * sg / math.pi * _gaussian_series(a, sg * sg)
    small = ~big
    if np.any(small):
        sg = sigma[small]
        if a == 1.0:
            out[small] = 2 * g0 * special.wofz(1j * sg)
        elif a == 3.0:
            out[small] = 2 * g0 * (sg / _SQRT_PI - sg * sg * special.wofz(1j * sg))
        else:
            out[small] = [4 * g0 * z / math.pi * _gaussian_moment_quad(a, z)
                          for z in sg]
    return out


def _gaussian_moment_quad(alpha, sigma):
    """``int_0^inf u**(a-1) e^{-u^2}/(sigma^2+u^2) du`` by quadrature."""
    s2 = complex(sigma) ** 2

    def part(fn):
        g = lambda u: fn(u ** (alpha - 1) * math.exp(-u * u) / (s2 + u * u))
        return (integrate.quad(g, 0.0, 1.0, **_QUAD_OPTS)[0]
                + integrate.quad(g, 1.0, np.inf, **_QUAD_OPTS)[0])

    return complex(part(lambda z: z.real), part(lambda z: z.imag))


def damping_laplace(env: EnvironmentSpec, s):
    """
    Laplace transform ``gamma~(s) = (2/m) int J(w)/w s/(s^2+w^2) dw``.

    Parameters
    ----------
    env : EnvironmentSpec
    s : complex or array_like
        ``Re s > 0``.

    Returns
    -------
    complex or ndarray
        Closed forms for every family except the Gaussian cutoff with a
        non-odd exponent, which uses adaptive quadrature. For the Gaussian
        cutoff with alpha in {1, 3} the transform is expressed through the
        Faddeeva function (large ``|s|/L``: asymptotic series).
    """
    z, scalar = _as_array(s, complex)
    if np.any(~(z.real > 0)):
        raise DomainError("damping_laplace requires Re(s) > 0")
    g0 = env.gamma0
    if g0 == 0:
        out = np.zeros(z.shape, dtype=complex)
    elif env.cutoff is Cutoff.NONE:
        out = np.full(z.shape, 2.0 * g0, dtype=complex)
    elif env.cutoff is Cutoff.LORENTZIAN:
        lam = env.lambda_cut
        out = (2 * g0 * lam / (lam + z) if env.alpha == 1.0
               else 2 * g0 * z / (z + lam))
    else:
        out = _gaussian_laplace(env, z)
    return _ret(out, scalar)


def _gaussian_imag_quadrature(alpha, x):
    """
    ``-(4x/pi) PV int_0^inf u**(a-1) e^{-u^2}/(u^2-x^2) du`` for ``x > 0``.

    Imaginary part of ``gamma~(-ik)/gamma0`` for the Gaussian cutoff at
    ``x = k/L``, from the principal-value transform of its real part.
    """
    g = lambda u: u ** (alpha - 1) * math.exp(-u * u)
    upper = x + 10.0
    head = integrate.quad(lambda u: g(u) / (u * u - x * x), 0.0, 0.5 * x,
                          **_QUAD_OPTS)[0]
    pv = integrate.quad(lambda u: g(u) / (u + x), 0.5 * x, upper,
                        weight="cauchy", wvar=x, epsabs=1e-14, epsrel=1e-12,
                        limit=400)[0]
    return -4.0 * x / math.pi * (head + pv)


def _gaussian_imag(alpha, x):
    """Imaginary part of ``gamma~(-ik)/gamma0`` for the Gaussian cutoff."""
    out = np.empty_like(x)
    odd = alpha in (1.0, 3.0)
    big = x > (_ASYMPTOTIC_ODD if odd else _ASYMPTOTIC_GENERAL)
    if np.any(big):
        xb = x[big]
        # sigma = -ix: I(sigma) = -sum Gamma(a/2+j)/(2 x^(2j+2)), real.
        out[big] = 4.0 * xb / math.pi * -_gaussian_series(alpha, -xb * xb)
    small = ~big
    if np.any(small):
        xs = x[small]
        if alpha == 1.0:
            out[small] = 2.0 * special.wofz(xs).imag
        elif alpha == 3.0:
            out[small] = 2.0 * (xs * xs * special.wofz(xs).imag - xs / _SQRT_PI)
        else:
            out[small] = [_gaussian_imag_quadrature(alpha, xi) for xi in xs]
    return out


def gamma_of_k(env: EnvironmentSpec, k):
    """
    Boundary value ``gamma~(-ik) = lim_{eps->0+} gamma~(eps - ik)``.

    Parameters
    ----------
    env : EnvironmentSpec
    k : float or array_like
        Wavenumbers (equal to frequencies), ``k > 0``.

    Returns
    -------
    complex or ndarray
        ``gamma1(k) + i gamma2(k)``. The real part is always evaluated as
        ``pi J(k)/(m k)``.
    """
    kk, scalar = _as_array(k)
    if np.any(~(kk > 0)):
        raise DomainError("gamma_of_k requires k > 0")
    g0 = env.gamma0
    if g0 == 0:
        return _ret(np.zeros(kk.shape, dtype=complex), scalar)
    if env.cutoff is Cutoff.NONE:
        return _ret(np.full(kk.shape, 2.0 * g0, dtype=complex), scalar)
    lam = env.lambda_cut
    x = kk / lam
    real = 2.0 * g0 * x ** (env.alpha - 1) * cutoff_function(env.cutoff, x)
    if env.cutoff is Cutoff.LORENTZIAN:
        # 2g L/(L - ik) and 2g (-ik)/(L - ik).
        imag = 2.0 * g0 * x / (1.0 + x * x)
        if env.alpha == 3.0:
            imag = -imag
    else:
        imag = g0 * _gaussian_imag(env.alpha, x)
    return _ret(real + 1j * imag, scalar)


def green_laplace(env: EnvironmentSpec, omega0, z):
    """
    Laplace-domain Green functions of the damped oscillator.

    ``G2(z) = 1/(z^2 + omega0^2 + z gamma~(z))`` and ``G1(z) = z G2(z)``.

    Parameters
    ----------
    env : EnvironmentSpec
    omega0 : float
        Oscillator frequency.
    z : complex or array_like
        ``Re z > 0``, or a point ``-ik`` (``k > 0``) of the imaginary axis,
        where the boundary value of ``gamma~`` is used. Points ``+ik`` use
        its complex conjugate.

    Returns
    -------
    (G1, G2)

    Raises
    ------
    SingularityError
        If ``|z^2 + omega0^2 + z gamma~(z)| < 1e-14``.
    """
    zz, scalar = _as_array(z, complex)
    gam = np.empty(zz.shape, dtype=complex)
    right = zz.real > 0
    axis_lo = (zz.real == 0) & (zz.imag < 0)
    axis_hi = (zz.real == 0) & (zz.imag > 0)
    if np.any(~(right | axis_lo | axis_hi)):
        raise DomainError("green_laplace requires Re z > 0 or z = -ik, k > 0")
    if np.any(right):
        gam[right] = damping_laplace(env, zz[right])
    if np.any(axis_lo):
        gam[axis_lo] = gamma_of_k(env, -zz[axis_lo].imag)
    if np.any(axis_hi):
        gam[axis_hi] = np.conj(gamma_of_k(env, zz[axis_hi].imag))
    den = zz * zz + omega0 * omega0 + zz * gam
    if np.any(np.abs(den) < 1e-14):
        raise SingularityError("oscillator resonance on the evaluation contour")
    g2 = 1.0 / den
    return _ret(zz * g2, scalar), _ret(g2, scalar)


def thermal_weight(k, thermal: ThermalState):
    """
    ``k coth(k/2T)``, continuous at ``k = 0`` (value ``2T``); ``k`` at T = 0.
    """
    kk, scalar = _as_array(k)
    T = thermal.temperature
    if T == 0:
        return _ret(kk.copy(), scalar)
    x = 0.5 * kk / T
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(np.abs(x) < 1e-6, 2 * T * (1 + x * x / 3),
                       kk / np.tanh(x))
    return _ret(out, scalar)
