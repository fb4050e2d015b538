"""
Casimir force between two absorbing slabs.

The force is the difference between the field pressure in the outer
regions (I and V) and in the gap (III). It is computed by independent
routes that must agree:

* ``force_decomposed``: vacuum (scattered zero-point and thermal modes) plus
  Langevin (field radiated by the bath noise inside the slabs) pressures,
  integrated separately over real wavenumbers;
* ``force_closed``: the combined real-axis integral
  ``Re int k coth(k/2T) r^2 e^{2ika}/(1 - r^2 e^{2ika})``;
* ``force_matsubara`` / ``force_lifshitz_T0`` / ``force_semispace_real``:
  thick-slab (semispace) limits on the imaginary axis and on the real axis.

Sign convention: the reported value is the force on the right slab along
``+x``, so attraction is negative on every route. The integrand functions
return the pressure densities in the orientation ``f_I - f_III`` and are
therefore positive where the field pushes the slabs together.

The Langevin integrands are evaluated from the bath-driven field solved in
each slab, in the form

    f_I^L   = (1/2pi) k coth(k/2T) (k/2) Im(n^2) (int_II + int_IV) |f_k|^2 dx
    f_III^L = (1/2pi) k coth(k/2T)  k    Im(n^2) (|C|^2+|D|^2)/|T|^2 int_IV |f_k|^2 dx

with ``f_k`` the mode function incident from the left. Both field integrals
are written with decaying exponentials only, so they stay finite for any
absorption.
"""

from dataclasses import dataclass, field
import enum
import math

import numpy as np

from .environment import ThermalState, gamma_of_k, thermal_weight
from .errors import DomainError, QuadratureError
from .optics import (
    Geometry,
    MediumSpec,
    _gap_solution,
    _slab_parts,
    permittivity_imaginary_axis,
    refractive_index,
    slab_coeffs,
)
from .quadrature import QuadratureSettings, integrate_semiinfinite, sum_truncated

__all__ = [
    "Route",
    "ForceConfig",
    "ForceResult",
    "AsymptoticDiagnostics",
    "vacuum_integrand",
    "vacuum_integrand_I",
    "vacuum_integrand_III",
    "langevin_integrand_I",
    "langevin_integrand_III",
    "closed_integrand",
    "closed_integrand_difference_form",
    "energy_density_integrand_I",
    "energy_density_integrand_III",
    "semispace_integrand",
    "lifshitz_integrand",
    "matsubara_term",
    "force_decomposed",
    "force_closed",
    "force_semispace_real",
    "force_matsubara",
    "force_lifshitz_T0",
    "asymptotic_scale",
    "asymptotic_check",
    "closed_integrand_decay_slope",
    "lifshitz_decay_rate",
    "require_real_axis",
]

_INV_2PI = 1.0 / (2.0 * math.pi)
# Largest omega_p*d of a lossless plasma slab accepted on the real axis.
_MAX_TUNNELING = 6.0


class Route(str, enum.Enum):
    DECOMPOSED = "decomposed"
    CLOSED = "closed"
    MATSUBARA = "matsubara"
    LIFSHITZ_T0 = "lifshitz_t0"
    SEMISPACE_REAL = "semispace_real"


@dataclass(frozen=True)
class ForceConfig:
    """Everything a force route needs."""

    medium: MediumSpec
    geometry: Geometry
    thermal: ThermalState = field(default_factory=ThermalState)
    quad: QuadratureSettings = field(default_factory=QuadratureSettings)


@dataclass(frozen=True)
class ForceResult:
    """
    Force per unit area on the right slab (negative means attraction).

    ``vacuum_part`` and ``langevin_part`` are only resolved by the
    decomposed route and are NaN otherwise.
    """

    total: float
    vacuum_part: float
    langevin_part: float
    abs_error_estimate: float
    route: Route
    evaluations: int
    converged: bool = True


def require_real_axis(cfg: ForceConfig, semispace=False):
    """
    Refuse real-axis integration where the integrand has poles on the axis.

    Lossless dielectrics (``gamma0 = 0``, ``omega0 > 0``) have a permittivity
    pole at ``k = omega0`` and, for slabs, guided-mode zeros. The lossless
    semispace has gap resonances for any ``omega0``. Lossless plasma slabs
    leak only by tunneling, ``1 - |r|^2 ~ exp(-2 omega_p d)``, so their gap
    resonances become too narrow to resolve once ``omega_p d`` exceeds a
    few units.
    """
    med = cfg.medium
    if med.omega_p == 0 or med.env.gamma0 > 0:
        return
    if med.omega0 > 0:
        raise DomainError("gamma0 = 0 with omega0 > 0 has real-axis poles: "
                          "requires Matsubara route")
    if semispace:
        raise DomainError("lossless semispace has real-axis resonances: "
                          "requires Matsubara route")
    tunnel = med.omega_p * cfg.geometry.thickness
    if tunnel > _MAX_TUNNELING:
        raise DomainError(f"lossless plasma with omega_p*d = {tunnel:g} > "
                          f"{_MAX_TUNNELING:g} has unresolvably narrow gap "
                          "resonances: requires Matsubara route")


def _weight(cfg, k):
    return thermal_weight(k, cfg.thermal)


def _h(c, d):
    """``(exp(c d) - 1)/c`` with the ``c -> 0`` limit ``d``."""
    cd = c * d
    small = np.abs(cd) < 1e-8
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        out = np.expm1(cd) / c
    return np.where(small, d * (1 + 0.5 * cd), out)


def _slab_field_integral(alpha, beta, k, n, d):
    """``int_0^d |alpha e^{iknx} + beta e^{ikn(d-x)}|^2 dx``."""
    q = k * n
    L = _h(-2 * k * n.imag + 0j, d).real
    M = _h(2j * k * n.real, d)
    cross = alpha * np.conj(beta) * np.exp(-1j * np.conj(q) * d) * M
    return (np.abs(alpha) ** 2 + np.abs(beta) ** 2) * L + 2 * cross.real


def _face(med, geom, k):
    k = np.asarray(k, dtype=float)
    return _gap_solution(med, geom, k)


def vacuum_integrand_I(cfg: ForceConfig, k):
    """``(1/4pi) k coth(k/2T) (1 + |R|^2 + |T|^2)``."""
    g = _face(cfg.medium, cfg.geometry, k)
    refl = g.r + g.tau ** 2 * g.r * g.phase / g.delta
    trans = np.abs(g.tau) ** 2 / np.abs(g.delta)
    return 0.5 * _INV_2PI * _weight(cfg, g.k) * (1 + np.abs(refl) ** 2 + trans ** 2)


def vacuum_integrand_III(cfg: ForceConfig, k):
    """``(1/2pi) k coth(k/2T) (|C|^2 + |D|^2)``."""
    g = _face(cfg.medium, cfg.geometry, k)
    cd = np.abs(g.tau) ** 2 * (1 + np.abs(g.r) ** 2) / np.abs(g.delta) ** 2
    return _INV_2PI * _weight(cfg, g.k) * cd


def vacuum_integrand(cfg: ForceConfig, k):
    """
    ``(1/4pi) k coth(k/2T) [1 + |R|^2 + |T|^2 - 2(|C|^2 + |D|^2)]``.
    """
    g = _face(cfg.medium, cfg.geometry, k)
    return _vacuum(cfg, g)


def _single_slab_absorptance(g, d):
    """``1 - |r|^2 - |tau|^2`` of one slab, from the field inside it."""
    k, n, r, tau = g.k, g.n, g.r, g.tau
    with np.errstate(divide="ignore", invalid="ignore"):
        inv_n = 1.0 / n
        alpha = 0.5 * ((1 + r) + (1 - r) * inv_n)
        beta = 0.5 * tau * (1 - inv_n)
        out = k * g.eps.imag * _slab_field_integral(alpha, beta, k, n, d)
    return np.where(g.eps.imag == 0, 0.0, out)


def _vacuum(cfg, g):
    """
    Vacuum density with the bracket rearranged to avoid cancellation.

    With ``P = e^{2ika}`` and ``A`` the single-slab absorptance,
    ``|Delta|^2 [1 + |R|^2 + |T|^2 - 2(|C|^2 + |D|^2)]`` equals
    ``|r|^2 |1 + (tau^2 - r^2) P|^2 - 2|r|^2 - 2 Re(r^2 P) + (2|r|^2 + A)^2``,
    every term of which is at most of order ``|r|^2``. The direct form loses
    all digits at large k, where the bracket is ``O(k^-4)``.
    """
    r2 = np.abs(g.r) ** 2
    absorb = _single_slab_absorptance(g, cfg.geometry.thickness)
    num = (r2 * np.abs(1 + (g.tau ** 2 - g.r ** 2) * g.phase) ** 2
           - 2 * r2 - 2 * (g.r ** 2 * g.phase).real + (2 * r2 + absorb) ** 2)
    return 0.5 * _INV_2PI * _weight(cfg, g.k) * num / np.abs(g.delta) ** 2


def _langevin(cfg, g):
    """Region I and region III Langevin integrands from a gap solution."""
    d, a = cfg.geometry.thickness, cfg.geometry.gap
    k, n, r, tau = g.k, g.n, g.r, g.tau
    im_eps = g.eps.imag
    w = _weight(cfg, k)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        inv_n = 1.0 / n
        refl = r + tau ** 2 * r * g.phase / g.delta
        c1 = tau / g.delta
        b1 = r * g.phase * c1
        # slab II
        al2 = 0.5 * ((1 + refl) + (1 - refl) * inv_n)
        be2 = 0.5 * (c1 * (1 - inv_n) + b1 * (1 + inv_n))
        s2 = _slab_field_integral(al2, be2, k, n, d)
        # slab IV
        c2 = c1 * np.exp(1j * k * a)
        b2 = r * c2
        al4 = 0.5 * ((c2 + b2) + (c2 - b2) * inv_n)
        be4 = 0.5 * tau * c2 * (1 - inv_n)
        s4 = _slab_field_integral(al4, be4, k, n, d)
        lang_I = _INV_2PI * w * 0.5 * k * im_eps * (s2 + s4)
        # slab IV field for unit transmitted amplitude, times |tau|^2
        _, _, _, den = _slab_parts(n, k, d)
        e1 = np.exp(1j * k * n * d)
        su = _slab_field_integral(0.5 * (1 + inv_n), 0.5 * e1 * (1 - inv_n), k, n, d)
        weight = 16 * np.abs(n) ** 2 / np.abs(den) ** 2
        lang_III = (_INV_2PI * w * k * im_eps * (1 + np.abs(r) ** 2)
                    / np.abs(g.delta) ** 2 * weight * su)
    lossless = im_eps == 0
    return (np.where(lossless, 0.0, lang_I), np.where(lossless, 0.0, lang_III))


def langevin_integrand_I(cfg: ForceConfig, k):
    """Langevin pressure density in region I; zero when ``Im eps = 0``."""
    return _langevin(cfg, _face(cfg.medium, cfg.geometry, k))[0]


def langevin_integrand_III(cfg: ForceConfig, k):
    """Langevin pressure density in region III; zero when ``Im eps = 0``."""
    return _langevin(cfg, _face(cfg.medium, cfg.geometry, k))[1]


def closed_integrand(cfg: ForceConfig, k):
    """``-(1/pi) k coth(k/2T) Re[r^2 e^{2ika}/(1 - r^2 e^{2ika})]``."""
    g = _face(cfg.medium, cfg.geometry, k)
    return _closed(cfg, g)


def _closed(cfg, g):
    return -_weight(cfg, g.k) / math.pi * (g.r ** 2 * g.phase / g.delta).real


def closed_integrand_difference_form(cfg: ForceConfig, k):
    """``(1/2pi) k coth(k/2T) [1 - (1 - |r|^4)/|1 - r^2 e^{2ika}|^2]``."""
    g = _face(cfg.medium, cfg.geometry, k)
    ratio = (1 - np.abs(g.r) ** 4) / np.abs(g.delta) ** 2
    return _INV_2PI * _weight(cfg, g.k) * (1 - ratio)


def energy_density_integrand_I(cfg: ForceConfig, k):
    """Free thermal field: ``(1/2pi) k coth(k/2T)``."""
    kk = np.asarray(k, dtype=float)
    return _INV_2PI * _weight(cfg, kk)


def energy_density_integrand_III(cfg: ForceConfig, k):
    """Gap field: ``(1/2pi) k coth(k/2T) (1 - |r|^4)/|1 - r^2 e^{2ika}|^2``."""
    g = _face(cfg.medium, cfg.geometry, k)
    return (_INV_2PI * _weight(cfg, g.k) * (1 - np.abs(g.r) ** 4)
            / np.abs(g.delta) ** 2)


def semispace_integrand(cfg: ForceConfig, k):
    """Closed-form integrand with ``r`` replaced by ``r_n`` (thick slabs)."""
    kk = np.asarray(k, dtype=float)
    n = np.asarray(refractive_index(cfg.medium, kk), dtype=complex)
    rn = (n - 1) / (n + 1)
    q = rn * rn * np.exp(2j * kk * cfg.geometry.gap)
    return -_weight(cfg, kk) / math.pi * (q / (1 - q)).real


def _rn_imaginary(med, xi):
    n = np.sqrt(permittivity_imaginary_axis(med, xi))
    return (n - 1) / (n + 1)


def lifshitz_integrand(cfg: ForceConfig, s):
    """``(1/pi) s r_n^2(is) e^{-2sa}/(1 - r_n^2(is) e^{-2sa})``."""
    ss = np.asarray(s, dtype=float)
    rn = _rn_imaginary(cfg.medium, ss)
    q = rn * rn * np.exp(-2 * ss * cfg.geometry.gap)
    return ss * q / (1 - q) / math.pi


def matsubara_term(cfg: ForceConfig, j):
    """``2T xi_j r_n^2 e^{-2 xi_j a}/(1 - r_n^2 e^{-2 xi_j a})``, ``xi_j = 2 pi j T``."""
    T = cfg.thermal.temperature
    xi = 2 * math.pi * T * np.asarray(j, dtype=float)
    rn = _rn_imaginary(cfg.medium, xi)
    q = rn * rn * np.exp(-2 * xi * cfg.geometry.gap)
    return 2 * T * xi * q / (1 - q)


def _real_axis_settings(cfg, period):
    return cfg.quad.with_hints(oscillation_period_hint=period,
                               tail_exponent_hint=3.0,
                               tail_decay_rate_hint=None)


def _k_scale(cfg):
    med = cfg.medium
    return max(med.scale, cfg.thermal.temperature, 1.0 / cfg.geometry.gap)


def _integrate(f, settings, cfg, route, unpack):
    """Run the integrator and wrap failures with a partial ForceResult."""
    scale = _k_scale(cfg)
    try:
        res = integrate_semiinfinite(f, settings, scale=scale,
                                     initial_cutoff=50.0 * scale)
    except QuadratureError as exc:
        exc.partial = unpack(exc.value, exc.abs_error, exc.evaluations, False)
        raise
    return unpack(res.value, res.abs_error, res.evaluations, True)


def _zero(route):
    return ForceResult(0.0, 0.0 if route is Route.DECOMPOSED else math.nan,
                       0.0 if route is Route.DECOMPOSED else math.nan,
                       0.0, route, 0)


def force_decomposed(cfg: ForceConfig) -> ForceResult:
    """
    Force from separately integrated vacuum and Langevin pressures.

    ``total = vacuum_part + langevin_part``.

    Raises
    ------
    DomainError
        For lossless dielectric slabs (use :func:`force_matsubara`).
    QuadratureError
        On non-convergence; ``exc.partial`` holds a ``ForceResult`` with
        ``converged = False``.
    """
    require_real_axis(cfg)
    if cfg.medium.omega_p == 0:
        return _zero(Route.DECOMPOSED)
    a, d = cfg.geometry.gap, cfg.geometry.thickness

    def f(k):
        g = _face(cfg.medium, cfg.geometry, k)
        lang_I, lang_III = _langevin(cfg, g)
        vac, lang = _vacuum(cfg, g), lang_I - lang_III
        # Third row only drives the tolerance: the parts are refined until
        # their sum meets rel_tol, not just each part separately.
        return np.stack([vac, lang, vac + lang])

    def unpack(value, error, evals, ok):
        vac, lang = -float(value[0]), -float(value[1])
        return ForceResult(vac + lang, vac, lang, float(error[0] + error[1]),
                           Route.DECOMPOSED, evals, ok)

    settings = _real_axis_settings(cfg, math.pi / min(a, d))
    return _integrate(f, settings, cfg, Route.DECOMPOSED, unpack)


def force_closed(cfg: ForceConfig) -> ForceResult:
    """Force from the combined closed-form real-axis integrand."""
    require_real_axis(cfg)
    if cfg.medium.omega_p == 0:
        return _zero(Route.CLOSED)

    def unpack(value, error, evals, ok):
        return ForceResult(-float(value), math.nan, math.nan, float(error),
                           Route.CLOSED, evals, ok)

    settings = _real_axis_settings(cfg, math.pi / cfg.geometry.gap)
    return _integrate(lambda k: closed_integrand(cfg, k), settings, cfg,
                      Route.CLOSED, unpack)


def force_semispace_real(cfg: ForceConfig) -> ForceResult:
    """Thick-slab force from the real-axis integral (needs ``gamma0 > 0``)."""
    require_real_axis(cfg, semispace=True)
    if cfg.medium.omega_p == 0:
        return _zero(Route.SEMISPACE_REAL)

    def unpack(value, error, evals, ok):
        return ForceResult(-float(value), math.nan, math.nan, float(error),
                           Route.SEMISPACE_REAL, evals, ok)

    settings = _real_axis_settings(cfg, math.pi / cfg.geometry.gap)
    return _integrate(lambda k: semispace_integrand(cfg, k), settings, cfg,
                      Route.SEMISPACE_REAL, unpack)


def force_matsubara(cfg: ForceConfig) -> ForceResult:
    """
    Thick-slab force from the Matsubara sum over ``xi_j = 2 pi j T``, j >= 1.

    Raises
    ------
    DomainError
        At zero temperature (use :func:`force_lifshitz_T0`).
    """
    if cfg.thermal.temperature <= 0:
        raise DomainError("Matsubara route requires temperature > 0; "
                          "use force_lifshitz_T0 at T = 0")
    if cfg.medium.omega_p == 0:
        return _zero(Route.MATSUBARA)
    try:
        res = sum_truncated(lambda j: matsubara_term(cfg, j), cfg.quad)
    except QuadratureError as exc:
        exc.partial = ForceResult(-float(exc.value or 0.0), math.nan, math.nan,
                                  math.inf, Route.MATSUBARA, exc.evaluations,
                                  False)
        raise
    return ForceResult(-res.value, math.nan, math.nan, res.abs_error,
                       Route.MATSUBARA, res.terms_used)


def force_lifshitz_T0(cfg: ForceConfig) -> ForceResult:
    """Thick-slab force at ``T = 0`` from the imaginary-axis integral."""
    if cfg.thermal.temperature != 0:
        raise DomainError("force_lifshitz_T0 requires temperature = 0")
    if cfg.medium.omega_p == 0:
        return _zero(Route.LIFSHITZ_T0)
    a = cfg.geometry.gap
    settings = cfg.quad.with_hints(oscillation_period_hint=None,
                                   tail_exponent_hint=None,
                                   tail_decay_rate_hint=2.0 * a)

    def unpack(value, error, evals, ok):
        return ForceResult(-float(value), math.nan, math.nan, float(error),
                           Route.LIFSHITZ_T0, evals, ok)

    try:
        res = integrate_semiinfinite(lambda s: lifshitz_integrand(cfg, s),
                                     settings, scale=1.0 / a)
    except QuadratureError as exc:
        exc.partial = unpack(exc.value, exc.abs_error, exc.evaluations, False)
        raise
    return unpack(res.value, res.abs_error, res.evaluations, True)


@dataclass(frozen=True)
class AsymptoticDiagnostics:
    """
    Exact large-k quantities next to their leading asymptotic forms.

    ``n1_asymptotic = 1 - omega_p^2/(2k^2)``,
    ``n2_asymptotic = omega_p^2 gamma1(k)/(2k^3)``,
    ``r_asymptotic = omega_p^2/(4k^2) (1 - e^{2ikd})``, and the envelope
    ``k coth(k/2T) omega_p^4/(4 pi k^4)`` bounds the closed-form integrand
    to leading order. ``r_amplitude = omega_p^2/(2k^2)`` is the largest
    modulus of ``r_asymptotic`` over one period.
    """

    k: float
    n1: float
    n1_asymptotic: float
    n2: float
    n2_asymptotic: float
    r: complex
    r_asymptotic: complex
    r_amplitude: float
    integrand: float
    envelope: float

    @property
    def n1_rel_error(self):
        return abs(self.n1 - self.n1_asymptotic) / abs(self.n1 - 1)

    @property
    def n2_rel_error(self):
        if self.n2 == 0 and self.n2_asymptotic == 0:
            return 0.0
        return abs(self.n2 - self.n2_asymptotic) / abs(self.n2)

    @property
    def r_rel_error(self):
        """Error of ``r`` relative to its amplitude ``omega_p^2/(2k^2)``."""
        return abs(self.r - self.r_asymptotic) / self.r_amplitude


def asymptotic_scale(cfg: ForceConfig):
    """
    Wavenumber beyond which the large-k forms apply.

    Besides the medium frequencies this includes ``omega_p^2 d``: the phase
    of ``e^{2iknd}`` differs from ``e^{2ikd}`` by ``omega_p^2 d/k``.
    """
    med = cfg.medium
    return max(med.omega0, med.omega_p, med.env.gamma0,
               med.omega_p ** 2 * cfg.geometry.thickness)


def asymptotic_check(cfg: ForceConfig, k) -> AsymptoticDiagnostics:
    """Exact ``n``, ``r`` and integrand at ``k`` with their asymptotic forms."""
    med, d = cfg.medium, cfg.geometry.thickness
    k = float(k)
    wp2 = med.omega_p ** 2
    n = complex(refractive_index(med, k))
    r = complex(slab_coeffs(med, d, k)[0])
    gamma1 = float(np.real(gamma_of_k(med.env, k)))
    w = float(thermal_weight(k, cfg.thermal))
    return AsymptoticDiagnostics(
        k=k,
        n1=n.real,
        n1_asymptotic=1 - 0.5 * wp2 / k ** 2,
        n2=n.imag,
        n2_asymptotic=0.5 * wp2 * gamma1 / k ** 3,
        r=r,
        r_asymptotic=complex(0.25 * wp2 / k ** 2 * (1 - np.exp(2j * k * d))),
        integrand=float(closed_integrand(cfg, k)),
        r_amplitude=0.5 * wp2 / k ** 2,
        envelope=w * wp2 ** 2 / (4 * math.pi * k ** 4),
    )


def closed_integrand_decay_slope(cfg: ForceConfig, k_lo, k_hi, windows=12):
    """
    Log-log slope of the closed-form integrand's RMS over ``[k_lo, k_hi]``.

    The integrand oscillates through zero, so its magnitude is measured as
    the root mean square over windows spanning many periods of the slowest
    oscillation, centred on a geometric grid.
    """
    a, d = cfg.geometry.gap, cfg.geometry.thickness
    period = math.pi / min(a, d)
    width = 40 * period
    centers = np.geomspace(k_lo, k_hi, windows)
    rms = []
    for c in centers:
        kk = np.linspace(c, c + width, 4001)
        rms.append(math.sqrt(np.mean(closed_integrand(cfg, kk) ** 2)))
    centers = centers + 0.5 * width
    slope = np.polyfit(np.log(centers), np.log(rms), 1)[0]
    return float(slope)


def lifshitz_decay_rate(cfg: ForceConfig, s_lo, s_hi, points=64):
    """
    Fitted slope of ``log`` of the imaginary-axis integrand over ``[s_lo, s_hi]``.

    Evaluated in log form so the exponential does not underflow.
    """
    ss = np.linspace(s_lo, s_hi, points)
    a = cfg.geometry.gap
    rn = _rn_imaginary(cfg.medium, ss)
    log_f = (np.log(ss) + 2 * np.log(np.abs(rn)) - 2 * ss * a
             - np.log1p(-rn * rn * np.exp(-2 * ss * a)))
    return float(np.polyfit(ss, log_f, 1)[0])
