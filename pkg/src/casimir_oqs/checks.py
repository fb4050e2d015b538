"""
Invariant suite run by ``casimir-oqs verify`` and the acceptance tests.

Every check measures one error against a tolerance for a given set of
medium, geometry and temperature. Checks that do not apply to the
configuration (for example real-axis checks for a lossless dielectric, or
the susceptibility residues without an alpha = 3 Lorentzian bath) are
reported as skipped with the reason, never as passed.

The module also provides :func:`transfer_matrix_coeffs`, an independent
transfer-matrix solution of the two-slab scattering problem that serves as
the oracle for :func:`casimir_oqs.optics.two_slab_coeffs`.
"""

from dataclasses import dataclass, replace
import math
from typing import Callable

import numpy as np

from . import environment as env_mod
from . import force as force_mod
from . import optics
from .environment import Cutoff, ThermalState
from .errors import CasimirError, DomainError
from .force import ForceConfig
from .quadrature import QuadratureSettings, integrate_semiinfinite, sum_truncated

__all__ = [
    "CheckResult",
    "CHECKS",
    "default_config",
    "run_checks",
    "transfer_matrix_coeffs",
]


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one check: ``passed`` iff ``measured <= tolerance``."""

    name: str
    passed: bool
    measured: float
    tolerance: float
    skipped: bool = False
    note: str = ""

    def line(self):
        if self.skipped:
            return f"SKIP  {self.name:<28s} {self.note}"
        tag = "PASS" if self.passed else "FAIL"
        text = (f"{tag}  {self.name:<28s} measured {self.measured:.3e}"
                f"  tolerance {self.tolerance:.3e}")
        return text + (f"  ({self.note})" if self.note else "")


class _Skip(Exception):
    pass


@dataclass(frozen=True)
class _Check:
    name: str
    tolerance: float
    func: Callable
    doc: str


CHECKS: dict[str, _Check] = {}


def _check(name, tolerance):
    def deco(func):
        CHECKS[name] = _Check(name, tolerance, func, (func.__doc__ or "").strip())
        return func
    return deco


def default_config() -> ForceConfig:
    """Lossy ohmic slabs used when ``verify`` gets no configuration."""
    med = optics.MediumSpec(omega0=1.0, omega_p=2.0,
                            env=env_mod.EnvironmentSpec(alpha=1.0, gamma0=0.2))
    return ForceConfig(med, optics.Geometry(thickness=1.0, gap=1.0),
                       ThermalState(0.5))


def transfer_matrix_coeffs(med, geom, k):
    """
    Amplitudes ``R, A, ..., F, T`` from a transfer-matrix solution.

    Propagates ``(f, f')`` continuity from region V (pure ``e^{ikx}``)
    leftwards across the four interfaces at ``-a/2-d, -a/2, a/2, a/2+d``
    and normalizes the incident amplitude to one.
    """
    k = float(k)
    n = complex(optics.refractive_index(med, k))
    a, d = geom.gap, geom.thickness
    xs = [-a / 2 - d, -a / 2, a / 2, a / 2 + d]
    qs = [k, k * n, k, k * n, k]
    al, be = 1.0 + 0j, 0.0 + 0j
    coeffs = [(al, be)]
    for i in range(3, -1, -1):
        x, qr, ql = xs[i], qs[i + 1], qs[i]
        f0 = al * np.exp(1j * qr * x) + be * np.exp(-1j * qr * x)
        f1 = 1j * qr * (al * np.exp(1j * qr * x) - be * np.exp(-1j * qr * x))
        al = 0.5 * (f0 + f1 / (1j * ql)) * np.exp(-1j * ql * x)
        be = 0.5 * (f0 - f1 / (1j * ql)) * np.exp(1j * ql * x)
        coeffs.append((al, be))
    coeffs = coeffs[::-1]
    inc = coeffs[0][0]
    c = [(p / inc, q / inc) for p, q in coeffs]
    return dict(R=c[0][1], A=c[1][0], B=c[1][1], C=c[2][0], D=c[2][1],
                E=c[3][0], F=c[3][1], T=c[4][0])


# -- helpers -----------------------------------------------------------------

def _real_axis(cfg, semispace=False):
    try:
        force_mod.require_real_axis(cfg, semispace=semispace)
    except DomainError as exc:
        raise _Skip(str(exc)) from None


def _k_grid(cfg, count=200):
    """Log-spaced wavenumbers around every scale of the configuration."""
    scale = max(cfg.medium.scale, 1.0 / cfg.geometry.gap,
                cfg.thermal.temperature, 1e-3)
    k = np.geomspace(1e-3 * scale, 1e3 * scale, count)
    w0 = cfg.medium.omega0
    if cfg.medium.env.gamma0 == 0 and w0 > 0:
        k = k[np.abs(k - w0) > 1e-6 * w0]
    return k


def _rel(x, ref):
    x, ref = np.asarray(x), np.asarray(ref)
    return float(np.max(np.abs(x - ref) / np.maximum(np.abs(ref), 1e-300)))


def _causal_chi(cfg):
    if cfg.medium.omega0 == 0:
        raise _Skip("conductor: eps - 1 has a pole at omega = 0, chi does not decay")
    e = cfg.medium.env
    if e.cutoff is Cutoff.NONE and e.alpha != 1:
        raise _Skip("no causal response without a cutoff for alpha != 1")
    if e.cutoff is Cutoff.LORENTZIAN and e.alpha not in (1, 3):
        raise _Skip("Lorentzian cutoff needs alpha in {1, 3}")


def _alpha3_lorentzian(cfg):
    e = cfg.medium.env
    if not (e.alpha == 3 and e.cutoff is Cutoff.LORENTZIAN
            and cfg.medium.omega0 > 0 and cfg.medium.omega_p > 0):
        raise _Skip("needs an alpha = 3 Lorentzian bath with omega0, omega_p > 0")


def _regular_time_kernel(cfg):
    e = cfg.medium.env
    if e.cutoff is Cutoff.NONE:
        raise _Skip("kernel without a cutoff is a delta function")
    if e.cutoff is Cutoff.LORENTZIAN and e.alpha == 3:
        raise _Skip("alpha = 3 Lorentzian kernel is distributional at t = 0")
    if e.gamma0 == 0:
        raise _Skip("gamma0 = 0: kernels vanish")


# -- environment -------------------------------------------------------------

@_check("kernel_real_part", 1e-10)
def _kernel_real_part(cfg):
    """Re gamma(-ik) = pi J(k)/(m k) on a log grid."""
    e = cfg.medium.env
    k = _k_grid(cfg)
    g = env_mod.gamma_of_k(e, k)
    ref = math.pi * env_mod.spectral_density(e, k) / (e.mass * k)
    if e.gamma0 == 0:
        return float(np.max(np.abs(g)))
    return _rel(g.real, ref)


@_check("laplace_positive", 0.0)
def _laplace_positive(cfg):
    """damping_laplace is real and positive at real s > 0 (count of failures)."""
    e = cfg.medium.env
    if e.gamma0 == 0:
        raise _Skip("gamma0 = 0: kernel vanishes")
    s = _k_grid(cfg, 60)
    g = np.asarray(env_mod.damping_laplace(e, s + 0j))
    bad = (np.abs(g.imag) > 1e-12 * np.abs(g)) | ~(g.real > 0)
    return float(np.count_nonzero(bad))


@_check("dissipation_identity", 1e-4)
def _dissipation_identity(cfg):
    """Finite-difference d gamma/dt = -D/m, relative to max |D|/m."""
    _regular_time_kernel(cfg)
    e = cfg.medium.env
    t = np.linspace(0.05, 6.0, 25) / e.lambda_cut
    h = 1e-3 / e.lambda_cut
    fd = (env_mod.damping_kernel_time(e, t + h)
          - env_mod.damping_kernel_time(e, t - h)) / (2 * h)
    ref = -env_mod.dissipation_kernel(e, t) / e.mass
    return float(np.max(np.abs(fd - ref)) / np.max(np.abs(ref)))


@_check("alpha3_rational_form", 1e-12)
def _alpha3_rational(cfg):
    """Oscillator denominator equals the rational alpha = 3 Lorentzian form."""
    _alpha3_lorentzian(cfg)
    med = cfg.medium
    w0, g0, lam = med.omega0, med.env.gamma0, med.env.lambda_cut
    w = np.geomspace(1e-2, 1e2, 50) * w0
    den = w0 ** 2 - w * w - 1j * w * env_mod.gamma_of_k(med.env, w)
    rat = ((lam * w0 ** 2 - 1j * w0 ** 2 * w - (2 * g0 + lam) * w ** 2
            + 1j * w ** 3) / (lam - 1j * w))
    return _rel(den, rat)


# -- optics ------------------------------------------------------------------

@_check("index_branch", 0.0)
def _index_branch(cfg):
    """Im n >= 0 everywhere, > 0 wherever Im eps > 0 (count of violations)."""
    k = _k_grid(cfg)
    n = np.asarray(optics.refractive_index(cfg.medium, k))
    eps = np.asarray(optics.permittivity(cfg.medium, k))
    bad = (n.imag < 0) | ((eps.imag > 0) & (n.imag <= 0))
    return float(np.count_nonzero(bad))


@_check("kramers_kronig", 1e-2)
def _kramers_kronig(cfg):
    """L2 residual of Re eps - 1 against the Hilbert transform of Im eps."""
    med = cfg.medium
    if med.omega_p == 0 or med.env.gamma0 == 0:
        raise _Skip("needs a lossy medium")
    _causal_chi(cfg)
    w = np.linspace(0.05, 5.0, 60) * med.scale
    re = np.asarray(optics.permittivity(med, w)).real - 1
    kk = optics.kramers_kronig_real(med, w)
    return float(np.linalg.norm(kk - re) / np.linalg.norm(re))


@_check("transfer_matrix_oracle", 1e-10)
def _tmm(cfg):
    """Two-slab coefficients against the transfer-matrix oracle."""
    if cfg.medium.env.gamma0 == 0 and cfg.medium.omega0 > 0:
        raise _Skip("lossless dielectric: guided-mode poles on the real axis")
    k = _k_grid(cfg, 40)
    k = k[k < 200 * cfg.medium.scale]
    st = optics.two_slab_coeffs(cfg.medium, cfg.geometry, k)
    worst = 0.0
    for i, ki in enumerate(k):
        ref = transfer_matrix_coeffs(cfg.medium, cfg.geometry, ki)
        for key in "RABCDEFT":
            got = np.asarray(getattr(st, key))[i]
            worst = max(worst, abs(got - ref[key]) / max(abs(ref[key]), 1.0))
    return worst


@_check("lossless_unitarity", 1e-12)
def _unitarity(cfg):
    """gamma0 = 0: |r|^2 + |t|^2 = 1 and |R|^2 + |T|^2 = 1 where n^2 > 0."""
    med = cfg.medium
    if med.env.gamma0 > 0 or med.omega_p == 0:
        raise _Skip("needs a lossless medium")
    k = _k_grid(cfg)
    k = k[np.abs(k - med.omega0) > 1e-3 * max(med.omega0, 1e-300)]
    eps = np.asarray(optics.permittivity(med, k))
    k = k[eps.real > 0]
    r, t = optics.slab_coeffs(med, cfg.geometry.thickness, k)
    err = np.abs(np.abs(r) ** 2 + np.abs(t) ** 2 - 1)
    try:
        st = optics.two_slab_coeffs(med, cfg.geometry, k)
        err = np.maximum(err, np.abs(np.abs(st.R) ** 2 + np.abs(st.T) ** 2 - 1))
    except CasimirError:
        pass
    return float(np.max(err))


@_check("cubic_roots", 1e-12)
def _cubic_roots(cfg):
    """Roots in the lower half plane, x1 imaginary, x3 = -conj(x2)."""
    _alpha3_lorentzian(cfg)
    x1, x2, x3 = optics.cubic_roots_alpha3(cfg.medium)
    if max(x1.imag, x2.imag, x3.imag) >= 0:
        return math.inf
    return float(max(abs(x1.real), abs(x3 + np.conj(x2))) / abs(x2))


@_check("chi_causality", 1e-6)
def _chi_causality(cfg):
    """Numeric chi for tau < 0 relative to its peak; analytic chi(tau<=0) = 0."""
    med = cfg.medium
    if med.omega_p == 0 or med.env.gamma0 == 0:
        raise _Skip("needs a lossy medium")
    _causal_chi(cfg)
    w0 = max(med.omega0, med.omega_p)
    tau = np.linspace(-20.0, 20.0, 81) / w0
    chi = optics.susceptibility(med, tau, method="numeric")
    peak = np.max(np.abs(chi[tau > 0]))
    worst = float(np.max(np.abs(chi[tau < 0])) / peak)
    try:
        ana = optics.susceptibility(med, np.array([-1.0, -0.1, 0.0]) / w0)
        worst = max(worst, float(np.max(np.abs(ana))) / peak)
    except DomainError:
        pass
    return worst


@_check("chi_dual_route", 1e-4)
def _chi_dual(cfg):
    """Analytic (residue) vs numeric chi on [0, 20/omega0], peak-relative."""
    _alpha3_lorentzian(cfg)
    med = cfg.medium
    tau = np.linspace(0.0, 20.0, 81) / med.omega0
    a = optics.susceptibility(med, tau, method="analytic")
    n = optics.susceptibility(med, tau, method="numeric")
    return float(np.max(np.abs(a - n)) / np.max(np.abs(a)))


# -- force integrands --------------------------------------------------------

@_check("sum_rule_region_I", 1e-10)
def _sum_rule_I(cfg):
    """vacuum_I + langevin_I = (1/2pi) k coth(k/2T) at 200 k."""
    _real_axis(cfg)
    k = _k_grid(cfg)
    lhs = force_mod.vacuum_integrand_I(cfg, k) + force_mod.langevin_integrand_I(cfg, k)
    return _rel(lhs, force_mod.energy_density_integrand_I(cfg, k))


@_check("sum_rule_region_III", 1e-10)
def _sum_rule_III(cfg):
    """vacuum_III + langevin_III = free density times (1-|r|^4)/|Delta|^2."""
    _real_axis(cfg)
    k = _k_grid(cfg)
    lhs = (force_mod.vacuum_integrand_III(cfg, k)
           + force_mod.langevin_integrand_III(cfg, k))
    return _rel(lhs, force_mod.energy_density_integrand_III(cfg, k))


@_check("closed_form_identity", 1e-10)
def _closed_identity(cfg):
    """Difference form and Re[r^2 P/(1 - r^2 P)] form agree pointwise."""
    _real_axis(cfg)
    k = _k_grid(cfg)
    a = force_mod.closed_integrand(cfg, k)
    b = force_mod.closed_integrand_difference_form(cfg, k)
    scale = force_mod.energy_density_integrand_I(cfg, k)
    return float(np.max(np.abs(a - b) / scale))


@_check("langevin_positive", 0.0)
def _langevin_positive(cfg):
    """Both Langevin integrands are >= 0 (count of negative samples)."""
    _real_axis(cfg)
    k = _k_grid(cfg)
    lI = force_mod.langevin_integrand_I(cfg, k)
    lIII = force_mod.langevin_integrand_III(cfg, k)
    return float(np.count_nonzero(lI < 0) + np.count_nonzero(lIII < 0))


@_check("langevin_vanishing", 0.0)
def _langevin_vanishing(cfg):
    """gamma0 = 0: Langevin integrands are identically zero."""
    if cfg.medium.env.gamma0 > 0:
        raise _Skip("needs gamma0 = 0")
    k = _k_grid(cfg)
    try:
        lI = force_mod.langevin_integrand_I(cfg, k)
        lIII = force_mod.langevin_integrand_III(cfg, k)
    except CasimirError as exc:
        raise _Skip(str(exc)) from None
    return float(np.max(np.abs(lI)) + np.max(np.abs(lIII)))


# -- force routes ------------------------------------------------------------

@_check("central_identity", 1e-6)
def _central(cfg):
    """Decomposed vs closed real-axis force, relative."""
    _real_axis(cfg)
    a = force_mod.force_decomposed(cfg)
    b = force_mod.force_closed(cfg)
    if b.total == 0:
        return abs(a.total)
    return abs(a.total - b.total) / abs(b.total)


@_check("route_consistency", 1e-4)
def _route_consistency(cfg):
    """Matsubara vs real-axis semispace force (T > 0, gamma0 > 0), relative."""
    if cfg.thermal.temperature == 0:
        raise _Skip("needs T > 0")
    _real_axis(cfg, semispace=True)
    a = force_mod.force_matsubara(cfg)
    b = force_mod.force_semispace_real(cfg)
    if b.total == 0:
        return abs(a.total)
    return abs(a.total - b.total) / abs(b.total)


@_check("matsubara_T0_limit", 0.0)
def _t0_limit(cfg):
    """Matsubara at T a = 0.1, 0.05, 0.025 approaches the T = 0 integral monotonically.

    Measured value: number of non-decreasing steps in |F_T - F_0|.
    """
    base = replace(cfg, thermal=ThermalState(0.0))
    f0 = force_mod.force_lifshitz_T0(base).total
    a = cfg.geometry.gap
    diffs = [abs(force_mod.force_matsubara(
        replace(cfg, thermal=ThermalState(t / a))).total - f0)
        for t in (0.1, 0.05, 0.025)]
    return float(sum(d2 >= d1 for d1, d2 in zip(diffs, diffs[1:])))


@_check("lifshitz_decay_rate", 0.05)
def _decay_rate(cfg):
    """Slope of log of the T = 0 imaginary-axis integrand vs -2a, relative."""
    if cfg.medium.omega_p == 0:
        raise _Skip("omega_p = 0: integrand vanishes")
    a = cfg.geometry.gap
    s0 = 30 * max(cfg.medium.scale, 1.0 / a)
    rate = force_mod.lifshitz_decay_rate(cfg, s0, 2 * s0)
    return abs(rate + 2 * a) / (2 * a)


@_check("asymptotic_forms", 1e-2)
def _asymptotic(cfg):
    """Relative error of n1, n2 and r asymptotic forms at k = 100 scales."""
    if cfg.medium.omega_p == 0:
        raise _Skip("omega_p = 0: nothing to expand")
    k = 100 * force_mod.asymptotic_scale(cfg)
    diag = force_mod.asymptotic_check(cfg, k)
    errs = [diag.n1_rel_error, diag.r_rel_error]
    if cfg.medium.env.gamma0 > 0:
        errs.append(diag.n2_rel_error)
    return float(max(errs))


@_check("tail_slope", 0.1)
def _tail_slope(cfg):
    """|log-log slope + 3| of the T = 0 closed integrand over [100, 1000] scales."""
    base = replace(cfg, thermal=ThermalState(0.0))
    if cfg.medium.omega_p == 0:
        raise _Skip("omega_p = 0: integrand vanishes")
    s = force_mod.asymptotic_scale(cfg)
    slope = force_mod.closed_integrand_decay_slope(base, 100 * s, 1000 * s)
    return abs(slope + 3)


@_check("gap_monotonic", 0.0)
def _gap_monotonic(cfg):
    """|F| decreases over a doubling sequence of gaps (count of violations).

    Points whose force is not resolved (``|F| <= 10 abs_error``) are left
    out: at ``T a >~ 3`` the force is below the quadrature floor.
    """
    gaps = cfg.geometry.gap * 2.0 ** np.arange(-1, 5)
    vals = []
    for a in gaps:
        c = replace(cfg, geometry=optics.Geometry(cfg.geometry.thickness, float(a)))
        try:
            force_mod.require_real_axis(c)
            res = force_mod.force_closed(c)
        except DomainError:
            res = (force_mod.force_matsubara(c) if c.thermal.temperature > 0
                   else force_mod.force_lifshitz_T0(c))
        if abs(res.total) > 10 * res.abs_error_estimate:
            vals.append(abs(res.total))
    if len(vals) < 2:
        raise _Skip("fewer than two resolved gaps")
    return float(sum(v2 >= v1 for v1, v2 in zip(vals, vals[1:])))


@_check("drude_plasma_continuity", 1e-3)
def _drude_plasma(cfg):
    """Matsubara force as gamma0 -> 0 at omega0 = 0: extrapolated limit vs plasma."""
    med = cfg.medium
    if med.omega0 != 0 or med.omega_p == 0:
        raise _Skip("needs omega0 = 0 and omega_p > 0")
    if cfg.thermal.temperature == 0:
        raise _Skip("needs T > 0")

    def f(g0):
        e = replace(med.env, gamma0=g0)
        return force_mod.force_matsubara(replace(cfg, medium=replace(med, env=e))).total

    gs = np.array([1e-1, 1e-2, 1e-3]) * med.omega_p
    fs = np.array([f(g) for g in gs])
    limit = np.polyval(np.polyfit(gs, fs, 2), 0.0)
    f0 = f(0.0)
    return abs(limit - f0) / abs(f0)


@_check("determinism", 0.0)
def _determinism(cfg):
    """Two identical force runs give bit-identical totals (0 or 1)."""
    try:
        force_mod.require_real_axis(cfg)
        run = force_mod.force_closed
    except DomainError:
        run = (force_mod.force_matsubara if cfg.thermal.temperature > 0
               else force_mod.force_lifshitz_T0)
    return float(run(cfg).total != run(cfg).total)


# -- quadrature --------------------------------------------------------------

def _oracle_integrals():
    s = QuadratureSettings()
    yield "exp", integrate_semiinfinite(lambda k: np.exp(-k), s), 1.0
    osc = s.with_hints(oscillation_period_hint=math.pi / 10)
    yield ("k exp cos", integrate_semiinfinite(
        lambda k: k * np.exp(-k) * np.cos(10 * k), osc), -99.0 / 10201.0)
    alg = s.with_hints(tail_exponent_hint=3.0)
    yield "algebraic", integrate_semiinfinite(lambda k: (1 + k) ** -3.0, alg), 0.5
    yield "geometric", sum_truncated(lambda j: 2.0 ** -j, s), 1.0
    x = math.exp(-0.5)
    yield "j x^j", sum_truncated(lambda j: j * x ** j, s), x / (1 - x) ** 2


@_check("quadrature_honesty", 10.0)
def _quadrature_honesty(cfg):
    """Largest |value - exact| / abs_error over the closed-form oracle set."""
    worst = 0.0
    for _, res, exact in _oracle_integrals():
        err = abs(res.value - exact)
        worst = max(worst, err / res.abs_error if res.abs_error > 0 else
                    (0.0 if err == 0 else math.inf))
    return worst


# -- driver ------------------------------------------------------------------

def run_checks(cfg: ForceConfig | None = None, tolerances: dict | None = None,
               names=None) -> list[CheckResult]:
    """
    Run the invariant suite.

    Parameters
    ----------
    cfg : ForceConfig, optional
        Configuration to verify; :func:`default_config` if omitted.
    tolerances : dict, optional
        Per-check tolerance overrides by check name.
    names : iterable of str, optional
        Subset of checks to run, in registry order otherwise.

    Returns
    -------
    list of CheckResult
        A check that raises a library error is reported as failed with the
        error message.
    """
    cfg = cfg or default_config()
    tolerances = dict(tolerances or {})
    unknown = set(tolerances) - set(CHECKS)
    if unknown:
        raise KeyError(f"unknown check {sorted(unknown)[0]!r}")
    selected = list(CHECKS) if names is None else list(names)
    out = []
    for name in selected:
        chk = CHECKS[name]
        tol = float(tolerances.get(name, chk.tolerance))
        try:
            measured = float(chk.func(cfg))
        except _Skip as exc:
            out.append(CheckResult(name, True, math.nan, tol, True, str(exc)))
            continue
        except CasimirError as exc:
            out.append(CheckResult(name, False, math.nan, tol, False,
                                   f"{type(exc).__name__}: {exc}"))
            continue
        out.append(CheckResult(name, bool(measured <= tol), measured, tol))
    return out
