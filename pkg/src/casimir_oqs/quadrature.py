"""
Semi-infinite adaptive quadrature and truncated series summation.

The integrator works on vector-valued integrands evaluated in batches: all
nodes of all panels that need work in a refinement sweep are passed to the
integrand in a single call. Panels are Gauss-Kronrod (10, 21) rules and are
always kept sorted by their left edge, so the accumulation order, and hence
the result, is bit-reproducible for fixed inputs and settings.

The half-line is handled by integrating on ``[0, K]`` and doubling ``K``
until a model of the tail beyond ``K`` is below a tenth of the tolerance.
Tail models:

* algebraic and oscillating (tail exponent and period hints): the
  integrand is rolled off by a C-infinity taper on ``[K/2, K]``, and the
  non-oscillating ``c k**(-p)`` part it removes is added back, with ``c``
  fitted against a smooth bump on the same window. Oscillating terms only
  leave errors that fall faster than any power of ``K`` times the lowest
  frequency. The change between cutoffs ``K/2`` and ``K`` is the error;
* algebraic without oscillation: ``c`` fitted from the panel sums over
  ``[K/2, K]``, error from the discrepancy with ``[K/4, K/2]``;
* exponential, ``f ~ exp(-rate k)``: bound ``max|f(K)|/rate``;
* no hint: the last doubling interval ``|int_{K/2}^K f|`` is the error.
"""

from dataclasses import dataclass, replace
import math
from typing import Callable, NamedTuple

import numpy as np
from scipy.special import expit

from .errors import QuadratureError

__all__ = [
    "QuadratureSettings",
    "QuadratureResult",
    "SumResult",
    "integrate_semiinfinite",
    "sum_truncated",
]


# Gauss-Kronrod 21 point rule on [-1, 1] (QUADPACK qk21 constants).
_XGK = np.array([
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077208972112037,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
])
_WG = np.array([
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
])

# Full symmetric node set: -x_0..-x_9, 0, x_9..x_0.
_NODES = np.concatenate([-_XGK[:-1], [0.0], _XGK[-2::-1]])
_W_KRONROD = np.concatenate([_WGK[:-1], [_WGK[-1]], _WGK[-2::-1]])
_W_GAUSS = np.zeros(21)
_gauss_pos = np.arange(1, 10, 2)
_W_GAUSS[_gauss_pos] = _WG
_W_GAUSS[20 - _gauss_pos] = _WG

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class QuadratureSettings:
    """
    Tolerances and hints for :func:`integrate_semiinfinite` and
    :func:`sum_truncated`.

    Parameters
    ----------
    rel_tol, abs_tol : float
        Target accuracy ``max(abs_tol, rel_tol*|I|)`` per output component.
    max_panels : int
        Hard budget of Gauss-Kronrod panels.
    oscillation_period_hint : float, optional
        Longest oscillation period of the integrand. Base panels are half a
        period wide and the oscillation bound of the tail uses it.
    tail_exponent_hint : float, optional
        Power ``p > 1`` of an algebraic tail ``k**(-p)``.
    tail_decay_rate_hint : float, optional
        Rate of an exponential tail ``exp(-rate*k)``.
    """

    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    max_panels: int = 20000
    oscillation_period_hint: float | None = None
    tail_exponent_hint: float | None = None
    tail_decay_rate_hint: float | None = None

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if int(self.max_panels) != self.max_panels or self.max_panels < 16:
            raise ValueError("max_panels must be an integer >= 16")
        hint = self.oscillation_period_hint
        if hint is not None and not (hint > 0 and np.isfinite(hint)):
            raise ValueError("oscillation_period_hint must be positive")
        p = self.tail_exponent_hint
        if p is not None and not p > 1:
            raise ValueError("tail_exponent_hint must exceed 1")
        rate = self.tail_decay_rate_hint
        if rate is not None and not rate > 0:
            raise ValueError("tail_decay_rate_hint must be positive")

    def with_hints(self, **kwargs):
        """Copy with some fields replaced."""
        return replace(self, **kwargs)


class QuadratureResult(NamedTuple):
    value: float | np.ndarray
    abs_error: float | np.ndarray
    evaluations: int


class SumResult(NamedTuple):
    value: float
    abs_error: float
    terms_used: int


class _Panels:
    """Sorted collection of integrated panels for an m-component integrand."""

    def __init__(self, m):
        self.a = np.empty(0)
        self.b = np.empty(0)
        self.val = np.empty((m, 0))
        self.err = np.empty((m, 0))
        self.absval = np.empty((m, 0))

    def __len__(self):
        return self.a.size

    def add(self, a, b, val, err, absval):
        self.a = np.concatenate([self.a, a])
        self.b = np.concatenate([self.b, b])
        self.val = np.concatenate([self.val, val], axis=1)
        self.err = np.concatenate([self.err, err], axis=1)
        self.absval = np.concatenate([self.absval, absval], axis=1)
        order = np.argsort(self.a, kind="stable")
        self.a, self.b = self.a[order], self.b[order]
        self.val = self.val[:, order]
        self.err = self.err[:, order]
        self.absval = self.absval[:, order]

    def remove(self, mask):
        keep = ~mask
        self.a, self.b = self.a[keep], self.b[keep]
        self.val = self.val[:, keep]
        self.err = self.err[:, keep]
        self.absval = self.absval[:, keep]

    def window_sum(self, lo, hi):
        sel = (self.a >= lo) & (self.b <= hi)
        return self.val[:, sel].sum(axis=1)


class _Integrand:
    """Batched evaluation wrapper that normalizes shapes and counts calls."""

    def __init__(self, f):
        self.f = f
        self.evaluations = 0
        self.m = None
        self.scalar = None

    def __call__(self, k):
        out = np.asarray(self.f(k), dtype=float)
        self.evaluations += k.size
        if self.scalar is None:
            self.scalar = out.ndim == 1
        out = out.reshape(-1, k.size)
        if self.m is None:
            self.m = out.shape[0]
        if not np.all(np.isfinite(out)):
            bad = k[~np.all(np.isfinite(out), axis=0)]
            raise QuadratureError(f"integrand not finite at k = {bad[0]!r}",
                                  evaluations=self.evaluations)
        return out


def _gk_panels(fun, a, b):
    """Apply the 21 point rule on each ``[a_i, b_i]``."""
    center = 0.5 * (a + b)
    half = 0.5 * (b - a)
    k = center[:, None] + half[:, None] * _NODES[None, :]
    fk = fun(k.ravel()).reshape(-1, a.size, 21)
    resk = fk @ _W_KRONROD
    resg = fk @ _W_GAUSS
    mean = 0.5 * resk
    resasc = np.abs(fk - mean[..., None]) @ _W_KRONROD * half
    resabs = np.abs(fk) @ _W_KRONROD * half
    err = np.abs(resk - resg) * half
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = resasc * np.minimum(1.0, (200.0 * err / resasc) ** 1.5)
    err = np.where((resasc != 0) & (err != 0), scaled, err)
    err = np.maximum(err, 50 * _EPS * resabs)
    return resk * half, err, resabs


def _base_edges(lo, hi, width):
    """Panel edges covering ``[lo, hi]`` with panels of ``width`` or less."""
    n = max(1, int(math.ceil((hi - lo) / width - 1e-9)))
    return np.linspace(lo, hi, n + 1)


def integrate_semiinfinite(f: Callable, settings: QuadratureSettings | None = None,
                           *, scale: float = 1.0,
                           initial_cutoff: float | None = None) -> QuadratureResult:
    """
    Integrate ``f`` over ``(0, inf)``.

    Parameters
    ----------
    f : callable
        Maps a 1-D array of abscissae to an array of the same length, or to
        an array of shape ``(m, len(k))`` for an m-component integrand. All
        components share the panels.
    settings : QuadratureSettings, optional
        Tolerances and hints. Without a tail hint the contribution of the
        last doubling interval is taken as the tail error.
    scale : float
        Characteristic abscissa scale, used when no period hint is given.
    initial_cutoff : float, optional
        Lower bound for the first truncation point ``K``.

    Returns
    -------
    QuadratureResult
        ``(value, abs_error, evaluations)``. ``abs_error`` includes the tail
        error. Scalars for scalar integrands, arrays otherwise.

    Raises
    ------
    QuadratureError
        If the panel budget is exhausted. The best estimate is attached.

    Notes
    -----
    No node ever sits at ``k = 0``; Gauss-Kronrod nodes are interior.
    """
    s = settings or QuadratureSettings()
    if not scale > 0:
        raise ValueError("scale must be positive")
    fun = _Integrand(f)
    period = s.oscillation_period_hint
    width = 0.5 * period if period is not None else None

    if width is not None:
        # A multiple of four widths keeps K/2 and K/4 on panel edges.
        K = 64 * width
        if initial_cutoff is not None:
            K = max(K, 4 * width * math.ceil(initial_cutoff / (4 * width)))
        edges = _base_edges(0.0, K, width)
    else:
        K = 32.0 * scale
        if initial_cutoff is not None:
            K = max(K, float(initial_cutoff))
        edges = np.concatenate([[0.0], K * 2.0 ** -np.arange(5, -1, -1)])

    # Probe call fixes the number of components.
    val, err, absval = _gk_panels(fun, edges[:-1], edges[1:])
    panels = _Panels(fun.m)
    panels.add(edges[:-1], edges[1:], val, err, absval)

    def current(tail_val):
        return panels.val.sum(axis=1) + tail_val

    def fail(msg, tail_val, tail_err):
        value = current(tail_val)
        error = panels.err.sum(axis=1) + tail_err
        if fun.scalar:
            value, error = value[0], error[0]
        raise QuadratureError(msg, value=value, abs_error=error,
                              evaluations=fun.evaluations)

    tail_val = np.zeros(fun.m)
    tail_err = np.full(fun.m, np.inf)
    while True:
        # Adaptive refinement on [0, K].
        while True:
            total = current(tail_val)
            # Rounding floor shared by all components: a component that is a
            # combination of others inherits their rounding noise.
            floor = np.full(fun.m, 100 * _EPS * panels.absval.sum(axis=1).max())
            tol = np.maximum.reduce([np.full(fun.m, s.abs_tol),
                                     s.rel_tol * np.abs(total), floor])
            perr = panels.err.sum(axis=1)
            if np.all(perr <= 0.5 * tol):
                break
            thresh = 0.5 * tol / len(panels)
            # Panels already at their rounding floor cannot improve.
            bad = np.any((panels.err > thresh[:, None])
                         & (panels.err > 100 * _EPS * panels.absval), axis=0)
            # Do not split below resolvable width.
            mid = 0.5 * (panels.a + panels.b)
            bad &= (panels.b - panels.a) > 64 * _EPS * np.maximum(mid, 1e-300)
            if not np.any(bad):
                break
            if len(panels) + np.count_nonzero(bad) > s.max_panels:
                fail("panel budget exhausted during refinement",
                     tail_val, np.where(np.isfinite(tail_err), tail_err, 0.0))
            a, b = panels.a[bad], panels.b[bad]
            c = 0.5 * (a + b)
            panels.remove(bad)
            na = np.concatenate([a, c])
            nb = np.concatenate([c, b])
            v, e, av = _gk_panels(fun, na, nb)
            panels.add(na, nb, v, e, av)

        tail_val, tail_err = _tail(s, panels, K, width, fun)
        total = current(tail_val)
        floor = 1000 * _EPS * panels.absval.sum(axis=1).max()
        tol = np.maximum.reduce([np.full(fun.m, s.abs_tol),
                                 s.rel_tol * np.abs(total), np.full(fun.m, floor)])
        if np.all(tail_err <= 0.1 * tol):
            break
        new_edges = (_base_edges(K, 2 * K, width) if width is not None
                     else np.array([K, 2 * K]))
        if len(panels) + new_edges.size - 1 > s.max_panels:
            fail("panel budget exhausted while extending the cutoff",
                 tail_val, tail_err)
        v, e, av = _gk_panels(fun, new_edges[:-1], new_edges[1:])
        panels.add(new_edges[:-1], new_edges[1:], v, e, av)
        K *= 2

    value = current(tail_val)
    error = panels.err.sum(axis=1) + tail_err
    if fun.scalar:
        return QuadratureResult(float(value[0]), float(error[0]), fun.evaluations)
    return QuadratureResult(value, error, fun.evaluations)


def _taper(t):
    """C-infinity step from 1 at ``t <= 0`` to 0 at ``t >= 1``."""
    t = np.clip(t, 1e-300, 1 - 1e-16)
    with np.errstate(over="ignore"):
        return expit(1.0 / t - 1.0 / (1.0 - t))


def _smooth_truncation(s, panels, Kc, fun):
    """
    Tapered estimate of the full integral using panels on ``[0, Kc]``.

    The integrand is multiplied by a smooth taper on ``[Kc/2, Kc]`` and the
    non-oscillating ``c k**-p`` part of what the taper removes is added back.
    The coefficient ``c`` is fitted against a smooth bump on the same
    window. Oscillations enter only through super-algebraically small
    terms in ``omega*Kc``.
    """
    p = s.tail_exponent_hint
    lo = 0.5 * Kc
    sel = (panels.a >= lo) & (panels.b <= Kc)
    m = fun.m

    def weighted(k):
        t = (k - lo) / (Kc - lo)
        w = _taper(t)
        bump = w * (1.0 - w)
        fk = fun(k)
        kp = k ** -p
        return np.vstack([fk * w, fk * bump, kp * bump, kp * w])

    val, _, _ = _gk_panels(weighted, panels.a[sel], panels.b[sel])
    val = val.sum(axis=1)
    fw, fb, mb, mw = val[:m], val[m:2 * m], val[2 * m], val[2 * m + 1]
    c = fb / mb
    removed = lo ** (1 - p) / (p - 1) - mw
    return panels.window_sum(0.0, lo) + fw + c * removed


def _tail(s, panels, K, width, fun):
    """Tail correction and its error beyond the current cutoff ``K``."""
    m = fun.m
    if s.tail_decay_rate_hint is not None:
        probe = np.array([K * (1 - 1e-3), K])
        bound = np.abs(fun(probe)).max(axis=1) / s.tail_decay_rate_hint
        return np.zeros(m), 2.0 * bound
    if s.tail_exponent_hint is not None and width is not None:
        est = _smooth_truncation(s, panels, K, fun)
        prev = _smooth_truncation(s, panels, K / 2, fun)
        return est - panels.window_sum(0.0, K), np.abs(est - prev)
    if s.tail_exponent_hint is not None:
        p = s.tail_exponent_hint
        mom = lambda lo, hi: (lo ** (1 - p) - hi ** (1 - p)) / (p - 1)
        c2 = panels.window_sum(K / 2, K) / mom(K / 2, K)
        c1 = panels.window_sum(K / 4, K / 2) / mom(K / 4, K / 2)
        scale = K ** (1 - p) / (p - 1)
        return c2 * scale, np.abs(c2 - c1) * scale
    return np.zeros(m), np.abs(panels.window_sum(K / 2, K))


def sum_truncated(term: Callable[[int], float],
                  settings: QuadratureSettings | None = None,
                  *, start: int = 1, max_terms: int = 1_000_000) -> SumResult:
    """
    Sum ``term(j)`` for ``j = start, start+1, ...``.

    Summation stops at the first term with ``|term_j| < abs_tol``; the
    geometric tail bound ``|term_j| r/(1-r)``, with ``r`` the last observed
    ratio, is reported in the error together with a rounding estimate.

    Raises
    ------
    QuadratureError
        If the ratio of successive terms stays ``>= 1`` for 50 consecutive
        terms, or ``max_terms`` is reached.
    """
    s = settings or QuadratureSettings()
    terms = []
    prev = None
    non_decay = 0
    ratio = 0.0
    j = start
    while True:
        t = float(term(j))
        if not math.isfinite(t):
            raise QuadratureError(f"term {j} is not finite",
                                  value=math.fsum(terms), evaluations=len(terms))
        terms.append(t)
        if prev is not None and prev != 0.0:
            ratio = abs(t / prev)
            non_decay = non_decay + 1 if ratio >= 1.0 else 0
            if non_decay >= 50:
                raise QuadratureError("series terms do not decay",
                                      value=math.fsum(terms),
                                      abs_error=math.inf,
                                      evaluations=len(terms))
        if abs(t) < s.abs_tol:
            break
        if len(terms) >= max_terms:
            raise QuadratureError("series did not converge within max_terms",
                                  value=math.fsum(terms), abs_error=abs(t),
                                  evaluations=len(terms))
        prev = t
        j += 1
    value = math.fsum(terms)
    if t == 0.0 or ratio == 0.0:
        tail = 0.0
    elif ratio < 1.0:
        tail = abs(t) * ratio / (1.0 - ratio)
    else:
        tail = math.inf
    rounding = _EPS * len(terms) * math.fsum(abs(x) for x in terms)
    return SumResult(value, float(tail + rounding), len(terms))
