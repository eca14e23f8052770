"""Analytic moments of the rough Heston model.

The variance process solves the stochastic Volterra equation with power-law
kernel (t-s)^(alpha-1)/Gamma(alpha), alpha = H + 1/2, mean reversion lam,
vol-of-vol nu and spot/vol correlation rho, anchored to a forward variance
curve xi0(t) = E[V_t].  Its resolvent representation

    V_t = xi0(t) + int_0^t f(t-s; alpha, lam) (nu/lam) sqrt(V_s) dB_s

turns every second- and fourth-moment quantity of daily returns
r_t = int_{t-delta}^t sqrt(V) dW and integrated variances
sigma2_t = int_{t-delta}^t V ds into explicit quadratures of the
Mittag-Leffler density f and CDF F from :mod:`zlab.special`.

Implemented quantities
----------------------
* ``g0``                   -- the kernel-adjusted curve xi0 + lam * I^alpha xi0;
* ``zumbach_cov``          -- the lag-k asymmetry covariance
  Z_t(k) = Cov[r_t^2, sigma2_{t+k delta}] - Cov[r_{t+k delta}^2, sigma2_t],
  evaluated from its closed double-quadrature form (positive iff rho != 0);
* ``zumbach_asymptotic``   -- its small-delta equivalent
  2 (rho nu)^2 delta^(2 alpha + 1) g_alpha(k) xi0(t), with the universal lag
  profile ``g_alpha``;
* ``var_sigma2`` / ``fourth_moment_r``          -- finite-t moments;
* ``stationary_var_sigma2`` / ``stationary_fourth_moment_r`` -- their
  t -> infinity limits under xi0(t) -> xi_inf;
* ``zumbach_correl``       -- the correlation-normalised asymmetry in the
  stationary regime, plus its small-delta equivalent
  ``zumbach_correl_small_delta``.

Quadrature policy: integrands inherit an integrable u^(alpha-1) singularity
from the density at the origin; those integrals are computed after the
substitution u = v^(1/alpha) which makes the integrand smooth, then handed
to adaptive Gauss-Kronrod with relative tolerance 1e-8 and absolute floor
1e-16.  Semi-infinite integrals are truncated where the integrand's
algebraic tail is analytically integrable and the closed-form tail estimate
is added back.  Degenerate inputs (rho = 0 or nu = 0) short-circuit to exact
zeros without quadrature.

All operations are pure functions of immutable inputs and can be evaluated
concurrently without locking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .errors import ContractError, QuadratureError
from .special import MlParams, density_sq_tail, ml_cdf, ml_cdf_grid

__all__ = [
    "TRADING_DAY",
    "ModelParams",
    "ForwardVarianceCurve",
    "ZumbachCurve",
    "g0",
    "g_alpha",
    "zumbach_cov",
    "zumbach_asymptotic",
    "zumbach_curve",
    "var_sigma2",
    "fourth_moment_r",
    "stationary_var_sigma2",
    "stationary_fourth_moment_r",
    "zumbach_correl",
    "zumbach_correl_small_delta",
]

TRADING_DAY = 1.0 / 252.0
"""Default day length in years (252 trading days per year)."""

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(48)


@dataclass(frozen=True)
class ModelParams:
    """Rough Heston parameter tuple (hurst, lam, nu, rho).

    hurst : Hurst exponent of the variance paths, in (0, 1/2]; 1/2 recovers
            the classical square-root model.
    lam   : mean reversion rate, 1/year.
    nu    : vol-of-vol scale; nu = 0 degenerates to a deterministic variance
            path and is accepted so the degenerate limits stay testable.
    rho   : spot/vol correlation in [-1, 1].
    """

    hurst: float
    lam: float
    nu: float
    rho: float

    def __post_init__(self) -> None:
        if not 0.0 < self.hurst <= 0.5:
            raise ContractError(f"hurst must lie in (0, 1/2], got {self.hurst}")
        if not self.lam > 0.0:
            raise ContractError(f"lam must be positive, got {self.lam}")
        if self.nu < 0.0:
            raise ContractError(f"nu must be nonnegative, got {self.nu}")
        if not -1.0 <= self.rho <= 1.0:
            raise ContractError(f"rho must lie in [-1, 1], got {self.rho}")

    @property
    def alpha(self) -> float:
        """Kernel exponent alpha = hurst + 1/2, in (1/2, 1]."""
        return self.hurst + 0.5

    def ml(self) -> MlParams:
        return MlParams(self.alpha, self.lam)


class ForwardVarianceCurve:
    """Forward variance curve xi0(t), t >= 0, in variance/year units.

    Either flat or continuous piecewise-linear between knots with constant
    extrapolation beyond them.  Instances are immutable; call them like a
    function (scalar or array argument).
    """

    def __init__(self, times: np.ndarray, values: np.ndarray, flat: bool):
        self._times = times
        self._values = values
        self._flat = flat

    @classmethod
    def flat(cls, level: float) -> "ForwardVarianceCurve":
        if not level > 0.0:
            raise ContractError(f"flat level must be positive, got {level}")
        return cls(np.array([0.0]), np.array([float(level)]), True)

    @classmethod
    def piecewise_linear(cls, times, values) -> "ForwardVarianceCurve":
        t = np.asarray(times, dtype=float)
        v = np.asarray(values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape or t.size == 0:
            raise ContractError("knot arrays must be equal-length 1-d and nonempty")
        if np.any(t < 0.0) or np.any(np.diff(t) <= 0.0):
            raise ContractError("knot times must be nonnegative and strictly increasing")
        if np.any(v <= 0.0):
            raise ContractError("xi0 must be positive at every knot")
        if t.size == 1:
            return cls.flat(float(v[0]))
        return cls(t.copy(), v.copy(), False)

    @property
    def is_flat(self) -> bool:
        return self._flat

    @property
    def level(self) -> float:
        if not self._flat:
            raise ContractError("level is only defined for flat curves")
        return float(self._values[0])

    @property
    def knot_times(self) -> np.ndarray:
        return self._times.copy()

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < 0.0):
            raise ContractError("xi0 is only defined for t >= 0")
        if self._flat:
            out = np.full_like(t_arr, self._values[0], dtype=float)
        else:
            out = np.interp(t_arr, self._times, self._values)
        return float(out) if np.isscalar(t) or t_arr.ndim == 0 else out

    def integral(self, a: float, b: float) -> float:
        """Exact integral of the curve over [a, b] (trapezoid across knots)."""
        if b < a or a < 0.0:
            raise ContractError(f"bad integration range [{a}, {b}]")
        if self._flat:
            return self._values[0] * (b - a)
        grid = np.unique(np.concatenate(
            [[a, b], self._times[(self._times > a) & (self._times < b)]]))
        vals = self(grid)
        return float(np.trapezoid(vals, grid))

    def _kinks_between(self, lo: float, hi: float) -> np.ndarray:
        if self._flat:
            return np.empty(0)
        inside = self._times[(self._times > lo) & (self._times < hi)]
        return inside


@dataclass(frozen=True)
class ZumbachCurve:
    """Lag-indexed table of asymmetry covariances at day length delta.

    values[i] corresponds to lag ``lags[i]`` days; entries are strictly
    positive whenever rho != 0 and identically zero at rho = 0.
    """

    delta: float
    t: float
    lags: np.ndarray
    values: np.ndarray
    asymptotic: np.ndarray | None = field(default=None)

    def __post_init__(self) -> None:
        if self.delta <= 0.0 or self.t < self.delta:
            raise ContractError("need delta > 0 and t >= delta")
        if len(self.lags) != len(self.values):
            raise ContractError("lags and values must be equal length")
        if len(self.lags) and np.any(np.asarray(self.lags) < 1):
            raise ContractError("lags must be >= 1")


def _checked_quad(fn, a, b, *, points=None, epsrel=1e-8, epsabs=1e-16, limit=400):
    out = quad(fn, a, b, points=points, limit=limit, epsabs=epsabs,
               epsrel=epsrel, full_output=1)
    val, abserr = out[0], out[1]
    ok = math.isfinite(val) and abserr <= max(epsabs * 1e3, abs(val) * epsrel * 1e3, 1e-300)
    if not ok:
        raise QuadratureError(
            f"adaptive quadrature on [{a}, {b}] reached abserr={abserr:.2e} "
            f"for value {val:.6e}")
    return val


def _gl_fixed(fn, a, b):
    # fixed-order Gauss-Legendre on [a, b] for smooth integrands
    if b <= a:
        return 0.0
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    x = mid + half * _GL_NODES
    return half * float(np.dot(_GL_WEIGHTS, fn(x)))


def _e_alpha_alpha_grid(alpha: float, z: np.ndarray) -> np.ndarray:
    # sum_k (-z)^k / Gamma(alpha k + alpha) for small nonnegative z (vectorised)
    acc = np.zeros_like(z)
    power = np.ones_like(z)
    for k in range(160):
        g = math.gamma(alpha * k + alpha)
        acc += power / g
        power *= -z
        if not np.any(np.abs(power) > 1e-20 * g):
            break
    return acc


def _f_conv_curve(params: ModelParams, curve: ForwardVarianceCurve,
                  upper: float, t_arg: float) -> float:
    """int_0^upper f(u) xi0(t_arg - u) du with the u = v^(1/alpha) substitution.

    After substituting, f(u) du = (lam/alpha) E_{a,a}(-lam v) dv and the
    integrand is smooth except at curve kinks, which become explicit
    breakpoints.  Flat curves reduce to xi0 * F(upper) exactly.
    """
    if upper <= 0.0:
        return 0.0
    alpha, lam = params.alpha, params.lam
    if curve.is_flat:
        return curve.level * ml_cdf(params.ml(), upper)
    v_hi = upper**alpha
    kinks = curve._kinks_between(t_arg - upper, t_arg)
    breaks = np.unique(np.clip((t_arg - kinks) ** alpha, 0.0, v_hi)) if kinks.size else np.empty(0)
    edges = np.unique(np.concatenate([[0.0, v_hi], breaks]))

    def seg(v):
        u = v ** (1.0 / alpha)
        return _e_alpha_alpha_grid(alpha, lam * v) * curve(t_arg - u)

    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        total += _gl_fixed(seg, lo, hi)
    return lam / alpha * total


def g0(params: ModelParams, curve: ForwardVarianceCurve, t: float) -> float:
    """Kernel-adjusted forward curve g0(t) = xi0(t) + lam * (I^alpha xi0)(t).

    For a flat curve at level v this is v * (1 + lam t^alpha / Gamma(alpha+1)).
    """
    if t < 0.0:
        raise ContractError(f"t must be >= 0, got {t}")
    alpha, lam = params.alpha, params.lam
    if t == 0.0:
        return curve(0.0)
    if curve.is_flat:
        return curve.level * (1.0 + lam * t**alpha / math.gamma(alpha + 1.0))
    # int_0^t (t-s)^(a-1) xi0(s) ds = (1/a) int_0^(t^a) xi0(t - y^(1/a)) dy
    y_hi = t**alpha
    kinks = curve._kinks_between(0.0, t)
    breaks = np.unique((t - kinks) ** alpha) if kinks.size else np.empty(0)
    edges = np.unique(np.concatenate([[0.0, y_hi], np.clip(breaks, 0.0, y_hi)]))

    def seg(y):
        return curve(t - y ** (1.0 / alpha))

    frac_int = sum(_gl_fixed(seg, lo, hi) for lo, hi in zip(edges[:-1], edges[1:])) / alpha
    return curve(t) + lam / math.gamma(alpha) * frac_int


def g_alpha(alpha: float, k: int) -> float:
    """Universal lag profile of the small-delta asymmetry.

    g_alpha(k) = Gamma(alpha+1)^-2 int_0^1 ((k+s)^alpha - (k+s-1)^alpha)
    (1-s)^alpha ds; equals 1/2 for every k at alpha = 1 and decays like
    k^(alpha-1) for alpha < 1.
    """
    if not 0.5 < alpha <= 1.0:
        raise ContractError(f"alpha must lie in (1/2, 1], got {alpha}")
    if k < 1 or int(k) != k:
        raise ContractError(f"k must be a positive integer, got {k}")
    if alpha == 1.0:
        return 0.5

    def integrand(s):
        return ((k + s) ** alpha - (k + s - 1.0) ** alpha) * (1.0 - s) ** alpha

    val = _checked_quad(integrand, 0.0, 1.0, epsrel=1e-11, epsabs=1e-15)
    return val / math.gamma(alpha + 1.0) ** 2


def _delta_cdf(p: MlParams, s: float, k: int, delta: float) -> float:
    return ml_cdf(p, s + k * delta) - ml_cdf(p, s + (k - 1) * delta)


def zumbach_cov(params: ModelParams, curve: ForwardVarianceCurve, t: float,
                k: int, delta: float = TRADING_DAY) -> float:
    """Lag-k asymmetry covariance Z_t(k) at day length delta.

    Z_t(k) = 2 (rho nu / lam)^2 *
             int_0^delta [F(s + k delta) - F(s + (k-1) delta)] *
                         int_0^(delta - s) f(u) xi0(t - s - u) du ds,

    which is strictly positive iff rho != 0 (and invariant under the sign of
    rho).  Requires t >= delta so the curve is never evaluated at negative
    times; for a flat curve the value does not depend on t.
    """
    if delta <= 0.0:
        raise ContractError(f"delta must be positive, got {delta}")
    if t < delta:
        raise ContractError(f"need t >= delta, got t={t}, delta={delta}")
    if k < 1 or int(k) != k:
        raise ContractError(f"k must be a positive integer, got {k}")
    if params.rho == 0.0 or params.nu == 0.0:
        return 0.0
    p = params.ml()
    pref = 2.0 * (params.rho * params.nu / params.lam) ** 2
    if curve.is_flat:
        level = curve.level

        def integrand(s):
            return _delta_cdf(p, s, k, delta) * ml_cdf(p, delta - s)

        return pref * level * _checked_quad(integrand, 0.0, delta)

    def integrand(s):
        return _delta_cdf(p, s, k, delta) * _f_conv_curve(params, curve, delta - s, t - s)

    return pref * _checked_quad(integrand, 0.0, delta)


def zumbach_asymptotic(params: ModelParams, curve: ForwardVarianceCurve,
                       t: float, k: int, delta: float = TRADING_DAY) -> float:
    """Small-delta equivalent 2 (rho nu)^2 delta^(2 alpha + 1) g_alpha(k) xi0(t).

    Independent of lam by construction and proportional to xi0(t).
    """
    if delta <= 0.0:
        raise ContractError(f"delta must be positive, got {delta}")
    if t < delta:
        raise ContractError(f"need t >= delta, got t={t}, delta={delta}")
    if params.rho == 0.0 or params.nu == 0.0:
        return 0.0
    alpha = params.alpha
    return (2.0 * (params.rho * params.nu) ** 2 * delta ** (2.0 * alpha + 1.0)
            * g_alpha(alpha, k) * curve(t))


def zumbach_curve(params: ModelParams, curve: ForwardVarianceCurve, t: float,
                  lags, delta: float = TRADING_DAY) -> ZumbachCurve:
    """Evaluate ``zumbach_cov`` and ``zumbach_asymptotic`` over a lag grid."""
    lags = np.asarray(lags, dtype=int)
    vals = np.array([zumbach_cov(params, curve, t, int(k), delta) for k in lags])
    asym = np.array([zumbach_asymptotic(params, curve, t, int(k), delta) for k in lags])
    return ZumbachCurve(delta=delta, t=t, lags=lags, values=vals, asymptotic=asym)


def _day_scale_points(delta: float, hi: float) -> list[float]:
    pts = []
    s = delta
    while s < hi:
        pts.append(s)
        s *= 8.0
    return pts


def _int_sq_cdf(p: MlParams, delta: float) -> float:
    # int_0^delta F(s)^2 ds
    return _checked_quad(lambda s: ml_cdf(p, s) ** 2, 0.0, delta,
                         epsabs=1e-300, epsrel=1e-10)


def _int_sq_cdf_increment(p: MlParams, delta: float, upper: float,
                          weight=None) -> float:
    """int_0^upper (F(s+delta) - F(s))^2 [xi0-weight(s)] ds.

    The integrand is of size F(delta)^2 near the origin and decays like
    (delta f(s))^2 for s >> delta, so day-scale breakpoints guide the
    subdivision.
    """
    fn = (lambda s: (ml_cdf(p, s + delta) - ml_cdf(p, s)) ** 2) if weight is None \
        else (lambda s: (ml_cdf(p, s + delta) - ml_cdf(p, s)) ** 2 * weight(s))
    pts = [x for x in _day_scale_points(delta, upper) if 0.0 < x < upper]
    return _checked_quad(fn, 0.0, upper, points=pts or None,
                         epsabs=1e-300, epsrel=1e-10)


def _int_sq_cdf_increment_inf(p: MlParams, delta: float) -> float:
    """int_0^inf (F(s+delta) - F(s))^2 ds with analytic algebraic tail."""
    upper = max(60.0 / p.lam ** (1.0 / p.alpha), 1000.0 * delta)
    body = _int_sq_cdf_increment(p, delta, upper)
    tail = delta**2 * density_sq_tail(p, upper + 0.5 * delta)
    return body + tail


def var_sigma2(params: ModelParams, curve: ForwardVarianceCurve, t: float,
               delta: float = TRADING_DAY) -> float:
    """Variance of the daily integrated variance at time t >= delta.

    (nu/lam)^2 [ int_0^(t-delta) (F(s+delta) - F(s))^2 xi0(t-delta-s) ds
               + int_0^delta F(s)^2 xi0(t-s) ds ].
    """
    if delta <= 0.0 or t < delta:
        raise ContractError(f"need delta > 0 and t >= delta, got t={t}, delta={delta}")
    if params.nu == 0.0:
        return 0.0
    p = params.ml()
    pref = (params.nu / params.lam) ** 2
    if curve.is_flat:
        main = _int_sq_cdf_increment(p, delta, t - delta) if t > delta else 0.0
        return pref * curve.level * (main + _int_sq_cdf(p, delta))
    main = _int_sq_cdf_increment(p, delta, t - delta,
                                 weight=lambda s: curve(t - delta - s)) if t > delta else 0.0
    edge = _checked_quad(lambda s: ml_cdf(p, s) ** 2 * curve(t - s), 0.0, delta,
                         epsabs=1e-300, epsrel=1e-10)
    return pref * (main + edge)


def _int_cdf_bilinear(p: MlParams, delta: float) -> float:
    # int_0^delta F(u) F(delta-u) du
    return _checked_quad(lambda u: ml_cdf(p, u) * ml_cdf(p, delta - u),
                         0.0, delta, epsabs=1e-300, epsrel=1e-10)


def fourth_moment_r(params: ModelParams, curve: ForwardVarianceCurve, t: float,
                    delta: float = TRADING_DAY) -> float:
    """Fourth moment of the daily return at time t >= delta.

    Four contributions: the rho^2 leverage term (a double convolution of the
    density against the curve), the Gaussian-with-deterministic-variance term
    (3 (int xi0)^2 for flat curves), and two vol-of-vol terms which reduce to
    weighted integrals of F^2 and (F(.+delta) - F(.))^2; at nu = 0 the value
    collapses to the Gaussian fourth moment.
    """
    if delta <= 0.0 or t < delta:
        raise ContractError(f"need delta > 0 and t >= delta, got t={t}, delta={delta}")
    lam, nu, rho = params.lam, params.nu, params.rho
    p = params.ml()
    if curve.is_flat:
        level = curve.level
        term2 = 3.0 * level**2 * delta**2
        if nu == 0.0:
            return term2
        term1 = 0.0 if rho == 0.0 else \
            12.0 * (rho * nu / lam) ** 2 * level * _int_cdf_bilinear(p, delta)
        term3 = 3.0 * (nu / lam) ** 2 * level * _int_sq_cdf(p, delta)
        term4 = 3.0 * (nu / lam) ** 2 * level * (
            _int_sq_cdf_increment(p, delta, t - delta) if t > delta else 0.0)
        return term1 + term2 + term3 + term4

    term2 = 6.0 * _checked_quad(
        lambda s: curve(s + t - delta) * curve.integral(t - delta, s + t - delta),
        0.0, delta, epsabs=1e-300, epsrel=1e-10)
    if nu == 0.0:
        return term2
    alpha = params.alpha

    def mid_sub(fn, s_val):
        # int_0^s f(u) fn(u) du via u = v^(1/alpha)
        v_hi = s_val**alpha

        def seg(v):
            u = v ** (1.0 / alpha)
            return _e_alpha_alpha_grid(alpha, lam * v) * fn(u)

        return lam / alpha * _gl_fixed(seg, 0.0, v_hi)

    if rho == 0.0:
        term1 = 0.0
    else:
        def t1_outer(s_val):
            return mid_sub(
                lambda u: _f_conv_curve(params, curve, s_val - u, s_val - u + t - delta)
                if np.ndim(u) == 0 else np.array(
                    [_f_conv_curve(params, curve, s_val - ui, s_val - ui + t - delta)
                     for ui in u]), s_val)

        term1 = 12.0 * (rho * nu / lam) ** 2 * _checked_quad(
            t1_outer, 0.0, delta, epsrel=1e-8, epsabs=1e-300)

    def t3_outer(s_val):
        def fn(u):
            u_arr = np.atleast_1d(u)
            cdfs = ml_cdf_grid(p, u_arr)
            xi = np.array([curve(s_val + t - delta - ui) for ui in u_arr])
            out = cdfs * xi
            return out if np.ndim(u) else float(out[0])
        return mid_sub(fn, s_val)

    term3 = 6.0 * (nu / lam) ** 2 * _checked_quad(
        t3_outer, 0.0, delta, epsrel=1e-8, epsabs=1e-300)
    term4 = 3.0 * (nu / lam) ** 2 * (_int_sq_cdf_increment(
        p, delta, t - delta, weight=lambda u: curve(t - delta - u)) if t > delta else 0.0)
    return term1 + term2 + term3 + term4


def stationary_var_sigma2(params: ModelParams, xi_inf: float,
                          delta: float = TRADING_DAY) -> float:
    """Limit of ``var_sigma2`` as t -> infinity when xi0(t) -> xi_inf.

    (nu/lam)^2 xi_inf [ int_0^inf (F(s+delta)-F(s))^2 ds + int_0^delta F^2 ds ];
    for small delta this is equivalent to (nu/lam)^2 xi_inf delta^2 times the
    squared L2 norm of the density (the approach rate is delta^(2 alpha - 1)).
    """
    if not xi_inf > 0.0:
        raise ContractError(f"xi_inf must be positive, got {xi_inf}")
    if delta <= 0.0:
        raise ContractError(f"delta must be positive, got {delta}")
    if params.nu == 0.0:
        return 0.0
    p = params.ml()
    return (params.nu / params.lam) ** 2 * xi_inf * (
        _int_sq_cdf_increment_inf(p, delta) + _int_sq_cdf(p, delta))


def stationary_fourth_moment_r(params: ModelParams, xi_inf: float,
                               delta: float = TRADING_DAY) -> float:
    """Limit of the return fourth moment as t -> infinity.

    xi_inf 12 (rho nu/lam)^2 int_0^delta F(u) F(delta-u) du + 3 xi_inf^2 delta^2
    + 3 (nu/lam)^2 xi_inf [ int_0^delta F^2 + int_0^inf (F(.+delta)-F(.))^2 ];
    equivalent for small delta to 3 xi_inf^2 delta^2 + 3 (nu/lam)^2 xi_inf
    delta^2 * l2_norm_f_squared.
    """
    if not xi_inf > 0.0:
        raise ContractError(f"xi_inf must be positive, got {xi_inf}")
    if delta <= 0.0:
        raise ContractError(f"delta must be positive, got {delta}")
    nu, lam, rho = params.nu, params.lam, params.rho
    term2 = 3.0 * xi_inf**2 * delta**2
    if nu == 0.0:
        return term2
    p = params.ml()
    term1 = 0.0 if rho == 0.0 else \
        12.0 * (rho * nu / lam) ** 2 * xi_inf * _int_cdf_bilinear(p, delta)
    rest = 3.0 * (nu / lam) ** 2 * xi_inf * (
        _int_sq_cdf(p, delta) + _int_sq_cdf_increment_inf(p, delta))
    return term1 + term2 + rest


def zumbach_correl(params: ModelParams, xi_inf: float, k: int,
                   delta: float = TRADING_DAY) -> float:
    """Correlation-normalised stationary asymmetry.

    Z(k) / sqrt(Var[sigma2] Var[r^2]) with every factor taken in its
    t -> infinity limit under a flat curve at xi_inf; Var[r^2] uses
    E[r^2] = xi_inf * delta.  Dimensionless and positive for rho != 0; the
    |value| <= 1 bound is checked only by a warning since numerator and
    denominator come from separately computed limits.
    """
    if params.nu == 0.0:
        raise ContractError("correlation is degenerate at nu = 0 (zero variance)")
    if params.rho == 0.0:
        return 0.0
    flat = ForwardVarianceCurve.flat(xi_inf)
    num = zumbach_cov(params, flat, t=delta, k=k, delta=delta)
    var_s2 = stationary_var_sigma2(params, xi_inf, delta)
    var_r2 = stationary_fourth_moment_r(params, xi_inf, delta) - (xi_inf * delta) ** 2
    if var_s2 <= 0.0 or var_r2 <= 0.0:
        raise ContractError("degenerate denominator in zumbach_correl")
    out = num / math.sqrt(var_s2 * var_r2)
    if abs(out) > 1.0:
        import warnings
        warnings.warn(f"zumbach_correl left [-1, 1]: {out}", stacklevel=2)
    return out


def zumbach_correl_small_delta(params: ModelParams, xi_inf: float, k: int,
                               delta: float = TRADING_DAY) -> float:
    """Small-delta equivalent of ``zumbach_correl``.

    2 (rho nu)^2 delta^(2 alpha - 1) g_alpha(k)
        / sqrt(A * (2 xi_inf + 3 A)),      A = (nu/lam)^2 * ||f||_2^2.

    Derived by combining the small-delta equivalents of the numerator and of
    both variances; the approach rate of the exact ratio to this expression
    is delta^(2 alpha - 1), so it is only informative when that power is
    genuinely small.
    """
    if params.nu == 0.0:
        raise ContractError("correlation is degenerate at nu = 0 (zero variance)")
    if not xi_inf > 0.0:
        raise ContractError(f"xi_inf must be positive, got {xi_inf}")
    if params.rho == 0.0:
        return 0.0
    from .special import l2_norm_f_squared

    alpha = params.alpha
    a_const = (params.nu / params.lam) ** 2 * l2_norm_f_squared(params.ml())
    return (2.0 * (params.rho * params.nu) ** 2 * delta ** (2.0 * alpha - 1.0)
            * g_alpha(alpha, k) / math.sqrt(a_const * (2.0 * xi_inf + 3.0 * a_const)))
