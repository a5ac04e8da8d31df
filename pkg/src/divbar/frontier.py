"""Free-boundary solver for the transformed first-order crossing problem.

The original HJB variational inequality reduces to a scalar ODE

    n'(q) = O(q, n) = (beta^2 q / (1 - beta q)) * (m(q) - n) / (n - ell(q))

started on the singular lower envelope at q = 0 and integrated until the
solution crosses the upper envelope m.  The crossing abscissa q* maps to the
dividend barrier z* = beta q* / (1 - beta q*).

Two independent routes are provided: the n-formulation above (singular
start, handled with a second-order series) and an equivalent b-formulation
with a regular initial point, used as a cross-check.  In the corner regime
(mu == rho > lam + r) the solution is the closed form n == m with q* at the
turning point of m.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import (
    DomainError,
    SingularityError,
    SolverFailureError,
    UnsupportedRegimeError,
)
from .model import (
    ModelParams,
    Regime,
    classify_regime,
    eval_ell,
    eval_ell_prime,
    eval_m,
    eval_m_prime,
    excess_premium,
)

__all__ = [
    "SeriesStart",
    "FrontierSolution",
    "series_start",
    "rhs_O",
    "rhs_P",
    "solve_frontier",
    "solve_frontier_b",
    "qstar_lower_bound",
    "corner_qstar",
]

# Contact with the lower envelope signals tolerance failure, not dynamics.
_FLOOR_GAP = 1e-14
# Integration never approaches 1/beta; the crossing must occur before it.
_QMAX_MARGIN = 1e-9


def qstar_lower_bound(params: ModelParams) -> float:
    """Analytic lower bound (1/beta) p / (p + lam) with p = (rho-r-lam)^+."""
    p = max(params.rho - params.r - params.lam, 0.0)
    return p / (p + params.lam) / params.beta


def corner_qstar(params: ModelParams) -> float:
    """Turning point (rho-r-lam) / (beta (rho-r)) of m, valid when rho > r+lam."""
    return (params.rho - params.r - params.lam) / (params.beta * (params.rho - params.r))


@dataclass(frozen=True)
class SeriesStart:
    """Second-order expansion of chi = n - ell at the singular origin.

    alpha is the positive root of y^2 - B0 y - A00 = 0 where
    A00 = (beta^2/(beta+lam)) (mu-rho)^2/(2 sigma^2) and
    B0  = -(beta/(beta+lam)) (rho - r + (mu-rho)^2/(2 sigma^2) - lam);
    chi2 is the one-sided second derivative chi''(0+), always negative.
    """

    alpha: float
    chi2: float
    q0: float

    def __post_init__(self):
        if not self.alpha > 0.0:
            raise DomainError(f"alpha must be positive, got {self.alpha}")
        if not self.chi2 < 0.0:
            raise DomainError(f"chi2 must be negative, got {self.chi2}")
        if not self.q0 > 0.0:
            raise DomainError(f"q0 must be positive, got {self.q0}")


def _coeff_A00(params):
    b, lam = params.beta, params.lam
    return b * b / (b + lam) * excess_premium(params)


def _coeff_B0(params):
    b, lam = params.beta, params.lam
    return -b / (b + lam) * (params.rho - params.r + excess_premium(params) - lam)


def series_start(params: ModelParams, epsilon: float = 1e-6) -> SeriesStart:
    """Series data for starting the n-integration just off the origin.

    The start abscissa is q0 = epsilon/beta and the initial value is
    n(q0) = ell(q0) + alpha q0 + chi2 q0^2 / 2, an O(q0^3)-accurate seed.

    Only meaningful in the general regime; raises UnsupportedRegimeError
    otherwise (the quadratic degenerates when mu == rho).
    """
    if classify_regime(params) is not Regime.GENERAL:
        raise UnsupportedRegimeError("series start requires the general regime (mu != rho)")
    if not 0.0 < epsilon < 1e-3:
        raise DomainError(f"epsilon must lie in (0, 1e-3), got {epsilon}")
    a00 = _coeff_A00(params)
    b0 = _coeff_B0(params)
    disc = math.sqrt(b0 * b0 + 4.0 * a00)
    # Positive root of y^2 - b0 y - a00; form chosen to avoid cancellation.
    alpha = (b0 + disc) / 2.0 if b0 > 0.0 else 2.0 * a00 / (disc - b0)
    b, lam, sig = params.beta, params.lam, params.sigma
    d = params.mu - params.rho
    curv = (b * b * d * d) / (4.0 * (b + lam) ** 2 * sig * sig * alpha * alpha)
    chi2 = -(b ** 3 / (b + lam)) / (1.0 + curv)
    return SeriesStart(alpha=alpha, chi2=chi2, q0=epsilon / b)


def rhs_O(q, n, params: ModelParams):
    """Right-hand side O(q, n) of the transformed free-boundary ODE.

    Undefined on the lower envelope: n == ell(q) raises SingularityError.
    """
    if not 0.0 < q < 1.0 / params.beta:
        raise DomainError(f"q must lie in (0, 1/beta), got {q}")
    denom = n - eval_ell(q, params)
    if denom == 0.0:
        raise SingularityError(f"n equals the lower envelope at q={q}")
    b = params.beta
    return (b * b * q / (1.0 - b * q)) * (eval_m(q, params) - n) / denom


def rhs_P(q, bval, params: ModelParams):
    """Right-hand side P(q, b) of the equivalent regular-start formulation.

    b = ((beta+lam)/beta)(m - n) satisfies b' = P(q, b) from
    b(0) = (mu-rho)^2 / (2 beta sigma^2); its first zero is q*.
    """
    if not 0.0 <= q < 1.0 / params.beta:
        raise DomainError(f"q must lie in [0, 1/beta), got {q}")
    b, lam = params.beta, params.lam
    k = excess_premium(params)
    denom = k * (1.0 / b - q) - bval
    if denom == 0.0:
        raise SingularityError(f"b touches the envelope gap at q={q}")
    return (params.rho - params.r - lam / (1.0 - b * q)
            - ((b + lam) * b * q / (1.0 - b * q)) * bval / denom)


class _DenseSolution:
    """Flattened RK45 dense output: piecewise quartic, cheap to evaluate.

    scipy's per-step interpolants are unpacked into contiguous arrays so
    that repeated evaluation (policy tabulation, quadrature, verification
    sweeps) avoids per-call Python object overhead.
    """

    def __init__(self, ode_solution):
        interps = ode_solution.interpolants
        nseg = len(interps)
        ny = interps[0].y_old.shape[0]
        order = interps[0].Q.shape[1]
        self.t0 = np.empty(nseg)
        self.h = np.empty(nseg)
        self.y0 = np.empty((nseg, ny))
        self.Q = np.empty((nseg, ny, order))
        for i, d in enumerate(interps):
            self.t0[i] = d.t_old
            self.h[i] = d.h
            self.y0[i] = d.y_old
            self.Q[i] = d.Q
        self.t_end = self.t0 + self.h
        self.t_min = self.t0[0]
        self.t_max = self.t_end[-1]

    def eval(self, q, comp=0):
        """Evaluate component ``comp`` at scalar or array abscissae."""
        q_arr = np.asarray(q, dtype=float)
        scalar = q_arr.ndim == 0
        qs = np.atleast_1d(q_arr)
        idx = np.searchsorted(self.t_end, qs, side="left")
        idx = np.clip(idx, 0, len(self.t0) - 1)
        x = (qs - self.t0[idx]) / self.h[idx]
        c = self.Q[idx, comp, :]
        acc = c[:, -1]
        for j in range(c.shape[1] - 2, -1, -1):
            acc = c[:, j] + x * acc
        out = self.y0[idx, comp] + self.h[idx] * x * acc
        return float(out[0]) if scalar else out

    def eval_scalar(self, q, comp=0):
        """Scalar evaluation without array wrapping (hot path)."""
        i = self.t_end.searchsorted(q, side="left")
        if i >= len(self.t0):
            i = len(self.t0) - 1
        x = (q - self.t0[i]) / self.h[i]
        c = self.Q[i, comp]
        acc = float(c[-1])
        for j in range(len(c) - 2, -1, -1):
            acc = float(c[j]) + x * acc
        return float(self.y0[i, comp]) + self.h[i] * x * acc


def _fast_envelopes(params):
    """Scalar closures for m, ell and the ODE right-hand sides.

    Plain-math duplicates of the public evaluators, without domain checks,
    used inside the integration loop where call overhead matters.
    """
    b, lam = params.beta, params.lam
    rr = params.rho - params.r
    k = excess_premium(params)
    scale = b / (b + lam)
    kgap = scale * k

    def m_of(q):
        return scale * (rr * q + lam / b * math.log(1.0 / b - q) + k / b)

    def ell_of(q):
        return m_of(q) - kgap * (1.0 / b - q)

    return m_of, ell_of


class FrontierSolution:
    """Converged free boundary with a dense representation of n on [0, q*].

    Exposes n, n' and the barrier quadrature integral as vectorized
    callables.  Instances are immutable after construction and safe to share
    across threads.
    """

    def __init__(self, params, regime, qstar, series, dense, n_comp, j_comp, q0):
        self.params = params
        self.regime = regime
        self.qstar = float(qstar)
        self.zstar = params.beta * self.qstar / (1.0 - params.beta * self.qstar)
        self.series = series
        self._dense = dense
        self._n_comp = n_comp
        self._j_comp = j_comp
        self.q0 = float(q0)
        self._m_of, self._ell_of = _fast_envelopes(params)
        if regime is Regime.CORNER:
            self.n_at_qstar = float(eval_m(self.qstar, params))
        else:
            self.n_at_qstar = float(self._dense.eval(self.qstar, n_comp))
        self._j_at_qstar = float(self._dense.eval(self.qstar, j_comp))
        self._j_at_q0 = float(self._dense.eval(self.q0, j_comp))
        # Scalar-path constants.
        b, lam = params.beta, params.lam
        self._b = b
        self._scale = b / (b + lam)
        self._rr = params.rho - params.r
        self._k = excess_premium(params)
        self._d0 = b * lam / (b + lam)
        if regime is Regime.GENERAL:
            self._nprime0 = self._scale * (self._rr + self._k - lam) + series.alpha

    def n(self, q):
        """Transformed value function n(q), clamped to n(q*) beyond q*."""
        q_arr = np.asarray(q, dtype=float)
        scalar = q_arr.ndim == 0
        qs = np.atleast_1d(q_arr).copy()
        out = np.empty_like(qs)
        if self.regime is Regime.CORNER:
            inside = qs < self.qstar
            out[inside] = eval_m(qs[inside], self.params)
            out[~inside] = self.n_at_qstar
        else:
            lo = qs <= self.q0
            hi = qs >= self.qstar
            mid = ~(lo | hi)
            if np.any(lo):
                out[lo] = self._series_n(qs[lo])
            if np.any(mid):
                out[mid] = self._dense.eval(qs[mid], self._n_comp)
            out[hi] = self.n_at_qstar
        return float(out[0]) if scalar else out

    def n_prime(self, q):
        """Derivative n'(q); exactly zero at and beyond the crossing."""
        q_arr = np.asarray(q, dtype=float)
        scalar = q_arr.ndim == 0
        qs = np.atleast_1d(q_arr)
        out = np.zeros_like(qs)
        inside = qs < self.qstar
        if self.regime is Regime.CORNER:
            out[inside] = eval_m_prime(qs[inside], self.params)
        else:
            lo = inside & (qs <= self.q0)
            mid = inside & (qs > self.q0)
            if np.any(lo):
                s = self.series
                out[lo] = (eval_ell_prime(qs[lo], self.params)
                           + s.alpha + s.chi2 * qs[lo])
            if np.any(mid):
                b = self.params.beta
                qm = qs[mid]
                nm = self._dense.eval(qm, self._n_comp)
                mm = eval_m(qm, self.params)
                lm = eval_ell(qm, self.params)
                out[mid] = (b * b * qm / (1.0 - b * qm)) * (mm - nm) / (nm - lm)
        return float(out[0]) if scalar else out

    def z_integral(self, q):
        """The coordinate-change integral I(q) = int_q^{q*} n'(v)/(beta v) dv.

        Evaluated from the quadrature carried along the integration, with a
        closed-form series tail below the start abscissa q0.  Diverges
        logarithmically as q -> 0, which sends z(q) -> 0.
        """
        q_arr = np.asarray(q, dtype=float)
        scalar = q_arr.ndim == 0
        qs = np.atleast_1d(q_arr)
        if np.any(qs <= 0.0) or np.any(qs > self.qstar * (1.0 + 1e-12)):
            raise DomainError("z_integral requires 0 < q <= q*")
        qs = np.minimum(qs, self.qstar)
        out = np.empty_like(qs)
        lo = qs < self.q0
        hi = ~lo
        if np.any(hi):
            out[hi] = self._j_at_qstar - self._dense.eval(qs[hi], self._j_comp)
        if np.any(lo):
            head = self._j_at_qstar - self._j_at_q0
            out[lo] = head + self._series_tail(qs[lo])
        return float(out[0]) if scalar else out

    def m(self, q):
        return eval_m(q, self.params)

    def ell(self, q):
        return eval_ell(q, self.params)

    def curve_table(self, num=512):
        """Arrays (q, n, m, ell, nprime) on a uniform grid over (0, q*]."""
        qs = np.linspace(self.qstar / num, self.qstar, num)
        return {
            "q": qs,
            "n": self.n(qs),
            "m": eval_m(qs, self.params),
            "ell": eval_ell(qs, self.params),
            "nprime": self.n_prime(qs),
        }

    # -- scalar hot paths --------------------------------------------------

    def n_scalar(self, q):
        """Scalar n(q) without array wrapping."""
        if q >= self.qstar:
            return self.n_at_qstar
        if self.regime is Regime.CORNER:
            return self._m_of(q)
        if q <= self.q0:
            s = self.series
            return self._ell_of(q) + s.alpha * q + 0.5 * s.chi2 * q * q
        return self._dense.eval_scalar(q, self._n_comp)

    def n_prime_scalar(self, q):
        """Scalar n'(q); exactly zero at and beyond q*."""
        if q >= self.qstar:
            return 0.0
        b = self._b
        if self.regime is Regime.CORNER:
            return self._scale * (self._rr - self.params.lam / (1.0 - b * q))
        if q <= self.q0:
            s = self.series
            mprime = self._scale * (self._rr - self.params.lam / (1.0 - b * q))
            return mprime + self._scale * self._k + s.alpha + s.chi2 * q
        n = self._dense.eval_scalar(q, self._n_comp)
        return (b * b * q / (1.0 - b * q)) * (self._m_of(q) - n) / (n - self._ell_of(q))

    def z_integral_scalar(self, q):
        """Scalar I(q) = int_q^{q*} n'(v)/(beta v) dv for 0 < q <= q*."""
        if q >= self.qstar:
            return 0.0
        if q >= self.q0:
            return self._j_at_qstar - self._dense.eval_scalar(q, self._j_comp)
        head = self._j_at_qstar - self._j_at_q0
        b = self._b
        q0 = self.q0
        if self.regime is Regime.CORNER:
            lam = self.params.lam
            tail = ((self._rr - lam) * math.log(q0 / q)
                    + lam * math.log((1.0 - b * q0) / (1.0 - b * q))) / (b + lam)
        else:
            s = self.series
            tail = (self._nprime0 * math.log(q0 / q) + s.chi2 * (q0 - q)
                    + self._d0 * math.log((1.0 - b * q0) / (1.0 - b * q))) / b
        return head + tail

    # -- private helpers -------------------------------------------------

    def _series_n(self, qs):
        s = self.series
        return (eval_ell(qs, self.params) + s.alpha * qs
                + 0.5 * s.chi2 * qs * qs)

    def _series_tail(self, qs):
        """Closed form of int_q^{q0} n'(v)/(beta v) dv under the series."""
        p = self.params
        b, lam = p.beta, p.lam
        q0 = self.q0
        if self.regime is Regime.CORNER:
            # n' = m' exactly; the integrand has an elementary antiderivative.
            return ((p.rho - p.r - lam) * np.log(q0 / qs)
                    + lam * np.log((1.0 - b * q0) / (1.0 - b * qs))) / (b + lam)
        s = self.series
        d0 = b * lam / (b + lam)
        nprime0 = float(eval_ell_prime(0.0, p)) + s.alpha
        return (nprime0 * np.log(q0 / qs) + s.chi2 * (q0 - qs)
                + d0 * np.log((1.0 - b * q0) / (1.0 - b * qs))) / b


def _bisect_to(f, lo, hi, f_lo, xtol, ftol):
    """Bisection on a bracketing interval until |f| <= ftol and width <= xtol."""
    f_mid = f_lo
    mid = lo
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f_mid = f(mid)
        if abs(f_mid) <= ftol and (hi - lo) <= xtol:
            return mid
        if (f_mid < 0.0) == (f_lo < 0.0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
        if hi - lo <= max(xtol * 1e-6, 5e-16 * abs(hi)):
            return 0.5 * (lo + hi)
    return mid


def solve_frontier(params: ModelParams, tol: float = 1e-9, *,
                   rtol: float = 1e-10, atol: float = 1e-12,
                   epsilon: float = 1e-6) -> FrontierSolution:
    """Locate the free boundary q* and the dense solution n on [0, q*].

    General regime: adaptive RK45 on [n, J] from the series seed at
    q0 = epsilon/beta, where J carries the coordinate-change quadrature
    J(q) = int_{q0}^{q} n'(v)/(beta v) dv.  The crossing of n through m is
    event-detected and refined by bisection on the dense output until
    |n - m| <= 1e-12 and the bracket is below ``tol``.

    Corner regime: returns the closed form n == m with q* at the turning
    point of m (only J is integrated numerically).

    Degenerate regime: no frontier exists (conceptually z* = 0); raises
    UnsupportedRegimeError.
    """
    regime = classify_regime(params)
    if regime is Regime.DEGENERATE:
        raise UnsupportedRegimeError(
            "degenerate regime has no frontier (immediate liquidation, z* = 0)")
    b = params.beta
    if regime is Regime.CORNER:
        return _solve_corner(params, epsilon, rtol, atol)

    start = series_start(params, epsilon)
    q0 = start.q0
    m_of, ell_of = _fast_envelopes(params)
    n0 = ell_of(q0) + start.alpha * q0 + 0.5 * start.chi2 * q0 * q0
    qmax = (1.0 - _QMAX_MARGIN) / b

    def rhs(q, y):
        n = float(y[0])
        gap = n - ell_of(q)
        if gap <= 0.0:
            gap = 1e-300  # trial stage below the envelope; slope blows up and the step is rejected
        nprime = (b * b * q / (1.0 - b * q)) * (m_of(q) - n) / gap
        return (nprime, nprime / (b * q))

    def ev_cross(q, y):
        return y[0] - m_of(q)

    ev_cross.terminal = True
    ev_cross.direction = 1.0

    def ev_floor(q, y):
        return (y[0] - ell_of(q)) - _FLOOR_GAP

    ev_floor.terminal = True
    ev_floor.direction = -1.0

    sol = solve_ivp(rhs, (q0, qmax), (n0, 0.0), method="RK45",
                    rtol=rtol, atol=atol, dense_output=True,
                    events=(ev_cross, ev_floor))
    if sol.t_events[1].size > 0:
        q_bad = float(sol.t_events[1][0])
        gap = float(sol.sol(q_bad)[0] - ell_of(q_bad))
        raise SolverFailureError(
            f"solution touched the lower envelope at q={q_bad:.6g} (gap={gap:.3g}); "
            "tighten rtol/atol", last_q=q_bad, gap=gap)
    if sol.status == -1 or sol.t_events[0].size == 0:
        last_q = float(sol.t[-1])
        gap = float(sol.y[0, -1] - ell_of(last_q)) if sol.y.size else math.nan
        raise SolverFailureError(
            f"no crossing of the upper envelope before q={last_q:.6g}: {sol.message}",
            last_q=last_q, gap=gap)

    dense = _DenseSolution(sol.sol)
    q_event = float(sol.t_events[0][0])
    qstar = _refine_crossing(dense, 0, m_of, q_event, tol)
    return FrontierSolution(params, regime, qstar, start, dense,
                            n_comp=0, j_comp=1, q0=q0)


def _refine_crossing(dense, comp, target_of, q_event, tol):
    """Bracket the event inside its RK step and bisect n - m to 1e-12."""

    def f(q):
        return dense.eval(q, comp) - target_of(q)

    i = min(np.searchsorted(dense.t_end, q_event, side="left"), len(dense.t0) - 1)
    lo, hi = dense.t0[i], dense.t_end[i]
    f_lo, f_hi = f(lo), f(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if f_lo * f_hi > 0.0:
        # Event sits on a step edge; widen to the neighbouring steps.
        lo = dense.t0[max(i - 1, 0)]
        hi = dense.t_end[min(i + 1, len(dense.t0) - 1)]
        f_lo = f(lo)
    return _bisect_to(f, lo, hi, f_lo, xtol=tol, ftol=1e-12)


def _solve_corner(params, epsilon, rtol, atol):
    """Corner regime: n == m in closed form; integrate only the quadrature J."""
    qstar = corner_qstar(params)
    b = params.beta
    q0 = epsilon / b
    rr_lam = params.rho - params.r
    lam = params.lam
    scale = b / (b + lam)

    def rhs(q, y):
        mprime = scale * (rr_lam - lam / (1.0 - b * q))
        return (mprime / (b * q),)

    sol = solve_ivp(rhs, (q0, qstar), (0.0,), method="RK45",
                    rtol=rtol, atol=atol, dense_output=True)
    if sol.status != 0:
        raise SolverFailureError(f"corner quadrature failed: {sol.message}",
                                 last_q=float(sol.t[-1]))
    dense = _DenseSolution(sol.sol)
    return FrontierSolution(params, Regime.CORNER, qstar, None, dense,
                            n_comp=0, j_comp=0, q0=q0)


def solve_frontier_b(params: ModelParams, tol: float = 1e-9, *,
                     rtol: float = 1e-10, atol: float = 1e-12,
                     epsilon: float = 1e-6, full_output: bool = False):
    """Locate q* through the equivalent b-formulation.

    Integrates b' = P(q, b) towards the first zero of b, refined by
    bisection to |b| <= 1e-12 and bracket width below ``tol``.  The initial
    value b(0) = (mu-rho)^2/(2 beta sigma^2) sits exactly on the envelope
    gap (the denominator of P vanishes there, mirroring the singular origin
    of the n-form), so integration starts at q0 = epsilon/beta from the
    series image b = k (1/beta - q) - ((beta+lam)/beta) chi.

    With ``full_output=True`` also returns the dense b(q) representation
    (None in the corner regime, which dispatches to the closed form).
    """
    regime = classify_regime(params)
    if regime is Regime.DEGENERATE:
        raise UnsupportedRegimeError(
            "degenerate regime has no frontier (immediate liquidation, z* = 0)")
    if regime is Regime.CORNER:
        qstar = corner_qstar(params)
        return (qstar, None) if full_output else qstar

    b, lam = params.beta, params.lam
    k = excess_premium(params)
    qmax = (1.0 - _QMAX_MARGIN) / b
    start = series_start(params, epsilon)
    q0 = start.q0
    scale = (b + lam) / b
    b_init = (k / b - (k + scale * start.alpha) * q0
              - 0.5 * scale * start.chi2 * q0 * q0)

    def rhs(q, y):
        bval = float(y[0])
        gap = k * (1.0 / b - q) - bval
        if gap <= 0.0:
            gap = 1e-300
        return (params.rho - params.r - lam / (1.0 - b * q)
                - ((b + lam) * b * q / (1.0 - b * q)) * bval / gap,)

    def ev_zero(q, y):
        return y[0]

    ev_zero.terminal = True
    ev_zero.direction = -1.0

    def ev_gap(q, y):
        return (k * (1.0 / b - q) - y[0]) - _FLOOR_GAP

    ev_gap.terminal = True
    ev_gap.direction = -1.0

    sol = solve_ivp(rhs, (q0, qmax), (b_init,), method="RK45",
                    rtol=rtol, atol=atol, dense_output=True,
                    events=(ev_zero, ev_gap))
    if sol.t_events[1].size > 0:
        q_bad = float(sol.t_events[1][0])
        raise SolverFailureError(
            f"b-solution touched the envelope gap at q={q_bad:.6g}", last_q=q_bad)
    if sol.status == -1 or sol.t_events[0].size == 0:
        last_q = float(sol.t[-1])
        raise SolverFailureError(
            f"b never crossed zero before q={last_q:.6g}: {sol.message}", last_q=last_q)

    dense = _DenseSolution(sol.sol)
    q_event = float(sol.t_events[0][0])
    qstar = _refine_crossing(dense, 0, lambda q: 0.0, q_event, tol)
    return (qstar, dense) if full_output else qstar
