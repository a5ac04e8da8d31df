"""Value function and feedback policies reconstructed from the frontier.

On the no-dividend region the value has the form
V(s, x) = (1/beta) ln x + N(q(s/x)) + const, where N(q) =
(n(q) - ln(1/beta - q))/beta and q(z) inverts the coordinate link

    z(q) = (beta q / (1 - beta q)) * exp(-I(q)),
    I(q) = int_q^{q*} n'(v) / (beta v) dv.

Above the barrier z* the value depends on s + x only and a lump dividend
D = (s - z* x)/(1 + z*) restores the ratio to z* exactly.  Feedback
controls: c* = x / (1/beta - q) and pi* = ((mu-rho)/sigma^2) theta(z) with
theta = 1 / (1 - 1/N'(q)).
"""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import (
    DividendDueError,
    DomainError,
    NoActionError,
    ParameterError,
    UnsupportedRegimeError,
)
from .frontier import FrontierSolution, solve_frontier
from .model import ModelParams, Regime, classify_regime, eval_ell, post_default_value

__all__ = ["Region", "ValueBreakdown", "PolicyEngine"]

_REGION_NO_DIVIDEND = 0
_REGION_DIVIDEND = 1
_REGION_S0 = 2
_REGION_X0 = 3


class Region(Enum):
    NO_DIVIDEND = "NoDividend"
    DIVIDEND_PAY = "DividendPay"
    BOUNDARY_S0 = "Boundary_s0"
    BOUNDARY_X0 = "Boundary_x0"


_REGION_FROM_CODE = {
    _REGION_NO_DIVIDEND: Region.NO_DIVIDEND,
    _REGION_DIVIDEND: Region.DIVIDEND_PAY,
    _REGION_S0: Region.BOUNDARY_S0,
    _REGION_X0: Region.BOUNDARY_X0,
}


@dataclass(frozen=True)
class ValueBreakdown:
    """Value and semi-analytic derivatives at one state.

    ``q`` is the transformed coordinate, present only in the no-dividend
    region.  Derivatives may be infinite on the s = 0 boundary where the
    marginal value of the first unit of equity diverges.
    """

    v: float
    region: Region
    q: float | None
    v_s: float
    v_x: float
    v_ss: float


class PolicyEngine:
    """Evaluates V, pi*, c* and the dividend action across all regimes.

    Immutable after construction; all queries are pure functions of the
    arguments and safe for concurrent use.
    """

    def __init__(self, params: ModelParams, frontier: FrontierSolution | None = None,
                 zq_nodes: int = 2048):
        self.params = params
        self.regime = classify_regime(params)
        b, lam = params.beta, params.lam
        self._fc = (params.r / b + math.log(b) - 1.0) / b
        self._const_h = (lam * self._fc + params.r / b - 1.0) / (b + lam)
        if self.regime is Regime.DEGENERATE:
            if frontier is not None:
                raise ParameterError("degenerate regime carries no frontier")
            self.frontier = None
            self.qstar = 0.0
            self.zstar = 0.0
            self._div_const = self._fc
            return
        if frontier is None:
            frontier = solve_frontier(params)
        if frontier.params != params:
            raise ParameterError("frontier was solved for different parameters")
        self.frontier = frontier
        self.qstar = frontier.qstar
        self.zstar = frontier.zstar
        ell0 = float(eval_ell(0.0, params))
        self._div_const = frontier.n_at_qstar / b + self._fc - ell0 / b
        # Monotone tabulation of z(q), used to bracket inverse lookups.
        q_lo = frontier.q0
        self._q_tab = np.geomspace(q_lo, self.qstar, zq_nodes)
        self._q_tab[-1] = self.qstar
        self._z_tab = self._z_of_q_raw(self._q_tab)
        self._ln_q_tab = np.log(self._q_tab)
        self._ln_z_tab = np.log(self._z_tab)

    @classmethod
    def from_params(cls, params: ModelParams, tol: float = 1e-9, **solver_kwargs):
        """Solve the frontier (if any) and build the engine."""
        if classify_regime(params) is Regime.DEGENERATE:
            return cls(params)
        return cls(params, solve_frontier(params, tol, **solver_kwargs))

    # -- coordinate maps --------------------------------------------------

    def _require_frontier(self):
        if self.frontier is None:
            raise UnsupportedRegimeError(
                "operation undefined in the degenerate regime (immediate liquidation)")

    def _z_of_q_raw(self, q):
        b = self.params.beta
        q = np.asarray(q, dtype=float)
        return b * q / (1.0 - b * q) * np.exp(-self.frontier.z_integral(q))

    def z_of_q(self, q):
        """Map the transformed coordinate q in [0, q*] to the ratio z."""
        self._require_frontier()
        q_arr = np.asarray(q, dtype=float)
        scalar = q_arr.ndim == 0
        qs = np.atleast_1d(q_arr)
        if np.any(qs < 0.0) or np.any(qs > self.qstar * (1.0 + 1e-12)):
            raise DomainError(f"q must lie in [0, q*] = [0, {self.qstar}]")
        out = np.empty_like(qs)
        at_zero = qs == 0.0
        at_star = qs >= self.qstar
        mid = ~(at_zero | at_star)
        out[at_zero] = 0.0
        out[at_star] = self.zstar
        if np.any(mid):
            out[mid] = self._z_of_q_raw(qs[mid])
        return float(out[0]) if scalar else out

    def q_of_z(self, z):
        """Inverse of z_of_q on [0, z*], solved to near machine precision.

        Safeguarded Newton iteration in log coordinates; the tabulation
        built at construction provides the starting bracket.
        """
        self._require_frontier()
        z_arr = np.asarray(z, dtype=float)
        scalar = z_arr.ndim == 0
        zs = np.atleast_1d(z_arr)
        if np.any(zs < 0.0) or np.any(zs > self.zstar * (1.0 + 1e-12)):
            raise DomainError(f"z must lie in [0, z*] = [0, {self.zstar}]")
        if scalar:
            z_val = float(z_arr)
            if z_val <= 0.0:
                return 0.0
            if z_val >= self.zstar:
                return self.qstar
            return self._q_of_z_scalar(z_val)
        out = np.empty_like(zs)
        at_zero = zs <= 0.0
        at_star = zs >= self.zstar
        mid = ~(at_zero | at_star)
        out[at_zero] = 0.0
        out[at_star] = self.qstar
        if np.any(mid):
            out[mid] = self._invert_z(zs[mid])
        return out

    def _invert_z(self, zs):
        b = self.params.beta
        ln_target = np.log(zs)
        idx = np.searchsorted(self._z_tab, zs)
        hi = np.log(self._q_tab[np.minimum(idx, len(self._q_tab) - 1)])
        below = idx == 0
        lo = np.where(below, -745.0, np.log(self._q_tab[np.maximum(idx - 1, 0)]))
        # First guess: secant through the bracketing nodes, or tail slope
        # d ln z / d ln q = N'(q) below the tabulation.
        ln_z_hi = np.log(self._z_tab[np.minimum(idx, len(self._z_tab) - 1)])
        x = hi - (ln_z_hi - ln_target) / np.maximum(self._nprime_big(np.exp(hi)), 1.0)
        x = np.clip(x, lo, hi)
        for _ in range(100):
            q = np.exp(x)
            g = np.log(b * q / (1.0 - b * q)) - self.frontier.z_integral(q) - ln_target
            pos = g > 0.0
            hi = np.where(pos, np.minimum(hi, x), hi)
            lo = np.where(pos, lo, np.maximum(lo, x))
            step = g / self._nprime_big(q)
            if np.max(np.abs(step)) <= 1e-14:
                break
            x_new = x - step
            outside = (x_new < lo) | (x_new > hi)
            x = np.where(outside, 0.5 * (lo + hi), x_new)
        return np.exp(x)

    def _nprime_big(self, q):
        """N'(q) = n'(q)/beta + 1/(1 - beta q), the log-slope of z(q)."""
        b = self.params.beta
        return self.frontier.n_prime(q) / b + 1.0 / (1.0 - b * q)

    def _nprime_big_scalar(self, q):
        b = self.params.beta
        return self.frontier.n_prime_scalar(q) / b + 1.0 / (1.0 - b * q)

    def _q_of_z_scalar(self, z):
        """Safeguarded Newton for q(z) in log coordinates, 0 < z < z*."""
        fr = self.frontier
        b = self.params.beta
        ln_target = math.log(z)
        i = int(self._z_tab.searchsorted(z))
        if i == 0:
            hi = self._ln_q_tab[0]
            slope = self._nprime_big_scalar(self._q_tab[0])
            lo = -745.0
            x = hi - (self._ln_z_tab[0] - ln_target) / slope
        else:
            lo = self._ln_q_tab[i - 1]
            hi = self._ln_q_tab[i]
            frac = (ln_target - self._ln_z_tab[i - 1]) / (self._ln_z_tab[i] - self._ln_z_tab[i - 1])
            x = lo + frac * (hi - lo)
        if x < lo or x > hi:
            x = 0.5 * (lo + hi)
        for _ in range(80):
            q = math.exp(x)
            g = math.log(b * q / (1.0 - b * q)) - fr.z_integral_scalar(q) - ln_target
            if g > 0.0:
                hi = min(hi, x)
            else:
                lo = max(lo, x)
            step = g / self._nprime_big_scalar(q)
            if abs(step) <= 1e-14:
                return math.exp(x - step)
            x_new = x - step
            x = x_new if lo <= x_new <= hi else 0.5 * (lo + hi)
        return math.exp(x)

    # -- value ------------------------------------------------------------

    def value(self, s, x) -> ValueBreakdown:
        """Value and derivatives at the state (s, x).

        Raises DomainError at (0, 0), where the value is minus infinity.
        """
        s = float(s)
        x = float(x)
        if not (math.isfinite(s) and math.isfinite(x)) or s < 0.0 or x < 0.0:
            raise DomainError(f"state must be finite and non-negative, got ({s}, {x})")
        if s == 0.0 and x == 0.0:
            raise DomainError("value at (0, 0) is -infinity")
        p = self.params
        b = p.beta
        if self.regime is Regime.DEGENERATE:
            w = s + x
            v = math.log(w) / b + self._fc
            region = Region.BOUNDARY_S0 if s == 0.0 else Region.DIVIDEND_PAY
            return ValueBreakdown(v=v, region=region, q=None,
                                  v_s=1.0 / (b * w), v_x=1.0 / (b * w),
                                  v_ss=-1.0 / (b * w * w))
        if s == 0.0:
            return ValueBreakdown(v=math.log(x) / b + self._fc, region=Region.BOUNDARY_S0,
                                  q=None, v_s=math.inf, v_x=1.0 / (b * x), v_ss=-math.inf)
        if x == 0.0:
            return ValueBreakdown(v=math.log(s) / b + self._div_const,
                                  region=Region.BOUNDARY_X0, q=None,
                                  v_s=1.0 / (b * s), v_x=1.0 / (b * s),
                                  v_ss=-1.0 / (b * s * s))
        z = s / x
        if z > self.zstar:
            w = s + x
            return ValueBreakdown(v=math.log(w) / b + self._div_const,
                                  region=Region.DIVIDEND_PAY, q=None,
                                  v_s=1.0 / (b * w), v_x=1.0 / (b * w),
                                  v_ss=-1.0 / (b * w * w))
        q = self.q_of_z(z)
        nbig = (self.frontier.n_scalar(q) - math.log(1.0 / b - q)) / b
        npr = self._nprime_big_scalar(q)
        return ValueBreakdown(v=math.log(x) / b + nbig + self._const_h,
                              region=Region.NO_DIVIDEND, q=q,
                              v_s=q / s, v_x=(1.0 / b - q) / x,
                              v_ss=q * (1.0 / npr - 1.0) / (s * s))

    def value_array(self, s, x):
        """Vectorized value for strictly positive arrays (s, x).

        Returns (v, region_code) with codes 0 = no-dividend, 1 = dividend.
        Used by grid sweeps; boundary states take the scalar path.
        """
        s = np.asarray(s, dtype=float)
        x = np.asarray(x, dtype=float)
        if np.any(s <= 0.0) or np.any(x <= 0.0):
            raise DomainError("value_array requires s > 0 and x > 0")
        b = self.params.beta
        if self.regime is Regime.DEGENERATE:
            return np.log(s + x) / b + self._fc, np.ones(s.shape, dtype=np.int8)
        z = s / x
        div = z > self.zstar
        v = np.empty_like(z)
        v[div] = np.log(s[div] + x[div]) / b + self._div_const
        nd = ~div
        if np.any(nd):
            q = self.q_of_z(z[nd])
            nbig = (self.frontier.n(q) - np.log(1.0 / b - q)) / b
            v[nd] = np.log(x[nd]) / b + nbig + self._const_h
        return v, div.astype(np.int8)

    # -- feedback controls ------------------------------------------------

    def theta(self, z):
        """Scaled leverage theta(z) = 1/(1 - 1/N'(q(z))) on 0 < z <= z*."""
        self._require_frontier()
        z_arr = np.asarray(z, dtype=float)
        if np.any(np.atleast_1d(z_arr) <= 0.0):
            raise DomainError("theta requires z > 0")
        if np.any(np.atleast_1d(z_arr) > self.zstar * (1.0 + 1e-12)):
            raise DividendDueError("z > z*: apply dividend_action first")
        if z_arr.ndim == 0:
            q = self.q_of_z(min(float(z_arr), self.zstar))
            return 1.0 / (1.0 - 1.0 / self._nprime_big_scalar(q))
        q = self.q_of_z(np.minimum(z_arr, self.zstar))
        return 1.0 / (1.0 - 1.0 / self._nprime_big(q))

    def pi_star(self, s, x):
        """Optimal risky fraction pi*(s, x) = ((mu-rho)/sigma^2) theta(s/x).

        Identically zero in the corner regime where mu == rho.
        """
        self._require_frontier()
        if x <= 0.0:
            raise DomainError("pi_star requires x > 0")
        p = self.params
        return (p.mu - p.rho) / (p.sigma * p.sigma) * self.theta(s / x)

    def c_star(self, s, x):
        """Optimal consumption rate c*(s, x) = x / (1/beta - q(s/x)).

        Consumption is financed from the private account: x = 0 is a domain
        error.  In the degenerate regime the firm was liquidated at time
        zero and c* = beta (s + x) applies at the merged state.
        """
        if self.regime is Regime.DEGENERATE:
            if s + x <= 0.0:
                raise DomainError("c_star requires positive total wealth")
            return self.params.beta * (s + x)
        if x <= 0.0:
            raise DomainError("c_star requires x > 0 (consumption is financed privately)")
        z = s / x
        if z > self.zstar * (1.0 + 1e-12):
            raise DividendDueError("z > z*: apply dividend_action first")
        q = self.q_of_z(min(z, self.zstar))
        return x / (1.0 / self.params.beta - q)

    def cbar(self, z):
        """Consumption per unit private wealth, c*(s, x)/x, as a function of z."""
        self._require_frontier()
        q = self.q_of_z(z)
        return 1.0 / (1.0 / self.params.beta - q)

    def dividend_action(self, s, x):
        """Lump dividend D restoring s/x to z*; whole equity when degenerate.

        Raises NoActionError inside the no-dividend region (s/x <= z*).
        """
        if s < 0.0 or x < 0.0:
            raise DomainError(f"state must be non-negative, got ({s}, {x})")
        if self.regime is Regime.DEGENERATE:
            if s <= 0.0:
                raise NoActionError("nothing to liquidate: s = 0")
            return s
        if x == 0.0:
            if s <= 0.0:
                raise NoActionError("state (0, 0) has no dividend action")
            return (s - self.zstar * x) / (1.0 + self.zstar)
        if s / x <= self.zstar:
            raise NoActionError(f"s/x = {s / x} <= z* = {self.zstar}: no dividend is due")
        return (s - self.zstar * x) / (1.0 + self.zstar)

    # -- batch interface ---------------------------------------------------

    def batch_evaluate(self, states):
        """Evaluate a sequence of (s, x) pairs.

        Returns one dict per state with keys s, x, z, region, V, pi_star,
        c_star, dividend.  The controls are reported at the post-dividend
        state whenever a lump is due, matching how they would be applied.
        """
        rows = []
        for s, x in states:
            s = float(s)
            x = float(x)
            vb = self.value(s, x)
            try:
                div = self.dividend_action(s, x)
            except NoActionError:
                div = 0.0
            s_post, x_post = s - div, x + div
            if self.regime is Regime.DEGENERATE:
                pi = math.nan
                c = self.c_star(s, x)
            elif s_post == 0.0:
                pi = math.nan
                c = self.params.beta * x_post
            else:
                pi = self.pi_star(s_post, x_post)
                c = self.c_star(s_post, x_post)
            rows.append({
                "s": s, "x": x,
                "z": s / x if x > 0.0 else math.inf,
                "region": vb.region.value,
                "V": vb.v, "pi_star": pi, "c_star": c, "dividend": div,
            })
        return rows

    # -- simulation support -------------------------------------------------

    def policy_tables(self, n_nodes: int = 4097):
        """Uniform tables of pi*(z) and ln cbar(z) on [0, z*] for kernels.

        Node 0 carries the z -> 0 limits (theta(0+), cbar = beta).
        """
        self._require_frontier()
        p = self.params
        b = p.beta
        z_nodes = np.linspace(0.0, self.zstar, n_nodes)
        q_nodes = np.empty(n_nodes)
        q_nodes[0] = 0.0
        q_nodes[1:] = self.q_of_z(z_nodes[1:])
        npr = self.frontier.n_prime(q_nodes) / b + 1.0 / (1.0 - b * q_nodes)
        theta = 1.0 / (1.0 - 1.0 / npr)
        pi = (p.mu - p.rho) / (p.sigma * p.sigma) * theta
        ln_cbar = -np.log(1.0 / b - q_nodes)
        return z_nodes, pi, ln_cbar
