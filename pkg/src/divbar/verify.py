"""Independent certification of the HJB variational inequality.

The constructed value function must satisfy min(-LV, -MV) = 0 with

    Lf = -ln f_x - 1 + r f_x x + rho f_s s
         - (mu-rho)^2 [f_s]^2 / (2 sigma^2 f_ss) - (beta+lam) f + lam F(x)
    Mf = f_x - f_s

where LV = 0 binds below the barrier and MV = 0 binds above it.  All
derivatives here come from centered finite differences of ``value()``; the
semi-analytic derivatives of the policy engine are deliberately not used,
so this check exercises the whole transform chain end to end.

The finite-difference step is ``fd_step`` relative to the state scale
(s + x); one common absolute step serves both partials, which makes the
M-residual vanish identically wherever V depends on s + x only.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConcavityViolationError
from .model import post_default_value
from .policy import PolicyEngine

__all__ = [
    "GridSpec",
    "Tolerances",
    "SmoothFit",
    "ResidualReport",
    "residual_L",
    "residual_M",
    "smooth_fit",
    "verify",
]


@dataclass(frozen=True)
class GridSpec:
    """Rectangular log-grid in (z, x); s = z * x at every node.

    The z-range covers [z_lo_frac, z_hi_frac] times the barrier z* (times a
    unit reference when the regime is degenerate and z* = 0), so both the
    deep no-dividend asymptotics and the dividend region are exercised.
    """

    nz: int = 64
    nx: int = 64
    z_lo_frac: float = 1e-3
    z_hi_frac: float = 10.0
    x_lo: float = 0.25
    x_hi: float = 4.0

    def nodes(self, zstar):
        z_ref = zstar if zstar > 0.0 else 1.0
        zs = np.geomspace(self.z_lo_frac * z_ref, self.z_hi_frac * z_ref, self.nz)
        xs = np.geomspace(self.x_lo, self.x_hi, self.nx)
        return zs, xs

    def describe(self, zstar):
        zs, xs = self.nodes(zstar)
        return (f"{self.nz}x{self.nx} log grid, z in [{zs[0]:.6g}, {zs[-1]:.6g}], "
                f"x in [{xs[0]:.6g}, {xs[-1]:.6g}]")


@dataclass(frozen=True)
class Tolerances:
    """Per-region residual budgets; defaults match the acceptance gates."""

    l_nodiv: float = 5e-4
    m_nodiv: float = 1e-6
    m_div: float = 1e-8
    l_div: float = 1e-6
    smooth_g: float = 1e-8
    smooth_gp: float = 1e-6
    smooth_gpp: float = 1e-4


@dataclass(frozen=True)
class SmoothFit:
    """One-sided left limits of the pasting data at z* and their errors."""

    zg_left: float
    z2g_left: float
    dg: float
    dgp: float
    dgpp: float


@dataclass
class ResidualReport:
    """Residual maxima per region plus the smooth-fit errors at z*."""

    grid_spec: str
    fd_step: float
    max_abs_L_residual_nodiv: float
    max_M_violation_nodiv: float
    max_L_violation_div: float
    max_abs_M_residual_div: float
    smooth_fit_errors: tuple
    n_nodiv: int
    n_div: int
    concavity_violations: int
    passed: bool
    nodes: list = field(default_factory=list, repr=False)

    def to_dict(self):
        d = {
            "grid_spec": self.grid_spec,
            "fd_step": self.fd_step,
            "max_abs_L_residual_nodiv": self.max_abs_L_residual_nodiv,
            "max_M_violation_nodiv": self.max_M_violation_nodiv,
            "max_L_violation_div": self.max_L_violation_div,
            "max_abs_M_residual_div": self.max_abs_M_residual_div,
            "smooth_fit_errors": {
                "dg": self.smooth_fit_errors[0],
                "dgp": self.smooth_fit_errors[1],
                "dgpp": self.smooth_fit_errors[2],
            },
            "n_nodiv": self.n_nodiv,
            "n_div": self.n_div,
            "concavity_violations": self.concavity_violations,
            "passed": self.passed,
        }
        return d

    def to_json(self, indent=2):
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)


def _fd_state(engine, s, x, fd_step):
    """Common absolute step and the five value samples of the L-stencil."""
    h = fd_step * (s + x)
    h = min(h, 0.5 * s, 0.5 * x)
    v0 = engine.value(s, x).v
    vps = engine.value(s + h, x).v
    vms = engine.value(s - h, x).v
    vpx = engine.value(s, x + h).v
    vmx = engine.value(s, x - h).v
    return h, v0, vps, vms, vpx, vmx


def residual_L(engine: PolicyEngine, s, x, fd_step: float = 1e-4):
    """LV at (s, x) from second-order centered differences of value().

    The leverage term is evaluated as written and set to zero when
    mu == rho.  A non-concave stencil (f_ss >= 0) raises
    ConcavityViolationError instead of dividing through.
    """
    if s <= 0.0 or x <= 0.0:
        raise ValueError("residual_L requires s > 0 and x > 0")
    p = engine.params
    h, v0, vps, vms, vpx, vmx = _fd_state(engine, s, x, fd_step)
    v_s = (vps - vms) / (2.0 * h)
    v_x = (vpx - vmx) / (2.0 * h)
    v_ss = (vps - 2.0 * v0 + vms) / (h * h)
    if p.mu == p.rho:
        quad = 0.0
    else:
        if v_ss >= 0.0:
            raise ConcavityViolationError(
                f"f_ss = {v_ss:.3e} >= 0 from the stencil at ({s}, {x})")
        d = p.mu - p.rho
        quad = d * d * v_s * v_s / (2.0 * p.sigma * p.sigma * v_ss)
    if v_x <= 0.0:
        raise ConcavityViolationError(
            f"f_x = {v_x:.3e} <= 0 from the stencil at ({s}, {x})")
    return (-math.log(v_x) - 1.0 + p.r * v_x * x + p.rho * v_s * s - quad
            - (p.beta + p.lam) * v0 + p.lam * float(post_default_value(x, p)))


def residual_M(engine: PolicyEngine, s, x, fd_step: float = 1e-4):
    """MV = V_x - V_s via a centered stencil along the dividend ray.

    Finite-differencing V(s - h, x + h) against V(s + h, x - h) measures the
    directional derivative of paying a lump dividend; wherever V depends on
    s + x only the two samples coincide and the residual is exactly zero.
    """
    if s <= 0.0 or x <= 0.0:
        raise ValueError("residual_M requires s > 0 and x > 0")
    h = fd_step * (s + x)
    h = min(h, 0.5 * s, 0.5 * x)
    return (engine.value(s - h, x + h).v - engine.value(s + h, x - h).v) / (2.0 * h)


def smooth_fit(engine: PolicyEngine, delta_rel: float = 2e-3) -> SmoothFit:
    """One-sided pasting check of g, g' and g'' at the barrier.

    The left limits are third-order one-sided differences of
    g(z) = value(z, 1); the right limits are the dividend-region closed form
    (1/beta) ln(1+z) + const, whose derivatives are exact.
    """
    zs = engine.zstar
    if zs <= 0.0:
        raise ValueError("smooth_fit requires a positive barrier")
    d = delta_rel * zs
    f = [engine.value(zs - k * d, 1.0).v for k in range(5)]
    gp_left = (11.0 * f[0] - 18.0 * f[1] + 9.0 * f[2] - 2.0 * f[3]) / (6.0 * d)
    gpp_left = (35.0 * f[0] - 104.0 * f[1] + 114.0 * f[2]
                - 56.0 * f[3] + 11.0 * f[4]) / (12.0 * d * d)
    b = engine.params.beta
    g_right = math.log1p(zs) / b + engine._div_const
    gp_right = 1.0 / (b * (1.0 + zs))
    gpp_right = -1.0 / (b * (1.0 + zs) ** 2)
    return SmoothFit(
        zg_left=zs * gp_left,
        z2g_left=zs * zs * gpp_left,
        dg=abs(f[0] - g_right),
        dgp=abs(zs * (gp_left - gp_right)),
        dgpp=abs(zs * zs * (gpp_left - gpp_right)),
    )


def verify(engine: PolicyEngine, grid: GridSpec | None = None,
           fd_step: float = 1e-4, tol: Tolerances | None = None,
           richardson: bool = False, collect_nodes: bool = False) -> ResidualReport:
    """Sweep the grid, assemble residual maxima and flag pass/fail.

    Nodes on the s = 0 axis are excluded: no dividend can be paid out of a
    firm with zero equity, so the gradient constraint is not required there.
    Failures are reported as data, never raised.
    """
    grid = grid or GridSpec()
    tol = tol or Tolerances()
    zs, xs = grid.nodes(engine.zstar)
    zstar = engine.zstar

    max_l_nodiv = 0.0
    max_m_nodiv = 0.0
    max_l_div = 0.0
    max_m_div = 0.0
    n_nodiv = n_div = 0
    violations = 0
    rows = []

    for z in zs:
        for x in xs:
            s = z * x
            try:
                lv = _residual_L_maybe_rich(engine, s, x, fd_step, richardson)
                mv = _residual_M_maybe_rich(engine, s, x, fd_step, richardson)
            except ConcavityViolationError:
                violations += 1
                continue
            if z <= zstar:
                n_nodiv += 1
                max_l_nodiv = max(max_l_nodiv, abs(lv))
                max_m_nodiv = max(max_m_nodiv, mv)
            else:
                n_div += 1
                max_l_div = max(max_l_div, lv)
                max_m_div = max(max_m_div, abs(mv))
            if collect_nodes:
                rows.append({"s": s, "x": x, "z": z,
                             "region": "NoDividend" if z <= zstar else "DividendPay",
                             "L_residual": lv, "M_residual": mv})

    if zstar > 0.0:
        sf = smooth_fit(engine)
        sf_errors = (sf.dg, sf.dgp, sf.dgpp)
        sf_ok = (sf.dg <= tol.smooth_g and sf.dgp <= tol.smooth_gp
                 and sf.dgpp <= tol.smooth_gpp)
    else:
        sf_errors = (0.0, 0.0, 0.0)
        sf_ok = True

    passed = (max_l_nodiv <= tol.l_nodiv
              and max_m_nodiv <= tol.m_nodiv
              and max_l_div <= tol.l_div
              and max_m_div <= tol.m_div
              and violations == 0
              and sf_ok)
    return ResidualReport(
        grid_spec=grid.describe(zstar),
        fd_step=fd_step,
        max_abs_L_residual_nodiv=max_l_nodiv,
        max_M_violation_nodiv=max(max_m_nodiv, 0.0),
        max_L_violation_div=max(max_l_div, 0.0),
        max_abs_M_residual_div=max_m_div,
        smooth_fit_errors=sf_errors,
        n_nodiv=n_nodiv,
        n_div=n_div,
        concavity_violations=violations,
        passed=passed,
        nodes=rows,
    )


def _residual_L_maybe_rich(engine, s, x, fd_step, richardson):
    lv = residual_L(engine, s, x, fd_step)
    if not richardson:
        return lv
    lv_half = residual_L(engine, s, x, fd_step / 2.0)
    return (4.0 * lv_half - lv) / 3.0


def _residual_M_maybe_rich(engine, s, x, fd_step, richardson):
    mv = residual_M(engine, s, x, fd_step)
    if not richardson:
        return mv
    mv_half = residual_M(engine, s, x, fd_step / 2.0)
    return (4.0 * mv_half - mv) / 3.0
