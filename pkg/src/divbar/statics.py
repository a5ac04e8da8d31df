"""Parameter sweeps for the comparative statics of the barrier and controls.

Each sweep re-solves the frontier along a one-dimensional parameter grid
and tabulates z*, q* and the controls theta, cbar, pi* sampled two ways:
at fixed quantiles of each row's own no-dividend region (0, z*], and at
fixed absolute ratios z inside every row's region.  The absolute-z columns
are the ones comparable pointwise across rows; the quantile columns track
the moving barrier.
"""

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ParameterError, SolverFailureError
from .model import ModelParams, Regime, classify_regime
from .policy import PolicyEngine

__all__ = ["SweepRow", "SweepTable", "MonotonicityResult", "sweep", "monotonicity_check"]

_PARAM_ATTR = {"lambda": "lam", "r": "r", "sigma": "sigma", "mu": "mu"}

_DEFAULT_QUANTILES = (0.25, 0.5, 0.75, 1.0)


@dataclass(frozen=True)
class SweepRow:
    value: float
    qstar: float
    zstar: float
    theta_q: tuple
    cbar_q: tuple
    pi_q: tuple
    theta_abs: tuple
    cbar_abs: tuple
    pi_abs: tuple


@dataclass
class SweepTable:
    """Comparative-statics records, sorted by parameter value."""

    param_name: str
    quantiles: tuple
    abs_z: tuple
    rows: list
    gaps: list

    def column(self, name):
        """Extract a named column as an array.

        Names: qstar, zstar, theta_q<pct>, cbar_q<pct>, pi_q<pct>,
        theta_abs<i>, cbar_abs<i>, pi_abs<i>, value.
        """
        return np.array([_row_field(row, name, self.quantiles) for row in self.rows])

    def column_names(self):
        names = ["value", "qstar", "zstar"]
        for prefix in ("theta", "cbar", "pi"):
            names += [f"{prefix}_q{int(round(100 * q))}" for q in self.quantiles]
        for prefix in ("theta", "cbar", "pi"):
            names += [f"{prefix}_abs{i + 1}" for i in range(len(self.abs_z))]
        return names

    def write_csv(self, path, float_fmt=".12g"):
        """One file per sweep; the header names every column.

        A comment-free preamble row is not emitted: the absolute sampling
        ratios appear as dedicated columns abs_z<i>.
        """
        names = self.column_names() + [f"abs_z{i + 1}" for i in range(len(self.abs_z))]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["param"] + names)
            for row in self.rows:
                rec = [self.param_name]
                for name in self.column_names():
                    rec.append(format(_row_field(row, name, self.quantiles), float_fmt))
                rec += [format(z, float_fmt) for z in self.abs_z]
                w.writerow(rec)


def _row_field(row, name, quantiles):
    if name in ("value", "qstar", "zstar"):
        return getattr(row, name)
    for prefix, attr in (("theta_q", "theta_q"), ("cbar_q", "cbar_q"), ("pi_q", "pi_q")):
        if name.startswith(prefix):
            pct = int(name[len(prefix):])
            for i, q in enumerate(quantiles):
                if int(round(100 * q)) == pct:
                    return getattr(row, attr)[i]
            raise KeyError(f"no quantile {pct} in {quantiles}")
    for prefix, attr in (("theta_abs", "theta_abs"), ("cbar_abs", "cbar_abs"),
                         ("pi_abs", "pi_abs")):
        if name.startswith(prefix):
            return getattr(row, attr)[int(name[len(prefix):]) - 1]
    raise KeyError(f"unknown column {name!r}")


@dataclass(frozen=True)
class MonotonicityResult:
    column: str
    expected: str
    passed: bool
    first_violation: int | None


def sweep(base: ModelParams, param_name: str, grid, quantiles=_DEFAULT_QUANTILES,
          abs_z=None, tol: float = 1e-9, **solver_kwargs) -> SweepTable:
    """Solve the frontier along a parameter grid and tabulate the controls.

    Every grid point must map to a valid, non-degenerate parameter set.  A
    point whose frontier integration fails is recorded in ``gaps`` and left
    out of the table; it is not an error.  When ``abs_z`` is omitted, the
    absolute ratios default to {0.25, 0.5, 0.75} of the smallest barrier
    across converged rows, so they lie inside every no-dividend region.
    """
    if param_name not in _PARAM_ATTR:
        raise ParameterError(
            f"param_name must be one of {sorted(_PARAM_ATTR)}, got {param_name!r}")
    attr = _PARAM_ATTR[param_name]
    values = sorted(float(v) for v in grid)
    if len(values) == 0:
        raise ParameterError("empty sweep grid")

    engines = []
    gaps = []
    for v in values:
        params = replace(base, **{attr: v})
        if classify_regime(params) is Regime.DEGENERATE:
            raise ParameterError(
                f"{param_name}={v} yields the degenerate regime; no frontier to sweep")
        try:
            engines.append((v, PolicyEngine.from_params(params, tol, **solver_kwargs)))
        except SolverFailureError:
            gaps.append(v)

    if not engines:
        raise SolverFailureError("no grid point converged")
    if abs_z is None:
        z_floor = min(eng.zstar for _, eng in engines)
        abs_z = tuple(f * z_floor for f in (0.25, 0.5, 0.75))
    else:
        abs_z = tuple(float(z) for z in abs_z)

    rows = []
    for v, eng in engines:
        p = eng.params
        merton = (p.mu - p.rho) / (p.sigma * p.sigma)
        zq = [f * eng.zstar for f in quantiles]
        th_q = tuple(eng.theta(z) for z in zq)
        cb_q = tuple(eng.cbar(z) for z in zq)
        pi_q = tuple(merton * t for t in th_q)
        th_a, cb_a, pi_a = [], [], []
        for z in abs_z:
            if 0.0 < z <= eng.zstar:
                t = eng.theta(z)
                th_a.append(t)
                cb_a.append(eng.cbar(z))
                pi_a.append(merton * t)
            else:
                th_a.append(math.nan)
                cb_a.append(math.nan)
                pi_a.append(math.nan)
        rows.append(SweepRow(value=v, qstar=eng.qstar, zstar=eng.zstar,
                             theta_q=th_q, cbar_q=cb_q, pi_q=pi_q,
                             theta_abs=tuple(th_a), cbar_abs=tuple(cb_a),
                             pi_abs=tuple(pi_a)))
    return SweepTable(param_name=param_name, quantiles=tuple(quantiles),
                      abs_z=abs_z, rows=rows, gaps=gaps)


def monotonicity_check(table: SweepTable, column: str, expected: str,
                       slack: float = 1e-8) -> MonotonicityResult:
    """Strict monotonicity of a column along the parameter grid.

    Adjacent differences must exceed ``slack`` in the expected direction
    (so a constant column fails at the first pair).  Returns the index of
    the second row of the first violating pair, or None when the check
    passes.
    """
    if len(table.rows) < 3:
        raise ParameterError("monotonicity_check needs at least 3 rows")
    if expected not in ("increasing", "decreasing"):
        raise ParameterError(f"expected must be increasing|decreasing, got {expected!r}")
    col = table.column(column)
    diffs = np.diff(col)
    bad = diffs <= slack if expected == "increasing" else diffs >= -slack
    if np.any(bad):
        return MonotonicityResult(column=column, expected=expected, passed=False,
                                  first_violation=int(np.argmax(bad)) + 1)
    return MonotonicityResult(column=column, expected=expected, passed=True,
                              first_violation=None)
