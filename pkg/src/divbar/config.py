"""Run configuration: a single JSON document driving every CLI command.

Unknown keys are rejected and missing required keys are reported by name,
section by section.  Command-line flags override file values; the resolved
configuration can be echoed back for reproducibility.
"""

import json
import math
from dataclasses import dataclass, field

from .errors import ConfigError
from .model import ModelParams
from .simulate import ConstantBarrier, ImmediateLiquidation, OptimalFeedback
from .verify import GridSpec, Tolerances

__all__ = ["RunConfig", "load_config", "resolve_policy", "dump_json"]

_MODEL_KEYS = ("mu", "sigma", "rho", "r", "beta", "lambda")
_SOLVE_KEYS = {"tol": 1e-9, "epsilon": 1e-6, "rtol": 1e-10, "atol": 1e-12,
               "curve_points": 0}
_VERIFY_TOL_KEYS = {"l_nodiv": 5e-4, "m_nodiv": 1e-6, "m_div": 1e-8, "l_div": 1e-6,
                    "smooth_g": 1e-8, "smooth_gp": 1e-6, "smooth_gpp": 1e-4}
_VERIFY_KEYS = {"nz": 64, "nx": 64, "z_lo_frac": 1e-3, "z_hi_frac": 10.0,
                "x_lo": 0.25, "x_hi": 4.0, "fd_step": 1e-4, "richardson": False,
                "nodes_csv": False, "tol": None}
_SIM_KEYS = {"s0": None, "x0": None, "dt": 1e-3, "horizon": 100.0,
             "n_paths": 10000, "seed": 0, "policy": None, "backend": None}
_SWEEP_KEYS = {"param": None, "grid": None, "quantiles": [0.25, 0.5, 0.75, 1.0],
               "abs_z": None, "checks": []}
_STATES_KEYS = {"csv": None}
_OUTPUT_KEYS = {"dir": ".", "format": "csv"}
_TOP_KEYS = ("model", "solve", "verify", "simulate", "sweep", "states", "output")


def _check_section(name, raw, allowed):
    unknown = sorted(set(raw) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown keys in '{name}': {', '.join(unknown)}")


def _merged(name, raw, defaults):
    _check_section(name, raw, defaults)
    out = dict(defaults)
    out.update(raw)
    return out


@dataclass
class RunConfig:
    """Validated configuration with per-command sections."""

    model: ModelParams
    solve: dict = field(default_factory=lambda: dict(_SOLVE_KEYS))
    verify: dict = field(default_factory=lambda: dict(_VERIFY_KEYS))
    simulate: dict = field(default_factory=lambda: dict(_SIM_KEYS))
    sweep: dict | None = None
    states_csv: str | None = None
    out_dir: str = "."
    out_format: str = "csv"

    def grid_spec(self) -> GridSpec:
        v = self.verify
        return GridSpec(nz=int(v["nz"]), nx=int(v["nx"]),
                        z_lo_frac=float(v["z_lo_frac"]), z_hi_frac=float(v["z_hi_frac"]),
                        x_lo=float(v["x_lo"]), x_hi=float(v["x_hi"]))

    def tolerances(self) -> Tolerances:
        t = self.verify.get("tol") or {}
        merged = _merged("verify.tol", t, _VERIFY_TOL_KEYS)
        return Tolerances(**merged)

    def to_dict(self):
        return {
            "model": self.model.to_dict(),
            "solve": self.solve,
            "verify": self.verify,
            "simulate": self.simulate,
            "sweep": self.sweep,
            "states": {"csv": self.states_csv},
            "output": {"dir": self.out_dir, "format": self.out_format},
        }


def load_config(path=None, overrides=None) -> RunConfig:
    """Parse and validate a config file, applying CLI overrides.

    ``overrides`` maps dotted keys ('model.mu', 'simulate.seed',
    'output.dir') to values; a None value leaves the file value in place.
    """
    doc = {}
    if path is not None:
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        except json.JSONDecodeError as e:
            raise ConfigError(f"config {path} is not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a JSON object")
    _check_section("<top level>", doc, _TOP_KEYS)

    for key, value in (overrides or {}).items():
        if value is None:
            continue
        section, _, leaf = key.partition(".")
        doc.setdefault(section, {})[leaf] = value

    model_raw = doc.get("model") or {}
    missing = [k for k in _MODEL_KEYS if k not in model_raw]
    if missing:
        raise ConfigError(f"missing model keys: {', '.join(missing)}")
    model = ModelParams.from_dict(model_raw)

    solve = _merged("solve", doc.get("solve") or {}, _SOLVE_KEYS)
    verify = _merged("verify", doc.get("verify") or {}, _VERIFY_KEYS)
    if verify["tol"] is not None:
        verify["tol"] = _merged("verify.tol", verify["tol"], _VERIFY_TOL_KEYS)
    simulate = _merged("simulate", doc.get("simulate") or {}, _SIM_KEYS)
    sweep = doc.get("sweep")
    if sweep is not None:
        sweep = _merged("sweep", sweep, _SWEEP_KEYS)
    states = _merged("states", doc.get("states") or {}, _STATES_KEYS)
    output = _merged("output", doc.get("output") or {}, _OUTPUT_KEYS)
    if output["format"] not in ("csv", "json"):
        raise ConfigError(f"output.format must be csv|json, got {output['format']!r}")

    return RunConfig(model=model, solve=solve, verify=verify, simulate=simulate,
                     sweep=sweep, states_csv=states["csv"],
                     out_dir=str(output["dir"]), out_format=output["format"])


def resolve_policy(spec):
    """Build a policy object from its config mapping."""
    if spec is None:
        return OptimalFeedback()
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError("simulate.policy must be an object with a 'kind' key")
    kind = spec["kind"]
    if kind == "optimal_feedback":
        _check_section("simulate.policy", spec, ("kind",))
        return OptimalFeedback()
    if kind == "immediate_liquidation":
        _check_section("simulate.policy", spec, ("kind",))
        return ImmediateLiquidation()
    if kind == "constant_barrier":
        _check_section("simulate.policy", spec, ("kind", "z_bar", "pi_bar", "cbar_rate"))
        missing = [k for k in ("z_bar", "pi_bar", "cbar_rate") if k not in spec]
        if missing:
            raise ConfigError(f"constant_barrier policy missing: {', '.join(missing)}")
        return ConstantBarrier(z_bar=float(spec["z_bar"]), pi_bar=float(spec["pi_bar"]),
                               cbar_rate=float(spec["cbar_rate"]))
    raise ConfigError(f"unknown policy kind {kind!r}")


def dump_json(obj, indent=2) -> str:
    """Serialize with floats at 17 significant digits, keys sorted.

    Guarantees byte-identical output for identical inputs, independent of
    platform float repr subtleties.
    """
    return _dump(obj, indent, 0) + "\n"


def _dump(obj, indent, level):
    pad = " " * (indent * level)
    pad_in = " " * (indent * (level + 1))
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, float):
        if math.isnan(obj):
            return "NaN"
        if math.isinf(obj):
            return "Infinity" if obj > 0 else "-Infinity"
        return format(obj, ".17g")
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = []
        for k in sorted(obj):
            items.append(f"{pad_in}{json.dumps(str(k))}: {_dump(obj[k], indent, level + 1)}")
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if len(obj) == 0:
            return "[]"
        items = [f"{pad_in}{_dump(v, indent, level + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    # numpy scalars and other number-likes
    if hasattr(obj, "item"):
        return _dump(obj.item(), indent, level)
    raise TypeError(f"cannot serialize {type(obj)!r}")
