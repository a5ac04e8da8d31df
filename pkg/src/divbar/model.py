"""Economic primitives: parameters, regime classification, closed-form blocks.

The firm allocates equity between a corporate bond yielding ``rho`` and a
risky asset with drift ``mu`` and volatility ``sigma``, pays dividends into
the investors' private account earning the retail rate ``r``, and is wiped
out by a Poisson default shock with intensity ``lam``.  Investors have log
utility discounted at ``beta``.

This module owns the parameter container, the three-way regime split, the
post-default value ``F`` and the two envelope functions ``m`` and ``ell``
bounding the transformed value function.
"""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DomainError, ParameterError

__all__ = [
    "ModelParams",
    "Regime",
    "State",
    "classify_regime",
    "post_default_value",
    "eval_m",
    "eval_ell",
    "eval_m_prime",
    "eval_ell_prime",
    "excess_premium",
]


@dataclass(frozen=True)
class ModelParams:
    """Model primitives, all rates per unit time.

    Attributes
    ----------
    mu : float
        Risky-asset drift.
    sigma : float
        Risky-asset volatility (> 0).
    rho : float
        Corporate bond yield.
    r : float
        Retail riskfree rate on the investors' private account.
    beta : float
        Investors' subjective discount rate (> 0).
    lam : float
        Default intensity (> 0).  Serialized under the key ``lambda``.
    """

    mu: float
    sigma: float
    rho: float
    r: float
    beta: float
    lam: float

    def __post_init__(self):
        for name in ("mu", "sigma", "rho", "r", "beta", "lam"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or isinstance(v, bool):
                raise ParameterError(f"{name} must be a real number, got {v!r}")
            if not math.isfinite(v):
                raise ParameterError(f"{name} must be finite, got {v!r}")
            object.__setattr__(self, name, float(v))
        if self.sigma <= 0.0:
            raise ParameterError(f"sigma must be > 0, got {self.sigma}")
        if self.beta <= 0.0:
            raise ParameterError(f"beta must be > 0, got {self.beta}")
        if self.lam <= 0.0:
            raise ParameterError(f"lambda must be > 0, got {self.lam}")

    def to_dict(self):
        """Serializable mapping using the external key names."""
        return {
            "mu": self.mu,
            "sigma": self.sigma,
            "rho": self.rho,
            "r": self.r,
            "beta": self.beta,
            "lambda": self.lam,
        }

    @classmethod
    def from_dict(cls, d):
        """Build from a mapping with keys mu, sigma, rho, r, beta, lambda."""
        required = ("mu", "sigma", "rho", "r", "beta", "lambda")
        missing = [k for k in required if k not in d]
        if missing:
            raise ParameterError(f"missing model keys: {', '.join(missing)}")
        unknown = [k for k in d if k not in required]
        if unknown:
            raise ParameterError(f"unknown model keys: {', '.join(sorted(unknown))}")
        return cls(
            mu=d["mu"], sigma=d["sigma"], rho=d["rho"],
            r=d["r"], beta=d["beta"], lam=d["lambda"],
        )


class Regime(Enum):
    """Solution regime of the control problem.

    DEGENERATE : mu == rho and rho <= lam + r.  Liquidate immediately.
    CORNER     : mu == rho and rho >  lam + r.  Zero leverage, closed forms.
    GENERAL    : mu != rho.  Free boundary found by ODE integration.
    """

    DEGENERATE = "degenerate"
    CORNER = "corner"
    GENERAL = "general"


@dataclass(frozen=True)
class State:
    """A point (s, x): firm equity value and investors' private wealth."""

    s: float
    x: float

    def __post_init__(self):
        if not (math.isfinite(self.s) and math.isfinite(self.x)):
            raise ParameterError(f"state must be finite, got ({self.s}, {self.x})")
        if self.s < 0.0 or self.x < 0.0:
            raise ParameterError(f"state must be non-negative, got ({self.s}, {self.x})")
        if self.s == 0.0 and self.x == 0.0:
            raise ParameterError("state (0, 0) is not admissible")

    @property
    def z(self):
        """Equity-to-wealth ratio s/x (inf when x == 0)."""
        return math.inf if self.x == 0.0 else self.s / self.x


def classify_regime(params: ModelParams) -> Regime:
    """Classify the parameter set into its solution regime.

    Equality mu == rho is tested exactly on the stored values: the corner
    branch has its own closed form, while nearly-equal drifts are handled
    continuously by the general branch.
    """
    if params.mu == params.rho:
        if params.rho <= params.lam + params.r:
            return Regime.DEGENERATE
        return Regime.CORNER
    return Regime.GENERAL


def post_default_value(x, params: ModelParams):
    """Lifetime log-utility F(x) of consuming private wealth x alone.

    F(x) = (1/beta) ln x + (1/beta) [r/beta + ln beta - 1], the value of the
    deterministic consumption problem at the retail rate, attained by the
    proportional rule c = beta * x.
    """
    if np.any(np.asarray(x) <= 0.0):
        raise DomainError("post_default_value requires x > 0")
    b = params.beta
    return np.log(x) / b + (params.r / b + math.log(b) - 1.0) / b


def excess_premium(params: ModelParams) -> float:
    """Squared excess return over twice the variance, (mu-rho)^2 / (2 sigma^2).

    The maximized quadratic gain rate from leverage; zero exactly when
    mu == rho.
    """
    d = params.mu - params.rho
    return d * d / (2.0 * params.sigma * params.sigma)


def _check_q(q, beta):
    if np.any(np.asarray(q) < 0.0) or np.any(np.asarray(q) >= 1.0 / beta):
        raise DomainError(f"q must lie in [0, 1/beta) = [0, {1.0 / beta})")


def eval_m(q, params: ModelParams):
    """Upper envelope m(q) of the transformed value function.

    m(q) = beta/(beta+lam) * { (rho-r) q + (lam/beta) ln(1/beta - q)
                               + (mu-rho)^2 / (2 sigma^2 beta) }
    defined on 0 <= q < 1/beta.
    """
    _check_q(q, params.beta)
    b, lam = params.beta, params.lam
    k = excess_premium(params)
    return b / (b + lam) * ((params.rho - params.r) * q
                            + lam / b * np.log(1.0 / b - q)
                            + k / b)


def eval_ell(q, params: ModelParams):
    """Lower envelope ell(q) = m(q) - beta/(beta+lam) * k * (1/beta - q).

    Here k = (mu-rho)^2 / (2 sigma^2); the two envelopes pinch together as
    q -> 1/beta and coincide identically when mu == rho.
    """
    _check_q(q, params.beta)
    b, lam = params.beta, params.lam
    k = excess_premium(params)
    return eval_m(q, params) - b / (b + lam) * k * (1.0 / b - q)


def eval_m_prime(q, params: ModelParams):
    """Derivative m'(q) = beta/(beta+lam) * [(rho-r) - lam/(1 - beta q)]."""
    _check_q(q, params.beta)
    b, lam = params.beta, params.lam
    return b / (b + lam) * ((params.rho - params.r) - lam / (1.0 - b * np.asarray(q, dtype=float)))


def eval_ell_prime(q, params: ModelParams):
    """Derivative ell'(q) = m'(q) + beta/(beta+lam) * (mu-rho)^2/(2 sigma^2)."""
    b, lam = params.beta, params.lam
    return eval_m_prime(q, params) + b / (b + lam) * excess_premium(params)
