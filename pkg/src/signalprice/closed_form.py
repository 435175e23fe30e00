"""Closed-form strategies, value functions, and signal prices.

Single-period model
-------------------
Price increment  mu + Y + sigma_z*B  with signal Y ~ N(y, sigma_y^2) revealed
to the buyer before trading.  Exponential utility -exp(-gamma*x) gives

    informed position    (mu + Y) / (gamma*sigma_z^2)
    uninformed position  (mu + y) / (gamma*(sigma_y^2 + sigma_z^2))
    signal price         log(1 + sigma_y^2/sigma_z^2) / (2*gamma)

Continuous-time model
---------------------
dS = (mu + Y_t) dt + sigma_z dB^Z,  dY = sigma_y dB^Y.  With a = sigma_y/sigma_z
the value functions are -exp{-gamma*x + A(t)*(mu+y)^2 + B(t)} where

    A_I(t)  = -tanh(a(T-t)) / (2 sigma_y sigma_z)
    B_I(t)  = -log(cosh(a(T-t))) / 2
    A_UI(t) = -sinh(a(T-t)) cosh(at) / (2 sigma_y sigma_z cosh(aT))
    B_UI(t) =  (sigma_y/4sigma_z)(T-t) tanh(aT)
               + log(cosh(at)/cosh(aT))/2
               + sinh(a(T-t)) sinh(at) / (4 cosh(aT))

and the lump price of the feed over [0, T] is

    (sigma_y / (4 gamma sigma_z)) * T * tanh(sigma_y T / sigma_z).

Hyperbolic ratios are evaluated through exp/expm1 forms whose exponents are
all <= 0, so nothing overflows for large sigma_y*T/sigma_z.  sigma_y = 0 is
handled by the tanh(x)/x -> 1 limit rather than an error, except in
``hjb_coefficients`` where the coefficient functions themselves degenerate.
Value-function exponents saturate to a -inf utility floor past
``EXPONENT_CAP`` instead of overflowing silently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .model_core import DomainError, ModelParams, validate

EXPONENT_CAP = 700.0

_LOG2 = math.log(2.0)


# --- stable hyperbolic building blocks (exponents always <= 0) ---

def log_cosh(x):
    """log(cosh(x)) = |x| + log1p(exp(-2|x|)) - log 2."""
    ax = np.abs(np.asarray(x, dtype=float))
    return ax + np.log1p(np.exp(-2.0 * ax)) - _LOG2


def stable_tanh(x):
    """tanh(x) for x >= 0 as -expm1(-2x) / (1 + exp(-2x))."""
    x = np.asarray(x, dtype=float)
    return -np.expm1(-2.0 * x) / (1.0 + np.exp(-2.0 * x))


def _em1_over(x):
    """(1 - exp(-2x)) / x for x >= 0, with the x -> 0 limit 2."""
    x = np.asarray(x, dtype=float)
    safe = np.where(x == 0.0, 1.0, x)
    out = -np.expm1(-2.0 * x) / safe
    return np.where(x == 0.0, 2.0, out)


def _sinh_cosh_over_cosh(a_arg, b_arg):
    """sinh(A)cosh(B)/cosh(A+B) = (1-e^{-2A})(1+e^{-2B}) / (2(1+e^{-2(A+B)}))."""
    ea = -np.expm1(-2.0 * np.asarray(a_arg, dtype=float))
    eb = 1.0 + np.exp(-2.0 * np.asarray(b_arg, dtype=float))
    ec = 1.0 + np.exp(-2.0 * (np.asarray(a_arg) + np.asarray(b_arg)))
    return ea * eb / (2.0 * ec)


def _sinh_sinh_over_cosh(a_arg, b_arg):
    """sinh(A)sinh(B)/cosh(A+B) = (1-e^{-2A})(1-e^{-2B}) / (2(1+e^{-2(A+B)}))."""
    ea = -np.expm1(-2.0 * np.asarray(a_arg, dtype=float))
    eb = -np.expm1(-2.0 * np.asarray(b_arg, dtype=float))
    ec = 1.0 + np.exp(-2.0 * (np.asarray(a_arg) + np.asarray(b_arg)))
    return ea * eb / (2.0 * ec)


def _cosh_cosh_over_cosh(a_arg, b_arg):
    """cosh(A)cosh(B)/cosh(A+B) = (1+e^{-2A})(1+e^{-2B}) / (2(1+e^{-2(A+B)}))."""
    ea = 1.0 + np.exp(-2.0 * np.asarray(a_arg, dtype=float))
    eb = 1.0 + np.exp(-2.0 * np.asarray(b_arg, dtype=float))
    ec = 1.0 + np.exp(-2.0 * (np.asarray(a_arg) + np.asarray(b_arg)))
    return ea * eb / (2.0 * ec)


def utility_from_exponent(exponent, cap: float = EXPONENT_CAP):
    """-exp(exponent), saturating to -inf when exponent exceeds ``cap``.

    The -inf acts as an explicit utility-floor flag; callers that aggregate
    utilities count these rather than let them overflow silently.
    """
    exponent = np.asarray(exponent, dtype=float)
    capped = np.where(exponent > cap, np.inf, exponent)
    with np.errstate(over="ignore"):
        out = -np.exp(capped)
    return out[()]


def noise_ratio(p: ModelParams) -> float:
    """sigma_y / sigma_z, the per-unit-time signal-to-volatility ratio."""
    return p.sigma_y / p.sigma_z


def rate_bound(p: ModelParams) -> float:
    """sigma_y / (4 gamma sigma_z): cap on the flat subscription rate."""
    return p.sigma_y / (4.0 * p.gamma * p.sigma_z)


# --- HJB exponent coefficients ---

def coeff_a_informed(p: ModelParams, t):
    """A_I(t) = -(T-t)/(2 sigma_z^2) * tanh(a(T-t))/(a(T-t)); limit-safe at sigma_y=0."""
    a = noise_ratio(p)
    rem = p.t_end - np.asarray(t, dtype=float)
    arg = a * rem
    # tanh(x)/x = _em1_over(x) / (1 + exp(-2x))
    tanhc = _em1_over(arg) / (1.0 + np.exp(-2.0 * arg))
    return -rem / (2.0 * p.sigma_z**2) * tanhc


def coeff_b_informed(p: ModelParams, t):
    """B_I(t) = -log(cosh(a(T-t)))/2."""
    a = noise_ratio(p)
    rem = p.t_end - np.asarray(t, dtype=float)
    return -0.5 * log_cosh(a * rem)


def coeff_a_uninformed(p: ModelParams, t):
    """A_UI(t) = -sinh(a(T-t))cosh(at)/(2 sigma_y sigma_z cosh(aT)); limit-safe."""
    a = noise_ratio(p)
    t = np.asarray(t, dtype=float)
    rem = p.t_end - t
    arg_rem = a * rem
    arg_t = a * t
    factor = (
        _em1_over(arg_rem)
        * (1.0 + np.exp(-2.0 * arg_t))
        / (2.0 * (1.0 + np.exp(-2.0 * (arg_rem + arg_t))))
    )
    return -rem / (2.0 * p.sigma_z**2) * factor


def coeff_b_uninformed(p: ModelParams, t):
    """B_UI(t): the three state-independent exponent terms of the filtered value."""
    a = noise_ratio(p)
    t = np.asarray(t, dtype=float)
    rem = p.t_end - t
    term1 = p.sigma_y / (4.0 * p.sigma_z) * rem * stable_tanh(a * p.t_end)
    term2 = 0.5 * (log_cosh(a * t) - log_cosh(a * p.t_end))
    term3 = 0.25 * _sinh_sinh_over_cosh(a * rem, a * t)
    return term1 + term2 + term3


@dataclass(frozen=True)
class HjbCoefficients:
    """Time-dependent exponent coefficients, zero at the horizon."""

    a_informed: Callable[[float], float]
    b_informed: Callable[[float], float]
    a_uninformed: Callable[[float], float]
    b_uninformed: Callable[[float], float]


def hjb_coefficients(p: ModelParams) -> HjbCoefficients:
    """The four coefficient functions on [0, T].

    Requires sigma_y > 0; at sigma_y = 0 the B-coefficients vanish and both
    A-coefficients reduce to the linear limit -(T-t)/(2 sigma_z^2), which the
    individual ``coeff_*`` evaluators return.
    """
    validate(p)
    if p.sigma_y == 0.0:
        raise DomainError(
            "sigma_y must be > 0 for hjb_coefficients; at sigma_y = 0 the "
            "coefficients degenerate to A(t) = -(T-t)/(2 sigma_z^2), B = 0"
        )
    return HjbCoefficients(
        a_informed=lambda t: coeff_a_informed(p, t),
        b_informed=lambda t: coeff_b_informed(p, t),
        a_uninformed=lambda t: coeff_a_uninformed(p, t),
        b_uninformed=lambda t: coeff_b_uninformed(p, t),
    )


# --- strategies ---

def informed_strategy(p: ModelParams, t, y_t):
    """Position (mu + y_t) / (gamma sigma_z^2); time-independent."""
    return (p.mu + np.asarray(y_t, dtype=float)) / (p.gamma * p.sigma_z**2)


def uninformed_strategy(p: ModelParams, t, y_hat_t):
    """Position (mu + y_hat) cosh(a(T-t)) cosh(at) / (gamma sigma_z^2 cosh(aT))."""
    a = noise_ratio(p)
    t = np.asarray(t, dtype=float)
    factor = _cosh_cosh_over_cosh(a * (p.t_end - t), a * t)
    return (p.mu + np.asarray(y_hat_t, dtype=float)) * factor / (p.gamma * p.sigma_z**2)


# --- value functions ---

def value_informed(p: ModelParams, t, x_t, y_t, charge: float = 0.0, cap: float = EXPONENT_CAP):
    """-exp{-gamma(x - charge) + A_I(t)(mu+y)^2 + B_I(t)}.

    ``charge`` is the lump fee paid at time 0; pass wealth net of it instead
    and keep charge = 0 for evaluations after time 0.
    """
    x = np.asarray(x_t, dtype=float) - charge
    y = np.asarray(y_t, dtype=float)
    exponent = (
        -p.gamma * x
        + coeff_a_informed(p, t) * (p.mu + y) ** 2
        + coeff_b_informed(p, t)
    )
    return utility_from_exponent(exponent, cap)


def value_uninformed(p: ModelParams, t, x_t, y_hat_t, cap: float = EXPONENT_CAP):
    """-exp{-gamma x + A_UI(t)(mu+y_hat)^2 + B_UI(t)}."""
    x = np.asarray(x_t, dtype=float)
    y = np.asarray(y_hat_t, dtype=float)
    exponent = (
        -p.gamma * x
        + coeff_a_uninformed(p, t) * (p.mu + y) ** 2
        + coeff_b_uninformed(p, t)
    )
    return utility_from_exponent(exponent, cap)


# --- prices ---

@dataclass(frozen=True)
class ContinuousPriceResult:
    """Lump price of the feed over [0, T] and its flat-rate equivalents."""

    c_hat_0T: float
    c_bar: float
    c_bar_bound: float


def continuous_price(p: ModelParams) -> ContinuousPriceResult:
    """Lump price (sigma_y/(4 gamma sigma_z)) T tanh(sigma_y T / sigma_z).

    c_bar = price / T is the flat per-time rate; it never exceeds
    sigma_y / (4 gamma sigma_z).
    """
    validate(p)
    bound = rate_bound(p)
    c_bar = bound * float(stable_tanh(noise_ratio(p) * p.t_end))
    return ContinuousPriceResult(c_hat_0T=c_bar * p.t_end, c_bar=c_bar, c_bar_bound=bound)


@dataclass(frozen=True)
class SinglePeriodSolution:
    """One-shot strategies, values, and the signal price.

    ``v_informed_at(C)`` evaluates the informed value at an arbitrary charge;
    ``v_informed`` is its value at the charge this solution was built with.
    """

    phi_informed_coeff: float
    phi_uninformed: float
    v_uninformed: float
    c_hat: float
    charge: float
    v_informed: float
    v_informed_at: Callable[[float], float]


def single_period_solve(p: ModelParams, charge: float = 0.0) -> SinglePeriodSolution:
    """Solve the one-shot model (sigma_y, sigma_z as one-period deviations)."""
    validate(p)
    var_sum = p.sigma_y**2 + p.sigma_z**2
    quad = (p.mu + p.y0) ** 2 / (2.0 * var_sum)
    log_term = math.log1p(p.sigma_y**2 / p.sigma_z**2)

    def v_informed_at(c: float) -> float:
        exponent = -p.gamma * (p.x0 - c) - quad - 0.5 * log_term
        return float(utility_from_exponent(exponent))

    v_uninformed = float(utility_from_exponent(-p.gamma * p.x0 - quad))
    return SinglePeriodSolution(
        phi_informed_coeff=1.0 / (p.gamma * p.sigma_z**2),
        phi_uninformed=(p.mu + p.y0) / (p.gamma * var_sum),
        v_uninformed=v_uninformed,
        c_hat=log_term / (2.0 * p.gamma),
        charge=charge,
        v_informed=v_informed_at(charge),
        v_informed_at=v_informed_at,
    )


__all__ = [
    "EXPONENT_CAP",
    "HjbCoefficients",
    "ContinuousPriceResult",
    "SinglePeriodSolution",
    "log_cosh",
    "stable_tanh",
    "utility_from_exponent",
    "noise_ratio",
    "rate_bound",
    "coeff_a_informed",
    "coeff_b_informed",
    "coeff_a_uninformed",
    "coeff_b_uninformed",
    "hjb_coefficients",
    "informed_strategy",
    "uninformed_strategy",
    "value_informed",
    "value_uninformed",
    "continuous_price",
    "single_period_solve",
]
