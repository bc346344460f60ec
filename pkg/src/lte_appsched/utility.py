"""Normalized QoE utility functions.

Two families are supported:

* ``Sigmoidal(a, b)`` for real-time traffic,
  ``U(r) = c * (1 / (1 + exp(-a (r - b))) - d)`` with
  ``c = (1 + e^{ab}) / e^{ab}`` and ``d = 1 / (1 + e^{ab})``.
* ``Logarithmic(k, r_max)`` for delay-tolerant traffic,
  ``U(r) = log(1 + k r) / log(1 + k r_max)``.

Everything is computed in log space so that steep curves such as
``a=5, b=10`` (``e^{ab} = e^{50}``) stay accurate near ``r = 0`` where the
scheduler evaluates them at start-up.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy.special import expit, log_expit

R_FLOOR = 1e-3


class DomainError(ValueError):
    """Raised when a utility is evaluated at a negative rate."""


def _check_rate(r):
    r = np.asarray(r, dtype=float)
    if np.any(r < 0) or np.any(np.isnan(r)):
        raise DomainError(f"rate must be non-negative, got {r.min() if r.size else r}")
    return r


def _log_expm1(y):
    # log(e^y - 1) for y >= 0; -inf at y = 0
    y = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore"):
        return y + np.log(-np.expm1(-y))


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


# Vectorized kernels shared by the dataclasses and UtilityBank.

def _sigmoid_log_value(r, a, b):
    lower = -a * b + _log_expm1(a * r) + log_expit(-a * (r - b))
    with np.errstate(over="ignore"):
        upper = np.log((1.0 + np.exp(-a * b)) * expit(a * (r - b)) - np.exp(-a * b))
    return np.where(r >= b, upper, lower)


def _sigmoid_value(r, a, b):
    # Below the inflection point the log form keeps relative accuracy in the
    # tail; above it U is close to 1 and the direct form c*expit(x) - c*d
    # (with c*d = e^{-ab}) is accurate and monotone under rounding.
    with np.errstate(over="ignore"):
        upper = (1.0 + np.exp(-a * b)) * expit(a * (r - b)) - np.exp(-a * b)
    with np.errstate(divide="ignore"):
        lower = np.exp(-a * b + _log_expm1(a * r) + log_expit(-a * (r - b)))
    return np.where(r >= b, upper, lower)


def _sigmoid_log_derivative(r, a, b):
    x = a * (r - b)
    return np.log1p(np.exp(-a * b)) + np.log(a) + log_expit(x) + log_expit(-x)


def _log_value(r, k, r_max):
    return np.log1p(k * r) / np.log1p(k * r_max)


def _log_derivative(r, k, r_max):
    return k / ((1.0 + k * r) * np.log1p(k * r_max))


def _log_ratio(r, k):
    with np.errstate(divide="ignore"):
        return k / ((1.0 + k * r) * np.log1p(k * r))


@dataclass(frozen=True)
class Sigmoidal:
    """Sigmoidal utility with steepness ``a`` and inflection rate ``b``."""

    a: float
    b: float

    kind = "sigmoidal"

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ValueError(f"sigmoidal utility needs a > 0 and b > 0, got a={self.a}, b={self.b}")

    @property
    def c(self) -> float:
        return 1.0 + np.exp(-self.a * self.b)

    @property
    def d(self) -> float:
        return float(np.exp(log_expit(-self.a * self.b)))

    def log_value(self, r):
        r = _check_rate(r)
        return _out(_sigmoid_log_value(r, self.a, self.b))

    def value(self, r):
        r = _check_rate(r)
        return _out(_sigmoid_value(r, self.a, self.b))

    def derivative(self, r):
        r = _check_rate(r)
        return _out(np.exp(_sigmoid_log_derivative(r, self.a, self.b)))

    def ratio(self, r):
        r = _check_rate(r)
        with np.errstate(invalid="ignore"):
            out = np.exp(_sigmoid_log_derivative(r, self.a, self.b) - _sigmoid_log_value(r, self.a, self.b))
        return _out(out)

    def scaled_rate(self) -> float:
        """Characteristic rate of the curve (the inflection point)."""
        return self.b


@dataclass(frozen=True)
class Logarithmic:
    """Logarithmic utility reaching 1 at ``r_max`` with curvature ``k``."""

    k: float
    r_max: float = 100.0

    kind = "logarithmic"

    def __post_init__(self):
        if not (self.k > 0 and self.r_max > 0):
            raise ValueError(f"logarithmic utility needs k > 0 and r_max > 0, got k={self.k}, r_max={self.r_max}")

    def log_value(self, r):
        r = _check_rate(r)
        with np.errstate(divide="ignore"):
            return _out(np.log(np.log1p(self.k * r)) - np.log(np.log1p(self.k * self.r_max)))

    def value(self, r):
        r = _check_rate(r)
        return _out(_log_value(r, self.k, self.r_max))

    def derivative(self, r):
        r = _check_rate(r)
        return _out(_log_derivative(r, self.k, self.r_max))

    def ratio(self, r):
        r = _check_rate(r)
        return _out(_log_ratio(r, self.k))

    def scaled_rate(self) -> float:
        return self.r_max


UtilityFunction = Union[Sigmoidal, Logarithmic]


def evaluate(u: UtilityFunction, r):
    """Utility of rate ``r``; exactly 0 at ``r = 0``."""
    return u.value(r)


def derivative(u: UtilityFunction, r):
    """Analytic ``dU/dr``."""
    return u.derivative(r)


def log_evaluate(u: UtilityFunction, r):
    """``log U(r)``; ``-inf`` at ``r = 0``."""
    return u.log_value(r)


def marginal_ratio(u: UtilityFunction, r, r_floor: float = R_FLOOR):
    """``U'(r) / U(r)`` evaluated at ``max(r, r_floor)``.

    With ``r_floor = 0`` the ratio is exact and infinite at ``r = 0``.
    """
    r = _check_rate(r)
    return u.ratio(np.maximum(r, r_floor))


class UtilityBank:
    """Per-UE utilities evaluated column-wise on arrays shaped ``(..., n_ues)``.

    Used in the scheduler hot loop where ratios for every UE of every
    Monte Carlo replica are needed once per resource block.
    """

    def __init__(self, utilities: Sequence[UtilityFunction]):
        self.utilities = tuple(utilities)
        kinds = [u.kind for u in self.utilities]
        self._sig = np.array([i for i, k in enumerate(kinds) if k == "sigmoidal"], dtype=int)
        self._log = np.array([i for i, k in enumerate(kinds) if k == "logarithmic"], dtype=int)
        self._a = np.array([self.utilities[i].a for i in self._sig], dtype=float)
        self._b = np.array([self.utilities[i].b for i in self._sig], dtype=float)
        self._k = np.array([self.utilities[i].k for i in self._log], dtype=float)
        self._rmax = np.array([self.utilities[i].r_max for i in self._log], dtype=float)

    def __len__(self):
        return len(self.utilities)

    def ratio(self, r, r_floor: float = R_FLOOR) -> np.ndarray:
        """Floored ``U'/U`` for every UE; ``r`` has the UE axis last."""
        r = np.maximum(np.asarray(r, dtype=float), r_floor)
        out = np.empty_like(r)
        if self._sig.size:
            rs = r[..., self._sig]
            with np.errstate(invalid="ignore"):
                out[..., self._sig] = np.exp(
                    _sigmoid_log_derivative(rs, self._a, self._b) - _sigmoid_log_value(rs, self._a, self._b)
                )
        if self._log.size:
            out[..., self._log] = _log_ratio(r[..., self._log], self._k)
        return out

    def value(self, r) -> np.ndarray:
        r = _check_rate(r)
        out = np.empty_like(r)
        if self._sig.size:
            out[..., self._sig] = _sigmoid_value(r[..., self._sig], self._a, self._b)
        if self._log.size:
            out[..., self._log] = _log_value(r[..., self._log], self._k, self._rmax)
        return out

    def log_value(self, r) -> np.ndarray:
        r = _check_rate(r)
        out = np.empty_like(r)
        if self._sig.size:
            out[..., self._sig] = _sigmoid_log_value(r[..., self._sig], self._a, self._b)
        if self._log.size:
            with np.errstate(divide="ignore"):
                out[..., self._log] = np.log(np.log1p(self._k * r[..., self._log])) - np.log(
                    np.log1p(self._k * self._rmax)
                )
        return out
