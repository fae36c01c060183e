"""Scalar exponent relations shared by every other module.

All quantities are plain floats. ``t`` is the dimension of the source Cantor
set, ``t_prime`` the dimension of its image, ``K`` the dilatation bound.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

SIGMA_MAX = 1.0 / 100.0


class ExponentError(ValueError):
    """Raised when an exponent or dilatation is outside its admissible range."""


def _check_K(K: float) -> None:
    if not (K >= 1.0) or math.isinf(K):
        raise ExponentError(f"dilatation K must be a finite number >= 1, got {K!r}")


def _check_t(t: float) -> None:
    if not (0.0 < t < 2.0):
        raise ExponentError(f"dimension t must lie in the open interval (0, 2), got {t!r}")


def _check_alpha(alpha: float) -> None:
    if not (0.0 < alpha < 1.0):
        raise ExponentError(f"Hoelder exponent alpha must lie in (0, 1), got {alpha!r}")


def critical_dimension(alpha: float, K: float) -> float:
    """Return ``d = 2 (1 + alpha K) / (1 + K)``."""
    _check_alpha(alpha)
    _check_K(K)
    return 2.0 * (1.0 + alpha * K) / (1.0 + K)


def stretched_dimension(t: float, K: float) -> float:
    """Extremal image dimension ``t' = 2Kt / (2 + (K-1)t)``."""
    _check_t(t)
    _check_K(K)
    return 2.0 * K * t / (2.0 + (K - 1.0) * t)


def holder_exponent(t: float, K: float) -> float:
    """Hoelder exponent ``t/t' = 1/K + (K-1) t / (2K)`` of the extremal map."""
    _check_t(t)
    _check_K(K)
    return 1.0 / K + (K - 1.0) * t / (2.0 * K)


def sigma_exponent(t: float, K: float) -> float:
    """Exponent ``(2-t)/(tK)`` such that ``sigma = R ** sigma_exponent``."""
    _check_t(t)
    _check_K(K)
    return (2.0 - t) / (t * K)


def log_sigma_from_log_R(log_R: float, t: float, K: float) -> float:
    return sigma_exponent(t, K) * log_R


def sigma_from_R(R: float, t: float, K: float, sigma_max: float = SIGMA_MAX) -> float:
    """Return ``sigma`` with ``sigma**(tK) == R**(2-t)``.

    The area identity ``(sigma^K R)^t == (sigma R)^t' == R^2`` is checked in
    log space; ``ExponentError`` is raised when ``sigma >= sigma_max``.
    """
    if not (0.0 < R < 1.0):
        raise ExponentError(f"radius ratio R must lie in (0, 1), got {R!r}")
    log_R = math.log(R)
    log_s = log_sigma_from_log_R(log_R, t, K)
    if log_s >= math.log(sigma_max):
        raise ExponentError(
            f"sigma = {math.exp(log_s):.6g} violates sigma < {sigma_max:g} (R = {R:.6g}); "
            "decrease R"
        )
    tp = stretched_dimension(t, K)
    lhs = t * (K * log_s + log_R)
    mid = tp * (log_s + log_R)
    tol = 1e-12 * max(1.0, abs(log_R))
    if abs(lhs - 2.0 * log_R) > tol or abs(mid - 2.0 * log_R) > tol:
        raise ArithmeticError("area identity violated beyond rounding")
    return math.exp(log_s)


def max_R_for_sigma_bound(t: float, K: float, sigma_max: float = SIGMA_MAX) -> float:
    """Largest R whose sigma stays below ``sigma_max``: ``sigma_max ** (tK/(2-t))``."""
    if not (0.0 < sigma_max < 1.0):
        raise ExponentError(f"sigma_max must lie in (0, 1), got {sigma_max!r}")
    return math.exp(math.log(sigma_max) / sigma_exponent(t, K))


@dataclass(frozen=True)
class ExponentSet:
    K: float
    alpha: float
    t: float
    t_prime: float
    holder: float

    @classmethod
    def from_alpha(cls, alpha: float, K: float) -> "ExponentSet":
        t = critical_dimension(alpha, K)
        return cls(K=K, alpha=alpha, t=t, t_prime=stretched_dimension(t, K),
                   holder=holder_exponent(t, K))

    @classmethod
    def from_t(cls, t: float, K: float, alpha: float = float("nan")) -> "ExponentSet":
        return cls(K=K, alpha=alpha, t=t, t_prime=stretched_dimension(t, K),
                   holder=holder_exponent(t, K))

    def check(self, tol: float = 1e-12) -> None:
        tp = stretched_dimension(self.t, self.K)
        if abs(tp - self.t_prime) > tol:
            raise ExponentError("t_prime inconsistent with t and K")
        if abs(holder_exponent(self.t, self.K) - self.holder) > tol:
            raise ExponentError("holder inconsistent with t and K")
        if abs(self.t / self.t_prime - self.holder) > tol:
            raise ExponentError("holder differs from t/t_prime")
        if not math.isnan(self.alpha) and abs((self.t_prime - 1.0) * self.holder - self.alpha) > tol:
            raise ExponentError("(t'-1) t/t' differs from alpha")

    def to_dict(self) -> dict:
        return {"K": self.K, "alpha": self.alpha, "t": self.t,
                "t_prime": self.t_prime, "holder": self.holder}
