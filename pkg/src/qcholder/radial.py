"""Piecewise radial stretch: the building block of every construction step.

Around ``center`` the map is a similarity of ratio ``sigma**(1-K)`` on the
core ``|z-c| <= sigma**K r``, the power profile ``|(z-c)/r|**(1/K-1) (z-c)``
on the annulus up to ``r`` and the identity outside. Points lying on either
interface circle are assigned to the annulus branch.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels

CORE, ANNULUS, OUTSIDE = 0, 1, 2


@dataclass(frozen=True)
class RadialStretch:
    center: complex
    r: float
    sigma: float
    K: float

    def __post_init__(self):
        if not (self.r > 0):
            raise ValueError("outer radius must be positive")
        if not (0 < self.sigma < 1):
            raise ValueError("sigma must lie in (0, 1)")
        if not (self.K >= 1):
            raise ValueError("K must be >= 1")

    @property
    def log_r(self) -> float:
        return float(np.log(self.r))

    @property
    def log_sigma(self) -> float:
        return float(np.log(self.sigma))

    @property
    def inner_radius(self) -> float:
        return float(np.exp(self.K * self.log_sigma + self.log_r))

    @property
    def image_inner_radius(self) -> float:
        return float(np.exp(self.log_sigma + self.log_r))

    def branch(self, z) -> np.ndarray:
        y = np.asarray(z, dtype=complex) - self.center
        log_a = _log_abs(y) - self.log_r
        out = np.full(y.shape, OUTSIDE, dtype=np.int8)
        out[log_a <= 0.0] = ANNULUS
        out[log_a < self.K * self.log_sigma] = CORE
        return out

    def apply(self, z):
        y = np.asarray(z, dtype=complex) - self.center
        return self.center + kernels.stretch_offsets(y, self.log_r, self.log_sigma, self.K)

    def invert(self, w):
        y = np.asarray(w, dtype=complex) - self.center
        return self.center + kernels.unstretch_offsets(y, self.log_r, self.log_sigma, self.K)

    def log_jacobian(self, z) -> np.ndarray:
        y = np.asarray(z, dtype=complex) - self.center
        return kernels.stretch_log_jacobian(y, self.log_r, self.log_sigma, self.K)

    def jacobian(self, z) -> np.ndarray:
        return np.exp(self.log_jacobian(z))

    def beltrami(self, z) -> np.ndarray:
        """Complex dilatation from the closed-form Wirtinger derivatives."""
        y = np.asarray(z, dtype=complex) - self.center
        mu = np.zeros(y.shape, dtype=complex)
        ann = self.branch(z) == ANNULUS
        a = 1.0 / self.K - 1.0
        ya = y[ann]
        # h = r^-a |y|^a y: dh = (1 + a/2)|y|^a r^-a, dbar h = (a/2)|y|^a r^-a y / conj(y)
        mu[ann] = (a / (2.0 + a)) * ya / np.conj(ya)
        return mu


def _log_abs(y: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(np.abs(y))
