"""Covariance kernels of the Gaussian drivers: fBm, sub-fBm and bi-fBm.

Every kernel-dependent constant used elsewhere in the package is derived
from the functions in this module.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "Family",
    "KernelSpec",
    "covariance",
    "increment_variance",
    "increment_constant",
    "gram_matrix",
]


class Family(str, Enum):
    FBM = "fbm"
    SUBFBM = "subfbm"
    BIFBM = "bifbm"


_TOKEN_RE = re.compile(
    r"^(?P<family>fbm|subfbm|bifbm):H=(?P<H>[0-9.eE+-]+)(?:,K=(?P<K>[0-9.eE+-]+))?$"
)


@dataclass(frozen=True)
class KernelSpec:
    """Covariance model of the driver.

    ``K`` is kept at 1 for fBm and sub-fBm so that the regularity exponent
    is always ``H * K``.
    """

    family: Family
    H: float
    K: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        object.__setattr__(self, "H", float(self.H))
        object.__setattr__(self, "K", float(self.K))
        if not 0.0 < self.H < 1.0:
            raise ValueError(f"H must lie in (0, 1), got {self.H}")
        if not 0.0 < self.K <= 1.0:
            raise ValueError(f"K must lie in (0, 1], got {self.K}")
        if self.family is not Family.BIFBM and self.K != 1.0:
            raise ValueError(f"K is only a free parameter for bifbm, got K={self.K}")

    @property
    def gamma(self) -> float:
        """Hoelder exponent of the increments."""
        return self.H * self.K

    @property
    def eta(self) -> float:
        """Growth exponent of E[G_T^2]; equal to ``gamma`` for all three families."""
        return self.H * self.K

    @property
    def token(self) -> str:
        if self.family is Family.BIFBM:
            return f"bifbm:H={self.H!r},K={self.K!r}"
        return f"{self.family.value}:H={self.H!r}"

    @classmethod
    def from_token(cls, token: str) -> "KernelSpec":
        """Parse ``fbm:H=0.7``, ``subfbm:H=0.3`` or ``bifbm:H=0.6,K=0.8``."""
        m = _TOKEN_RE.match(token.strip())
        if m is None:
            raise ValueError(f"malformed kernel token {token!r}")
        family = Family(m["family"])
        if family is Family.BIFBM:
            if m["K"] is None:
                raise ValueError(f"bifbm token needs K: {token!r}")
            return cls(family, float(m["H"]), float(m["K"]))
        if m["K"] is not None:
            raise ValueError(f"K is not accepted for {family.value}: {token!r}")
        return cls(family, float(m["H"]))

    def __str__(self) -> str:
        return self.token


def _check_times(*ts):
    for t in ts:
        if np.any(np.asarray(t) < 0):
            raise ValueError("kernel times must be nonnegative")


def covariance(spec: KernelSpec, s, t):
    """E[G_s G_t]; broadcasts over array arguments."""
    _check_times(s, t)
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    H2 = 2.0 * spec.H
    d = np.abs(t - s)
    if spec.family is Family.FBM:
        out = 0.5 * (t**H2 + s**H2 - d**H2)
    elif spec.family is Family.SUBFBM:
        out = t**H2 + s**H2 - 0.5 * ((t + s) ** H2 + d**H2)
    else:
        K = spec.K
        out = ((t**H2 + s**H2) ** K - d ** (H2 * K)) / 2.0**K
    return out[()] if out.ndim == 0 else out


def increment_variance(spec: KernelSpec, s, t):
    """E[(G_t - G_s)^2]."""
    out = covariance(spec, t, t) + covariance(spec, s, s) - 2.0 * covariance(spec, s, t)
    return out


def increment_constant(spec: KernelSpec) -> float:
    """Constant c with E[(G_t - G_s)^2] <= c |t - s|^(2 gamma) for all s, t >= 0.

    For sub-fBm with H > 1/2 the increment variance approaches |t-s|^(2H)
    far from the origin, so the constant is max(1, 2 - 2^(2H-1)).
    """
    if spec.family is Family.FBM:
        return 1.0
    if spec.family is Family.SUBFBM:
        return max(1.0, 2.0 - 2.0 ** (2.0 * spec.H - 1.0))
    return 2.0 ** (1.0 - spec.K)


def gram_matrix(spec: KernelSpec, times) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    return covariance(spec, times[:, None], times[None, :])
