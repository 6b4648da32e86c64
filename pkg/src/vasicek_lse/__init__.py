"""Drift estimation for the non-ergodic Gaussian Vasicek model dX = theta (mu + X) dt + dG."""

__version__ = "0.1.0"

from .asymptotics import LimitConstants, klm_integrals, limit_constants  # noqa: E402
from .estimators import DegeneratePath, EstimateTriple, estimate, estimate_young, remainder_RT  # noqa: E402
from .kernels import Family, KernelSpec, covariance, increment_variance  # noqa: E402
from .sampler import GaussianPath, PathFactor, TimeGrid, build_factor, sample_path  # noqa: E402
from .vasicek import VasicekParams, VasicekPath, euler_maruyama, explicit_solution, functionals  # noqa: E402

__all__ = [
    "DegeneratePath",
    "EstimateTriple",
    "Family",
    "GaussianPath",
    "KernelSpec",
    "LimitConstants",
    "PathFactor",
    "TimeGrid",
    "VasicekParams",
    "VasicekPath",
    "build_factor",
    "covariance",
    "estimate",
    "estimate_young",
    "euler_maruyama",
    "explicit_solution",
    "functionals",
    "increment_variance",
    "klm_integrals",
    "limit_constants",
    "remainder_RT",
    "sample_path",
]
