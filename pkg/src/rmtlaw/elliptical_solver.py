"""Limiting spectrum of scaled Gram matrices of generalized elliptical data.

For rows y_i = mu + lambda_i * Gamma u_i (u_i uniform on the sphere of
radius sqrt(p)), the spectral law of B_n = (d/p) X'X/n has a Stieltjes
transform m characterized together with a companion transform w by a
coupled pair of equations driven by the spectral law H of Gamma Sigma
Gamma', the mixing law nu of the lambda's, and the aspect ratios
theta = d/p, rho = p/n. This module solves that system and recovers
densities, with the built-in identity 1 + z*m = w*b as a consistency check.
"""

from __future__ import annotations

from dataclasses import dataclass
import json
from typing import Optional

import numpy as np
from numpy.typing import NDArray

from .errors import NumericalError
from .linalg import as_sym_matrix
from .measures import DiscreteMeasure, measure_from_json_dict, measure_to_json_dict
from .mp_solver import (
    SolverConfig,
    TransformResult,
    _invert_to_density,
    _solve_grid,
    _validate_grid,
    default_v_eps,
    _damped_fixed_point,
)

__all__ = [
    "EllipticalParams",
    "mixing_integral",
    "elliptical_solve",
    "elliptical_density_grid",
    "elliptical_density_grid_detailed",
    "scaled_gram",
    "params_from_json_dict",
    "params_to_json_dict",
    "load_params_json",
]

# Relative tolerance for a user-supplied xi against theta^2 * rho.
_XI_RTOL = 1e-12

# First-moment guard: the large-z initialization needs int tau dH finite
# and of sane magnitude.
_MOMENT_BOUND = 1e6


@dataclass(frozen=True)
class EllipticalParams:
    """Limit parameters (H, nu, theta, rho) with xi = theta^2 * rho.

    H is the spectral law of Gamma Sigma Gamma', nu the law of the mixing
    scalars; a user-supplied xi is validated against theta^2 * rho, never
    trusted.
    """

    H: DiscreteMeasure
    nu: DiscreteMeasure
    theta: float
    rho: float
    xi: Optional[float] = None

    def __post_init__(self) -> None:
        if not (self.theta > 0):
            raise ValueError("theta must be positive")
        if not (self.rho > 0):
            raise ValueError("rho must be positive")
        if self.H.support_min < 0:
            raise ValueError("H must be supported on [0, inf)")
        if self.H.support_max <= 0:
            raise ValueError("H must put mass off zero")
        if float(np.max(np.abs(self.nu.values))) <= 0:
            raise ValueError("nu must put mass off zero")
        if self.H.mean > _MOMENT_BOUND:
            raise ValueError(
                f"first moment of H is {self.H.mean!r}, above {_MOMENT_BOUND:g}; "
                "the solver requires a bounded first moment"
            )
        xi_exact = self.theta**2 * self.rho
        if self.xi is not None and abs(self.xi - xi_exact) > _XI_RTOL * xi_exact:
            raise ValueError(
                f"xi={self.xi!r} is inconsistent with theta^2*rho={xi_exact!r}"
            )
        object.__setattr__(self, "xi", xi_exact)


def mixing_integral(
    w: complex, nu: DiscreteMeasure, theta: float, xi: float
) -> complex:
    """b = int theta*lam^2 / (1 + xi*lam^2*w) dnu(lam).

    Im(b) <= 0 whenever Im(w) >= 0. A mixing atom with 1 + xi*lam^2*w = 0
    makes the integrand singular and raises.
    """
    return nu.integrate(lambda lam: theta * lam**2 / (1.0 + xi * lam**2 * w))


def elliptical_solve(
    z: complex,
    params: EllipticalParams,
    cfg: SolverConfig | None = None,
    w0: complex | None = None,
) -> TransformResult:
    """Solve w = int tau dH / (tau*b(w) - z) for w in C+, then m.

    m = int dH / (tau*b(w) - z); the identity 1 + z*m = w*b(w) is checked
    to 100*tol after convergence.
    """
    z = complex(z)
    if not (z.imag > 0):
        raise ValueError("z must have positive imaginary part")
    cfg = cfg or SolverConfig()
    H, nu, theta, xi = params.H, params.nu, params.theta, params.xi
    assert xi is not None

    def step(w: complex) -> complex:
        b = mixing_integral(w, nu, theta, xi)
        return H.integrate(lambda tau: tau / (tau * b - z))

    first_moment = H.mean
    start = w0 if w0 is not None else -first_moment / z
    w, iterations, residual = _damped_fixed_point(step, start, cfg)
    b = mixing_integral(w, nu, theta, xi)
    m = H.integrate(lambda tau: 1.0 / (tau * b - z))
    if w.imag < 0 or m.imag < 0:
        raise NumericalError(
            f"solution left the upper half-plane at z={z!r}: "
            f"Im(w)={w.imag:.3e}, Im(m)={m.imag:.3e}"
        )
    consistency = abs(1.0 + z * m - w * b)
    if consistency > 100.0 * cfg.tol:
        raise NumericalError(
            f"consistency identity violated at z={z!r}: |1 + z*m - w*b| = "
            f"{consistency:.3e}"
        )
    return TransformResult(z=z, w=w, m=m, residual=residual, iterations=iterations)


def elliptical_density_grid_detailed(
    params: EllipticalParams,
    xs,
    cfg: SolverConfig | None = None,
) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64], dict]:
    """elliptical_density_grid plus stats including the identity residual."""
    xs = _validate_grid(xs)
    cfg = cfg or SolverConfig()
    v = cfg.v_eps if cfg.v_eps is not None else default_v_eps(params.H, params.rho)

    def solve_at(z: complex, w0: Optional[complex]) -> TransformResult:
        return elliptical_solve(z, params, cfg, w0=w0)

    results = _solve_grid(solve_at, xs, v)
    ms = np.array([r.m for r in results], dtype=np.complex128)
    atom0 = max(0.0, 1.0 - 1.0 / (params.theta * params.rho))
    density, cdf = _invert_to_density(xs, ms, v, atom0)
    assert params.xi is not None
    consistency = [
        abs(1.0 + r.z * r.m - r.w * mixing_integral(r.w, params.nu, params.theta, params.xi))
        for r in results
    ]
    stats = {
        "max_residual": max(r.residual for r in results),
        "max_consistency_residual": max(consistency),
        "v_eps": v,
        "atom0_mass": atom0,
    }
    return xs, density, cdf, stats


def elliptical_density_grid(
    params: EllipticalParams,
    xs,
    cfg: SolverConfig | None = None,
) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
    """Density and CDF of the limiting law of B_n on a real grid.

    Returns (xs, density, cdf). B_n is d x d with rank at most n, so the
    CDF includes a point mass max(0, 1 - 1/(theta*rho)) at 0.
    """
    xs, density, cdf, _ = elliptical_density_grid_detailed(params, xs, cfg)
    return xs, density, cdf


def scaled_gram(X, d: int, p: int, n: int) -> NDArray[np.float64]:
    """(d/p) * X'X / n for an n x d data matrix; d x d and PSD."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape != (n, d):
        raise ValueError(f"X must be {n}x{d}, got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("X must be finite")
    if p < 1:
        raise ValueError("p must be >= 1")
    B = (d / p) * (X.T @ X) / n
    return as_sym_matrix(B, "B")


def params_from_json_dict(obj) -> EllipticalParams:
    """Parse a params JSON object {"H":..., "nu":..., "theta":..., "rho":...}.

    An optional "xi" is validated against theta^2*rho. An optional "G"
    measure is accepted and validated but plays no role in the solve.
    """
    if not isinstance(obj, dict):
        raise ValueError("params JSON must be an object")
    for key in ("H", "nu", "theta", "rho"):
        if key not in obj:
            raise ValueError(f'params JSON needs "{key}"')
    if obj.get("G") is not None:
        measure_from_json_dict(obj["G"])
    return EllipticalParams(
        H=measure_from_json_dict(obj["H"]),
        nu=measure_from_json_dict(obj["nu"]),
        theta=float(obj["theta"]),
        rho=float(obj["rho"]),
        xi=float(obj["xi"]) if obj.get("xi") is not None else None,
    )


def params_to_json_dict(params: EllipticalParams) -> dict:
    return {
        "H": measure_to_json_dict(params.H),
        "nu": measure_to_json_dict(params.nu),
        "theta": params.theta,
        "rho": params.rho,
        "xi": params.xi,
    }


def load_params_json(path) -> EllipticalParams:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"invalid params JSON in {path}: {exc}") from exc
    return params_from_json_dict(obj)
