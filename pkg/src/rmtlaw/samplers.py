"""Seed-deterministic samplers for every data family used in the experiments.

All randomness flows through counter-based Philox streams split from
(seed, replicate, kind, index), so results are reproducible bit-for-bit
under any parallel schedule. Uniforms are mapped through inverse CDFs
(normal via ndtri, gamma magnitudes via gammaincinv) rather than rejection
methods, keeping every draw a pure function of its stream.
"""

from __future__ import annotations

from dataclasses import dataclass
import json
from typing import Optional

import numpy as np
from numpy.typing import NDArray
from scipy.special import gammaincinv, ndtr, ndtri

from .linalg import as_sym_matrix, matrix_sqrt_psd, toeplitz_corr, load_matrix_csv
from .measures import DiscreteMeasure, measure_from_json_dict, measure_to_json_dict

__all__ = [
    "PopulationModel",
    "rng_stream",
    "uniform_open",
    "standard_normal",
    "sample_gaussian",
    "sample_sphere",
    "sample_elliptical",
    "sample_gaussian_copula",
    "sample_lb_ball",
    "sample_bounded_iid",
    "sample_covariance_model",
    "sample_model",
    "model_from_json_dict",
    "model_to_json_dict",
    "load_model_json",
]

FAMILIES = ("gaussian", "sphere_elliptical", "gaussian_copula", "lb_ball", "bounded_iid")

# Stream kinds keep row draws and auxiliary draws (mixing scalars) on
# disjoint spawn keys for the same (seed, replicate).
_KIND_ROW = 0
_KIND_MIXING = 1


def rng_stream(seed: int, *path: int) -> np.random.Generator:
    """Independent counter-based stream for (seed, *path)."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in path))
    return np.random.Generator(np.random.Philox(ss))


def uniform_open(rng: np.random.Generator, size) -> NDArray[np.float64]:
    """Uniforms strictly inside (0, 1): (k + 1/2)/2^53 over 53-bit integers."""
    k = rng.integers(0, 1 << 53, size=size, dtype=np.uint64)
    return (k.astype(np.float64) + 0.5) * 2.0**-53


def standard_normal(rng: np.random.Generator, size) -> NDArray[np.float64]:
    """Standard normals by inverse CDF of open-interval uniforms."""
    return ndtri(uniform_open(rng, size))


def _row_normals(seed: int, replicate: int, n: int, p: int) -> NDArray[np.float64]:
    """n x p standard normals, one independent stream per row."""
    out = np.empty((n, p))
    for i in range(n):
        out[i] = standard_normal(rng_stream(seed, replicate, _KIND_ROW, i), p)
    return out


def _row_uniforms(seed: int, replicate: int, n: int, cols: int) -> NDArray[np.float64]:
    out = np.empty((n, cols))
    for i in range(n):
        out[i] = uniform_open(rng_stream(seed, replicate, _KIND_ROW, i), cols)
    return out


@dataclass(frozen=True)
class PopulationModel:
    """Specification of a sampling family.

    shape is the family's matrix parameter: Sigma for gaussian, Gamma (d x p)
    for sphere_elliptical, correlation R for gaussian_copula; unused for
    lb_ball / bounded_iid. mixing is the atomic law of the elliptical scaling
    scalars; mixing_schedule=True replaces i.i.d. draws with the
    deterministic quantile schedule at probabilities (i - 1/2)/n.
    """

    family: str
    n: int
    p: int
    d: Optional[int] = None
    shape: Optional[NDArray[np.float64]] = None
    mixing: Optional[DiscreteMeasure] = None
    b_exponent: Optional[float] = None
    bound: Optional[float] = None
    location: float | NDArray[np.float64] = 0.0
    mixing_schedule: bool = False
    entry_family: str = "gaussian"

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.n < 1 or self.p < 1:
            raise ValueError("dimensions n and p must be positive")
        if self.entry_family not in ("gaussian", "bounded"):
            raise ValueError("entry_family must be 'gaussian' or 'bounded'")
        if self.family == "gaussian":
            if self.shape is None:
                object.__setattr__(self, "shape", np.eye(self.p))
            shape = as_sym_matrix(self.shape, "Sigma")
            if shape.shape[0] != self.p:
                raise ValueError(f"Sigma must be {self.p}x{self.p}")
            object.__setattr__(self, "shape", shape)
        elif self.family == "sphere_elliptical":
            d = self.d if self.d is not None else self.p
            object.__setattr__(self, "d", int(d))
            if self.shape is None:
                if d != self.p:
                    raise ValueError("Gamma is required when d != p")
                object.__setattr__(self, "shape", np.eye(self.p))
            gamma = np.asarray(self.shape, dtype=np.float64)
            if gamma.shape != (self.d, self.p):
                raise ValueError(f"Gamma must be {self.d}x{self.p}, got {gamma.shape}")
            if not np.all(np.isfinite(gamma)):
                raise ValueError("Gamma must be finite")
            object.__setattr__(self, "shape", gamma)
            if self.mixing is None:
                object.__setattr__(
                    self, "mixing", DiscreteMeasure(np.array([1.0]), np.array([1.0]))
                )
        elif self.family == "gaussian_copula":
            if self.shape is None:
                object.__setattr__(self, "shape", np.eye(self.p))
            R = as_sym_matrix(self.shape, "R")
            if R.shape[0] != self.p:
                raise ValueError(f"R must be {self.p}x{self.p}")
            if np.any(np.abs(np.diag(R) - 1.0) > 1e-12):
                raise ValueError("R must have unit diagonal")
            object.__setattr__(self, "shape", R)
        elif self.family == "lb_ball":
            if self.b_exponent is None or not (1.0 <= float(self.b_exponent) <= 2.0):
                raise ValueError("b_exponent must be in [1, 2]")
        elif self.family == "bounded_iid":
            if self.bound is None or float(self.bound) < 0:
                raise ValueError("bound must be >= 0")
        if self.d is None:
            object.__setattr__(self, "d", self.p)
        mu = np.asarray(self.location, dtype=np.float64)
        if mu.ndim not in (0, 1):
            raise ValueError("location must be a scalar or a vector")
        row_dim = self.d if self.family == "sphere_elliptical" else self.p
        if mu.ndim == 1 and mu.size != row_dim:
            raise ValueError(f"location vector must have length {row_dim}")
        if not np.all(np.isfinite(mu)):
            raise ValueError("location must be finite")
        object.__setattr__(self, "location", mu if mu.ndim else float(mu))


def sample_gaussian(n: int, sigma, seed: int, replicate: int = 0) -> NDArray[np.float64]:
    """Rows i.i.d. N(0, Sigma): row = g @ sqrt(Sigma), g standard normal."""
    if n < 1:
        raise ValueError("n must be >= 1")
    root = matrix_sqrt_psd(sigma)
    G = _row_normals(seed, replicate, n, root.shape[0])
    return G @ root


def _sphere_rows(seed: int, replicate: int, n: int, p: int) -> NDArray[np.float64]:
    G = _row_normals(seed, replicate, n, p)
    norms = np.linalg.norm(G, axis=1, keepdims=True)
    return np.sqrt(p) * (G / norms)


def sample_sphere(p: int, seed: int, replicate: int = 0, row: int = 0) -> NDArray[np.float64]:
    """One uniform direction on the sphere of radius sqrt(p)."""
    if p < 1:
        raise ValueError("p must be >= 1")
    g = standard_normal(rng_stream(seed, replicate, _KIND_ROW, row), p)
    return np.sqrt(p) * (g / np.linalg.norm(g))


def _mixing_values(model: PopulationModel, seed: int, replicate: int) -> NDArray[np.float64]:
    nu = model.mixing
    assert nu is not None
    if model.mixing_schedule:
        probs = (np.arange(model.n) + 0.5) / model.n
    else:
        rng = rng_stream(seed, replicate, _KIND_MIXING, 0)
        probs = uniform_open(rng, model.n)
    cum = np.cumsum(nu.weights)
    idx = np.searchsorted(cum, probs, side="left")
    return nu.values[np.minimum(idx, nu.n_atoms - 1)]


def sample_elliptical(model: PopulationModel, seed: int, replicate: int = 0) -> NDArray[np.float64]:
    """Rows mu + lambda_i * Gamma (sqrt(p) r_i), r_i uniform directions.

    The mixing scalars come from a stream independent of every row stream.
    """
    if model.family != "sphere_elliptical":
        raise ValueError("sample_elliptical requires family 'sphere_elliptical'")
    lam = _mixing_values(model, seed, replicate)
    R = _sphere_rows(seed, replicate, model.n, model.p)
    Y = (lam[:, None] * R) @ np.asarray(model.shape).T
    return Y + model.location


def sample_gaussian_copula(n: int, R, seed: int, replicate: int = 0) -> NDArray[np.float64]:
    """Rows Phi(v) - 1/2 with v ~ N(0, R); entries strictly inside (-1/2, 1/2)."""
    R = as_sym_matrix(R, "R")
    if np.any(np.abs(np.diag(R) - 1.0) > 1e-12):
        raise ValueError("R must have unit diagonal")
    V = sample_gaussian(n, R, seed, replicate)
    # ndtr saturates to exactly 0/1 around |v| ~ 9; clamp to keep the
    # strict-openness contract.
    U = np.clip(ndtr(V), 2.0**-55, 1.0 - 2.0**-53)
    return U - 0.5


def sample_lb_ball(n: int, p: int, b: float, seed: int, replicate: int = 0) -> NDArray[np.float64]:
    """Rows uniform in the l_b ball of radius p^(1/b).

    Construction: entries g_i with density ~ exp(-|t|^b) (magnitudes are
    Gamma(1/b)^(1/b) by inverse CDF), an independent Exp(1) variable W, and
    row = g / (sum |g_i|^b + W)^(1/b), which is uniform in the unit ball;
    the row is then scaled by p^(1/b).
    """
    b = float(b)
    if not (1.0 <= b <= 2.0):
        raise ValueError("b must be in [1, 2]")
    if n < 1 or p < 1:
        raise ValueError("n and p must be >= 1")
    out = np.empty((n, p))
    for i in range(n):
        u = uniform_open(rng_stream(seed, replicate, _KIND_ROW, i), 2 * p + 1)
        gamma_draws = gammaincinv(1.0 / b, u[:p])
        magnitudes = gamma_draws ** (1.0 / b)
        signs = np.where(u[p : 2 * p] < 0.5, -1.0, 1.0)
        w_exp = -np.log1p(-u[2 * p])
        denom = (np.sum(gamma_draws) + w_exp) ** (1.0 / b)
        out[i] = signs * magnitudes / denom
    return p ** (1.0 / b) * out


def sample_bounded_iid(n: int, p: int, bound: float, seed: int, replicate: int = 0) -> NDArray[np.float64]:
    """i.i.d. entries uniform on [-bound, bound]."""
    bound = float(bound)
    if bound < 0:
        raise ValueError("bound must be >= 0")
    U = _row_uniforms(seed, replicate, n, p)
    return bound * (2.0 * U - 1.0)


def sample_covariance_model(
    n: int, sigma, seed: int, replicate: int = 0, entry_family: str = "gaussian"
) -> NDArray[np.float64]:
    """Y = X @ sqrt(Sigma) with i.i.d. unit-variance entries in X."""
    root = matrix_sqrt_psd(sigma)
    p = root.shape[0]
    if entry_family == "gaussian":
        X = _row_normals(seed, replicate, n, p)
    elif entry_family == "bounded":
        # uniform on [-sqrt(3), sqrt(3)] has variance 1
        X = np.sqrt(3.0) * (2.0 * _row_uniforms(seed, replicate, n, p) - 1.0)
    else:
        raise ValueError("entry_family must be 'gaussian' or 'bounded'")
    return X @ root


def sample_model(model: PopulationModel, seed: int, replicate: int = 0) -> NDArray[np.float64]:
    """Draw the model's n x (p or d) data matrix."""
    if model.family == "gaussian":
        return sample_covariance_model(
            model.n, model.shape, seed, replicate, model.entry_family
        ) + model.location
    if model.family == "sphere_elliptical":
        return sample_elliptical(model, seed, replicate)
    if model.family == "gaussian_copula":
        return sample_gaussian_copula(model.n, model.shape, seed, replicate) + model.location
    if model.family == "lb_ball":
        return sample_lb_ball(model.n, model.p, model.b_exponent, seed, replicate) + model.location
    if model.family == "bounded_iid":
        return sample_bounded_iid(model.n, model.p, model.bound, seed, replicate) + model.location
    raise ValueError(f"unknown family {model.family!r}")


def _shape_from_json(spec, p: int, rows: int | None = None):
    if spec is None:
        return None
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ValueError('shape spec must be an object with a "kind"')
    kind = spec["kind"]
    if kind == "identity":
        return np.eye(p if rows is None else rows)
    if kind == "dense":
        if "entries" not in spec:
            raise ValueError('dense shape needs "entries"')
        return np.asarray(spec["entries"], dtype=np.float64)
    if kind == "toeplitz":
        if "r" not in spec:
            raise ValueError('toeplitz shape needs "r"')
        return toeplitz_corr(p, float(spec["r"]))
    if kind == "file":
        if "path" not in spec:
            raise ValueError('file shape needs "path"')
        return load_matrix_csv(spec["path"])
    raise ValueError(f"unknown shape kind {kind!r}")


def model_from_json_dict(obj) -> PopulationModel:
    """Parse a model JSON object into a PopulationModel."""
    if not isinstance(obj, dict):
        raise ValueError("model JSON must be an object")
    for key in ("family", "n", "p"):
        if key not in obj:
            raise ValueError(f'model JSON needs "{key}"')
    family = obj["family"]
    n = int(obj["n"])
    p = int(obj["p"])
    d = int(obj["d"]) if "d" in obj and obj["d"] is not None else None
    rows = d if family == "sphere_elliptical" else None
    shape = _shape_from_json(obj.get("shape"), p, rows)
    mixing = measure_from_json_dict(obj["mixing"]) if obj.get("mixing") else None
    mu = obj.get("mu", 0.0)
    mu = np.asarray(mu, dtype=np.float64) if isinstance(mu, list) else float(mu)
    return PopulationModel(
        family=family,
        n=n,
        p=p,
        d=d,
        shape=shape,
        mixing=mixing,
        b_exponent=float(obj["b"]) if obj.get("b") is not None else None,
        bound=float(obj["bound"]) if obj.get("bound") is not None else None,
        location=mu,
        mixing_schedule=bool(obj.get("mixing_schedule", False)),
        entry_family=obj.get("entry_family", "gaussian"),
    )


def model_to_json_dict(model: PopulationModel) -> dict:
    out: dict = {"family": model.family, "n": model.n, "p": model.p, "d": model.d}
    if model.shape is not None:
        out["shape"] = {"kind": "dense", "entries": np.asarray(model.shape).tolist()}
    if model.mixing is not None:
        out["mixing"] = measure_to_json_dict(model.mixing)
    if model.b_exponent is not None:
        out["b"] = model.b_exponent
    if model.bound is not None:
        out["bound"] = model.bound
    mu = model.location
    out["mu"] = mu.tolist() if isinstance(mu, np.ndarray) else mu
    out["mixing_schedule"] = model.mixing_schedule
    out["entry_family"] = model.entry_family
    return out


def load_model_json(path) -> PopulationModel:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"invalid model JSON in {path}: {exc}") from exc
    return model_from_json_dict(obj)
