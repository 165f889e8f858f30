"""Concentration checks and geometric diagnostics for high-dimensional rows.

Monte Carlo harnesses verify an explicit exponential tail bound for the
empirical Stieltjes transform and the qualitative decay of quadratic-form
deviations; row-geometry diagnostics (norms close to a common sphere,
pairwise angles close to orthogonal) summarize whether a data set looks
like it came from a concentrated high-dimensional distribution. The
Gaussian-copula covariance identity and its operator-norm bound live here
as well.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import os
from typing import Callable, Optional, Sequence, TypeVar

import numpy as np
from numpy.typing import NDArray

from .linalg import (
    as_sym_matrix,
    operator_norm,
    sample_correlation,
    sample_covariance,
    sym_eigenvalues,
    toeplitz_corr,
)
from .measures import DiscreteMeasure
from .samplers import PopulationModel, sample_gaussian_copula, sample_model

_T = TypeVar("_T")
_U = TypeVar("_U")

__all__ = [
    "ConcentrationReport",
    "parallel_map",
    "empirical_stieltjes",
    "azuma_bound",
    "stieltjes_concentration_mc",
    "population_covariance",
    "quadratic_form_deviation",
    "norm_diagnostic",
    "angle_diagnostic",
    "copula_cov",
    "copula_norm_bound",
    "tightness_check",
    "verify_lemma6",
    "verify_quadform",
    "verify_copula",
    "verify_tightness",
    "report_to_json_dict",
]

# Tail thresholds are placed at these multiples of sqrt(n)/(p*v), the
# scale on which the martingale bound is informative.
_THRESHOLD_MULTIPLES = (0.5, 1.0, 2.0, 4.0)

# Fixed histogram layout for pairwise-angle diagnostics.
ANGLE_BINS = 50

_EXACT_ZERO = 1e-13


def _thread_count() -> int:
    env = os.environ.get("RMT_THREADS")
    if env is not None:
        count = int(env)
        if count < 1:
            raise ValueError("RMT_THREADS must be >= 1")
        return count
    return os.cpu_count() or 1


def parallel_map(fn: Callable[[_T], _U], items: Sequence[_T]) -> list[_U]:
    """Map preserving order, threaded when RMT_THREADS allows.

    Results are independent of the thread count because every item draws
    from its own RNG stream.
    """
    workers = _thread_count()
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class ConcentrationReport:
    """Per-dimension Monte Carlo summary of one concentration statistic.

    thresholds/frequencies/bounds are aligned with dims: row i holds the
    threshold ladder, empirical tail frequencies, and clamped theoretical
    bounds for dims[i]. details carries statistic-specific extras.
    """

    statistic: str
    dims: list[int]
    reps: int
    thresholds: list[list[float]]
    frequencies: list[list[float]]
    bounds: list[list[float]]
    seed: int
    details: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        for rows in (self.thresholds, self.frequencies, self.bounds):
            if len(rows) != len(self.dims):
                raise ValueError("per-dimension rows must align with dims")


def report_to_json_dict(report: ConcentrationReport, ok: Optional[bool] = None) -> dict:
    out = {
        "statistic": report.statistic,
        "dims": report.dims,
        "reps": report.reps,
        "thresholds": report.thresholds,
        "frequencies": report.frequencies,
        "bounds": report.bounds,
        "seed": report.seed,
        "details": report.details,
    }
    if ok is not None:
        out["ok"] = ok
    return out


def empirical_stieltjes(eigs, z: complex) -> complex:
    """(1/p) sum 1/(lam_i - z) over the spectrum; maps C+ into C+."""
    eigs = np.asarray(eigs, dtype=np.float64)
    if eigs.ndim != 1 or eigs.size == 0:
        raise ValueError("eigs must be a nonempty 1-d array")
    z = complex(z)
    if z.imag == 0:
        raise ValueError("z must have nonzero imaginary part")
    return complex(np.mean(1.0 / (eigs - z)))


def azuma_bound(r: float, p: int, n: int, v: float, clamp: bool = False) -> float:
    """Tail bound 4*exp(-r^2 p^2 v^2 / (16 n)); clamp caps it at 1."""
    if not (r > 0 and v > 0):
        raise ValueError("r and v must be positive")
    if p < 1 or n < 1:
        raise ValueError("p and n must be >= 1")
    raw = 4.0 * float(np.exp(-(r**2) * p**2 * v**2 / (16.0 * n)))
    return min(raw, 1.0) if clamp else raw


def _binomial_se(clamped_bound: float, reps: int) -> float:
    q = min(clamped_bound, 0.5)
    return float(np.sqrt(q * (1.0 - q) / reps))


def stieltjes_concentration_mc(
    model: PopulationModel, z: complex, reps: int, seed: int
) -> ConcentrationReport:
    """Tail frequencies of |m_p(z) - mean| for M = Y'Y across replicates.

    m_p(z) = (1/p) trace((M - z I)^{-1}) with M the un-normalized Gram
    matrix of the rows. Thresholds sit at {0.5, 1, 2, 4} * sqrt(n)/(p*v);
    each frequency is paired with the clamped exponential bound.
    """
    if reps < 50:
        raise ValueError("reps must be >= 50")
    z = complex(z)
    if not (z.imag > 0):
        raise ValueError("z must have positive imaginary part")

    def one(replicate: int) -> complex:
        Y = sample_model(model, seed, replicate)
        gram = Y.T @ Y
        return empirical_stieltjes(sym_eigenvalues(gram), z)

    values = np.array(parallel_map(one, range(reps)), dtype=np.complex128)
    center = values.mean()
    deviations = np.abs(values - center)
    v = z.imag
    scale = np.sqrt(model.n) / (model.p * v)
    thresholds = [mult * scale for mult in _THRESHOLD_MULTIPLES]
    frequencies = [float(np.mean(deviations > r)) for r in thresholds]
    raw_bounds = [azuma_bound(r, model.p, model.n, v) for r in thresholds]
    clamped = [min(b, 1.0) for b in raw_bounds]
    ses = [_binomial_se(b, reps) for b in clamped]
    within = [f <= b + 3.0 * se for f, b, se in zip(frequencies, clamped, ses)]
    details = {
        "std": float(np.sqrt(np.mean(deviations**2))),
        "mean_deviation": float(deviations.mean()),
        "max_deviation": float(deviations.max()),
        "raw_bounds": raw_bounds,
        "binomial_ses": ses,
        "within_bound": within,
    }
    return ConcentrationReport(
        statistic="stieltjes_tail",
        dims=[model.p],
        reps=reps,
        thresholds=[thresholds],
        frequencies=[frequencies],
        bounds=[clamped],
        seed=seed,
        details=details,
    )


def population_covariance(model: PopulationModel) -> NDArray[np.float64]:
    """Population covariance of one data row, for families where it is known."""
    if model.family == "gaussian":
        return as_sym_matrix(model.shape, "Sigma")
    if model.family == "sphere_elliptical":
        gamma = np.asarray(model.shape)
        assert model.mixing is not None
        second_moment = float(model.mixing.integrate(lambda lam: lam**2))
        return as_sym_matrix(second_moment * (gamma @ gamma.T), "Sigma")
    if model.family == "gaussian_copula":
        return copula_cov(model.shape)
    raise ValueError(f"no population covariance available for family {model.family!r}")


def quadratic_form_deviation(
    model: PopulationModel, M, reps: int, seed: int
) -> ConcentrationReport:
    """Max over rows of |r'Mr/p - trace(M Sigma)/p|, rows centered exactly.

    Rows are centered by the model's known mean; Sigma is the known
    population covariance, so the target trace(M Sigma)/p is exact.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    sigma = population_covariance(model)
    dim = sigma.shape[0]
    M = as_sym_matrix(M, "M")
    if M.shape[0] != dim:
        raise ValueError(f"M must be {dim}x{dim} to match the rows")
    target = float(np.trace(M @ sigma)) / dim
    mean_row = np.asarray(model.location, dtype=np.float64)

    def one(replicate: int) -> float:
        Y = sample_model(model, seed, replicate) - mean_row
        quad = np.einsum("ij,jk,ik->i", Y, M, Y) / dim
        return float(np.max(np.abs(quad - target)))

    stats = np.array(parallel_map(one, range(reps)))
    details = {
        "mean_max_deviation": float(stats.mean()),
        "max_max_deviation": float(stats.max()),
        "per_replicate": stats.tolist(),
        "target": target,
        "sigma_norm_over_log_p": float(operator_norm(sigma) / np.log(max(dim, 2))),
    }
    return ConcentrationReport(
        statistic="quadratic_form_max_row_deviation",
        dims=[dim],
        reps=reps,
        thresholds=[[]],
        frequencies=[[]],
        bounds=[[]],
        seed=seed,
        details=details,
    )


def norm_diagnostic(
    Y, trace_sigma_over_p: float, center: bool = False
) -> tuple[NDArray[np.float64], float]:
    """Per-row ||r||^2/p and the max deviation from trace(Sigma)/p."""
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim != 2 or Y.size == 0:
        raise ValueError("Y must be a nonempty 2-d array")
    if center:
        Y = Y - Y.mean(axis=0)
    p = Y.shape[1]
    values = np.einsum("ij,ij->i", Y, Y) / p
    max_dev = float(np.max(np.abs(values - trace_sigma_over_p)))
    return values, max_dev


def angle_diagnostic(Y) -> tuple[float, NDArray[np.int64]]:
    """Max off-diagonal |r_i'r_j|/p and its histogram on 50 bins over [0, 1].

    Values above 1 are counted in the top bin so no mass is dropped.
    """
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim != 2 or Y.shape[0] < 2:
        raise ValueError("Y must have at least two rows")
    p = Y.shape[1]
    gram = (Y @ Y.T) / p
    off = np.abs(gram[np.triu_indices(Y.shape[0], k=1)])
    counts, _ = np.histogram(np.minimum(off, 1.0), bins=ANGLE_BINS, range=(0.0, 1.0))
    return float(off.max()), counts.astype(np.int64)


def copula_cov(R) -> NDArray[np.float64]:
    """Covariance arcsin(R_ij/2)/(2 pi) of copula data built from N(0, R)."""
    R = as_sym_matrix(R, "R")
    if np.any(np.abs(np.diag(R) - 1.0) > 1e-12):
        raise ValueError("R must have unit diagonal")
    if np.any(np.abs(R) > 1.0 + 1e-12):
        raise ValueError("R entries must lie in [-1, 1]")
    C = np.arcsin(R / 2.0) / (2.0 * np.pi)
    # arcsin(1/2) rounds one ulp above pi/6; the marginal variance is 1/12.
    np.fill_diagonal(C, 1.0 / 12.0)
    return C


def copula_norm_bound(R) -> float:
    """Operator-norm bound (1/2pi)(s/2 + 4 s^2 (pi/6 - 1/2)), s = ||R||_2."""
    s = operator_norm(as_sym_matrix(R, "R"))
    return (1.0 / (2.0 * np.pi)) * (s / 2.0 + 4.0 * s**2 * (np.pi / 6.0 - 0.5))


def tightness_check(eigs, trace_sigma_over_p: float, margin: float) -> bool:
    """True iff the mass above M = 10(trace+1) is at most (trace+1+margin)/M."""
    eigs = np.asarray(eigs, dtype=np.float64)
    if eigs.ndim != 1 or eigs.size == 0:
        raise ValueError("eigs must be a nonempty 1-d array")
    if np.any(eigs < -1e-10):
        raise ValueError("eigenvalues must be >= -1e-10")
    if trace_sigma_over_p < 0 or margin < 0:
        raise ValueError("trace_sigma_over_p and margin must be >= 0")
    M = 10.0 * (trace_sigma_over_p + 1.0)
    fraction = float(np.mean(eigs >= M))
    return bool(fraction <= (trace_sigma_over_p + 1.0 + margin) / M)


def verify_lemma6(
    reps: int = 200, seed: int = 0, dims: Sequence[int] = (50, 100, 200), z: complex = 1j
) -> tuple[ConcentrationReport, bool]:
    """Tail frequencies vs the exponential bound along a dimension ladder.

    Passes when every frequency is at most its clamped bound plus three
    binomial standard errors and the replicate standard deviation of
    m_p(z) strictly decreases as p = n grows.
    """
    thresholds, frequencies, bounds = [], [], []
    stds, all_within = [], True
    details_by_dim = []
    for j, p in enumerate(dims):
        model = PopulationModel(family="gaussian", n=p, p=p)
        # Per-dimension seed offset keeps the ladders on disjoint streams.
        report = stieltjes_concentration_mc(model, z, reps, seed + j)
        thresholds.append(report.thresholds[0])
        frequencies.append(report.frequencies[0])
        bounds.append(report.bounds[0])
        stds.append(report.details["std"])
        all_within = all_within and all(report.details["within_bound"])
        details_by_dim.append(report.details)
    sd_decreasing = all(b < a for a, b in zip(stds, stds[1:]))
    ok = all_within and sd_decreasing
    combined = ConcentrationReport(
        statistic="stieltjes_tail",
        dims=list(dims),
        reps=reps,
        thresholds=thresholds,
        frequencies=frequencies,
        bounds=bounds,
        seed=seed,
        details={
            "stds": stds,
            "sd_strictly_decreasing": sd_decreasing,
            "per_dim": details_by_dim,
            "z": complex(z),
        },
    )
    return combined, ok


def _quadform_models(p: int) -> dict[str, PopulationModel]:
    mixing = DiscreteMeasure(np.array([1.0]), np.array([1.0]))
    return {
        "gaussian": PopulationModel(family="gaussian", n=p, p=p),
        "sphere": PopulationModel(family="sphere_elliptical", n=p, p=p, mixing=mixing),
        "copula": PopulationModel(family="gaussian_copula", n=p, p=p),
    }


def verify_quadform(
    reps: int = 20, seed: int = 0, dims: Sequence[int] = (100, 200, 400)
) -> tuple[ConcentrationReport, bool]:
    """Mean max-row quadratic-form deviation decays along the dimension ladder.

    M = Id for every family; passes when the mean statistic is
    nonincreasing in p for gaussian, sphere, and copula rows and the
    sphere statistic is exactly zero (norm rigidity).
    """
    means: dict[str, list[float]] = {}
    for p in dims:
        for name, model in _quadform_models(p).items():
            report = quadratic_form_deviation(model, np.eye(p), reps, seed)
            means.setdefault(name, []).append(report.details["mean_max_deviation"])
    # Values at rounding-noise level count as zero for the decay check.
    nonincreasing = {
        name: all(
            b <= a or b <= _EXACT_ZERO for a, b in zip(vals, vals[1:])
        )
        for name, vals in means.items()
    }
    sphere_zero = max(means["sphere"]) <= _EXACT_ZERO
    ok = all(nonincreasing.values()) and sphere_zero
    combined = ConcentrationReport(
        statistic="quadratic_form_max_row_deviation",
        dims=list(dims),
        reps=reps,
        thresholds=[[] for _ in dims],
        frequencies=[[] for _ in dims],
        bounds=[[] for _ in dims],
        seed=seed,
        details={
            "mean_max_deviation": means,
            "nonincreasing": nonincreasing,
            "sphere_exactly_zero": sphere_zero,
        },
    )
    return combined, ok


def verify_copula(
    seed: int = 0,
    trials: int = 100,
    p: int = 50,
    mc_samples: int = 100000,
    mc_p: int = 4,
) -> tuple[ConcentrationReport, bool]:
    """Covariance identity and norm bound for Gaussian-copula data.

    Checks: diagonal of copula_cov(Id) equals 1/12 exactly; the norm
    bound dominates operator_norm(copula_cov(R)) for `trials` random
    correlation matrices; a Monte Carlo covariance at mc_samples draws
    matches copula_cov entrywise within 5 MC standard errors.
    """
    diag_exact = bool(
        np.all(np.diag(copula_cov(np.eye(3))) == 1.0 / 12.0)
    )

    bound_ok = True
    gaps = []
    for t in range(trials):
        Z = sample_model(PopulationModel(family="gaussian", n=p + 10, p=p), seed, t)
        R = sample_correlation(Z)
        gap = copula_norm_bound(R) - operator_norm(copula_cov(R))
        gaps.append(float(gap))
        bound_ok = bound_ok and gap >= 0

    R_mc = toeplitz_corr(mc_p, 0.3)
    X = sample_gaussian_copula(mc_samples, R_mc, seed, replicate=trials)
    emp = (X.T @ X) / mc_samples
    target = copula_cov(R_mc)
    # Entrywise MC standard error of a mean of products x_i x_j.
    second = (X**2).T @ (X**2) / mc_samples
    ses = np.sqrt(np.maximum(second - emp**2, 0.0) / mc_samples)
    mc_ok = bool(np.all(np.abs(emp - target) <= 5.0 * ses))

    ok = diag_exact and bound_ok and mc_ok
    report = ConcentrationReport(
        statistic="copula_covariance",
        dims=[p, mc_p],
        reps=max(trials, 1),
        thresholds=[[], []],
        frequencies=[[], []],
        bounds=[[], []],
        seed=seed,
        details={
            "diagonal_exact": diag_exact,
            "bound_dominates": bound_ok,
            "min_bound_gap": min(gaps),
            "mc_within_5_se": mc_ok,
            "mc_max_abs_error": float(np.max(np.abs(emp - target))),
            "mc_samples": mc_samples,
        },
    )
    return report, ok


def verify_tightness(seed: int = 0, p: int = 200) -> tuple[ConcentrationReport, bool]:
    """Spectral mass bound on simulated null data plus an adversarial case.

    A null sample covariance spectrum must pass the check; a spectrum with
    30% of its mass far above the cutoff must fail it.
    """
    model = PopulationModel(family="gaussian", n=p, p=p)
    Y = sample_model(model, seed, 0)
    eigs = sym_eigenvalues(sample_covariance(Y))
    null_ok = tightness_check(eigs, 1.0, 0.0)
    n_heavy = int(round(0.3 * p))
    adversarial = np.concatenate([np.zeros(p - n_heavy), np.full(n_heavy, 1e4)])
    adversarial_flagged = not tightness_check(adversarial, 1.0, 0.0)
    ok = bool(null_ok and adversarial_flagged)
    report = ConcentrationReport(
        statistic="spectral_tightness",
        dims=[p],
        reps=1,
        thresholds=[[]],
        frequencies=[[]],
        bounds=[[]],
        seed=seed,
        details={
            "null_passes": bool(null_ok),
            "adversarial_flagged": bool(adversarial_flagged),
            "largest_eigenvalue": float(eigs[-1]),
        },
    )
    return report, ok
