"""Monte Carlo experiments: data generation, risk estimation, sweeps.

Excess risk is measured in L2 of the target law: fresh target draws are
scored against the true regression function.  Every (cell, rep) task
owns an RNG stream spawned from the master seed keyed by its indices,
so results are bitwise reproducible regardless of execution order or
worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .distributions import (
    DistributionFamily,
    HolderFunction,
    NoiseSpec,
    family_from_spec,
    holder_from_spec,
    noise_from_spec,
    zeta,
)
from .errors import ConfigError
from .estimator import NeighborFunctionConfig, TrainedEstimator, fit
from .geom import NeighborIndex, PointSet
from .rates import RateParams, theoretical_rate


@dataclass(frozen=True)
class ExperimentConfig:
    source: DistributionFamily | None
    target: DistributionFamily
    f_star: HolderFunction
    noise: NoiseSpec
    estimator: NeighborFunctionConfig
    n_grid: tuple
    m_grid: tuple
    reps: int
    n_test: int
    seed: int

    def __post_init__(self):
        for name, grid in (("n_grid", self.n_grid), ("m_grid", self.m_grid)):
            if len(grid) == 0:
                raise ValueError(f"{name} must be nonempty")
            if any(g < 0 for g in grid):
                raise ValueError(f"{name} entries must be nonnegative")
            if list(grid) != sorted(set(grid)):
                raise ValueError(f"{name} must be strictly increasing")
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        if self.n_test < 1:
            raise ValueError("n_test must be at least 1")
        if self.source is None and any(g > 0 for g in self.n_grid):
            raise ValueError("n_grid > 0 requires a source distribution")

    def cells(self):
        return [(n, m) for n in self.n_grid for m in self.m_grid]


@dataclass(frozen=True)
class RiskEstimate:
    mean: float
    stderr: float
    reps: int
    n: int
    m: int
    q50: float
    q90: float


@dataclass(frozen=True)
class RepRecord:
    n: int
    m: int
    rep: int
    risk: float
    seed: int


@dataclass(frozen=True)
class SweepResult:
    estimates: tuple
    records: tuple


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    slope_ci_halfwidth: float
    r_squared: float


def generate_data(
    dist: DistributionFamily,
    f_star: HolderFunction,
    noise: NoiseSpec,
    n: int,
    rng: np.random.Generator,
):
    """n draws of (X, Y) with Y = f_*(X) + eps, eps independent of X."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    X = dist.sample_array(rng, n)
    y = np.asarray(f_star(X), dtype=np.float64).reshape(n) + noise.sample(rng, n)
    return X, y


def mc_excess_risk(
    fitted: TrainedEstimator,
    f_star: HolderFunction,
    Q: DistributionFamily,
    n_test: int,
    rng: np.random.Generator,
    workers: int = 1,
) -> float:
    """Average squared prediction error over fresh target draws."""
    if n_test < 1:
        raise ValueError("n_test must be at least 1")
    Xq = Q.sample_array(rng, n_test)
    preds = fitted.predict_batch(Xq, workers=workers)[0]
    truth = np.asarray(f_star(Xq), dtype=np.float64).reshape(n_test)
    return float(np.mean((preds - truth) ** 2))


def _run_rep(config: ExperimentConfig, cell_idx: int, n: int, m: int, rep: int):
    ss = np.random.SeedSequence(config.seed, spawn_key=(cell_idx, rep))
    seed_id = int(ss.generate_state(1, dtype=np.uint64)[0])
    rng_src, rng_tgt, rng_test = (np.random.default_rng(c) for c in ss.spawn(3))
    source = None
    if n > 0:
        source = generate_data(config.source, config.f_star, config.noise, n, rng_src)
    target = None
    if m > 0:
        target = generate_data(config.target, config.f_star, config.noise, m, rng_tgt)
    try:
        est = fit(source, target, config.estimator)
        risk = mc_excess_risk(est, config.f_star, config.target, config.n_test, rng_test)
    except Exception as exc:
        raise RuntimeError(f"estimator failed at cell (n={n}, m={m}), rep {rep}") from exc
    return RepRecord(n=n, m=m, rep=rep, risk=risk, seed=seed_id)


def sweep(config: ExperimentConfig, threads: int = 1) -> SweepResult:
    """Run reps x cells independent train/evaluate cycles.

    Results are reduced in (cell, rep) order regardless of completion
    order, so the output is identical for any thread count.
    """
    cells = config.cells()
    tasks = [
        (ci, n, m, rep)
        for ci, (n, m) in enumerate(cells)
        for rep in range(config.reps)
    ]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(
                pool.map(lambda t: _run_rep(config, *t), tasks)
            )
    else:
        results = [_run_rep(config, *t) for t in tasks]
    by_key = {(r.n, r.m, r.rep): r for r in results}
    records = tuple(
        by_key[(n, m, rep)] for (n, m) in cells for rep in range(config.reps)
    )
    estimates = []
    for n, m in cells:
        risks = np.array([r.risk for r in records if (r.n, r.m) == (n, m)])
        stderr = (
            float(np.std(risks, ddof=1) / math.sqrt(len(risks)))
            if len(risks) > 1
            else 0.0
        )
        estimates.append(
            RiskEstimate(
                mean=float(np.mean(risks)),
                stderr=stderr,
                reps=config.reps,
                n=n,
                m=m,
                q50=float(np.quantile(risks, 0.5)),
                q90=float(np.quantile(risks, 0.9)),
            )
        )
    return SweepResult(estimates=tuple(estimates), records=records)


def fit_slope(sizes, risks) -> SlopeFit:
    """OLS fit of log risk against log size, with a 95% normal CI."""
    x = np.asarray(sizes, dtype=np.float64)
    y = np.asarray(risks, dtype=np.float64)
    if len(x) < 3:
        raise ValueError("need at least 3 points for a slope fit")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("sizes and risks must be positive")
    lx, ly = np.log(x), np.log(y)
    xc = lx - lx.mean()
    sxx = float(np.sum(xc**2))
    slope = float(np.sum(xc * ly) / sxx)
    intercept = float(ly.mean() - slope * lx.mean())
    resid = ly - (intercept + slope * lx)
    rss = float(np.sum(resid**2))
    tss = float(np.sum((ly - ly.mean()) ** 2))
    dof = len(x) - 2
    se = math.sqrt(rss / dof / sxx) if dof > 0 else 0.0
    if tss > 0:
        r2 = 1.0 - rss / tss
    else:
        r2 = 1.0 if rss < 1e-30 else 0.0
    return SlopeFit(
        slope=slope,
        intercept=intercept,
        slope_ci_halfwidth=1.96 * se,
        r_squared=r2,
    )


# ---------------------------------------------------------------------------
# Hard-instance bump ensembles
# ---------------------------------------------------------------------------


def bump_centers(a: float, h: float, d: int = 1) -> np.ndarray:
    """Centres of a 2h-packing of [a, 2a]^d (infinity norm), as a grid."""
    if a <= 0 or h <= 0:
        raise ValueError("a and h must be positive")
    per_axis = int(math.floor(a / (2.0 * h)))
    if per_axis < 1:
        raise ValueError(f"h={h} >= a/2={a / 2}: no 2h-packing of [a, 2a] exists")
    axis = a + h + 2.0 * h * np.arange(per_axis)
    grids = np.meshgrid(*([axis] * d), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def bump_ensemble(
    a: float, h: float, L: float, beta: float, bits, d: int = 1
) -> HolderFunction:
    """Sum of disjoint triangular bumps L h^beta (1 - |x - z_j|/h)_+.

    One bump per selected centre of the 2h-packing of [a, 2a]^d; the
    declared Holder budget is L h^beta + 2^(1-beta) L, which dominates
    the sup-norm plus beta-seminorm of any bit pattern.
    """
    if not 0.0 < beta <= 1.0:
        raise ValueError("beta must lie in (0, 1]")
    if L <= 0:
        raise ValueError("L must be positive")
    centers = bump_centers(a, h, d)
    bits_arr = np.asarray(bits, dtype=np.float64).reshape(-1)
    if len(bits_arr) != len(centers):
        raise ValueError(
            f"bits length {len(bits_arr)} != packing size {len(centers)}"
        )
    if not np.all((bits_arr == 0.0) | (bits_arr == 1.0)):
        raise ValueError("bits must be 0/1")
    active = centers[bits_arr == 1.0]
    amp = L * h**beta

    def evaluate(X):
        X = np.asarray(X, dtype=np.float64).reshape(-1, d)
        out = np.zeros(len(X))
        for z in active:
            u = np.linalg.norm(X - z[None, :], axis=1) / h
            out += amp * np.clip(1.0 - u, 0.0, None)
        return out

    budget = amp + 2.0 ** (1.0 - beta) * L
    return HolderFunction(
        fn=evaluate,
        L=budget,
        beta=beta,
        descriptor=f"bumps(a={a}, h={h}, M={len(centers)}, on={len(active)})",
        domain=(tuple([0.0] * d), tuple([2.0 * a + 1.0] * d)),
        dimension=d,
    )


# ---------------------------------------------------------------------------
# Regime verification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RegimeExperimentReport:
    axis: str  # which sample size varies: "n" or "m"
    sizes: tuple
    mean_risks: tuple
    fitted: SlopeFit | None
    theory_slope: float
    regimes: tuple
    discrepancy: float | None
    degenerate: bool


def regime_experiment(
    config: ExperimentConfig, rate_params: RateParams, threads: int = 1
) -> RegimeExperimentReport:
    """Compare the fitted log-log slope against the theoretical exponent.

    No pass/fail is hard-coded; the report carries the discrepancy and
    the CI for downstream judgement.
    """
    result = sweep(config, threads=threads)
    axis = "n" if len(config.n_grid) > 1 else "m"
    sizes = []
    risks = []
    regimes = []
    theory = []
    for est in result.estimates:
        size = est.n if axis == "n" else est.m
        rep = theoretical_rate(
            RateParams(
                rate_params.gamma,
                rate_params.s,
                rate_params.beta,
                rate_params.d,
                est.n,
                est.m,
            )
        )
        sizes.append(size)
        risks.append(est.mean)
        regimes.append(rep.regime)
        theory.append(rep.rate_value)
    span = math.log10(max(sizes) / min(sizes))
    if span < 1.5:
        raise ValueError("size grid must span at least 1.5 decades")
    theory_slope = fit_slope(sizes, theory).slope
    degenerate = any(r <= 1e-30 for r in risks)
    fitted = None if degenerate else fit_slope(sizes, risks)
    return RegimeExperimentReport(
        axis=axis,
        sizes=tuple(sizes),
        mean_risks=tuple(risks),
        fitted=fitted,
        theory_slope=theory_slope,
        regimes=tuple(regimes),
        discrepancy=None if fitted is None else fitted.slope - theory_slope,
        degenerate=degenerate,
    )


def neighbor_radius_concentration(
    dist: DistributionFamily,
    n: int,
    k: int,
    h_plus: float,
    x_grid,
    trials: int,
    seed: int,
) -> int:
    """Count trials where R_k(x) <= zeta_{h_plus}(x) across the whole grid.

    Empirical form of the neighbour-distance concentration event; the
    population radii are computed once since they do not depend on the
    sample.
    """
    xs = np.asarray(x_grid, dtype=np.float64).reshape(-1, dist.dimension)
    zetas = np.array([zeta(dist, x if len(x) > 1 else float(x[0]), h_plus) for x in xs])
    hits = 0
    for trial in range(trials):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(trial,)))
        pts = dist.sample_array(rng, n)
        index = NeighborIndex(PointSet(pts))
        dists, _ = index.query_batch(xs, k)
        if np.all(dists[:, -1] <= zetas):
            hits += 1
    return hits


# ---------------------------------------------------------------------------
# JSON configuration
# ---------------------------------------------------------------------------

_ESTIMATOR_FIELDS = {"beta", "d", "kappa_p", "kappa_q", "ell_factor", "tau"}


def estimator_from_spec(obj: dict, where: str = "estimator") -> NeighborFunctionConfig:
    if not isinstance(obj, dict):
        raise ConfigError(where, "expected a JSON object")
    for key in obj:
        if key not in _ESTIMATOR_FIELDS:
            raise ConfigError(f"{where}.{key}", "unknown field")
    for key in ("beta", "d"):
        if key not in obj:
            raise ConfigError(f"{where}.{key}", "missing")
    try:
        return NeighborFunctionConfig(
            beta=float(obj["beta"]),
            d=int(obj["d"]),
            kappa_p=float(obj.get("kappa_p", 1.0)),
            kappa_q=float(obj.get("kappa_q", 1.0)),
            ell_factor=float(obj.get("ell_factor", 1.0)),
            tau=float(obj.get("tau", 2.0)),
        )
    except ValueError as exc:
        raise ConfigError(where, str(exc)) from None


_EXPERIMENT_FIELDS = {
    "source",
    "target",
    "f_star",
    "noise",
    "estimator",
    "n_grid",
    "m_grid",
    "reps",
    "n_test",
    "seed",
}


def experiment_from_spec(obj: dict) -> ExperimentConfig:
    """Parse an ExperimentConfig from its JSON mirror."""
    if not isinstance(obj, dict):
        raise ConfigError("config", "expected a JSON object")
    for key in obj:
        if key not in _EXPERIMENT_FIELDS:
            raise ConfigError(key, "unknown field")
    for key in ("target", "f_star", "noise", "estimator", "n_grid", "m_grid",
                "reps", "n_test", "seed"):
        if key not in obj:
            raise ConfigError(key, "missing")
    source = None
    if obj.get("source") is not None:
        source = family_from_spec(obj["source"], "source")
    try:
        return ExperimentConfig(
            source=source,
            target=family_from_spec(obj["target"], "target"),
            f_star=holder_from_spec(obj["f_star"]),
            noise=noise_from_spec(obj["noise"]),
            estimator=estimator_from_spec(obj["estimator"]),
            n_grid=tuple(int(v) for v in obj["n_grid"]),
            m_grid=tuple(int(v) for v in obj["m_grid"]),
            reps=int(obj["reps"]),
            n_test=int(obj["n_test"]),
            seed=int(obj["seed"]),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError("config", str(exc)) from None
