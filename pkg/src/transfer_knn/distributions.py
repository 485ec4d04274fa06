"""Parametric covariate distributions with exact densities and samplers.

Every family exposes a density (right-continuous at the left support
endpoint), a CDF, inverse-CDF or rejection sampling, Euclidean
ball-mass, and regularity metadata: an upper density bound D and, where
the family is known to satisfy the local mass property

    theta^-1 p(x) r^d  <=  P{B(x, r)}  <=  theta p(x) r^d,   r in (0, 1],

the constant theta.  Families are immutable and safe to share across
threads; samplers draw from a caller-owned numpy Generator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ._integrate import improper_quad
from .errors import ConfigError, NoClosedFormError, RadiusSearchError
from .geom import PointSet

# zeta() doubles its bracket up to this radius before giving up.
ZETA_BRACKET_CAP = 2.0**40

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(7)


def _maybe_scalar(out: np.ndarray, like) -> float | np.ndarray:
    if np.isscalar(like) or getattr(like, "ndim", 1) == 0:
        return float(np.asarray(out).reshape(-1)[0])
    return out


class DistributionFamily:
    """Base class; subclasses are frozen dataclasses of parameters."""

    dimension: int = 1

    # -- densities -----------------------------------------------------
    def density(self, x):
        raise NotImplementedError

    def log_density(self, x) -> float:
        """log of the density at a single point (-inf outside support)."""
        d = self.density(x)
        d = float(d) if np.ndim(d) == 0 else float(np.asarray(d))
        return math.log(d) if d > 0.0 else -math.inf

    # -- 1-D distribution functions ------------------------------------
    def cdf(self, x):
        raise NotImplementedError(f"{type(self).__name__} has no 1-D CDF")

    def ppf(self, u):
        """Quantile function; numeric bisection unless overridden."""
        lo, hi = self.support
        us = np.atleast_1d(np.asarray(u, dtype=np.float64))
        out = np.empty_like(us)
        for i, ui in enumerate(us):
            if not 0.0 < ui < 1.0:
                raise ValueError("ppf argument must lie in (0, 1)")
            a, b = lo, min(hi, lo + 1.0)
            while self.cdf(b) < ui:
                b = lo + 2.0 * (b - lo)
                if b - lo > ZETA_BRACKET_CAP:
                    raise RadiusSearchError("quantile bracket exceeded cap")
            for _ in range(200):
                mid = 0.5 * (a + b)
                if self.cdf(mid) < ui:
                    a = mid
                else:
                    b = mid
            out[i] = b
        return _maybe_scalar(out, u)

    # -- sampling --------------------------------------------------------
    def sample_array(self, rng: np.random.Generator, n: int) -> np.ndarray:
        raise NotImplementedError

    @property
    def support(self) -> tuple[float, float]:
        raise NotImplementedError

    @property
    def density_bound(self) -> float:
        """D: an upper bound on the density, attained at the left endpoint."""
        raise NotImplementedError

    @property
    def local_mass_theta(self) -> float | None:
        """theta for which the family is known to lie in P(D, theta)."""
        return None

    def spec(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Pareto(DistributionFamily):
    """Density (alpha/sigma) (1 + x/sigma)^-(alpha+1) on [0, oo)."""

    alpha: float
    sigma: float

    def __post_init__(self):
        if self.alpha <= 0 or self.sigma <= 0:
            raise ValueError("Pareto requires alpha > 0 and sigma > 0")

    def density(self, x):
        xs = np.asarray(x, dtype=np.float64)
        with np.errstate(invalid="ignore"):
            val = (self.alpha / self.sigma) * np.power(
                1.0 + xs / self.sigma, -(self.alpha + 1.0)
            )
        return _maybe_scalar(np.where(xs >= 0.0, val, 0.0), x)

    def log_density(self, x) -> float:
        x = float(x)
        if x < 0.0:
            return -math.inf
        return math.log(self.alpha / self.sigma) - (self.alpha + 1.0) * math.log1p(
            x / self.sigma
        )

    def cdf(self, x):
        xs = np.asarray(x, dtype=np.float64)
        val = 1.0 - np.power(1.0 + np.maximum(xs, 0.0) / self.sigma, -self.alpha)
        return _maybe_scalar(np.where(xs >= 0.0, val, 0.0), x)

    def ppf(self, u):
        us = np.asarray(u, dtype=np.float64)
        return _maybe_scalar(
            self.sigma * (np.power(1.0 - us, -1.0 / self.alpha) - 1.0), u
        )

    def sample_array(self, rng, n):
        return np.asarray(self.ppf(rng.random(n)), dtype=np.float64).reshape(n, 1)

    @property
    def support(self):
        return (0.0, math.inf)

    @property
    def density_bound(self):
        return self.alpha / self.sigma

    @property
    def local_mass_theta(self):
        return 2.0 * (1.0 + 1.0 / self.sigma) ** (self.alpha + 1.0)

    def spec(self):
        return {"family": "pareto", "alpha": self.alpha, "sigma": self.sigma}


@dataclass(frozen=True)
class Exponential(DistributionFamily):
    """Density lam * exp(-lam x) on [0, oo)."""

    lam: float

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("Exponential requires lambda > 0")

    def density(self, x):
        xs = np.asarray(x, dtype=np.float64)
        with np.errstate(over="ignore"):
            val = self.lam * np.exp(-self.lam * xs)
        return _maybe_scalar(np.where(xs >= 0.0, val, 0.0), x)

    def log_density(self, x) -> float:
        x = float(x)
        if x < 0.0:
            return -math.inf
        return math.log(self.lam) - self.lam * x

    def cdf(self, x):
        xs = np.asarray(x, dtype=np.float64)
        val = -np.expm1(-self.lam * np.maximum(xs, 0.0))
        return _maybe_scalar(np.where(xs >= 0.0, val, 0.0), x)

    def ppf(self, u):
        us = np.asarray(u, dtype=np.float64)
        return _maybe_scalar(-np.log1p(-us) / self.lam, u)

    def sample_array(self, rng, n):
        return np.asarray(self.ppf(rng.random(n)), dtype=np.float64).reshape(n, 1)

    @property
    def support(self):
        return (0.0, math.inf)

    @property
    def density_bound(self):
        return self.lam

    @property
    def local_mass_theta(self):
        return math.exp(self.lam)

    def spec(self):
        return {"family": "exponential", "lambda": self.lam}


@dataclass(frozen=True)
class Uniform(DistributionFamily):
    """Uniform on [a, b]."""

    a: float
    b: float

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError("Uniform requires a < b")

    def density(self, x):
        xs = np.asarray(x, dtype=np.float64)
        inside = (xs >= self.a) & (xs <= self.b)
        return _maybe_scalar(np.where(inside, 1.0 / (self.b - self.a), 0.0), x)

    def cdf(self, x):
        xs = np.asarray(x, dtype=np.float64)
        return _maybe_scalar(np.clip((xs - self.a) / (self.b - self.a), 0.0, 1.0), x)

    def ppf(self, u):
        us = np.asarray(u, dtype=np.float64)
        return _maybe_scalar(self.a + us * (self.b - self.a), u)

    def sample_array(self, rng, n):
        return rng.uniform(self.a, self.b, size=n).reshape(n, 1)

    @property
    def support(self):
        return (self.a, self.b)

    @property
    def density_bound(self):
        return 1.0 / (self.b - self.a)

    @property
    def local_mass_theta(self):
        return max(2.0, 1.0 / (self.b - self.a))

    def spec(self):
        return {"family": "uniform", "a": self.a, "b": self.b}


@dataclass(frozen=True)
class ProductPareto(DistributionFamily):
    """Product of d i.i.d. Pareto(alpha, sigma) coordinates on [0, oo)^d."""

    alpha: float
    sigma: float
    d: int

    def __post_init__(self):
        if self.alpha <= 0 or self.sigma <= 0:
            raise ValueError("ProductPareto requires alpha > 0 and sigma > 0")
        if self.d < 1:
            raise ValueError("ProductPareto requires d >= 1")

    @property
    def dimension(self):
        return self.d

    @cached_property
    def _factor(self) -> Pareto:
        return Pareto(self.alpha, self.sigma)

    def density(self, x):
        xs = np.asarray(x, dtype=np.float64)
        pts = xs.reshape(-1, self.d)
        vals = np.prod(self._factor.density(pts), axis=1)
        return float(vals[0]) if pts.shape[0] == 1 and xs.ndim <= 1 else vals

    def log_density(self, x) -> float:
        xs = np.asarray(x, dtype=np.float64).reshape(self.d)
        return sum(self._factor.log_density(xi) for xi in xs)

    def sample_array(self, rng, n):
        return np.asarray(
            self._factor.ppf(rng.random((n, self.d))), dtype=np.float64
        ).reshape(n, self.d)

    @property
    def support(self):
        return (0.0, math.inf)

    @property
    def density_bound(self):
        return (self.alpha / self.sigma) ** self.d

    def spec(self):
        return {
            "family": "product_pareto",
            "alpha": self.alpha,
            "sigma": self.sigma,
            "d": self.d,
        }


@dataclass(frozen=True)
class LogPareto(DistributionFamily):
    """Density proportional to 1/(x^(b+1) log(x)^c) on [2, oo).

    The normalising constant is computed once by adaptive quadrature and
    cached.  The field `a` records the exponent of the companion
    power-law source density (proportional to x^-(a+1) on [2, oo)),
    which is the c = 0 member of the same family; it does not enter this
    distribution's own density.
    """

    a: float
    b: float
    c: float

    _LEFT = 2.0

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0:
            raise ValueError("LogPareto requires a > 0 and b > 0")
        if self.c < 0:
            raise ValueError("LogPareto requires c >= 0")

    def _log_raw(self, x: float) -> float:
        if x < self._LEFT:
            return -math.inf
        lx = math.log(x)
        return -(self.b + 1.0) * lx - self.c * math.log(lx)

    @cached_property
    def _norm(self) -> float:
        res = improper_quad(self._log_raw, self._LEFT)
        if not res.converged:
            raise ValueError("LogPareto density is not normalisable")
        return res.value

    def density(self, x):
        xs = np.asarray(x, dtype=np.float64)
        with np.errstate(invalid="ignore", divide="ignore"):
            val = np.power(xs, -(self.b + 1.0)) * np.power(np.log(np.maximum(xs, 1.5)), -self.c)
        return _maybe_scalar(np.where(xs >= self._LEFT, val / self._norm, 0.0), x)

    def log_density(self, x) -> float:
        lr = self._log_raw(float(x))
        return lr - math.log(self._norm) if lr > -math.inf else -math.inf

    def _raw_cdf_integral(self, xs: np.ndarray) -> np.ndarray:
        """Cumulative integral of the raw density from 2 to each x.

        Composite Gauss-Legendre in t = log x with panel width <= 0.25,
        which stays accurate however far into the tail x reaches.
        """
        ts = np.log(np.maximum(xs, self._LEFT))
        order = np.argsort(ts)
        knots = np.concatenate([[math.log(self._LEFT)], ts[order]])
        out_sorted = np.zeros(len(ts))
        acc = 0.0
        for j in range(len(ts)):
            t0, t1 = knots[j], knots[j + 1]
            if t1 > t0:
                npanel = max(1, int(math.ceil((t1 - t0) / 0.25)))
                edges = np.linspace(t0, t1, npanel + 1)
                mid = 0.5 * (edges[:-1] + edges[1:])
                half = 0.5 * (edges[1:] - edges[:-1])
                nodes = mid[:, None] + half[:, None] * _GL_NODES[None, :]
                lx = nodes
                vals = np.exp(-(self.b + 1.0) * lx - self.c * np.log(lx) + lx)
                acc += float(np.sum(vals * _GL_WEIGHTS[None, :] * half[:, None]))
            out_sorted[j] = acc
        out = np.empty(len(ts))
        out[order] = out_sorted
        return out

    def cdf(self, x):
        xs = np.atleast_1d(np.asarray(x, dtype=np.float64))
        res = np.clip(self._raw_cdf_integral(xs) / self._norm, 0.0, 1.0)
        res[xs < self._LEFT] = 0.0
        return _maybe_scalar(res, x)

    def sample_array(self, rng, n):
        # Rejection from the c = 0 power-law envelope: acceptance
        # probability (log 2 / log x)^c, so c = 0 accepts everything.
        out = np.empty(n)
        filled = 0
        log2 = math.log(2.0)
        while filled < n:
            todo = n - filled
            draw = max(64, int(1.3 * todo) + 16)
            x = self._LEFT * np.power(rng.random(draw), -1.0 / self.b)
            accept = rng.random(draw) <= np.power(log2 / np.log(x), self.c)
            got = x[accept][:todo]
            out[filled : filled + len(got)] = got
            filled += len(got)
        return out.reshape(n, 1)

    @property
    def support(self):
        return (self._LEFT, math.inf)

    @property
    def density_bound(self):
        return float(self.density(self._LEFT))

    def spec(self):
        return {"family": "log_pareto", "a": self.a, "b": self.b, "c": self.c}


# ---------------------------------------------------------------------------
# Module-level operations
# ---------------------------------------------------------------------------


def density(dist: DistributionFamily, x):
    """Density of `dist` at x (0 outside the support)."""
    return dist.density(x)


def sample(dist: DistributionFamily, rng: np.random.Generator, n: int) -> PointSet:
    """n i.i.d. draws as a PointSet; deterministic for a given rng state."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    return PointSet(dist.sample_array(rng, n), allow_empty=True)


_BALL_MC_DRAWS = 100_000
_BALL_MC_SEED = 0x5EED_BA11


def ball_mass_with_error(
    dist: DistributionFamily, x, r: float, rng=None, n_draws: int = _BALL_MC_DRAWS
) -> tuple[float, float]:
    """Monte Carlo ball mass with its standard error (any dimension)."""
    if rng is None:
        rng = np.random.default_rng(np.random.SeedSequence(_BALL_MC_SEED))
    pts = dist.sample_array(rng, n_draws)
    center = np.atleast_1d(np.asarray(x, dtype=np.float64))
    hit = np.linalg.norm(pts - center[None, :], axis=1) <= r
    p = float(np.mean(hit))
    return p, math.sqrt(max(p * (1.0 - p), 0.0) / n_draws)


def ball_mass(dist: DistributionFamily, x, r: float) -> float:
    """P{B(x, r)}: exact via the CDF in 1-D, Monte Carlo otherwise."""
    if r < 0:
        raise ValueError("radius must be nonnegative")
    if r == 0.0:
        return 0.0
    if dist.dimension == 1:
        c = np.atleast_1d(np.asarray(x, dtype=np.float64))
        if c.shape != (1,):
            raise ValueError("1-D distribution expects a 1-D point")
        xc = float(c[0])
        return float(dist.cdf(xc + r) - dist.cdf(xc - r))
    return ball_mass_with_error(dist, x, r)[0]


def zeta(dist: DistributionFamily, x, h: float) -> float:
    """Smallest radius whose ball around x carries mass at least h.

    Bisection refined until the radius bracket collapses in relative
    terms and the mass overshoot is below 1e-9; the initial bracket
    doubles from r = 1 up to 2^40 before declaring failure.
    """
    if not 0.0 < h <= 1.0:
        raise ValueError("h must lie in (0, 1]")
    lo, hi = 0.0, 1.0
    while ball_mass(dist, x, hi) < h:
        hi *= 2.0
        if hi > ZETA_BRACKET_CAP:
            raise RadiusSearchError(
                f"no radius <= {ZETA_BRACKET_CAP:g} reaches mass {h}"
            )
    for _ in range(200):
        if hi - lo <= 1e-13 * hi and ball_mass(dist, x, hi) - h <= 1e-9:
            break
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if ball_mass(dist, x, mid) >= h:
            hi = mid
        else:
            lo = mid
    return hi


@dataclass(frozen=True)
class LocalMassReport:
    """Grid verification of theta^-1 p(x) r^d <= P{B(x,r)} <= theta p(x) r^d."""

    theta: float
    passed: bool
    min_ratio: float
    max_ratio: float
    n_checked: int
    failures: tuple  # (x, r, ratio) triples violating either inequality


def local_mass_check(
    dist: DistributionFamily, theta: float, x_grid, r_grid
) -> LocalMassReport:
    """Check both local-mass inequalities at every (x, r) grid pair."""
    if theta <= 0:
        raise ValueError("theta must be positive")
    d = dist.dimension
    ratios = []
    failures = []
    for x in np.asarray(x_grid, dtype=np.float64):
        px = float(dist.density(x))
        if px <= 0.0:
            raise ValueError(f"grid point {x} is outside the support")
        for r in np.asarray(r_grid, dtype=np.float64):
            if not 0.0 < r <= 1.0:
                raise ValueError("radii must lie in (0, 1]")
            ratio = ball_mass(dist, x, float(r)) / (px * float(r) ** d)
            ratios.append(ratio)
            if not (1.0 / theta <= ratio <= theta):
                failures.append((float(x), float(r), ratio))
    return LocalMassReport(
        theta=theta,
        passed=not failures,
        min_ratio=float(min(ratios)),
        max_ratio=float(max(ratios)),
        n_checked=len(ratios),
        failures=tuple(failures),
    )


def closed_form_indices(
    P: DistributionFamily, Q: DistributionFamily
) -> tuple[float, float]:
    """Closed-form (gamma*, s*) for supported source-target pairs.

    gamma* = gamma*(P, Q) and s* = gamma*(Q, Q); math.inf encodes an
    infinite index.  Raises NoClosedFormError for unsupported pairs.
    """
    if isinstance(P, Pareto) and isinstance(Q, Pareto):
        return Q.alpha / (P.alpha + 1.0), Q.alpha / (Q.alpha + 1.0)
    if isinstance(P, Exponential) and isinstance(Q, Exponential):
        return Q.lam / P.lam, 1.0
    if isinstance(P, Uniform) and isinstance(Q, Uniform):
        if (P.a, P.b) == (Q.a, Q.b):
            return math.inf, math.inf
        raise NoClosedFormError("uniform pairs need equal supports")
    if isinstance(P, Pareto) and isinstance(Q, Exponential):
        # The exponential target puts vanishing mass in the Pareto
        # source's low-density regions: every moment of 1/p is finite.
        return math.inf, 1.0
    if isinstance(P, LogPareto) and isinstance(Q, LogPareto):
        return Q.b / (P.b + 1.0), Q.b / (Q.b + 1.0)
    if isinstance(P, ProductPareto) and isinstance(Q, ProductPareto):
        if P.d == Q.d:
            # The transfer integral factorises over coordinates, so the
            # finiteness boundary matches the 1-D Pareto pair.
            return Q.alpha / (P.alpha + 1.0), Q.alpha / (Q.alpha + 1.0)
        raise NoClosedFormError("product pairs need equal dimension")
    raise NoClosedFormError(
        f"no closed-form indices for ({type(P).__name__}, {type(Q).__name__})"
    )


# ---------------------------------------------------------------------------
# Regression functions and noise
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HolderFunction:
    """A regression function together with its declared Holder budget.

    `fn` maps an (n, d) array to an (n,) array.  The declared budget L
    bounds sup-norm plus beta-Holder seminorm over `domain`, the box on
    which membership is checked empirically.
    """

    fn: object
    L: float
    beta: float
    descriptor: str
    domain: tuple
    dimension: int = 1

    def __call__(self, x):
        xs = np.asarray(x, dtype=np.float64)
        if xs.ndim <= 1 and self.dimension == 1:
            return _maybe_scalar(
                np.asarray(self.fn(xs.reshape(-1, 1)), dtype=np.float64), x
            )
        return np.asarray(self.fn(xs.reshape(-1, self.dimension)), dtype=np.float64)


def holder_zero(d: int = 1) -> HolderFunction:
    return HolderFunction(
        fn=lambda X: np.zeros(len(X)),
        L=1.0,
        beta=1.0,
        descriptor="zero",
        domain=(tuple([0.0] * d), tuple([1.0] * d)),
        dimension=d,
    )


def holder_constant(c: float, d: int = 1) -> HolderFunction:
    return HolderFunction(
        fn=lambda X: np.full(len(X), float(c)),
        L=max(abs(float(c)), 1e-12),
        beta=1.0,
        descriptor=f"constant({c})",
        domain=(tuple([0.0] * d), tuple([1.0] * d)),
        dimension=d,
    )


def holder_parabola() -> HolderFunction:
    """f(x) = x(1 - x) on [0, 1], extended by 0 outside.

    The extension keeps f in the Lipschitz ball globally (sup 1/4,
    slope at most 1), which the raw parabola is not on unbounded
    supports; on [0, 1] the two agree exactly.
    """

    def evaluate(X):
        u = np.clip(X[:, 0], 0.0, 1.0)
        return u * (1.0 - u)

    return HolderFunction(
        fn=evaluate,
        L=1.25,
        beta=1.0,
        descriptor="parabola",
        domain=((0.0,), (1.0,)),
        dimension=1,
    )


_BUILTIN_HOLDER = {
    "zero": lambda obj: holder_zero(int(obj.get("d", 1))),
    "constant": lambda obj: holder_constant(obj["value"], int(obj.get("d", 1))),
    "parabola": lambda obj: holder_parabola(),
}


@dataclass(frozen=True)
class NoiseSpec:
    """Centred observation noise; Gaussian is the only variant.

    alpha_se and nu are the nominal sub-exponential parameters carried
    as metadata only.
    """

    sigma_e: float
    alpha_se: float | None = None
    nu: float | None = None

    def __post_init__(self):
        if self.sigma_e < 0:
            raise ValueError("sigma_e must be nonnegative")

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.sigma_e * rng.standard_normal(n)

    def spec(self) -> dict:
        return {"type": "gaussian", "sigma_e": self.sigma_e}


# ---------------------------------------------------------------------------
# JSON specifications
# ---------------------------------------------------------------------------

_FAMILY_FIELDS = {
    "pareto": ("alpha", "sigma"),
    "exponential": ("lambda",),
    "uniform": ("a", "b"),
    "product_pareto": ("alpha", "sigma", "d"),
    "log_pareto": ("a", "b", "c"),
}


def family_from_spec(obj: dict, where: str = "distribution") -> DistributionFamily:
    """Build a DistributionFamily from its JSON object representation."""
    if not isinstance(obj, dict):
        raise ConfigError(where, "expected a JSON object")
    fam = obj.get("family")
    if fam is None:
        raise ConfigError(f"{where}.family", "missing")
    if fam not in _FAMILY_FIELDS:
        raise ConfigError(f"{where}.family", f"unknown family '{fam}'")
    required = _FAMILY_FIELDS[fam]
    for key in obj:
        if key != "family" and key not in required:
            raise ConfigError(f"{where}.{key}", f"unknown field for family '{fam}'")
    vals = {}
    for key in required:
        if key not in obj:
            raise ConfigError(f"{where}.{key}", "missing")
        try:
            vals[key] = float(obj[key]) if key != "d" else int(obj[key])
        except (TypeError, ValueError):
            raise ConfigError(f"{where}.{key}", "not a number") from None
    try:
        if fam == "pareto":
            return Pareto(vals["alpha"], vals["sigma"])
        if fam == "exponential":
            return Exponential(vals["lambda"])
        if fam == "uniform":
            return Uniform(vals["a"], vals["b"])
        if fam == "product_pareto":
            return ProductPareto(vals["alpha"], vals["sigma"], vals["d"])
        return LogPareto(vals["a"], vals["b"], vals["c"])
    except ValueError as exc:
        raise ConfigError(where, str(exc)) from None


def holder_from_spec(obj: dict, where: str = "f_star") -> HolderFunction:
    if not isinstance(obj, dict):
        raise ConfigError(where, "expected a JSON object")
    name = obj.get("name")
    if name is None:
        raise ConfigError(f"{where}.name", "missing")
    if name not in _BUILTIN_HOLDER:
        raise ConfigError(f"{where}.name", f"unknown function '{name}'")
    try:
        return _BUILTIN_HOLDER[name](obj)
    except KeyError as exc:
        raise ConfigError(f"{where}.{exc.args[0]}", "missing") from None


def noise_from_spec(obj: dict, where: str = "noise") -> NoiseSpec:
    if not isinstance(obj, dict):
        raise ConfigError(where, "expected a JSON object")
    kind = obj.get("type", "gaussian")
    if kind != "gaussian":
        raise ConfigError(f"{where}.type", f"unknown noise type '{kind}'")
    allowed = {"type", "sigma_e", "alpha_se", "nu"}
    for key in obj:
        if key not in allowed:
            raise ConfigError(f"{where}.{key}", "unknown field")
    if "sigma_e" not in obj:
        raise ConfigError(f"{where}.sigma_e", "missing")
    try:
        return NoiseSpec(
            sigma_e=float(obj["sigma_e"]),
            alpha_se=obj.get("alpha_se"),
            nu=obj.get("nu"),
        )
    except ValueError as exc:
        raise ConfigError(where, str(exc)) from None
