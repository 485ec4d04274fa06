"""Theoretical convergence-rate calculus for two-sample regression.

Everything here is a pure function of the five parameters
(gamma, s, r_beta, n, m).  A configuration is supercritical when
(gamma - r_beta)(s - r_beta) < 0, critical at equality, subcritical
otherwise.  Supercritical configurations with m inside the window
between n and n^(gamma/s) follow the accelerated rate

    n^(-gamma a) m^(-s (1 - a)),    a = (r_beta - s)/(gamma - s),

whose exponents always sum to r_beta; everything else follows the wedge
rate min(n^-(gamma ^ r_beta), m^-(s ^ r_beta)).  In exponents_only mode
all logarithmic factors are dropped and multiplicative constants set to
one; full mode multiplies in caller-supplied transfer-function values
and the log(nm) factors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

SUBCRITICAL = "subcritical"
CRITICAL = "critical"
SUPERCRITICAL = "supercritical"

WEDGE = "wedge"
ACCELERATED = "accelerated"

SOURCE = "source"
TARGET = "target"


@dataclass(frozen=True)
class RateParams:
    """Inputs to the rate formulas; n and m may be real-valued."""

    gamma: float
    s: float
    beta: float
    d: int
    n: float
    m: float
    transfer_p: float | None = None  # T value multiplying the source factor
    transfer_q: float | None = None  # T value multiplying the target factor

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.s <= 0:
            raise ValueError("s must be positive")
        if not 0.0 < self.beta <= 1.0:
            raise ValueError("beta must lie in (0, 1]")
        if self.d < 1:
            raise ValueError("d must be a positive integer")
        if self.n < 0 or self.m < 0:
            raise ValueError("n and m must be nonnegative")
        if self.n == 0 and self.m == 0:
            raise ValueError("n and m cannot both vanish")


@dataclass(frozen=True)
class RegimeReport:
    r_beta: float
    configuration: str  # subcritical | critical | supercritical
    regime: str  # wedge | accelerated
    driver: str | None  # source | target for the wedge; None otherwise
    window: tuple[float, float] | None  # m-interval enabling acceleration
    rate_value: float
    source_exp: float
    target_exp: float
    flags: tuple = ()


def r_beta(beta: float, d: int) -> float:
    """The nonparametric exponent 2 beta / (2 beta + d)."""
    if not 0.0 < beta <= 1.0:
        raise ValueError("beta must lie in (0, 1]")
    if d < 1:
        raise ValueError("d must be a positive integer")
    return 2.0 * beta / (2.0 * beta + d)


def classify_configuration(gamma: float, s: float, r_b: float) -> str:
    """Sign of (gamma - r_beta)(s - r_beta); exact zero is critical."""
    prod = (gamma - r_b) * (s - r_b)
    if prod < 0.0:
        return SUPERCRITICAL
    if prod == 0.0:
        return CRITICAL
    return SUBCRITICAL


def acceleration_window(n: float, gamma: float, s: float) -> tuple[float, float]:
    """The ordered m-interval between n and n^(gamma/s)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if gamma <= 0 or s <= 0:
        raise ValueError("gamma and s must be positive")
    if gamma == s:
        raise ValueError("gamma = s leaves no window")
    log_edge = (gamma / s) * math.log(n)
    edge = math.inf if log_edge > 700.0 else math.exp(log_edge)
    return (min(n, edge), max(n, edge))


def _pow_rate(size: float, exp: float) -> float:
    """size^-exp, with an absent sample (size 0) contributing no rate."""
    if size == 0.0:
        return math.inf
    return size**-exp


def theoretical_rate(params: RateParams, mode: str = "exponents_only") -> RegimeReport:
    """Classify the configuration and evaluate the minimax-rate formula."""
    if mode not in ("exponents_only", "full"):
        raise ValueError(f"unknown mode '{mode}'")
    gamma, s, n, m = params.gamma, params.s, params.n, params.m
    r_b = r_beta(params.beta, params.d)
    config = classify_configuration(gamma, s, r_b)

    window = None
    if config == SUPERCRITICAL and n >= 1:
        window = acceleration_window(n, gamma, s)
    accelerated = window is not None and m >= 1 and window[0] <= m <= window[1]

    if mode == "full":
        if not max(n, m) >= 2:
            raise ValueError("full mode requires n or m >= 2 for the log factors")
        log_nm = math.log(max(n, 1.0) * max(m, 1.0))

    if accelerated:
        a = (r_b - s) / (gamma - s)
        src_exp = gamma * a
        tgt_exp = s * (1.0 - a)
        if mode == "exponents_only":
            rate = _pow_rate(n, src_exp) * _pow_rate(m, tgt_exp)
        else:
            if params.transfer_p is None or params.transfer_q is None:
                raise ValueError("full mode needs both transfer values here")
            rate = (
                params.transfer_p**a
                * params.transfer_q ** (1.0 - a)
                * (log_nm / n) ** src_exp
                * (log_nm / m) ** tgt_exp
            )
        return RegimeReport(
            r_beta=r_b,
            configuration=config,
            regime=ACCELERATED,
            driver=None,
            window=window,
            rate_value=rate,
            source_exp=src_exp,
            target_exp=tgt_exp,
        )

    r_s = min(gamma, r_b)
    r_t = min(s, r_b)
    flags = ()
    if mode == "exponents_only":
        src_term = _pow_rate(n, r_s)
        tgt_term = _pow_rate(m, r_t)
    else:
        # The paper is silent on a wedge term whose transfer value is
        # unavailable; report the other term alone and flag the omission.
        if params.transfer_p is None:
            src_term = math.inf
            flags += ("source term omitted: no transfer value",)
        else:
            src_term = (
                params.transfer_p * (log_nm / n) ** r_s if n > 0 else math.inf
            )
        if params.transfer_q is None:
            tgt_term = math.inf
            flags += ("target term omitted: no transfer value",)
        else:
            tgt_term = (
                params.transfer_q * (log_nm / m) ** r_t if m > 0 else math.inf
            )
        if src_term == math.inf and tgt_term == math.inf:
            raise ValueError("full-mode wedge needs at least one transfer value")
    return RegimeReport(
        r_beta=r_b,
        configuration=config,
        regime=WEDGE,
        driver=SOURCE if src_term <= tgt_term else TARGET,
        window=window,
        rate_value=min(src_term, tgt_term),
        source_exp=r_s,
        target_exp=r_t,
        flags=flags,
    )


def lower_bound_rate(params: RateParams) -> float:
    """Minimax lower-bound rate with its constant set to one.

    Transcribed directly from the lower-bound statement; kept separate
    from theoretical_rate so the two can be cross-checked against each
    other.
    """
    gamma, s, n, m = params.gamma, params.s, params.n, params.m
    r_b = 2.0 * params.beta / (2.0 * params.beta + params.d)
    in_window = False
    if (gamma - r_b) * (s - r_b) < 0.0 and gamma != s and n >= 1 and m >= 1:
        log_edge = (gamma / s) * math.log(n)
        edge = math.inf if log_edge > 700.0 else math.exp(log_edge)
        lo, hi = sorted((n, edge))
        in_window = lo <= m <= hi
    if in_window:
        return m ** (-s * (gamma - r_b) / (gamma - s)) * n ** (
            -gamma * (r_b - s) / (gamma - s)
        )
    src = math.inf if n == 0 else n ** -min(gamma, r_b)
    tgt = math.inf if m == 0 else m ** -min(s, r_b)
    return min(src, tgt)


# ---------------------------------------------------------------------------
# Phase diagrams and sample-size paths
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundaryLine:
    """A regime boundary, as slope/intercept in the grid's coordinates.

    For (n, m) grids the coordinates are (log n, log m); a vertical line
    in a (gamma, s) grid is encoded with slope = inf and the crossing
    abscissa stored in `intercept`.
    """

    name: str
    description: str
    slope: float
    intercept: float


@dataclass(frozen=True)
class PhaseGrid:
    mode: str  # "nm" (fixed gamma, s) or "gamma_s" (fixed n, m)
    axis1_name: str
    axis2_name: str
    axis1: tuple
    axis2: tuple
    reports: tuple  # reports[i][j] pairs axis1[i] with axis2[j]
    boundary_lines: tuple


def phase_grid(
    beta: float,
    d: int,
    fixed: dict,
    axis1,
    axis2,
) -> PhaseGrid:
    """Cell-wise regime classification over an (n, m) or (gamma, s) grid.

    `fixed` holds either {"gamma": g, "s": s} (grid over n and m) or
    {"n": n, "m": m} (grid over gamma and s).
    """
    r_b = r_beta(beta, d)
    a1 = tuple(float(v) for v in axis1)
    a2 = tuple(float(v) for v in axis2)
    keys = set(fixed)
    if keys == {"gamma", "s"}:
        gamma, s = float(fixed["gamma"]), float(fixed["s"])
        reports = tuple(
            tuple(
                theoretical_rate(RateParams(gamma, s, beta, d, n, m))
                for m in a2
            )
            for n in a1
        )
        lines = (
            BoundaryLine("a(s)", "s log m = r_beta log n", r_b / s, 0.0),
            BoundaryLine("b(s)", "s log m = gamma log n", gamma / s, 0.0),
            BoundaryLine("I", "log m = log n", 1.0, 0.0),
            BoundaryLine("M", "r_beta log m = gamma log n", gamma / r_b, 0.0),
        )
        return PhaseGrid("nm", "n", "m", a1, a2, reports, lines)
    if keys == {"n", "m"}:
        n, m = float(fixed["n"]), float(fixed["m"])
        reports = tuple(
            tuple(
                theoretical_rate(RateParams(gamma, s, beta, d, n, m))
                for s in a2
            )
            for gamma in a1
        )
        lines = [
            BoundaryLine("gamma_critical", "gamma = r_beta", math.inf, r_b),
            BoundaryLine("s_critical", "s = r_beta", 0.0, r_b),
        ]
        if m > 1:
            lines.append(
                BoundaryLine(
                    "window_edge",
                    "s = gamma log n / log m",
                    math.log(max(n, 1.0)) / math.log(m),
                    0.0,
                )
            )
        return PhaseGrid("gamma_s", "gamma", "s", a1, a2, reports, tuple(lines))
    raise ValueError("fixed must supply exactly {gamma, s} or {n, m}")


@dataclass(frozen=True)
class PathPoint:
    lam: float
    n: float
    m: float
    rate: float
    regime: str


def path_rates(path: str, budget: float, lambda_grid, params: RateParams):
    """Rates along a sample-size path, in exponents_only mode.

    linear: (n, m) = (B^(1-lam), B^lam); fixed_budget: ((1-lam) B, lam B)
    with each component clamped to at least 1.
    """
    if budget < 2:
        raise ValueError("budget must be at least 2")
    if path not in ("linear", "fixed_budget"):
        raise ValueError(f"unknown path '{path}'")
    out = []
    for lam in lambda_grid:
        lam = float(lam)
        if not 0.0 <= lam <= 1.0:
            raise ValueError("lambda must lie in [0, 1]")
        if path == "linear":
            n, m = budget ** (1.0 - lam), budget**lam
        else:
            n, m = max((1.0 - lam) * budget, 1.0), max(lam * budget, 1.0)
        rep = theoretical_rate(
            RateParams(params.gamma, params.s, params.beta, params.d, n, m)
        )
        out.append(PathPoint(lam, n, m, rep.rate_value, rep.regime))
    return out
