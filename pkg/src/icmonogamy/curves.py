"""Monogamy curves gamma_max(alpha), reference bounds and security thresholds.

Points of the slice are parametrised by (alpha, gamma) with CHSH values
beta_AB = (1 + alpha) / 2 and beta_BE = (1 + gamma) / 2.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .boxes import BETA_Q, TripartiteBox, slice_box
from .criteria import VIOLATION_TOL, eval_ic_tripartite
from .entropy import binary_entropy
from .wiring import slice_wired_proxy

SQRT_HALF = 1.0 / math.sqrt(2.0)
CURVE_CRITERIA = ("tripartite-ic", "tripartite-summed", "bipartite-ic", "ns", "quantum")
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


# --- reference curves ---------------------------------------------------

def _check_beta(beta: float, hi: float = 1.0):
    if not 0.5 - 1e-12 <= beta <= hi + 1e-12:
        raise ValueError(f"CHSH value {beta} outside [1/2, {hi}]")


def ns_bound(beta_ab: float) -> float:
    """Largest beta_BE allowed by no-signaling monogamy."""
    _check_beta(beta_ab)
    return min(1.0, 1.5 - beta_ab)


def quantum_bound(beta_ab: float) -> float:
    """Largest beta_BE on the quantum monogamy circle."""
    _check_beta(beta_ab, BETA_Q)
    return 0.5 + math.sqrt(max(0.125 - (beta_ab - 0.5) ** 2, 0.0))


def security_bound(beta_ab: float) -> float:
    """Largest eavesdropper CHSH value for which the key stays secure: ``(3 - h(beta)) / 4``."""
    _check_beta(beta_ab)
    return (3.0 - binary_entropy(beta_ab)) / 4.0


def default_alpha_grid() -> list[float]:
    grid = list(np.linspace(0.6, SQRT_HALF, 17))
    extra = [0.0, 0.3, 0.5, 2.0 / 3.0]
    return sorted(set(float(a) for a in grid + extra))


# --- configuration and results -----------------------------------------

@dataclass(frozen=True)
class SweepConfig:
    alpha_grid: tuple[float, ...] = field(default_factory=lambda: tuple(default_alpha_grid()))
    criterion: str = "tripartite-ic"
    gamma_tolerance: float = 1e-4
    violation_tolerance: float = VIOLATION_TOL
    delta_min: float = 1e-5
    delta_points: int = 12
    refine_tolerance: float = 1e-6
    refine_passes: int = 2
    rhs_convention: str = "consistent"
    threads: int = 1

    def __post_init__(self):
        if self.criterion not in CURVE_CRITERIA:
            raise ValueError(f"unknown curve criterion {self.criterion!r}")
        if self.gamma_tolerance <= 0 or self.violation_tolerance <= 0 or self.refine_tolerance <= 0:
            raise ValueError("tolerances must be positive")
        if not 0.0 < self.delta_min < 0.5:
            raise ValueError(f"delta_min {self.delta_min} outside (0, 1/2)")
        if self.delta_points < 2:
            raise ValueError("delta_points must be at least 2")
        for a in self.alpha_grid:
            if not 0.0 <= a <= 1.0:
                raise ValueError(f"alpha {a} outside [0, 1]")
        if self.threads < 1:
            raise ValueError("threads must be at least 1")

    def with_(self, **kw) -> "SweepConfig":
        return replace(self, **kw)


@dataclass(frozen=True)
class CurvePoint:
    alpha: float
    gamma_max: float
    criterion: str
    argmax_eps: tuple[float, float] = (float("nan"), float("nan"))
    margin_at_bound: float = float("nan")

    @property
    def beta_ab(self) -> float:
        return 0.5 * (1.0 + self.alpha)

    @property
    def beta_be_max(self) -> float:
        return 0.5 * (1.0 + self.gamma_max)

    @property
    def security_ok(self) -> bool:
        return self.beta_be_max <= security_bound(self.beta_ab)

    CSV_HEADER = ("criterion", "alpha", "beta_ab", "gamma_max", "beta_be_max", "eps1", "eps2", "margin", "security_ok")

    def csv_row(self) -> list[str]:
        nums = [self.alpha, self.beta_ab, self.gamma_max, self.beta_be_max, *self.argmax_eps, self.margin_at_bound]
        return [self.criterion, *(f"{v:.12g}" for v in nums), str(self.security_ok).lower()]


@dataclass(frozen=True)
class EpsOptimum:
    eps: tuple[float, float]
    margin: float  # raw lhs - rhs at eps
    score: float  # margin scaled by the bound; decides violation
    binding: str = ""  # criterion id whose margin this is


# --- channel optimisation ----------------------------------------------

def delta_grid(cfg: SweepConfig) -> np.ndarray:
    """Log-spaced ``delta = 1/2 - eps`` from ``delta_min`` up to 1/2 (a noiseless channel)."""
    return np.logspace(math.log10(cfg.delta_min), math.log10(0.5), cfg.delta_points)


def _tripartite_objective(box: TripartiteBox, sender: int | None):
    def f(d1: float, d2: float):
        r = eval_ic_tripartite(box, 0.5 - d1, 0.5 - d2, sender=sender)
        return r.scaled_margin, r.margin
    return f


def _golden(f, lo: float, hi: float, tol: float):
    # maximise f on [lo, hi] (log-delta coordinates), return (x, value)
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    cands = [(f(a), a), (fc, c), (fd, d), (f(b), b)]
    best = max(cands, key=lambda t: t[0])
    return best[1], best[0]


def optimize_channels(objective, cfg: SweepConfig, stop_above: float | None = None) -> EpsOptimum:
    """Grid search over (delta1, delta2) then coordinate golden-section refinement in log delta."""
    grid = delta_grid(cfg)
    best = (-math.inf, -math.inf, (0.5, 0.5))
    for d1 in grid:
        for d2 in grid:
            s, m = objective(float(d1), float(d2))
            if s > best[0]:
                best = (s, m, (float(d1), float(d2)))
            if stop_above is not None and s > stop_above:
                return EpsOptimum((0.5 - float(d1), 0.5 - float(d2)), m, s)
    lo, hi = math.log(cfg.delta_min), math.log(0.5)
    # a log-delta step of refine_tolerance / 2 moves delta by at most refine_tolerance
    tol = cfg.refine_tolerance / 0.5
    score, margin, (d1, d2) = best
    for _ in range(cfg.refine_passes):
        for coord in (0, 1):
            def g(u, coord=coord):
                dd = [d1, d2]
                dd[coord] = math.exp(u)
                return objective(*dd)[0]
            u, val = _golden(g, lo, hi, tol)
            if val > score:
                if coord == 0:
                    d1 = math.exp(u)
                else:
                    d2 = math.exp(u)
                score = val
            if stop_above is not None and score > stop_above:
                break
    score, margin = objective(d1, d2)
    return EpsOptimum((0.5 - d1, 0.5 - d2), margin, score)


def max_violation_over_eps(
    box: TripartiteBox,
    criterion: str = "tripartite-ic",
    cfg: SweepConfig | None = None,
    stop_above: float | None = None,
) -> EpsOptimum:
    """Best channel parameters for a tripartite criterion.

    ``tripartite-ic`` takes the larger of the two per-sender inequalities
    (``tripartite-sender1``/``tripartite-sender2``); ``tripartite-summed``
    uses the summed form.
    """
    cfg = cfg or SweepConfig()
    if criterion == "tripartite-summed":
        opt = optimize_channels(_tripartite_objective(box, None), cfg, stop_above)
        return replace(opt, binding="tripartite")
    if criterion.startswith("tripartite-sender") and criterion[-1] in "12":
        opt = optimize_channels(_tripartite_objective(box, int(criterion[-1])), cfg, stop_above)
        return replace(opt, binding=criterion)
    if criterion != "tripartite-ic":
        raise ValueError(f"criterion {criterion!r} has no channel optimisation")
    best = None
    for sender in (1, 2):
        opt = max_violation_over_eps(box, f"tripartite-sender{sender}", cfg, stop_above)
        if best is None or opt.score > best.score:
            best = opt
        if stop_above is not None and best.score > stop_above:
            break
    return best


# --- gamma_max ----------------------------------------------------------

def _point_score(alpha: float, gamma: float, cfg: SweepConfig) -> tuple[float, tuple[float, float]]:
    tol = cfg.violation_tolerance
    if cfg.criterion == "bipartite-ic":
        # limit mode: the sign is decided as eps -> 1/2, so no finite channel is reported
        value, _, _ = slice_wired_proxy(alpha, gamma)
        return value, (math.nan, math.nan)
    opt = max_violation_over_eps(slice_box(alpha, gamma), cfg.criterion, cfg, stop_above=tol)
    return opt.score, opt.eps


def gamma_max(alpha: float, criterion: str | None = None, cfg: SweepConfig | None = None) -> CurvePoint:
    """Largest gamma in [0, 1 - alpha] whose slice box satisfies ``criterion``, to ``gamma_tolerance``."""
    cfg = cfg or SweepConfig()
    if criterion is not None:
        cfg = cfg.with_(criterion=criterion)
    alpha = float(alpha)
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha {alpha} outside [0, 1]")
    crit = cfg.criterion
    if crit in ("ns", "quantum"):
        beta = 0.5 * (1.0 + alpha)
        if crit == "quantum" and beta > BETA_Q:
            g = 0.0
        else:
            bound = ns_bound(beta) if crit == "ns" else quantum_bound(beta)
            g = min(2.0 * bound - 1.0, 1.0 - alpha)
        return CurvePoint(alpha, max(g, 0.0), crit)

    tol = cfg.violation_tolerance
    top = max(1.0 - alpha, 0.0)
    s_top, eps_top = _point_score(alpha, top, cfg)
    if s_top <= tol:
        return CurvePoint(alpha, top, crit, eps_top, s_top)
    s_lo, eps_lo = _point_score(alpha, 0.0, cfg)
    if s_lo > tol:
        return CurvePoint(alpha, 0.0, crit, eps_lo, s_lo)
    lo, hi, eps_hi = 0.0, top, eps_top
    while hi - lo > cfg.gamma_tolerance:
        mid = 0.5 * (lo + hi)
        s, e = _point_score(alpha, mid, cfg)
        if s > tol:
            hi, eps_hi = mid, e
        else:
            lo, s_lo = mid, s
    return CurvePoint(alpha, lo, crit, eps_hi, s_lo)


def _gamma_max_task(args):
    alpha, cfg = args
    return gamma_max(alpha, cfg=cfg)


def sweep(cfg: SweepConfig, alphas: Sequence[float] | None = None, on_point: Callable | None = None) -> list[CurvePoint]:
    """``gamma_max`` on every alpha, in parallel processes; results ordered by alpha."""
    alphas = sorted(cfg.alpha_grid if alphas is None else alphas)
    if cfg.criterion == "bipartite-ic":
        # build the wiring tables once in the parent so forked workers share them
        slice_wired_proxy(0.0, 0.0)
    results: dict[float, CurvePoint] = {}
    if cfg.threads <= 1 or len(alphas) <= 1:
        for a in alphas:
            results[a] = gamma_max(a, cfg=cfg)
            if on_point:
                on_point(results[a])
    else:
        import multiprocessing as mp

        ctx = mp.get_context("fork") if "fork" in mp.get_all_start_methods() else None
        with ProcessPoolExecutor(max_workers=cfg.threads, mp_context=ctx) as ex:
            for a, pt in zip(alphas, ex.map(_gamma_max_task, [(a, cfg) for a in alphas])):
                results[a] = pt
                if on_point:
                    on_point(pt)
    return [results[a] for a in alphas]


def reference_curve(kind: str, alphas: Sequence[float]) -> list[CurvePoint]:
    return [gamma_max(a, kind) for a in alphas]


# --- onset and threshold -----------------------------------------------

def onset_from_curve(curve: Sequence[CurvePoint], gap: float = 2e-3, beta_min: float = 0.75) -> float | None:
    """Smallest beta_AB >= ``beta_min`` whose gamma_max sits ``gap`` below the NS line.

    Below beta_AB = 3/4 the BE pair is the stronger one and the curve is the
    mirror image of the upper branch, so the scan starts at the symmetric point.
    """
    for pt in sorted(curve, key=lambda p: p.alpha):
        if pt.beta_ab >= beta_min and pt.gamma_max < (1.0 - pt.alpha) - gap:
            return pt.beta_ab
    return None


def onset(cfg: SweepConfig, lo: float = 0.6, hi: float = SQRT_HALF, gap: float = 2e-3, tol: float = 1e-4) -> float:
    """beta_AB where the criterion first bites, by bisection in alpha on the NS gap."""
    def bites(a):
        return gamma_max(a, cfg=cfg).gamma_max < (1.0 - a) - gap
    if bites(lo) or not bites(hi):
        raise ValueError("onset not bracketed by the given alpha range")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if bites(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (1.0 + hi)


@dataclass(frozen=True)
class ThresholdResult:
    beta: float | None
    bracket: tuple[CurvePoint, CurvePoint] | None

    @property
    def found(self) -> bool:
        return self.beta is not None

    def to_record(self, criterion: str) -> str:
        if not self.found:
            return f"criterion = {criterion}\nthreshold = none\nmessage = no threshold in range\n"
        lo, hi = self.bracket
        return (
            f"criterion = {criterion}\n"
            f"threshold = {self.beta:.12g}\n"
            f"bracket_low_beta_ab = {lo.beta_ab:.12g}\n"
            f"bracket_low_beta_be_max = {lo.beta_be_max:.12g}\n"
            f"bracket_high_beta_ab = {hi.beta_ab:.12g}\n"
            f"bracket_high_beta_be_max = {hi.beta_be_max:.12g}\n"
        )


def security_threshold(
    curve: Sequence[CurvePoint],
    refine: Callable[[float], float] | None = None,
    tol: float = 1e-4,
) -> ThresholdResult:
    """Smallest beta_AB with ``security_bound(beta) >= beta_be_max(beta)``.

    The crossing is bracketed by consecutive curve points and located by
    bisection on beta to ``tol``, using ``refine(beta) -> beta_be_max`` when
    given and linear interpolation of the curve otherwise.
    """
    pts = sorted(curve, key=lambda p: p.beta_ab)
    f = [security_bound(p.beta_ab) - p.beta_be_max for p in pts]
    if f and f[0] >= 0.0:
        return ThresholdResult(pts[0].beta_ab, (pts[0], pts[0]))
    for k in range(1, len(pts)):
        if f[k - 1] < 0.0 <= f[k]:
            lo, hi = pts[k - 1], pts[k]

            def be_max(beta):
                if refine is not None:
                    return refine(beta)
                t = (beta - lo.beta_ab) / (hi.beta_ab - lo.beta_ab)
                return lo.beta_be_max + t * (hi.beta_be_max - lo.beta_be_max)

            a, b = lo.beta_ab, hi.beta_ab
            while b - a > tol:
                m = 0.5 * (a + b)
                if security_bound(m) - be_max(m) >= 0.0:
                    b = m
                else:
                    a = m
            return ThresholdResult(b, (lo, hi))
    return ThresholdResult(None, None)


def analytic_curve(kind: str, n: int = 2001) -> list[CurvePoint]:
    """Dense NS or quantum reference curve on beta_AB in [1/2, upper end]."""
    top = 1.0 if kind == "ns" else SQRT_HALF
    return [gamma_max(float(a), kind) for a in np.linspace(0.0, top, n)]


def reference_threshold(kind: str) -> ThresholdResult:
    """Threshold for the NS or quantum curve, refined on the closed-form bound."""
    if kind == "ns":
        refine = ns_bound
    elif kind == "quantum":
        refine = lambda b: quantum_bound(min(b, BETA_Q))  # noqa: E731
    else:
        raise ValueError(f"no closed-form curve for {kind!r}")
    return security_threshold(analytic_curve(kind, 201), refine=refine, tol=1e-9)
