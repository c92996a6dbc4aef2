"""Equilibrium solvers with a verifiable best-response-gap certificate.

Two methods compute the same object:

* ``giga``: simultaneous projected gradient ascent with step 1/sqrt(t)
  from the all-ones start (generalized infinitesimal gradient ascent),
* ``best_response_iteration``: cyclic sweeps of exact best responses.

Neither declares success from its own trajectory.  Converged means exactly
one thing: the best-response gap of the returned point, measured by an
independent one-dimensional maximizer, is at most the configured tolerance.

The gap computation uses factored utility-difference formulas rather than
u(new) - u(old); the naive difference loses everything to cancellation
once the gap drops below ~1e-12 times the utility scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

from . import mechanism
from .analytic import winnerpay_proportional_best_response
from .errors import DegenerateProfileError, DomainError
from .mechanism import AuctionInstance, BidVector, PaymentRule
from .weights import WeightSpec


class Method(str, Enum):
    GIGA = "giga"
    BEST_RESPONSE_ITERATION = "best_response_iteration"

    @classmethod
    def parse(cls, text: str | "Method") -> "Method":
        if isinstance(text, cls):
            return text
        try:
            return cls(str(text))
        except ValueError:
            raise DomainError(
                f"unknown method {text!r}; expected 'giga' or 'best_response_iteration'"
            ) from None


@dataclass(frozen=True)
class SolverConfig:
    """Knobs shared by both solvers.

    ``tolerance`` is a bound on the certified best-response gap, not on bid
    movement.  ``certify_every`` spaces out certificate evaluations for the
    gradient method (they cost about as much as a thousand plain steps);
    the sweep method certifies after every sweep since a sweep already costs
    as much as a certificate.  ``initial_bids`` defaults to all ones,
    clamped into [bid_floor, v_i].
    """

    bid_floor: float = 1e-9
    tolerance: float = 1e-8
    max_iterations: int = 10_000_000
    method: Method = Method.GIGA
    certify_every: int = 1000
    initial_bids: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "bid_floor", float(self.bid_floor))
        object.__setattr__(self, "tolerance", float(self.tolerance))
        object.__setattr__(self, "method", Method.parse(self.method))
        if not (math.isfinite(self.bid_floor) and self.bid_floor > 0.0):
            raise DomainError(f"bid_floor must be finite and > 0, got {self.bid_floor!r}")
        if not (math.isfinite(self.tolerance) and self.tolerance > 0.0):
            raise DomainError(f"tolerance must be finite and > 0, got {self.tolerance!r}")
        for name in ("max_iterations", "certify_every"):
            k = getattr(self, name)
            if not isinstance(k, int) or isinstance(k, bool) or k < 1:
                raise DomainError(f"{name} must be a positive integer, got {k!r}")
        if self.initial_bids is not None:
            bids = tuple(float(b) for b in self.initial_bids)
            for b in bids:
                if not math.isfinite(b) or b < 0.0:
                    raise DomainError(f"initial bids must be finite and >= 0, got {b!r}")
            object.__setattr__(self, "initial_bids", bids)

    def to_dict(self) -> dict:
        return {
            "bid_floor": self.bid_floor,
            "tolerance": self.tolerance,
            "max_iterations": self.max_iterations,
            "method": self.method.value,
            "certify_every": self.certify_every,
            "initial_bids": None
            if self.initial_bids is None
            else list(self.initial_bids),
        }


@dataclass(frozen=True)
class EquilibriumResult:
    """A solver's output: a certified point plus bookkeeping.

    ``epsilon`` is recomputed on ``bids`` right before returning, never a
    stale mid-run estimate, and ``converged`` is exactly
    ``epsilon <= tolerance``.  ``average_bids`` is the running mean of the
    iterates; ``bids`` is whichever certified point (an iterate or that
    mean) achieved the smallest gap.
    """

    bids: BidVector
    average_bids: BidVector
    epsilon: float
    revenue: float
    efficiency: float
    iterations: int
    converged: bool
    method: Method

    def to_dict(self) -> dict:
        return {
            "bids": list(self.bids.bids),
            "average_bids": list(self.average_bids.bids),
            "epsilon": self.epsilon,
            "revenue": self.revenue,
            "efficiency": self.efficiency,
            "iterations": self.iterations,
            "converged": self.converged,
            "method": self.method.value,
        }


# ---------------------------------------------------------------------------
# scalar core shared by both solvers


class _Game:
    """Plain-float view of an instance for the hot loops."""

    __slots__ = ("values", "wf", "wd", "all_pay", "linear_wp")

    def __init__(self, instance: AuctionInstance) -> None:
        self.values = list(instance.values.values)
        self.wf, self.wd = instance.weight.scalar_functions()
        self.all_pay = instance.rule is PaymentRule.ALL_PAY
        self.linear_wp = not self.all_pay and instance.weight == WeightSpec.power(1.0)


def _utility_masked(game: _Game, i: int, b: float, sig_minus: float) -> float:
    w = game.wf(b)
    sigma = sig_minus + w
    v = game.values[i]
    if game.all_pay:
        return v * w / sigma - b
    return w * (v - b) / sigma


def _gradient_masked(game: _Game, i: int, b: float, sig_minus: float) -> float:
    w = game.wf(b)
    wd = game.wd(b)
    sigma = sig_minus + w
    v = game.values[i]
    if game.all_pay:
        return v * wd * sig_minus / (sigma * sigma) - 1.0
    return (wd * (v - b) * sig_minus - w * sigma) / (sigma * sigma)


def _gain(game: _Game, i: int, b_old: float, b_new: float, sig_minus: float) -> float:
    """u_i(b_new) - u_i(b_old), factored to avoid cancellation near equilibria."""
    w_old = game.wf(b_old)
    w_new = game.wf(b_new)
    so = sig_minus + w_old
    sn = sig_minus + w_new
    v = game.values[i]
    db = b_new - b_old
    dw = w_new - w_old
    if game.all_pay:
        return v * sig_minus * dw / (sn * so) - db
    return (sig_minus * ((v - b_old) * dw - w_new * db) - w_old * w_new * db) / (sn * so)


_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_bracket(f, lo: float, hi: float, tol: float) -> tuple[float, float]:
    """Shrink [lo, hi] around the maximum of a concave f to width <= tol.

    Ties keep the left segment so plateaus resolve to the leftmost point.
    """
    c = hi - _INV_PHI * (hi - lo)
    d = lo + _INV_PHI * (hi - lo)
    fc = f(c)
    fd = f(d)
    for _ in range(300):
        if hi - lo <= tol:
            break
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - _INV_PHI * (hi - lo)
            if not (lo < c < hi):
                break
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _INV_PHI * (hi - lo)
            if not (lo < d < hi):
                break
            fd = f(d)
    return lo, hi


def _polish(grad, lo: float, hi: float) -> float:
    """Bisect on the gradient sign inside a bracket that contains the maximum.

    The weight derivative can diverge at 0, so a zero left endpoint is probed
    at the smallest positive scale instead.
    """
    probe = lo if lo > 0.0 else min(1e-300, 0.5 * (lo + hi))
    if probe >= hi or grad(probe) <= 0.0:
        return lo
    if grad(hi) >= 0.0:
        return hi
    for _ in range(120):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if grad(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _best_response_scalar(game: _Game, i: int, sig_minus: float, tol: float) -> float:
    v = game.values[i]
    if game.linear_wp:
        return winnerpay_proportional_best_response(sig_minus, v)
    width = max(tol, 1e-15 * max(1.0, v))
    lo, hi = _golden_bracket(
        lambda b: _utility_masked(game, i, b, sig_minus), 0.0, v, width
    )
    return _polish(lambda b: _gradient_masked(game, i, b, sig_minus), lo, hi)


def _sig_minus_exact(w: Sequence[float], i: int) -> float:
    return math.fsum(w[j] for j in range(len(w)) if j != i)


def _gap_scalar(game: _Game, bids: Sequence[float], tol: float) -> float:
    w = [game.wf(b) for b in bids]
    gap = 0.0
    for i in range(len(bids)):
        sig_minus = _sig_minus_exact(w, i)
        if sig_minus <= 0.0:
            raise DegenerateProfileError(
                "opposing bids carry zero weight; best-response gap undefined"
            )
        br = _best_response_scalar(game, i, sig_minus, tol)
        gain = _gain(game, i, bids[i], br, sig_minus)
        if gain > gap:
            gap = gain
    return gap


_ORACLE_TOL = 1e-8


# ---------------------------------------------------------------------------
# public oracle API


def best_response(
    instance: AuctionInstance, i: int, bids, tol: float = _ORACLE_TOL
) -> float:
    """Argmax of bidder i's utility over [0, v_i], the other bids held fixed.

    Position i of ``bids`` is ignored.  Uses the exact winners-pay
    proportional formula when it applies; otherwise golden-section search
    (leftmost on ties) down to an interval of width ``tol``, then gradient
    bisection inside that interval, so the returned point is accurate to
    roughly float precision regardless of ``tol``.
    """
    if not (0 <= i < instance.n):
        raise DomainError(f"bidder index {i} out of range for n={instance.n}")
    if not (math.isfinite(tol) and tol > 0.0):
        raise DomainError(f"tol must be finite and > 0, got {tol!r}")
    w, _ = mechanism.weight_sums(instance, bids)
    sig_minus = _sig_minus_exact(list(w), i)
    if sig_minus <= 0.0:
        raise DegenerateProfileError(
            "opposing bids carry zero weight; best response undefined"
        )
    return _best_response_scalar(_Game(instance), i, sig_minus, tol)


def best_response_gap(
    instance: AuctionInstance, bids, tol: float = _ORACLE_TOL
) -> float:
    """Certified distance from equilibrium: the largest unilateral utility gain.

    Zero (up to oracle noise) exactly at a pure Nash equilibrium.  This is
    the only convergence criterion the solvers trust.
    """
    if not (math.isfinite(tol) and tol > 0.0):
        raise DomainError(f"tol must be finite and > 0, got {tol!r}")
    arr = mechanism.weight_sums(instance, bids)  # validates shape/finiteness
    del arr
    seq = [float(b) for b in (bids.bids if isinstance(bids, BidVector) else bids)]
    return _gap_scalar(_Game(instance), seq, tol)


# ---------------------------------------------------------------------------
# solvers


def _initial_bids(instance: AuctionInstance, config: SolverConfig) -> list[float]:
    if config.bid_floor >= min(instance.values.values):
        raise DomainError("bid_floor must be below every valuation")
    start = config.initial_bids
    if start is None:
        start = (1.0,) * instance.n
    if len(start) != instance.n:
        raise DomainError(f"expected {instance.n} initial bids, got {len(start)}")
    return [
        min(max(b, config.bid_floor), v) for b, v in zip(start, instance.values.values)
    ]


class _Tracker:
    """Keeps the best certified point seen across a run."""

    __slots__ = ("game", "gap", "point")

    def __init__(self, game: _Game) -> None:
        self.game = game
        self.gap = math.inf
        self.point: list[float] | None = None

    def certify(self, point: list[float]) -> float:
        gap = _gap_scalar(self.game, point, _ORACLE_TOL)
        if gap < self.gap:
            self.gap = gap
            self.point = list(point)
        return gap


def _finish(
    instance: AuctionInstance,
    config: SolverConfig,
    tracker: _Tracker,
    avg: list[float],
    iterations: int,
    method: Method,
) -> EquilibriumResult:
    point = tracker.point if tracker.point is not None else list(avg)
    epsilon = _gap_scalar(_Game(instance), point, _ORACLE_TOL)
    bids = BidVector(tuple(point))
    return EquilibriumResult(
        bids=bids,
        average_bids=BidVector(tuple(avg)),
        epsilon=epsilon,
        revenue=mechanism.revenue(instance, bids),
        efficiency=mechanism.efficiency(instance, bids),
        iterations=iterations,
        converged=epsilon <= config.tolerance,
        method=method,
    )


def giga_solve(
    instance: AuctionInstance, config: SolverConfig | None = None
) -> EquilibriumResult:
    """Simultaneous projected gradient ascent, step 1/sqrt(t).

    Every bidder moves at once along their own utility gradient, then is
    projected into [bid_floor, v_i].  Both the iterate and its running
    average are certified every ``certify_every`` steps; the run stops as
    soon as either is within tolerance.  Exhausting ``max_iterations``
    returns the best certified point with ``converged=False`` rather than
    raising.
    """
    config = config or SolverConfig()
    game = _Game(instance)
    values = game.values
    wf, wd = game.wf, game.wd
    all_pay = game.all_pay
    floor = config.bid_floor
    n = instance.n
    b = _initial_bids(instance, config)
    avg = [0.0] * n
    tracker = _Tracker(game)
    iterations = 0
    for t in range(1, config.max_iterations + 1):
        w = [wf(x) for x in b]
        sigma = 0.0
        for x in w:
            sigma += x
        sigsq = sigma * sigma
        step = 1.0 / math.sqrt(t)
        for i in range(n):
            bi = b[i]
            wi = w[i]
            sm = sigma - wi
            if all_pay:
                g = values[i] * wd(bi) * sm / sigsq - 1.0
            else:
                g = (wd(bi) * (values[i] - bi) * sm - wi * sigma) / sigsq
            y = bi + step * g
            vi = values[i]
            if y < floor:
                y = floor
            elif y > vi:
                y = vi
            b[i] = y
        inv_t = 1.0 / t
        for i in range(n):
            avg[i] += (b[i] - avg[i]) * inv_t
        iterations = t
        if t % config.certify_every == 0 or t == config.max_iterations:
            gap = min(tracker.certify(b), tracker.certify(avg))
            if gap <= config.tolerance:
                break
    return _finish(instance, config, tracker, avg, iterations, Method.GIGA)


_ETA_MIN = 2.0**-12


def _block_sweeps(eta: float) -> int:
    # Under damping eta the certified gap contracts like (1 - eta)^2 per
    # sweep, so a block must span ~1/eta sweeps to witness progress.
    return 12 + math.ceil(8.0 / eta)


def best_response_iteration(
    instance: AuctionInstance, config: SolverConfig | None = None
) -> EquilibriumResult:
    """Damped cyclic best-response sweeps (one sweep = one iteration).

    Each sweep updates bidders in value order, moving each a fraction eta
    toward their best response against the current profile.  Full steps
    (eta = 1) converge in a handful of sweeps whenever the response map
    contracts, but they lock into oscillation when it does not: many
    similar bidders pile in and retreat together, and under all-pay a
    lopsided pair overshoots back and forth (the response slopes grow with
    the value ratio).  No fixed eta suits every instance, so eta follows a
    ladder: whenever a block of sweeps fails to improve the best certified
    gap, eta halves and the iterate restarts from the best point seen.
    Blocks lengthen as eta shrinks so that a stable eta always gets enough
    sweeps to prove itself.  A sweep costs about as much as a certificate,
    so both the iterate and the running average are certified after every
    sweep regardless of ``certify_every``.

    Full steps clamp at the bid floor; that keeps a transient where every
    best response hits zero at once from zeroing the whole profile.  Damped
    steps are allowed to glide below the floor, because some instances are
    outbid so heavily that their only equilibrium bid is exactly zero and a
    floored bid would leave a certified gap of about floor * (1 - v/sigma)
    forever.  The damped update keeps bids strictly positive on its own; a
    denormal guard just keeps the weights well defined.
    """
    config = config or SolverConfig()
    game = _Game(instance)
    floor = config.bid_floor
    n = instance.n
    b = _initial_bids(instance, config)
    avg = [0.0] * n
    tracker = _Tracker(game)
    iterations = 0
    eta = 1.0
    block_end = _block_sweeps(eta)
    prev_best = math.inf
    for sweep in range(1, config.max_iterations + 1):
        w = [game.wf(x) for x in b]
        for i in range(n):
            sig_minus = _sig_minus_exact(w, i)
            if sig_minus <= 0.0:
                raise DegenerateProfileError(
                    "opposing bids carry zero weight during a sweep"
                )
            br = _best_response_scalar(game, i, sig_minus, _ORACLE_TOL)
            if eta == 1.0:
                moved, lo = br, floor
            else:
                moved, lo = b[i] + eta * (br - b[i]), 1e-300
            b[i] = moved if moved >= lo else lo
            w[i] = game.wf(b[i])
        inv_t = 1.0 / sweep
        for i in range(n):
            avg[i] += (b[i] - avg[i]) * inv_t
        iterations = sweep
        gap = min(tracker.certify(b), tracker.certify(avg))
        if gap <= config.tolerance:
            break
        if sweep == block_end:
            if tracker.gap > prev_best * (1.0 - 1e-6) and eta > _ETA_MIN:
                eta = max(eta / 2.0, _ETA_MIN)
                if tracker.point is not None:
                    b = list(tracker.point)
            prev_best = tracker.gap
            block_end = sweep + _block_sweeps(eta)
    return _finish(
        instance, config, tracker, avg, iterations, Method.BEST_RESPONSE_ITERATION
    )


def solve(
    instance: AuctionInstance, config: SolverConfig | None = None
) -> EquilibriumResult:
    """Dispatch to the method named in the config (default: giga)."""
    config = config or SolverConfig()
    if config.method is Method.GIGA:
        return giga_solve(instance, config)
    return best_response_iteration(instance, config)


def iteration_budget(
    n: int, values: Iterable[float], epsilon: float, cap: int | None = None
) -> int:
    """Pessimistic step count for the gradient method at gap target epsilon.

    ceil((n * sum(values) / min(values) / epsilon)**2), optionally capped.
    The square reflects the 1/sqrt(t) error decay; the constant factor is 1
    by calibration, so treat this as a scale, not a guarantee.
    """
    vals = [float(v) for v in values]
    if not isinstance(n, int) or isinstance(n, bool) or n < 2:
        raise DomainError(f"n must be an integer >= 2, got {n!r}")
    if len(vals) != n:
        raise DomainError(f"expected {n} values, got {len(vals)}")
    for v in vals:
        if not math.isfinite(v) or v <= 0.0:
            raise DomainError(f"values must be finite and > 0, got {v!r}")
    if not (math.isfinite(epsilon) and epsilon > 0.0):
        raise DomainError(f"epsilon must be finite and > 0, got {epsilon!r}")
    t = math.ceil((n * math.fsum(vals) / min(vals) / epsilon) ** 2)
    if cap is not None:
        if not isinstance(cap, int) or cap < 1:
            raise DomainError(f"cap must be a positive integer, got {cap!r}")
        t = min(t, cap)
    return t
