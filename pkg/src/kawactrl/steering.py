"""Constructive synthesis of piecewise-constant, low-mode control schedules.

The synthesis rests on two numerically realized limits of the flow map:

* a single short segment with value ``incr / delta`` and duration ``delta``
  drives the state from v to approximately v + incr as delta shrinks
  (an affine jump bought with a large, brief force), and
* a zero-control coast of length theta started from v + theta**-0.5 * zeta
  lands near v - zeta * zeta_x + theta**-0.5 * zeta, so bracketing a coast
  between steering to +theta**-0.5 * zeta and steering by the opposite
  increment realizes the quadratic jump -zeta * zeta_x.

Targets supported on modes outside the control set are first decomposed
(`kawactrl.modes.decompose`) into a reachable part plus quadratic jumps over
the previous saturation level, and the bracket above is applied recursively,
one zeta term per inductive step.  Every phase measures its own error from
the actual simulated state against a relative target, so the increments
telescope and the final error is bounded by the sum of the per-phase budgets
(each inductive step grants its three phases a third of its budget).

Grid searches descend geometric parameter grids and accept the first entry
meeting the phase budget; entries whose predicted error is hopeless (from a
first-order rate estimate) are skipped without a solver run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable

import numpy as np

from .errors import (
    NoConvergence,
    NotGenerator,
    ResolutionError,
    SearchExhausted,
    WindowCollapse,
)
from .fields import SpectralField, advection, derivative, from_trig, sobolev_norm
from .modes import ModeSet, closure_step, decompose, is_generator
from .solver import (
    ControlSchedule,
    ControlSegment,
    LinearSymbol,
    SolverConfig,
    flow,
    linear_group,
    run_schedule,
)

# Skip a grid entry without running when its predicted error exceeds the
# phase budget by this factor; predictions are first-order and deliberately
# rough, so the margin is generous.
SKIP_FACTOR = 50.0

# The ideal-state coast probe must clear this fraction of the phase budget
# before the (committed) phases are attempted at that theta.
PROBE_MARGIN = 0.5

_DEFAULT_GRID = tuple(0.25 * 0.5**i for i in range(50))


def _geometric_ok(grid: tuple[float, ...]) -> bool:
    if not grid or any(not (0.0 < g < 1.0) for g in grid):
        return False
    return all(b < a for a, b in zip(grid, grid[1:]))


@dataclass(frozen=True)
class SynthesisParams:
    """Search configuration for one steering problem."""

    eps: float
    sigma: float
    s: int = 1
    modes: ModeSet = field(default_factory=lambda: ModeSet.symmetric({1}))
    solver: SolverConfig = field(default_factory=lambda: SolverConfig(n_modes=64))
    delta_grid: tuple[float, ...] = _DEFAULT_GRID
    theta_grid: tuple[float, ...] = _DEFAULT_GRID
    max_depth: int = 24
    max_rounds: int = 5000
    seed: int = 0

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.s < 0:
            raise ValueError("s must be nonnegative")
        if not _geometric_ok(tuple(self.delta_grid)) or not _geometric_ok(tuple(self.theta_grid)):
            raise ValueError("parameter grids must be decreasing sequences in (0, 1)")
        if self.max_depth < 1 or self.max_rounds < 1:
            raise ValueError("caps must be positive")
        if not self.modes.is_symmetric:
            raise ValueError("the control mode set must be symmetric")


@dataclass(frozen=True)
class SynthesisReport:
    """Outcome of one steering run, re-verified by an independent simulation."""

    achieved_error: float
    schedule: ControlSchedule
    search_log: tuple[tuple[str, float, float], ...]
    endpoint: SpectralField


def _norm(f: SpectralField, s: int) -> float:
    return sobolev_norm(f, s)


def _is_zero(f: SpectralField) -> bool:
    return not f.support(tol=0.0)


def _generator_rate(f: SpectralField, a: float, s: int) -> float:
    """H^s size of the linear generator applied to f (skip-estimate helper)."""
    g = derivative(f, 5) - derivative(f, 3) - a * derivative(f, 1)
    return _norm(g, s)


class _Planner:
    """Builds a schedule segment by segment, simulating as it commits.

    The planner state is the actual endpoint of everything committed so far;
    rollback restores both the segment list and that state, which makes the
    nested parameter searches safe to retry.
    """

    def __init__(self, u0: SpectralField, params: SynthesisParams):
        self.p = params
        self.cfg = params.solver
        self.s = params.s
        self.state = u0
        self.segments: list[ControlSegment] = []
        self.log: list[tuple[str, float, float]] = []
        self.levels: list[frozenset[int]] = [frozenset(params.modes.elems)]

    # -- saturation levels -------------------------------------------

    def _ensure_level(self, n: int) -> None:
        while len(self.levels) <= n:
            self.levels.append(closure_step(self.levels[-1]))

    def cover_level(self, support: Iterable[int]) -> int:
        """Smallest saturation level containing every |k| of the support."""
        wanted = {abs(int(k)) for k in support if k != 0}
        n = 0
        while True:
            self._ensure_level(n)
            if wanted <= self.levels[n]:
                return n
            n += 1
            if n > self.p.max_depth:
                raise NoConvergence(
                    f"support {sorted(wanted)} not covered within {self.p.max_depth} levels"
                )

    # -- commit/rollback ----------------------------------------------

    def _snapshot(self):
        return len(self.segments), self.state

    def _rollback(self, snap) -> None:
        n, state = snap
        del self.segments[n:]
        self.state = state

    def _commit(self, value: SpectralField, duration: float, endpoint: SpectralField) -> None:
        self.segments.append(ControlSegment(duration, value))
        self.state = endpoint

    # -- primitives -----------------------------------------------------

    def burst(self, incr: SpectralField, eps: float, sigma: float) -> None:
        """One segment (delta, incr/delta) landing within eps of state + incr."""
        if _is_zero(incr):
            return
        target = self.state + incr
        a = self.state.mean
        rate = (
            _generator_rate(target, a, self.s)
            + _norm(advection(target, target), self.s)
            + 1e-30
        )
        best = math.inf
        for delta in self.p.delta_grid:
            if delta >= sigma:
                continue
            if delta * rate > SKIP_FACTOR * eps and delta != self.p.delta_grid[-1]:
                continue
            value = incr * (1.0 / delta)
            try:
                end = flow(self.state, None, value, delta, self.cfg, n_samples=2).endpoint
            except ResolutionError:
                continue  # too violent at this delta; descend
            err = _norm(end - target, self.s)
            self.log.append(("burst", delta, err))
            best = min(best, err)
            if err <= eps:
                self._commit(value, delta, end)
                return
        raise NoConvergence(f"burst grid exhausted (best error {best:.3e})", best)

    def commit_coast(self, theta: float) -> None:
        """Zero-control segment of length theta (certified at the pair level)."""
        end = flow(self.state, None, None, theta, self.cfg, n_samples=2).endpoint
        self._commit(SpectralField.zero(), theta, end)

    # -- recursive plan ---------------------------------------------

    def plan_increment(self, incr: SpectralField, eps: float, sigma: float, depth: int) -> None:
        """Steer the current state by incr, spending at most eps error and sigma time."""
        if _is_zero(incr):
            return
        level, tail = self._tail_level(incr, eps)
        projected = incr.project(self.levels[level])
        self.plan_h(projected, level, eps - tail, sigma, depth)

    def _tail_level(self, incr: SpectralField, eps: float) -> tuple[int, float]:
        n = 0
        while True:
            self._ensure_level(n)
            tail = _norm(incr - incr.project(self.levels[n]), self.s)
            if tail <= 0.5 * eps:
                return n, tail
            n += 1
            if n > self.p.max_depth:
                raise NoConvergence("target tail cannot be covered within the depth cap")

    def plan_h(self, target: SpectralField, level: int, eps: float, sigma: float, depth: int) -> None:
        """Realize a target supported on saturation level ``level``."""
        if depth > self.p.max_depth:
            raise NoConvergence("depth cap exceeded")
        if _is_zero(target):
            return
        if level == 0:
            self.burst(target, eps, sigma)
            return
        deco = decompose(target, self.levels[level - 1])
        self.plan_c(deco.eta, list(deco.zetas), level - 1, eps, sigma, depth + 1)

    def plan_c(
        self,
        eta: SpectralField,
        zetas: list[SpectralField],
        level: int,
        eps: float,
        sigma: float,
        depth: int,
    ) -> None:
        """Realize eta - sum_i B(zeta_i), every piece supported on ``level``.

        The quadratic jumps are realized first, one zeta per inductive step,
        while the simulated state is still small; the reachable part eta is
        steered last.  Error budget halves across the steps.
        """
        if depth > self.p.max_depth:
            raise NoConvergence("depth cap exceeded")
        if not zetas:
            self.plan_h(eta, level, eps, sigma, depth + 1)
            return
        share = 0.5 * eps if len(zetas) > 1 or not _is_zero(eta) else eps
        self.quadratic_pair(zetas[-1], level, share, 0.5 * sigma, depth + 1)
        self.plan_c(eta, zetas[:-1], level, eps - share, 0.5 * sigma, depth + 1)

    def quadratic_pair(
        self,
        zeta: SpectralField,
        level: int,
        eps: float,
        sigma: float,
        depth: int,
    ) -> None:
        """Add the quadratic jump -zeta * zeta_x via two antithetic coasts.

        Each coast of length theta is bracketed by steering the shifted field
        theta**-0.5 * zeta/sqrt(2) in and (rotated by the exactly-known linear
        phases) back out; the jump is even in the shift while the leading
        coast biases are odd, so running the second bracket with the opposite
        shift cancels them.  One measured certificate covers the whole pair:
        the end state must sit within eps of start - zeta * zeta_x.
        """
        if depth > self.p.max_depth:
            raise NoConvergence("depth cap exceeded")
        jump = advection(zeta, zeta)
        if _is_zero(jump):
            return
        half = zeta * (2.0**-0.5)
        a = self.state.mean
        sym = LinearSymbol(a)
        base = self.state
        inner_eps = 0.25 * eps
        inner_sigma = sigma / 5.0
        rate_one = (
            _generator_rate(base, a, self.s)
            + _norm(advection(base, base), self.s)
            + _generator_rate(jump, a, self.s)
            + 1e-30
        )
        rate_half = _norm(advection(zeta, jump) + advection(jump, zeta), self.s)
        target = base - jump
        snap = self._snapshot()
        best = math.inf
        for theta in self.p.theta_grid:
            if theta >= inner_sigma:
                continue
            est = theta * rate_one + math.sqrt(theta) * rate_half
            if est > SKIP_FACTOR * eps and theta != self.p.theta_grid[-1]:
                continue
            shift = half * theta**-0.5
            rotated = linear_group(theta, shift, sym)
            try:
                # Ideal rehearsal of the pair: both coasts, exact steering.
                e1 = flow(base + shift, None, None, theta, self.cfg, n_samples=2).endpoint
                e2 = flow(e1 - rotated - shift, None, None, theta, self.cfg, n_samples=2).endpoint
            except ResolutionError:
                continue  # coast too nonlinear at this theta; descend
            probe_err = _norm((e2 + rotated) - target, self.s)
            self.log.append(("coast-probe", theta, probe_err))
            best = min(best, probe_err)
            if probe_err > PROBE_MARGIN * eps:
                continue
            try:
                self.plan_h(shift, level, inner_eps, inner_sigma, depth + 1)
                self.commit_coast(theta)
                self.plan_h(-1.0 * rotated - shift, level, inner_eps, inner_sigma, depth + 1)
                self.commit_coast(theta)
                self.plan_h(rotated, level, inner_eps, inner_sigma, depth + 1)
            except (NoConvergence, ResolutionError):
                self._rollback(snap)
                continue
            pair_err = _norm(self.state - target, self.s)
            self.log.append(("coast", theta, pair_err))
            if pair_err <= eps:
                return
            self._rollback(snap)
        raise NoConvergence(f"coast grid exhausted (best pair error {best:.3e})", best)

    # -- assembly ------------------------------------------------------

    def schedule(self) -> ControlSchedule:
        return ControlSchedule(tuple(self.segments))


def _verified_report(
    u0: SpectralField,
    expected: SpectralField,
    planner: _Planner,
) -> SynthesisReport:
    schedule = planner.schedule()
    traj = run_schedule(u0, schedule, planner.cfg)
    achieved = _norm(traj.endpoint - expected, planner.s)
    planner.log.append(("verify", 0.0, achieved))
    return SynthesisReport(
        achieved_error=achieved,
        schedule=schedule,
        search_log=tuple(planner.log),
        endpoint=traj.endpoint,
    )


def _require_mean_zero(f: SpectralField, label: str) -> None:
    scale = max(1.0, float(np.max(np.abs(f.coeffs))))
    if abs(f.mean) > 1e-12 * scale:
        raise ValueError(f"{label} must have zero spatial mean")


def steer_elementary(
    u0: SpectralField,
    eta: SpectralField,
    p: SynthesisParams,
) -> SynthesisReport:
    """Reach u0 + eta with a single short large segment, eta in the control span."""
    _require_mean_zero(eta, "eta")
    allowed = {abs(e) for e in p.modes.elems}
    if any(k not in allowed for k in eta.support(tol=0.0)):
        raise ValueError("eta must be supported on the control mode set")
    planner = _Planner(u0, p)
    planner.burst(eta, p.eps, p.sigma)
    return _verified_report(u0, u0 + eta, planner)


def steer_quadratic(
    u0: SpectralField,
    w: SpectralField,
    zeta: SpectralField,
    p: SynthesisParams,
) -> SynthesisReport:
    """Reach u0 + w - zeta * zeta_x via steer / coast / steer-back phases."""
    _require_mean_zero(w, "w")
    _require_mean_zero(zeta, "zeta")
    planner = _Planner(u0, p)
    expected = u0 + w - advection(zeta, zeta)
    if _is_zero(zeta):
        planner.plan_increment(w, p.eps, p.sigma, 0)
        return _verified_report(u0, expected, planner)
    level = planner.cover_level(set(w.support(0.0)) | set(zeta.support(0.0)))
    planner.plan_c(w, [zeta], level, p.eps, p.sigma, 0)
    return _verified_report(u0, expected, planner)


def synthesize_small_time(
    u0: SpectralField,
    u1: SpectralField,
    p: SynthesisParams,
) -> SynthesisReport:
    """Steer u0 to within p.eps of u1 in total time below p.sigma.

    Runs the recursive plan in refinement passes: each pass steers by the
    remaining gap with a budget between the final tolerance and a fixed
    fraction of that gap, so the residual contracts geometrically while the
    per-pass parameter searches stay shallow.  Pass time budgets halve, which
    keeps the overall schedule below p.sigma.
    """
    _require_mean_zero(u0, "u0")
    _require_mean_zero(u1, "u1")
    if not is_generator(p.modes):
        raise NotGenerator(f"{sorted(p.modes.elems)} does not generate the integers")
    planner = _Planner(u0, p)
    sigma_pass = 0.5 * p.sigma
    max_passes = 8
    for _ in range(max_passes):
        residual = u1 - planner.state
        gap = _norm(residual, p.s)
        if gap <= 0.98 * p.eps:
            break
        eps_pass = max(0.9 * p.eps, 0.35 * gap)
        snap = planner._snapshot()
        try:
            planner.plan_increment(residual, eps_pass, sigma_pass, 0)
        except NoConvergence:
            planner._rollback(snap)
            raise
        sigma_pass *= 0.5
    else:
        raise NoConvergence(
            "refinement passes exhausted", _norm(u1 - planner.state, p.s)
        )
    report = _verified_report(u0, u1, planner)
    if report.schedule.total_time >= p.sigma:
        raise NoConvergence("schedule exceeded the time budget", report.achieved_error)
    return report


def _random_direction(
    rng: np.random.Generator,
    around: SpectralField,
    s: int,
) -> SpectralField:
    kmax = max([3, *around.support(tol=0.0)])
    terms = [(k, rng.standard_normal(), rng.standard_normal()) for k in range(1, kmax + 1)]
    f = from_trig(terms)
    return f * (1.0 / _norm(f, s))


def estimate_coast_window(
    u1: SpectralField,
    eps: float,
    p: SynthesisParams,
) -> tuple[float, float]:
    """Radius r and horizon tau such that sampled states near u1 coast within eps.

    The free path from u1 itself fixes a candidate horizon; eight random
    perturbations at radius r then certify it, halving the horizon (and, when
    necessary, the radius) until the sample check passes.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    rng = np.random.default_rng(p.seed)
    cfg, s = p.solver, p.s
    tau_cap = p.sigma
    for divisor in (2, 4, 8, 16):
        r = eps / divisor
        threshold = eps - 1.5 * r
        base = flow(u1, None, None, tau_cap, cfg, n_samples=129)
        t_star = 0.0
        for t, st in zip(base.times, base.states):
            if _norm(st - u1, s) <= threshold:
                t_star = t
            else:
                break
        if t_star <= 0.0:
            continue
        for _ in range(6):
            ok = True
            for _ in range(8):
                v = u1 + _random_direction(rng, u1, s) * r
                path = flow(v, None, None, t_star, cfg, n_samples=33)
                if max(_norm(st - u1, s) for st in path.states) > eps:
                    ok = False
                    break
            if ok:
                return r, t_star
            t_star *= 0.5
            if t_star < 1e-9:
                break
    raise WindowCollapse("no coasting window certified at any sampled radius")


def _trim_final(prev_total: float, total: float) -> float:
    """Duration making the left-to-right sum hit ``total`` bit-exactly."""
    last = total - prev_total
    if last <= 0.0:
        raise ArithmeticError("no room left for the final coast")
    for _ in range(64):
        got = prev_total + last
        if got == total:
            return last
        last = math.nextafter(last, math.inf if got < total else -math.inf)
        if last <= 0.0:
            break
    raise ArithmeticError("could not trim the final coast to the exact total time")


def synthesize_any_time(
    u0: SpectralField,
    u1: SpectralField,
    total_time: float,
    p: SynthesisParams,
) -> SynthesisReport:
    """Steer u0 to within p.eps of u1 at exactly t = total_time.

    Alternates small-time bursts into a certified ball around u1 with
    zero-control coasts no longer than the certified horizon; the last coast
    is trimmed so the segment durations sum bit-exactly to the target time.
    """
    if total_time <= 0:
        raise ValueError("total_time must be positive")
    _require_mean_zero(u0, "u0")
    _require_mean_zero(u1, "u1")
    if not is_generator(p.modes):
        raise NotGenerator(f"{sorted(p.modes.elems)} does not generate the integers")

    r, tau = estimate_coast_window(u1, p.eps, p)
    log: list[tuple[str, float, float]] = [("window", tau, r)]
    segments: list[ControlSegment] = []
    committed = 0.0
    current = u0
    rounds = 0
    while True:
        rounds += 1
        if rounds > p.max_rounds:
            raise SearchExhausted(
                f"any-time loop did not finish within {p.max_rounds} rounds "
                f"(coast window tau = {tau:.3e})"
            )
        remaining = total_time - committed
        sigma_round = min(p.sigma, 0.5 * remaining)
        sub = synthesize_small_time(current, u1, replace(p, eps=r, sigma=sigma_round))
        for seg in sub.schedule.segments:
            segments.append(seg)
            committed = committed + seg.duration
        log.extend(sub.search_log)
        current = sub.endpoint
        remaining = total_time - committed
        if remaining <= tau:
            if remaining > 0.0:
                last = _trim_final(committed, total_time)
                end = flow(current, None, None, last, p.solver, n_samples=2).endpoint
                segments.append(ControlSegment(last, SpectralField.zero()))
                committed = committed + last
                current = end
            break
        end = flow(current, None, None, tau, p.solver, n_samples=2).endpoint
        segments.append(ControlSegment(tau, SpectralField.zero()))
        committed = committed + tau
        current = end

    schedule = ControlSchedule(tuple(segments))
    traj = run_schedule(u0, schedule, p.solver)
    achieved = _norm(traj.endpoint - u1, p.s)
    log.append(("verify", 0.0, achieved))
    return SynthesisReport(
        achieved_error=achieved,
        schedule=schedule,
        search_log=tuple(log),
        endpoint=traj.endpoint,
    )


def necessity_probe(
    u0: SpectralField,
    schedule: ControlSchedule,
    d: int,
    cfg: SolverConfig,
) -> float:
    """Endpoint spectral energy off the sublattice d*Z after running the schedule.

    Both the linear phases and the quadratic transport map the sublattice to
    itself, so for controls and data supported on it the result sits at
    roundoff scale.
    """
    if d <= 1:
        raise ValueError("the sublattice stride d must exceed 1")
    if any(k % d for k in u0.support(tol=0.0)):
        raise ValueError("u0 must be supported on the sublattice")
    end = run_schedule(u0, schedule, cfg).endpoint
    energy = 0.0
    for k in range(1, end.max_mode + 1):
        if k % d:
            energy += 2.0 * abs(end.coeff(k)) ** 2
    return 2.0 * math.pi * energy


def random_schedule(
    modes: ModeSet,
    n_segments: int,
    rng: np.random.Generator,
    *,
    duration_range: tuple[float, float] = (0.05, 0.2),
    amplitude: float = 0.3,
) -> ControlSchedule:
    """Random piecewise-constant schedule with values spanned by the mode set."""
    ks = sorted({abs(m) for m in modes.elems})
    segs = []
    for _ in range(n_segments):
        dur = float(rng.uniform(*duration_range))
        terms = [
            (k, amplitude * rng.standard_normal(), amplitude * rng.standard_normal())
            for k in ks
        ]
        segs.append(ControlSegment(dur, from_trig(terms)))
    return ControlSchedule(tuple(segs))
