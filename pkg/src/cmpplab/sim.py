"""Path simulation for compound mixed Poisson processes.

The construction is two-stage: draw the mixing parameter theta (or fix
it, for the conditional measures), then run a compound Poisson process
at rate h(theta) on the base side or g(theta) on the derived side,
accumulating exponential interarrivals until the next arrival would
exceed the horizon.  Events landing exactly on a query time t count
(the counting path is right-continuous); the partial interarrival past
the horizon is never stored.

Draw layout per path (see rng): lane 0 draw 0 is theta, lane 1 holds
interarrival uniforms, lane 2 claim uniforms.  The batch engine performs
the identical construction vectorized, so ``simulate_path`` with stream
(seed, i) and path i of a batch under the same seed are bit-identical.

A hard cap of 10^7 events per path turns a runaway intensity into a
diagnostic instead of an endless loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dist import log_weighted_expectation
from .expr import RealFn
from .model import BaseModel, DerivedModel, MeasureChange, _pair_key, derive_g
from .rng import LANE_ARRIVAL, LANE_CLAIM, LANE_MISC, RngStream, uniforms

EVENT_CAP = 10_000_000
_FAMILY_STRIDE = 1 << 40  # disjoint path-index families for independent batches


class SimulationError(RuntimeError):
    pass


class OutOfHorizon(ValueError):
    pass


# ---------------------------------------------------------------------------
# measure tags

@dataclass(frozen=True)
class MeasureTag:
    """Which of the four measures paths are simulated under."""

    kind: str                      # base_p | derived_q | conditional_p | conditional_q
    theta: Optional[float] = None

    def __post_init__(self):
        if self.kind in ("conditional_p", "conditional_q"):
            if self.theta is None or not self.theta > 0:
                raise ValueError("conditional tags need a positive theta")
        elif self.theta is not None:
            raise ValueError(f"{self.kind} does not carry a theta")

    @property
    def is_conditional(self) -> bool:
        return self.theta is not None

    @property
    def is_q_side(self) -> bool:
        return self.kind in ("derived_q", "conditional_q")

    def __str__(self) -> str:
        if self.is_conditional:
            return f"{self.kind}(theta={self.theta:g})"
        return self.kind


BASE_P = MeasureTag("base_p")
DERIVED_Q = MeasureTag("derived_q")


def conditional_p(theta: float) -> MeasureTag:
    return MeasureTag("conditional_p", float(theta))


def conditional_q(theta: float) -> MeasureTag:
    return MeasureTag("conditional_q", float(theta))


# ---------------------------------------------------------------------------
# paths

@dataclass(frozen=True)
class Path:
    """One trajectory: realized theta, event times, claim sizes, horizon."""

    theta: float
    event_times: np.ndarray
    claims: np.ndarray
    horizon: float

    def __post_init__(self):
        times = np.asarray(self.event_times, dtype=float)
        claims = np.asarray(self.claims, dtype=float)
        object.__setattr__(self, "event_times", times)
        object.__setattr__(self, "claims", claims)
        if times.shape != claims.shape:
            raise ValueError("event_times and claims must have equal length")
        if times.size and not (np.diff(times) > 0.0).all():
            raise ValueError("event times must be strictly increasing")
        if times.size and not (times > 0.0).all():
            raise ValueError("event times must be positive")
        if times.size and times[-1] > self.horizon:
            raise ValueError("event times must not exceed the horizon")
        if claims.size and not (claims > 0.0).all():
            raise ValueError("claims must be positive")

    def __len__(self) -> int:
        return int(self.event_times.size)

    def count_at(self, t: float) -> int:
        """N_t: number of events up to and including t."""
        self._check_time(t)
        return int(np.searchsorted(self.event_times, t, side="right"))

    def aggregate_at(self, t: float) -> float:
        """S_t: sum of the first N_t claims."""
        n = self.count_at(t)
        return float(self.claims[:n].sum())

    def _check_time(self, t: float) -> None:
        if t < 0.0 or t > self.horizon:
            raise OutOfHorizon(f"t={t!r} outside [0, {self.horizon!r}]")


def count_at(path: Path, t: float) -> int:
    return path.count_at(t)


def aggregate_at(path: Path, t: float) -> float:
    return path.aggregate_at(t)


@dataclass
class PathBatch:
    """Column-oriented batch of paths (flat ragged arrays).

    Fields are read-only by convention; verify-side estimators consume
    batches directly instead of materializing per-path objects.
    """

    thetas: np.ndarray     # (n,)
    counts: np.ndarray     # (n,) event counts
    offsets: np.ndarray    # (n+1,) prefix offsets into times/claims
    times: np.ndarray      # flat event times
    claims: np.ndarray     # flat claim sizes
    horizon: float

    def __len__(self) -> int:
        return int(self.thetas.size)

    def path(self, i: int) -> Path:
        lo, hi = self.offsets[i], self.offsets[i + 1]
        return Path(float(self.thetas[i]), self.times[lo:hi].copy(),
                    self.claims[lo:hi].copy(), self.horizon)

    def counts_at(self, t: float) -> np.ndarray:
        if t < 0.0 or t > self.horizon:
            raise OutOfHorizon(f"t={t!r} outside [0, {self.horizon!r}]")
        mask = np.concatenate([[0.0], np.cumsum(self.times <= t)])
        return (mask[self.offsets[1:]] - mask[self.offsets[:-1]]).astype(np.int64)

    def aggregates_at(self, t: float) -> np.ndarray:
        if t < 0.0 or t > self.horizon:
            raise OutOfHorizon(f"t={t!r} outside [0, {self.horizon!r}]")
        inc = np.concatenate([[0.0], np.cumsum(np.where(self.times <= t, self.claims, 0.0))])
        return inc[self.offsets[1:]] - inc[self.offsets[:-1]]

    def claim_prefix_apply(self, t: float, fn: RealFn) -> np.ndarray:
        """Per-path sums of fn over claims with event time <= t."""
        vals = np.where(self.times <= t, fn.eval_array(self.claims), 0.0) \
            if self.claims.size else np.zeros(0)
        inc = np.concatenate([[0.0], np.cumsum(vals)])
        return inc[self.offsets[1:]] - inc[self.offsets[:-1]]


# ---------------------------------------------------------------------------
# simulation

def _resolve_theta_and_rate(base, derived, under, seed, indices):
    n = indices.size
    if under.is_conditional:
        thetas = np.full(n, under.theta)
    else:
        u = uniforms(seed, indices, LANE_MISC, 0)
        law = derived.q_mixing if under.is_q_side else base.mixing_law
        thetas = np.asarray(law.quantile(u), dtype=float)
    if under.is_q_side:
        rates = np.asarray(derived.g_at(thetas), dtype=float)
    else:
        rates = np.asarray(base.rate_at(thetas), dtype=float)
    return thetas, rates


def simulate_batch(base: BaseModel, derived: Optional[DerivedModel],
                   under: MeasureTag, horizon: float, seed: int,
                   n: int, start_index: int = 0, family: int = 0) -> PathBatch:
    """Simulate n paths with per-path counter streams.

    ``family`` selects a disjoint block of path indices so that two
    batches under the same seed (e.g. the two sides of a reweighting
    check) are independent.
    """
    if under.is_q_side and derived is None:
        raise ValueError(f"measure {under} requires a derived model")
    if horizon < 0.0:
        raise ValueError("horizon must be nonnegative")
    indices = np.arange(start_index, start_index + n, dtype=np.uint64) \
        + np.uint64(family * _FAMILY_STRIDE)
    thetas, rates = _resolve_theta_and_rate(base, derived, under, seed, indices)

    counts = np.zeros(n, dtype=np.int64)
    last_time = np.zeros(n)
    drawn = np.zeros(n, dtype=np.int64)
    active = np.arange(n)
    chunks: list[tuple[np.ndarray, np.ndarray, np.ndarray]] = []
    # fixed block size: the accumulation structure (and hence every rounding)
    # depends only on (seed, path index), never on batch composition
    block = 16
    while horizon > 0.0 and active.size:
        draws = drawn[active]
        u = uniforms(seed, indices[active][:, None], LANE_ARRIVAL,
                     draws[:, None] + np.arange(block)[None, :])
        w = -np.log(u) / rates[active][:, None]
        csum = last_time[active][:, None] + np.cumsum(w, axis=1)
        ok = csum <= horizon
        n_ok = ok.sum(axis=1)
        accepted = csum[ok]  # row-major: grouped by path, in time order
        chunks.append((active.copy(), n_ok, accepted))
        counts[active] += n_ok
        if (counts > EVENT_CAP).any():
            raise SimulationError(
                f"a path exceeded the {EVENT_CAP} event cap before the horizon")
        drawn[active] += block
        full = n_ok == block
        last_time[active[full]] = csum[full, -1]
        active = active[full]

    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    times = np.empty(int(offsets[-1]))
    filled = np.zeros(n, dtype=np.int64)
    for rows, n_ok, accepted in chunks:
        take = n_ok > 0
        rows, n_ok = rows[take], n_ok[take]
        if rows.size == 0:
            continue
        starts = offsets[rows] + filled[rows]
        dest = np.repeat(starts, n_ok) + _groupwise_arange(n_ok)
        times[dest] = accepted
        filled[rows] += n_ok

    total = int(offsets[-1])
    if total:
        path_of_claim = np.repeat(indices, counts)
        claim_idx = _groupwise_arange(counts)
        u = uniforms(seed, path_of_claim, LANE_CLAIM, claim_idx)
        claim_law = derived.q_claim if under.is_q_side else base.claim_law
        claims = np.asarray(claim_law.quantile(u), dtype=float)
    else:
        claims = np.zeros(0)
    return PathBatch(thetas=thetas, counts=counts, offsets=offsets,
                     times=times, claims=claims, horizon=float(horizon))


def _groupwise_arange(counts: np.ndarray) -> np.ndarray:
    """[0..c0), [0..c1), ... flattened."""
    total = int(counts.sum())
    if total == 0:
        return np.zeros(0, dtype=np.int64)
    ends = np.cumsum(counts)
    return np.arange(total, dtype=np.int64) - np.repeat(ends - counts, counts)


def simulate_path(base: BaseModel, derived: Optional[DerivedModel],
                  under: MeasureTag, horizon: float, stream: RngStream) -> Path:
    """One path; identical to the batch engine's path at the same index."""
    batch = simulate_batch(base, derived, under, horizon,
                           seed=stream.seed, n=1, start_index=stream.path_index)
    return batch.path(0)


# ---------------------------------------------------------------------------
# likelihood-ratio density along a path

def log_density_M(path: Path, t: float, change: MeasureChange,
                  include_xi: bool = True) -> float:
    """log of the likelihood-ratio martingale at time t on this path.

    With include_xi the unconditional density ln M_t = ln xi(theta)
    + N_t alpha(theta) + sum_{k<=N_t} gamma(X_k)
    - t theta (e^{alpha(theta)} - 1); without it, the conditional
    density ln M~_t (no xi term).
    """
    path._check_time(t)
    theta = path.theta
    n = path.count_at(t)
    a = change.alpha(theta)
    total = n * a - t * theta * math.expm1(a)
    if n:
        total += math.fsum(change.gamma(x) for x in path.claims[:n])
    if include_xi:
        xi = change.xi(theta)
        if xi <= 0.0:
            raise ValueError(f"xi({theta!r}) = {xi!r} is not positive")
        total += math.log(xi)
    return total


def log_density_batch(batch: PathBatch, t: float, change: MeasureChange,
                      include_xi: bool = True) -> np.ndarray:
    alphas = change.alpha.eval_array(batch.thetas)
    counts = batch.counts_at(t)
    out = counts * alphas - t * batch.thetas * np.expm1(alphas)
    out += batch.claim_prefix_apply(t, change.gamma)
    if include_xi:
        out += np.log(change.xi.eval_array(batch.thetas))
    return out


# ---------------------------------------------------------------------------
# surplus processes

_VCOEF_CACHE: dict = {}


def claim_tilt_mean(base: BaseModel, change: MeasureChange) -> float:
    """E[X e^{gamma(X)}] under the base claim law, cached per pair."""
    key = _pair_key(base, change)
    if key not in _VCOEF_CACHE:
        _VCOEF_CACHE[key] = log_weighted_expectation(
            base.claim_law, lambda x: change.gamma(x) + math.log(x))
    return _VCOEF_CACHE[key]


def surplus_v(path: Path, t: float, base: BaseModel, change: MeasureChange) -> float:
    """Centered aggregate under the derived measure:
    V_t = S_t - t g(theta) E[X e^{gamma(X)}]."""
    g = derive_g(change)
    return path.aggregate_at(t) - t * g(path.theta) * claim_tilt_mean(base, change)


def surplus_y(path: Path, t: float, base: BaseModel) -> float:
    """Claim surplus under the base measure: Y_t = S_t - t theta E[X]."""
    return path.aggregate_at(t) - t * path.theta * base.claim_law.moment(1)


def surplus_v_batch(batch: PathBatch, t: float, base: BaseModel,
                    change: MeasureChange) -> np.ndarray:
    g = derive_g(change)
    coef = claim_tilt_mean(base, change)
    return batch.aggregates_at(t) - t * g.eval_array(batch.thetas) * coef


def surplus_y_batch(batch: PathBatch, t: float, base: BaseModel) -> np.ndarray:
    return batch.aggregates_at(t) - t * batch.thetas * base.claim_law.moment(1)


# ---------------------------------------------------------------------------
# path dump format: one line per path, full double precision

def dump_paths(batch: PathBatch, fh) -> None:
    """Write one record per path: theta, horizon, times, claims."""
    for i in range(len(batch)):
        lo, hi = batch.offsets[i], batch.offsets[i + 1]
        times = " ".join(f"{v:.17g}" for v in batch.times[lo:hi])
        claims = " ".join(f"{v:.17g}" for v in batch.claims[lo:hi])
        fh.write(f"theta={batch.thetas[i]:.17g} horizon={batch.horizon:.17g} "
                 f"times=[{times}] claims=[{claims}]\n")
