"""Synthetic end-to-end delay generator with known ground-truth sharing.

Each slice's utilization follows an independent 4-state Markov chain whose
transition rows favor low-utilization states.  A shared resource's
utilization is the average over its sharing slices, and per-slice delays
combine a shared congestion term with an own-load term, scaled by
multiplicative Gaussian measurement noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InfeasibleParametersError
from .model import AssignmentMatrix, KpiMatrix

DEFAULT_UTILIZATION_LEVELS = (0.2, 0.5, 0.7, 0.9)


@dataclass(frozen=True)
class SimConfig:
    """Full parameterization of one simulation run.

    ``weight_shared`` tunes interference strength: at 0 a slice's delay
    depends only on its own utilization, at 1 only on its resources'
    aggregate congestion.  ``exp_averaging`` (alpha), when set, replaces raw
    chain utilizations with an exponentially averaged trace, slowing the
    dynamics and enlarging the effective state space.
    """

    n_slices: int
    n_resources: int
    n_periods: int
    weight_shared: float
    noise_variance: float
    seed: int
    utilization_levels: tuple[float, ...] = DEFAULT_UTILIZATION_LEVELS
    diag_prob: float = 0.25
    offdiag_row_sum: float = 0.75
    g_threshold: float = 0.6
    h_threshold: float = 0.65
    exp_averaging: float | None = None
    fixed_delay: float = 0.0
    assignment_density: float = 0.15

    def __post_init__(self):
        if self.n_slices < 2:
            raise ValueError("n_slices must be >= 2")
        if self.n_resources < 1:
            raise ValueError("n_resources must be >= 1")
        if self.n_periods < 2:
            raise ValueError("n_periods must be >= 2")
        if not 0.0 <= self.weight_shared <= 1.0:
            raise ValueError("weight_shared must lie in [0, 1]")
        if self.noise_variance < 0.0:
            raise ValueError("noise_variance must be nonnegative")
        if self.fixed_delay < 0.0:
            raise ValueError("fixed_delay must be nonnegative")
        levels = tuple(float(u) for u in self.utilization_levels)
        if len(levels) < 2 or any(not 0.0 <= u <= 1.0 for u in levels):
            raise ValueError("utilization_levels must be >= 2 values in [0, 1]")
        if any(b <= a for a, b in zip(levels, levels[1:])):
            raise ValueError("utilization_levels must be strictly increasing")
        if abs(self.diag_prob + self.offdiag_row_sum - 1.0) > 1e-12:
            raise ValueError("diag_prob + offdiag_row_sum must equal 1")
        if self.exp_averaging is not None and not 0.0 < self.exp_averaging < 1.0:
            raise ValueError("exp_averaging must lie in (0, 1) when set")
        if not 0.0 < self.assignment_density <= 1.0:
            raise ValueError("assignment_density must lie in (0, 1]")
        object.__setattr__(self, "utilization_levels", levels)

    @property
    def n_states(self) -> int:
        return len(self.utilization_levels)

    def with_overrides(self, **kwargs) -> "SimConfig":
        return replace(self, **kwargs)


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-stochastic chain matrix with fixed diagonal and sorted off-diagonals.

    Within each row the off-diagonal mass decreases with the target-state
    index, so the chain leaves its current state toward low-utilization
    states with higher probability.
    """

    probs: np.ndarray
    diag_prob: float = 0.25

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise ValueError("transition matrix must be square")
        if np.any(p < 0):
            raise ValueError("transition probabilities must be nonnegative")
        if np.max(np.abs(p.sum(axis=1) - 1.0)) > 1e-12:
            raise ValueError("transition rows must sum to 1")
        if np.max(np.abs(np.diag(p) - self.diag_prob)) > 1e-12:
            raise ValueError(f"diagonal entries must equal {self.diag_prob}")
        for i in range(p.shape[0]):
            off = np.delete(p[i], i)
            if np.any(np.diff(off) > 1e-12):
                raise ValueError(f"row {i} off-diagonals must be nonincreasing")
        p = np.ascontiguousarray(p)
        p.flags.writeable = False
        object.__setattr__(self, "probs", p)

    @property
    def n_states(self) -> int:
        return self.probs.shape[0]


@dataclass(frozen=True)
class SimOutput:
    """Measurements plus the ground truth they were generated from."""

    measurements: KpiMatrix
    truth: AssignmentMatrix
    utilization_trace: np.ndarray = field(repr=False, default=None)


def gen_transition_matrix(rng: np.random.Generator, config: SimConfig) -> TransitionMatrix:
    """Draw one random chain matrix.

    Off-diagonal entries start as i.i.d. Uniform(0, 1), are normalized per
    row to ``offdiag_row_sum``, then reassigned within the row in decreasing
    order along increasing target-state index; the diagonal is fixed at
    ``diag_prob``.
    """
    s = config.n_states
    raw = rng.uniform(size=(s, s))
    np.fill_diagonal(raw, 0.0)
    raw *= config.offdiag_row_sum / raw.sum(axis=1, keepdims=True)
    probs = np.zeros((s, s))
    for i in range(s):
        off = np.sort(np.delete(raw[i], i))[::-1]
        targets = [j for j in range(s) if j != i]
        probs[i, targets] = off
        probs[i, i] = config.diag_prob
    return TransitionMatrix(probs, diag_prob=config.diag_prob)


def _max_distinct_rows(n_slices: int) -> int:
    # number of distinct binary rows with >= 2 ones
    if n_slices >= 64:
        return 2**63  # effectively unbounded for our scales
    return (1 << n_slices) - n_slices - 1


def gen_assignment(
    n_slices: int,
    n_resources: int,
    rng: np.random.Generator,
    density: float = 0.15,
    max_attempts: int = 1000,
) -> AssignmentMatrix:
    """Sample a random valid assignment matrix.

    A random permutation of the slices is dealt round-robin over the
    resources, giving every slice one resource and every resource
    floor(n_slices / n_resources) or one more slices (two slices minimum,
    wrapping over the permutation when resources outnumber slice pairs);
    round(density * n_resources) extra memberships are then sprinkled into
    the lightest rows, so ``density`` controls how many slices end up on a
    second resource.  Rows below weight two are padded and the whole draw
    is rejected while any two rows coincide.

    Resource sizes deliberately stay near the column-coverage minimum
    n_slices / n_resources: the utilization average of a large resource
    almost never crosses the congestion threshold, so its slice pairs carry
    correlations too weak to be separated from sampling noise.
    """
    if n_slices < 2:
        raise InfeasibleParametersError("need at least 2 slices")
    if n_resources < 1:
        raise InfeasibleParametersError("need at least 1 resource")
    if n_resources > _max_distinct_rows(n_slices):
        raise InfeasibleParametersError(
            f"{n_resources} distinct resources over {n_slices} slices are impossible"
        )
    extras = round(density * n_resources)
    n_slots = max(2 * n_resources, n_slices)
    for _ in range(max_attempts):
        entries = np.zeros((n_resources, n_slices), dtype=np.int8)
        perm = rng.permutation(n_slices)
        for k in range(n_slots):
            entries[k % n_resources, perm[k % n_slices]] = 1
        for _ in range(extras):
            weights = entries.sum(axis=1)
            row = rng.choice(np.nonzero(weights == weights.min())[0])
            zeros = np.nonzero(entries[row] == 0)[0]
            if zeros.size:
                entries[row, rng.choice(zeros)] = 1
        for row in np.nonzero(entries.sum(axis=1) < 2)[0]:
            need = 2 - int(entries[row].sum())
            zeros = np.nonzero(entries[row] == 0)[0]
            picks = rng.choice(zeros, size=need, replace=False)
            entries[row, picks] = 1
        if len({entries[j].tobytes() for j in range(n_resources)}) == n_resources:
            return AssignmentMatrix(entries)
    raise InfeasibleParametersError(
        f"no valid assignment found in {max_attempts} attempts "
        f"(n_slices={n_slices}, n_resources={n_resources})"
    )


def resource_utilization(a: AssignmentMatrix, u_k: np.ndarray) -> np.ndarray:
    """Utilization of each resource: the mean over its sharing slices.

    ``u_k`` may be one period (length N) or a full T x N trace; the result
    has matching shape (R,) or (T, R).
    """
    u = np.asarray(u_k, dtype=float)
    e = a.entries.astype(float)
    counts = e.sum(axis=1)
    return (u @ e.T) / counts


def delay_g(x, threshold: float = 0.6):
    """Shared congestion delay at a resource: quadratic above the threshold."""
    return np.square(np.maximum(0.0, np.asarray(x, dtype=float) - threshold))


def delay_h(y, threshold: float = 0.65):
    """Own-load delay of a slice: quadratic above the threshold."""
    return np.square(np.maximum(0.0, np.asarray(y, dtype=float) - threshold))


def _delay_base(a: AssignmentMatrix, u, config: SimConfig) -> np.ndarray:
    g_v = delay_g(resource_utilization(a, u), config.g_threshold)
    own = delay_h(u, config.h_threshold)
    return config.weight_shared * (g_v @ a.entries.astype(float)) + (
        1.0 - config.weight_shared
    ) * own


def _apply_noise(base: np.ndarray, z: np.ndarray, config: SimConfig) -> np.ndarray:
    return np.maximum(0.0, base + config.fixed_delay + base * z)


def e2e_delay(
    a: AssignmentMatrix,
    u_k: np.ndarray,
    config: SimConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    """End-to-end delay of every slice for one period of utilizations.

    The deterministic base is w_S * sum of shared-congestion delays over the
    slice's resources plus (1 - w_S) * own-load delay; the noise term is the
    base multiplied by a Gaussian with mean 0 and variance
    ``noise_variance``, plus the fixed delay, clamped at zero.
    """
    base = _delay_base(a, u_k, config)
    z = rng.standard_normal(base.shape) * math.sqrt(config.noise_variance)
    return _apply_noise(base, z, config)


def _advance_chains(
    probs: np.ndarray, states: np.ndarray, u: np.ndarray
) -> np.ndarray:
    # probs: (N, S, S) cumulative rows; states: (N,); u: (N,) uniforms
    rows = probs[np.arange(states.shape[0]), states]
    return (u[:, None] > rows).sum(axis=1)


def simulate(config: SimConfig, truth: AssignmentMatrix | None = None) -> SimOutput:
    """Run one fully seeded simulation.

    Draw order (fixed for reproducibility): assignment matrix, one
    transition matrix per slice, initial states (uniform over states),
    T x N chain-advance uniforms, T x N noise normals.  When exponential
    averaging is enabled the averaged trace replaces the raw utilizations
    everywhere (both resource and own-load terms); its starting value is the
    initial state's level.

    Passing ``truth`` pins the sharing structure instead of sampling it
    (used by planted-scenario tests); the assignment draw is then skipped.
    """
    rng = np.random.default_rng(config.seed)
    n, t, s = config.n_slices, config.n_periods, config.n_states
    if truth is None:
        truth = gen_assignment(
            config.n_slices, config.n_resources, rng, config.assignment_density
        )
    elif truth.n_slices != n or truth.n_resources != config.n_resources:
        raise ValueError("pinned truth matrix does not match the config dimensions")
    chains = np.stack(
        [gen_transition_matrix(rng, config).probs for _ in range(n)]
    )
    cum = np.cumsum(chains, axis=2)
    cum[:, :, -1] = 1.0  # guard against rounding past the last state
    states = rng.integers(0, s, size=n)
    chain_u = rng.random((t, n))
    noise = rng.standard_normal((t, n)) * math.sqrt(config.noise_variance)

    levels = np.asarray(config.utilization_levels)
    util = np.empty((t, n))
    trace = np.empty((t, n))
    alpha = config.exp_averaging
    smoothed = levels[states]
    for k in range(t):
        states = _advance_chains(cum, states, chain_u[k])
        util[k] = levels[states]
        if alpha is not None:
            smoothed = alpha * util[k] + (1.0 - alpha) * smoothed
            trace[k] = smoothed
    effective = trace if alpha is not None else util

    base = _delay_base(truth, effective, config)
    measurements = KpiMatrix(_apply_noise(base, noise, config))
    return SimOutput(measurements=measurements, truth=truth, utilization_trace=effective)
