"""Continuous-time extensions of network evolution chains.

Two routes from discrete steps to wall-clock time:

* dwell calibration: with a fixed time quantum tau per step, a graph whose
  stay probability is s remains unchanged for an expected tau / (1 - s)
  seconds (a geometric run of "same" steps plus the entering step). Given
  per-node-count dwell targets, s is solved from that identity and t, r
  are rescaled proportionally so each triple still sums to 1.
* continuous-time Markov chain: state g holds for an exponential time with
  rate lambda(g), then jumps along the embedded chain, i.e. the discrete
  kernel with its self-loop ("same") mass removed and rows renormalized,
  since a self-jump is unobservable in continuous time. The generator has
  off-diagonal entries lambda(i) p_ij and diagonal -lambda(i); its
  transition matrix P(t) = exp(R t) is evaluated by uniformization
  (a Poisson mixture of powers of a stochastic matrix), which stays
  nonnegative and row-stochastic where a raw power series would not.

The two constructions match in mean dwell time exactly when
lambda(g) = (1 - s(g)) / tau; the dwell distributions still differ
(geometric times tau versus exponential).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import sparse

from .errors import BoundsError, CalibrationError, NumericError
from .graphs import ENUM_CAP, LabeledGraph, SINGLE_NODE, StateSpace, add_node, delete_node, enumerate_state_space
from .kernel import (
    GraphChain,
    NecModel,
    StationaryDistribution,
    successors,
)
from .ernec import ErnecParams

DENSE_STATE_CAP = 2048


@dataclass(frozen=True)
class DwellCalibration:
    """Per-node-count dwell targets and the stay probabilities they induce."""

    tau: float
    targets: tuple[float, ...]
    s: tuple[float, ...]


def expected_dwell(s: float, tau: float) -> float:
    """Mean unchanged time of a state with stay probability s: tau/(1-s)."""
    return tau / (1.0 - s)


def _resolve_targets(
    target_dwell: Sequence[float] | Callable[[int], float], n_max: int
) -> tuple[float, ...]:
    if callable(target_dwell):
        return tuple(float(target_dwell(i)) for i in range(1, n_max + 1))
    targets = tuple(float(x) for x in target_dwell)
    if len(targets) != n_max:
        raise ValueError(f"need one dwell target per node count 1..{n_max}")
    return targets


def calibrate_s(
    tau: float,
    target_dwell: Sequence[float] | Callable[[int], float],
    base_params: ErnecParams,
) -> ErnecParams:
    """Retarget the stay probabilities to hit expected dwell times.

    Sets s_i = 1 - tau/target_i and rescales t_i, r_i by a common factor so
    the triple sums to 1 and the ratio t_i : r_i is preserved. Every target
    must exceed tau, otherwise no valid s exists for that node count.
    """
    if tau <= 0.0:
        raise ValueError(f"time quantum tau must be positive, got {tau}")
    targets = _resolve_targets(target_dwell, base_params.n_max)
    t_new = list(base_params.t)
    r_new = list(base_params.r)
    s_new = list(base_params.s)
    for i in range(1, base_params.n_max + 1):
        target = targets[i - 1]
        if target <= tau:
            raise CalibrationError(
                f"dwell target {target} at node count {i} does not exceed tau={tau}"
            )
        s_i = 1.0 - tau / target
        move = base_params.t_at(i) + base_params.r_at(i)
        if move <= 0.0:
            raise CalibrationError(
                f"node count {i} has no addition/deletion mass to rescale"
            )
        scale = (1.0 - s_i) / move
        t_new[i - 1] = base_params.t_at(i) * scale
        r_new[i - 1] = base_params.r_at(i) * scale
        s_new[i - 1] = s_i
    return ErnecParams(
        base_params.n_max, base_params.q, tuple(t_new), tuple(r_new), tuple(s_new)
    )


def dwell_calibration(
    tau: float,
    target_dwell: Sequence[float] | Callable[[int], float],
    n_max: int,
) -> DwellCalibration:
    """The s values implied by dwell targets, without touching parameters."""
    targets = _resolve_targets(target_dwell, n_max)
    s = []
    for i, target in enumerate(targets, start=1):
        if target <= tau:
            raise CalibrationError(
                f"dwell target {target} at node count {i} does not exceed tau={tau}"
            )
        s.append(1.0 - tau / target)
    return DwellCalibration(tau=tau, targets=targets, s=tuple(s))


def dwell_run_lengths(chain: GraphChain) -> dict[int, list[int]]:
    """Lengths of completed constant runs along a chain, keyed by node count.

    A run is a maximal block of identical consecutive states; its length in
    steps times the time quantum is one dwell-time sample. The final run is
    dropped because the chain may have been truncated inside it.
    """
    runs: dict[int, list[int]] = {}
    states = chain.states
    start = 0
    for k in range(1, len(states)):
        if states[k] != states[start]:
            runs.setdefault(states[start].n, []).append(k - start)
            start = k
    return runs


def _resolve_lambda(
    lam: Callable[[LabeledGraph], float] | Sequence[float] | float, n_max: int
) -> Callable[[LabeledGraph], float]:
    if callable(lam):
        return lam
    if isinstance(lam, (int, float)):
        rate = float(lam)
        return lambda g: rate
    rates = tuple(float(x) for x in lam)
    if len(rates) != n_max:
        raise ValueError(f"need one rate per node count 1..{n_max}")
    return lambda g: rates[g.n - 1]


@dataclass(frozen=True, eq=False)
class RateMatrix:
    """Generator matrix over the enumerated graph space.

    Row i holds lambda(i) p_ij off the diagonal and -lambda(i) on it, where
    p_ij are the embedded-jump probabilities; every row sums to zero.
    """

    space: StateSpace
    matrix: sparse.csr_matrix
    lam: np.ndarray

    def __post_init__(self):
        sums = np.asarray(self.matrix.sum(axis=1)).ravel()
        if np.max(np.abs(sums)) > 1e-12:
            raise ValueError("generator rows must sum to 0")


def build_rate_matrix(
    model: NecModel,
    lam: Callable[[LabeledGraph], float] | Sequence[float] | float,
) -> RateMatrix:
    """Generator of the continuous-time chain with holding rates lambda."""
    if model.n_max > ENUM_CAP:
        raise BoundsError(f"rate matrix needs full enumeration (n_max <= {ENUM_CAP})")
    rate_of = _resolve_lambda(lam, model.n_max)
    space = enumerate_state_space(model.n_max)
    m = len(space)
    rates = np.empty(m)
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    for idx, g in enumerate(space):
        rate = float(rate_of(g))
        if rate <= 0.0:
            raise ValueError(f"holding rate at {g.encode()} must be positive")
        rates[idx] = rate
        row = successors(model, g)
        stay = row.pop(g, 0.0)
        move = 1.0 - stay
        entries: list[tuple[int, float]] = []
        if move > 1e-15:
            for g2, p in row.items():
                entries.append((space.index(g2), rate * p / move))
            entries.append((idx, -rate))
        else:
            # absorbing in the embedded chain: no flow out
            rates[idx] = rate
        for j, v in sorted(entries):
            indices.append(j)
            data.append(v)
        indptr.append(len(indices))
    matrix = sparse.csr_matrix(
        (np.array(data), np.array(indices), np.array(indptr)), shape=(m, m)
    )
    return RateMatrix(space=space, matrix=matrix, lam=rates)


def transition_matrix_at(
    rate: RateMatrix, t: float, *, tol: float = 1e-12
) -> np.ndarray:
    """P(t) = exp(R t) by uniformization.

    With Lam an upper bound on the holding rates, B = I + R/Lam is a
    stochastic matrix and P(t) is the Poisson(Lam t) mixture of its powers.
    Weights are accumulated until their tail is below ``tol`` and then
    renormalized, so the result is row-stochastic and nonnegative to
    machine precision.
    """
    if t < 0.0:
        raise ValueError(f"time must be nonnegative, got {t}")
    m = rate.matrix.shape[0]
    if m > DENSE_STATE_CAP:
        raise BoundsError(
            f"dense transition matrix capped at {DENSE_STATE_CAP} states, got {m}"
        )
    identity = np.eye(m)
    lam_max = float(rate.lam.max())
    mu = lam_max * t
    if t == 0.0 or mu == 0.0:
        return identity.copy()
    B = identity + rate.matrix.toarray() / lam_max

    # Poisson weights computed around the mode to dodge underflow at large mu.
    k_lo = max(0, int(mu - 60.0 * np.sqrt(mu) - 20.0))
    weights = {}
    w = 1.0
    weights[k_lo] = w
    k = k_lo
    total = w
    while True:
        k += 1
        w = w * mu / k
        weights[k] = w
        total += w
        if k > mu and w / total < tol:
            break
    back = k_lo
    w = weights[k_lo]
    while back > 0 and w / total > tol * 1e-3:
        w = w * back / mu
        back -= 1
        weights[back] = w
        total += w
    k_max = k

    result = np.zeros((m, m))
    power = identity.copy()
    for k in range(0, k_max + 1):
        wk = weights.get(k)
        if wk is not None:
            result += (wk / total) * power
        if k < k_max:
            power = power @ B
    return result


def ctmc_stationary(rate: RateMatrix) -> StationaryDistribution:
    """Solve pi R = 0 with sum(pi) = 1 by least squares."""
    m = rate.matrix.shape[0]
    if m > DENSE_STATE_CAP:
        raise BoundsError(
            f"dense stationary solve capped at {DENSE_STATE_CAP} states, got {m}"
        )
    A = np.vstack([rate.matrix.toarray().T, np.ones((1, m))])
    b = np.zeros(m + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(A, b, rcond=None)
    residual = float(np.max(np.abs(pi @ rate.matrix.toarray())))
    if residual > 1e-9:
        raise NumericError(f"stationary residual {residual:.3e} exceeds 1e-9")
    if pi.min() < -1e-9:
        raise NumericError("stationary solve produced negative probabilities")
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    return StationaryDistribution(pi, over="graphs", provenance="numeric")


@dataclass(eq=False)
class CtmcTrajectory:
    """Piecewise-constant continuous-time path: states and holding times."""

    states: list[LabeledGraph]
    holding_times: np.ndarray
    seed: int | None
    horizon: float

    def __post_init__(self):
        self.holding_times = np.asarray(self.holding_times, dtype=float)
        if len(self.states) != self.holding_times.shape[0]:
            raise ValueError("states and holding times must align")
        if np.any(self.holding_times <= 0.0):
            raise ValueError("holding times must be positive")

    def __len__(self) -> int:
        return len(self.states)


def simulate_ctmc(
    model: NecModel,
    lam: Callable[[LabeledGraph], float] | Sequence[float] | float,
    horizon: float,
    seed,
) -> CtmcTrajectory:
    """Sample a continuous-time path up to the horizon, truncating the last
    holding interval at it.

    Per visit the draws are: one exponential holding time with the state's
    rate, one uniform for addition-versus-deletion (self-jumps are excluded
    by the embedding), then the sampler's own draws.
    """
    if horizon <= 0.0:
        raise ValueError(f"horizon must be positive, got {horizon}")
    rate_of = _resolve_lambda(lam, model.n_max)
    rng = np.random.default_rng(seed)
    g = SINGLE_NODE
    elapsed = 0.0
    states: list[LabeledGraph] = []
    holds: list[float] = []
    while True:
        rate = float(rate_of(g))
        if rate <= 0.0:
            raise ValueError(f"holding rate at {g.encode()} must be positive")
        dwell = rng.exponential(1.0 / rate)
        if elapsed + dwell >= horizon:
            remaining = horizon - elapsed
            if remaining > 0.0:
                states.append(g)
                holds.append(remaining)
            break
        states.append(g)
        holds.append(dwell)
        elapsed += dwell
        t = model.policy.t(g)
        r = model.policy.r(g)
        move = t + r
        if move <= 0.0:  # single absorbing state; dwell forever
            states[-1] = g
            holds[-1] = horizon - (elapsed - dwell)
            break
        if rng.random() < t / move:
            g = add_node(g, model.addition.sample(g, rng))
        else:
            g = delete_node(g, model.deletion.sample(g, rng))
    stored_seed = seed if isinstance(seed, int) else None
    return CtmcTrajectory(
        states=states,
        holding_times=np.array(holds),
        seed=stored_seed,
        horizon=horizon,
    )


def occupation_fractions(
    traj: CtmcTrajectory, space: StateSpace
) -> StationaryDistribution:
    """Fraction of total time spent in each enumerated state."""
    weights = np.zeros(len(space))
    for g, h in zip(traj.states, traj.holding_times):
        weights[space.index(g)] += h
    return StationaryDistribution(
        weights / weights.sum(), over="graphs", provenance="empirical"
    )
