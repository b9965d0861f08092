"""Entropy rates, path probabilities and typical-sequence tests.

Two exact rates are computed for an enumerable model, in bits per step:

* formula rate: scheme entropy plus the addition-pattern and deleted-node
  entropies, each averaged under the stationary law. The deletion part
  prices which *label* was removed.
* kernel rate: the standard Markov rate of the graph-valued kernel, whose
  deletion outcomes are aggregated over labels. Whenever two deletions from
  a positive-probability graph collide into the same labeled graph, the
  formula rate strictly exceeds the kernel rate; the difference is reported
  as ``gap`` and never hidden.

Path log-probabilities mirror the same split: "labeled-path" mode prices
each step by its scheme and the recorded pattern/label choice;
"graph-kernel" mode prices the aggregated graph-to-graph transition. By
the ergodic theorem the per-step average of either converges to its
matching rate, which is what the empirical estimators exploit.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import log2

import numpy as np

from .errors import BoundsError
from .graphs import ENUM_CAP, enumerate_state_space, split_highest
from .kernel import (
    GraphChain,
    NecModel,
    StationaryDistribution,
    TransitionScheme,
    stationary_graph_distribution,
    successors,
    transition_prob,
)

GRAPH_KERNEL = "graph-kernel"
LABELED_PATH = "labeled-path"
MODES = (GRAPH_KERNEL, LABELED_PATH)


@dataclass(frozen=True)
class EntropyReport:
    """Bundle of the exact and (optionally) empirical rates, bits/step."""

    formula_rate: float
    kernel_rate: float
    gap: float
    empirical_rate: float | None = None
    chain_length: int | None = None
    mode: str | None = None

    def as_dict(self) -> dict:
        return {
            "formula_rate": self.formula_rate,
            "kernel_rate": self.kernel_rate,
            "gap": self.gap,
            "empirical_rate": self.empirical_rate,
            "n": self.chain_length,
            "mode": self.mode,
        }


@dataclass(frozen=True)
class TypicalityVerdict:
    """Outcome of the two-sided typical-set bound at a given epsilon.

    A sequence with per-symbol negative log-probability v is typical iff
    H - eps <= v <= H + eps; ``margin`` is eps - |v - H| (negative when the
    sequence falls outside).
    """

    epsilon: float
    per_symbol: float
    lower: float
    upper: float
    typical: bool
    margin: float


@dataclass(frozen=True, eq=False)
class EmpiricalRate:
    """AEP estimate from one chain plus its running prefix series.

    ``series[k]`` is the estimate from the first k+1 states, so the last
    entry is the full-chain estimate. ``offending_step`` is the index of
    the first zero-probability transition if one occurred (rate -inf).
    """

    rate: float
    series: np.ndarray
    mode: str
    n: int
    offending_step: int | None = None


def _xlog2(p: float) -> float:
    return p * log2(p) if p > 0.0 else 0.0


def formula_entropy_rate(model: NecModel, pi: StationaryDistribution) -> float:
    """Decomposed entropy rate under a supplied stationary law over graphs.

    H = sum_g p(g) [ -(t log t + r log r + s log s)
                     + t(g) H(addition pattern | g)
                     + r(g) H(deleted label | g) ]  (bits/step).
    """
    space = enumerate_state_space(model.n_max)
    values = np.asarray(pi.values, dtype=float)
    if values.shape != (len(space),):
        raise ValueError(
            f"stationary vector has length {values.shape}, expected {len(space)}"
        )
    total = 0.0
    for idx, g in enumerate(space):
        p_g = values[idx]
        if p_g <= 0.0:
            continue
        t = model.policy.t(g)
        r = model.policy.r(g)
        s = model.policy.s(g)
        term = -(_xlog2(t) + _xlog2(r) + _xlog2(s))
        if t > 0.0:
            h_pattern = 0.0
            for pattern in range(1 << g.n):
                h_pattern -= _xlog2(model.addition.pattern_prob(g, pattern))
            term += t * h_pattern
        if r > 0.0:
            h_label = 0.0
            for label in range(1, g.n + 1):
                h_label -= _xlog2(model.deletion.node_prob(g, label))
            term += r * h_label
        total += p_g * term
    return total


def kernel_entropy_rate(
    model: NecModel, pi: StationaryDistribution | None = None
) -> float:
    """Exact Markov entropy rate of the aggregated graph-valued kernel."""
    if model.n_max > ENUM_CAP:
        raise BoundsError(
            f"kernel rate needs full enumeration (n_max <= {ENUM_CAP})"
        )
    if pi is None:
        pi = stationary_graph_distribution(model)
    space = enumerate_state_space(model.n_max)
    values = np.asarray(pi.values, dtype=float)
    total = 0.0
    for idx, g in enumerate(space):
        p_g = values[idx]
        if p_g <= 0.0:
            continue
        row_entropy = 0.0
        for _, p in successors(model, g).items():
            row_entropy -= _xlog2(p)
        total += p_g * row_entropy
    return total


def _start_log_prob(
    model: NecModel,
    chain: GraphChain,
    pi: StationaryDistribution | None,
    start_prob: float | None,
) -> float:
    if start_prob is not None:
        return log2(start_prob) if start_prob > 0.0 else float("-inf")
    if pi is None:
        if model.n_max > ENUM_CAP:
            raise BoundsError(
                "supply pi or start_prob for models beyond the enumeration cap"
            )
        pi = stationary_graph_distribution(model)
    space = enumerate_state_space(model.n_max)
    p = float(pi.values[space.index(chain.states[0])])
    return log2(p) if p > 0.0 else float("-inf")


def chain_step_log_probs(
    model: NecModel,
    chain: GraphChain,
    mode: str = GRAPH_KERNEL,
    *,
    pi: StationaryDistribution | None = None,
    start_prob: float | None = None,
) -> tuple[float, np.ndarray]:
    """Initial log2-probability and per-transition log2-probabilities.

    The initial term is the stationary probability of the first state
    (chains start at the single-node graph, which always has positive
    stationary mass). Labeled-path mode requires scheme annotations and,
    for deletion steps, the recorded deleted label.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    init = _start_log_prob(model, chain, pi, start_prob)
    steps = np.empty(len(chain.states) - 1)
    if mode == GRAPH_KERNEL:
        for k in range(len(steps)):
            p = transition_prob(model, chain.states[k], chain.states[k + 1])
            steps[k] = log2(p) if p > 0.0 else float("-inf")
        return init, steps

    if chain.schemes is None:
        raise ValueError("labeled-path mode requires scheme annotations")
    for k in range(len(steps)):
        g = chain.states[k]
        g2 = chain.states[k + 1]
        scheme = chain.schemes[k]
        if scheme is TransitionScheme.SAME:
            if g2 != g:
                raise ValueError(f"step {k}: scheme S but the graph changed")
            p = model.policy.s(g)
        elif scheme is TransitionScheme.ADDITION:
            rest, pattern = split_highest(g2)
            if rest != g:
                raise ValueError(f"step {k}: scheme A but {g2} does not extend {g}")
            p = model.policy.t(g) * model.addition.pattern_prob(g, pattern)
        else:
            label = None
            if chain.deleted_labels is not None:
                label = chain.deleted_labels[k]
            if label is None:
                raise ValueError(
                    f"step {k}: labeled-path mode requires the deleted label"
                )
            p = model.policy.r(g) * model.deletion.node_prob(g, label)
        steps[k] = log2(p) if p > 0.0 else float("-inf")
    return init, steps


def chain_log_prob(
    model: NecModel,
    chain: GraphChain,
    mode: str = GRAPH_KERNEL,
    *,
    pi: StationaryDistribution | None = None,
    start_prob: float | None = None,
) -> float:
    """log2 probability of a whole chain; -inf on an impossible transition."""
    init, steps = chain_step_log_probs(
        model, chain, mode, pi=pi, start_prob=start_prob
    )
    return float(init + steps.sum())


def empirical_entropy_rate(
    model: NecModel,
    chain: GraphChain,
    mode: str = GRAPH_KERNEL,
    *,
    pi: StationaryDistribution | None = None,
    start_prob: float | None = None,
) -> EmpiricalRate:
    """Per-symbol negative log-probability, with its running prefix series."""
    if len(chain.states) < 2:
        raise ValueError("empirical rate needs a chain of length at least 2")
    init, steps = chain_step_log_probs(
        model, chain, mode, pi=pi, start_prob=start_prob
    )
    n = len(chain.states)
    logp = np.empty(n)
    logp[0] = init
    logp[1:] = init + np.cumsum(steps)
    series = -logp / np.arange(1, n + 1)
    offending = None
    bad = np.nonzero(np.isneginf(steps))[0]
    if bad.size:
        offending = int(bad[0])
    return EmpiricalRate(
        rate=float(series[-1]),
        series=series,
        mode=mode,
        n=n,
        offending_step=offending,
    )


def entropy_report(
    model: NecModel,
    *,
    pi: StationaryDistribution | None = None,
    chain: GraphChain | None = None,
    mode: str = GRAPH_KERNEL,
) -> EntropyReport:
    """Formula and kernel rates, plus an AEP estimate when a chain is given."""
    if pi is None:
        pi = stationary_graph_distribution(model)
    formula = formula_entropy_rate(model, pi)
    kernel = kernel_entropy_rate(model, pi)
    empirical = None
    length = None
    used_mode = None
    if chain is not None:
        est = empirical_entropy_rate(model, chain, mode, pi=pi)
        empirical = est.rate
        length = est.n
        used_mode = mode
    return EntropyReport(
        formula_rate=formula,
        kernel_rate=kernel,
        gap=formula - kernel,
        empirical_rate=empirical,
        chain_length=length,
        mode=used_mode,
    )


def typicality_test(
    entropy_rate: float, per_symbol_neg_log_prob: float, epsilon: float
) -> TypicalityVerdict:
    """Classify a sequence by the two-sided typical-set bound."""
    if epsilon <= 0.0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    lower = entropy_rate - epsilon
    upper = entropy_rate + epsilon
    v = per_symbol_neg_log_prob
    return TypicalityVerdict(
        epsilon=epsilon,
        per_symbol=v,
        lower=lower,
        upper=upper,
        typical=bool(lower <= v <= upper),
        margin=epsilon - abs(v - entropy_rate),
    )
