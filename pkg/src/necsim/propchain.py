"""Property chains and their hidden-Markov machinery.

A property chain is the pointwise image Y_i = f(G_i) of a graph chain
under an integer-valued property function. It is stationary and ergodic
but generally not Markov, so sequence probabilities are computed with the
forward algorithm over a hidden Markov model:

* full HMM: hidden states are all graphs, transitions are the exact
  kernel, emission of y from g is the indicator f(g) = y.
* reduced HMM (per-node-count models only): hidden states are node counts
  1..n_max, transitions are the tridiagonal node-count matrix, and the
  emission of y from count x is the mass of {g with x nodes : f(g) = y}.
  The mass can be counted uniformly (each of the 2^C(x,2) graphs weighted
  equally, exact only at q = 1/2) or weighted by the conditional edge law
  q^E (1-q)^(C(x,2)-E), which is exact for every q and is the default when
  q != 1/2. Each built HMM records which variant produced it.

Emissions can also be estimated from data: supervised maximum-likelihood
counting when the hidden states are observed alongside the symbols, or
expectation-maximization (Baum-Welch) when they are not.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb
from typing import Callable, Sequence

import numpy as np
from scipy import sparse

from .errors import BoundsError
from .graphs import (
    ENUM_CAP,
    LabeledGraph,
    enumerate_state_space,
    pair_count,
    triangle_count,
)
from .kernel import (
    GraphChain,
    NecModel,
    build_kernel,
    simulate,
    stationary_graph_distribution,
)
from .ernec import (
    ErnecParams,
    make_ernec,
    node_count_matrix,
    node_stationary_analytic,
)


@dataclass(frozen=True)
class PropertyFn:
    """Named integer-valued graph property with an enumerable codomain."""

    name: str
    fn: Callable[[LabeledGraph], int]
    codomain: Callable[[int], tuple[int, ...]]

    def __call__(self, g: LabeledGraph) -> int:
        return self.fn(g)


NODE_COUNT = PropertyFn(
    "node-count", lambda g: g.n, lambda n_max: tuple(range(1, n_max + 1))
)
EDGE_COUNT = PropertyFn(
    "edge-count",
    lambda g: g.edge_count,
    lambda n_max: tuple(range(pair_count(n_max) + 1)),
)
TRIANGLE_COUNT = PropertyFn(
    "triangle-count",
    triangle_count,
    lambda n_max: tuple(range(comb(n_max, 3) + 1)),
)

PROPERTY_FNS = {f.name: f for f in (NODE_COUNT, EDGE_COUNT, TRIANGLE_COUNT)}


@dataclass
class PropertyChainData:
    """Observed symbol sequence of a property chain."""

    symbols: list[int]
    f_name: str
    source: GraphChain | None = None

    def __post_init__(self):
        if not self.symbols:
            raise ValueError("a property chain holds at least one symbol")

    def __len__(self) -> int:
        return len(self.symbols)


def extract_npc(chain: GraphChain, f: PropertyFn) -> PropertyChainData:
    """Apply the property function pointwise along a chain."""
    return PropertyChainData([f(g) for g in chain.states], f.name, source=chain)


@dataclass(frozen=True, eq=False)
class Hmm:
    """Hidden Markov model with a finite integer symbol alphabet.

    ``symbols[j]`` is the symbol value emitted by column j of ``emit``.
    ``trans`` may be dense or CSR-sparse; rows of ``trans`` and ``emit``
    and the initial vector each sum to 1 within 1e-12.
    """

    initial: np.ndarray
    trans: np.ndarray | sparse.csr_matrix
    emit: np.ndarray
    symbols: tuple[int, ...]
    note: str = ""
    _symbol_index: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "initial", np.asarray(self.initial, dtype=float))
        object.__setattr__(self, "emit", np.asarray(self.emit, dtype=float))
        object.__setattr__(self, "symbols", tuple(int(y) for y in self.symbols))
        m = self.initial.shape[0]
        if self.trans.shape != (m, m):
            raise ValueError("transition matrix shape disagrees with initial vector")
        if self.emit.shape != (m, len(self.symbols)):
            raise ValueError("emission matrix shape disagrees with symbol alphabet")
        if abs(self.initial.sum() - 1.0) > 1e-12:
            raise ValueError("initial distribution must sum to 1")
        row_sums = np.asarray(self.trans.sum(axis=1)).ravel()
        if np.max(np.abs(row_sums - 1.0)) > 1e-12:
            raise ValueError("transition rows must sum to 1")
        if np.max(np.abs(self.emit.sum(axis=1) - 1.0)) > 1e-12:
            raise ValueError("emission rows must sum to 1")
        self._symbol_index.update({y: j for j, y in enumerate(self.symbols)})

    @property
    def m(self) -> int:
        return self.initial.shape[0]

    @property
    def k(self) -> int:
        return len(self.symbols)

    def symbol_index(self, y: int) -> int:
        try:
            return self._symbol_index[y]
        except KeyError:
            raise ValueError(f"symbol {y} outside the model alphabet") from None


def build_full_hmm(model: NecModel, f: PropertyFn) -> Hmm:
    """HMM whose hidden states are the full enumerated graph space."""
    if model.n_max > ENUM_CAP:
        raise BoundsError(f"full HMM needs n_max <= {ENUM_CAP}")
    space = enumerate_state_space(model.n_max)
    trans = build_kernel(model, space)
    pi = stationary_graph_distribution(model).values
    symbols = f.codomain(model.n_max)
    col = {y: j for j, y in enumerate(symbols)}
    emit = np.zeros((len(space), len(symbols)))
    for idx, g in enumerate(space):
        emit[idx, col[f(g)]] = 1.0
    return Hmm(pi, trans, emit, symbols, note="full graph-state HMM")


def reduced_emission_matrix(
    params: ErnecParams, f: PropertyFn, emission: str
) -> np.ndarray:
    """Exact per-node-count emission probabilities for a property.

    "uniform" counts graphs with equal weight 2^-C(x,2); "er" weights each
    graph by its conditional edge law q^E (1-q)^(C(x,2)-E). Both need the
    per-level graph sets to be enumerable.
    """
    if params.n_max > ENUM_CAP:
        raise BoundsError(f"exact emissions need n_max <= {ENUM_CAP}")
    symbols = f.codomain(params.n_max)
    col = {y: j for j, y in enumerate(symbols)}
    emit = np.zeros((params.n_max, len(symbols)))
    q = params.q
    for n in range(1, params.n_max + 1):
        bits = pair_count(n)
        for adj in range(1 << bits):
            g = LabeledGraph(n, adj)
            if emission == "uniform":
                w = 1.0 / (1 << bits)
            else:
                e = g.edge_count
                w = q**e * (1.0 - q) ** (bits - e)
            emit[n - 1, col[f(g)]] += w
    return emit


def build_reduced_hmm(
    params: ErnecParams, f: PropertyFn, emission: str = "auto"
) -> Hmm:
    """HMM over node counts with exact emissions for a property function.

    ``emission`` is "uniform", "er", or "auto" (er when q != 1/2, where the
    uniform count would misweight graphs; the two coincide at q = 1/2).
    """
    if emission not in ("auto", "uniform", "er"):
        raise ValueError(f"unknown emission variant {emission!r}")
    if emission == "auto":
        emission = "uniform" if params.q == 0.5 else "er"
    emit = reduced_emission_matrix(params, f, emission)
    return Hmm(
        node_stationary_analytic(params).values,
        node_count_matrix(params),
        emit,
        f.codomain(params.n_max),
        note=f"reduced node-count HMM, {emission} emissions",
    )


def _forward_scales(hmm: Hmm, symbol_cols: np.ndarray) -> np.ndarray:
    """Scaled forward pass; returns the per-step scale factors c_t.

    prod c_t equals the sequence probability; a zero scale marks an
    impossible prefix and the remaining scales are set to zero.
    """
    trans_t = hmm.trans.T
    if sparse.issparse(trans_t):
        trans_t = trans_t.tocsr()
    scales = np.zeros(len(symbol_cols))
    alpha = hmm.initial * hmm.emit[:, symbol_cols[0]]
    c = alpha.sum()
    scales[0] = c
    if c == 0.0:
        return scales
    alpha = alpha / c
    for idx in range(1, len(symbol_cols)):
        alpha = (trans_t @ alpha) * hmm.emit[:, symbol_cols[idx]]
        c = alpha.sum()
        scales[idx] = c
        if c == 0.0:
            return scales
        alpha /= c
    return scales


def _symbol_cols(hmm: Hmm, symbols: Sequence[int]) -> np.ndarray:
    if len(symbols) == 0:
        raise ValueError("empty symbol sequence")
    return np.fromiter(
        (hmm.symbol_index(y) for y in symbols), dtype=np.int64, count=len(symbols)
    )


def forward_log_prob(hmm: Hmm, symbols: Sequence[int]) -> float:
    """log2 probability of the observed symbols; -inf if impossible."""
    scales = _forward_scales(hmm, _symbol_cols(hmm, symbols))
    if np.any(scales == 0.0):
        return float("-inf")
    return float(np.log2(scales).sum())


def forward_prefix_log_probs(hmm: Hmm, symbols: Sequence[int]) -> np.ndarray:
    """Cumulative log2 probability of every prefix of the symbols."""
    scales = _forward_scales(hmm, _symbol_cols(hmm, symbols))
    with np.errstate(divide="ignore"):
        logs = np.log2(scales)
    return np.cumsum(logs)


def _normalize_rows(mat: np.ndarray) -> np.ndarray:
    """Row-normalize; rows with no mass fall back to uniform."""
    out = np.array(mat, dtype=float)
    sums = out.sum(axis=1, keepdims=True)
    empty = sums.ravel() == 0.0
    out[empty] = 1.0
    sums[empty] = out.shape[1]
    return out / sums


def estimate_supervised(
    symbols: Sequence[int], states: Sequence[int], m: int, k: int
) -> Hmm:
    """Maximum-likelihood counting estimate with observed hidden states.

    ``states`` are hidden-state indices in [0, m); ``symbols`` are symbol
    indices in [0, k). Hidden states never visited get uniform rows. The
    initial vector is the empirical state occupancy.
    """
    y = np.asarray(symbols, dtype=np.int64)
    x = np.asarray(states, dtype=np.int64)
    if y.size == 0:
        raise ValueError("empty input")
    if y.shape != x.shape:
        raise ValueError("symbols and states must have equal length")
    if y.min() < 0 or y.max() >= k:
        raise ValueError(f"symbol alphabet size {k} smaller than observed range")
    if x.min() < 0 or x.max() >= m:
        raise ValueError(f"state count {m} smaller than observed range")
    trans = np.zeros((m, m))
    np.add.at(trans, (x[:-1], x[1:]), 1.0)
    emit = np.zeros((m, k))
    np.add.at(emit, (x, y), 1.0)
    initial = np.bincount(x, minlength=m).astype(float)
    return Hmm(
        initial / initial.sum(),
        _normalize_rows(trans),
        _normalize_rows(emit),
        tuple(range(k)),
        note="supervised ML estimate",
    )


def baum_welch(
    symbols: Sequence[int],
    m: int,
    k: int,
    *,
    init: Hmm | None = None,
    seed: int = 0,
    max_iter: int = 500,
    tol: float = 1e-9,
) -> tuple[Hmm, list[float]]:
    """Expectation-maximization fit; returns the model and the log2-likelihood
    trace (one entry per iteration, non-decreasing).

    Started from ``init`` when given, otherwise from uniform rows perturbed
    by small seeded jitter (needed to break the permutation symmetry of the
    hidden states). Stops when the relative improvement drops below ``tol``.
    """
    y = np.asarray(symbols, dtype=np.int64)
    if y.size == 0:
        raise ValueError("empty input")
    if y.min() < 0 or y.max() >= k:
        raise ValueError(f"symbol alphabet size {k} smaller than observed range")
    if init is not None:
        p0 = np.array(init.initial, dtype=float)
        A = np.asarray(
            init.trans.toarray() if sparse.issparse(init.trans) else init.trans,
            dtype=float,
        ).copy()
        B = np.array(init.emit, dtype=float)
    else:
        rng = np.random.default_rng(seed)
        p0 = _normalize_rows((1.0 + 0.02 * rng.random((1, m))))[0]
        A = _normalize_rows(1.0 + 0.02 * rng.random((m, m)))
        B = _normalize_rows(1.0 + 0.02 * rng.random((m, k)))

    T = y.size
    history: list[float] = []
    prev_ll = None
    for _ in range(max_iter):
        alpha = np.empty((T, m))
        c = np.empty(T)
        alpha[0] = p0 * B[:, y[0]]
        c[0] = alpha[0].sum()
        if c[0] == 0.0:
            raise ValueError("observation sequence impossible under the start model")
        alpha[0] /= c[0]
        for t in range(1, T):
            alpha[t] = (alpha[t - 1] @ A) * B[:, y[t]]
            c[t] = alpha[t].sum()
            if c[t] == 0.0:
                raise ValueError(
                    "observation sequence impossible under the start model"
                )
            alpha[t] /= c[t]
        ll = float(np.log2(c).sum())
        history.append(ll)

        beta = np.empty((T, m))
        beta[-1] = 1.0
        for t in range(T - 2, -1, -1):
            beta[t] = A @ (B[:, y[t + 1]] * beta[t + 1]) / c[t + 1]

        gamma = alpha * beta
        trans_new = np.zeros((m, m))
        for t in range(T - 1):
            trans_new += np.outer(
                alpha[t], B[:, y[t + 1]] * beta[t + 1] / c[t + 1]
            ) * A
        emit_new = np.zeros((m, k))
        np.add.at(emit_new.T, y, gamma)
        p0 = gamma[0] / gamma[0].sum()
        A = _normalize_rows(trans_new)
        B = _normalize_rows(emit_new)

        if prev_ll is not None and ll - prev_ll < tol * abs(prev_ll):
            break
        prev_ll = ll

    return (
        Hmm(p0, A, B, tuple(range(k)), note="baum-welch estimate"),
        history,
    )


def estimate_hmm(
    symbols: Sequence[int],
    hidden_states_sequence: Sequence[int] | None,
    m: int,
    k: int,
    **bw_options,
) -> Hmm:
    """Estimate an HMM from data.

    With observed hidden states this is supervised counting; without them,
    Baum-Welch from the documented jittered-uniform start.
    """
    if hidden_states_sequence is not None:
        return estimate_supervised(symbols, hidden_states_sequence, m, k)
    hmm, _ = baum_welch(symbols, m, k, **bw_options)
    return hmm


@dataclass
class NpcPipelineResult:
    """Outcome of the NPC entropy estimation pipeline."""

    rate: float
    series: np.ndarray
    hmm: Hmm
    npc: PropertyChainData
    burn_in_steps: int
    eval_steps: int


def npc_entropy_pipeline(
    params: ErnecParams,
    f: PropertyFn,
    length: int,
    seed,
    *,
    burn_in: float = 0.1,
    eval_window: int | None = None,
    estimator: str = "supervised",
) -> NpcPipelineResult:
    """Estimate a property chain's entropy rate via the reduced HMM.

    Steps: simulate the chain; extract the property symbols; take the exact
    node-count transition matrix; estimate the emissions (supervised from
    the observed node counts by default, Baum-Welch otherwise); run the
    scaled forward pass over the evaluation window; average the negative
    log-probability per symbol. The initial distribution is the analytic
    stationary node-count law and a burn-in prefix is discarded first, so
    the evaluated window is effectively stationary.
    """
    if not 0.0 <= burn_in <= 0.5:
        raise ValueError(f"burn-in fraction must lie in [0, 0.5], got {burn_in}")
    if estimator not in ("supervised", "baum-welch"):
        raise ValueError(f"unknown estimator {estimator!r}")
    model = make_ernec(params)
    chain = simulate(model, length, seed)
    npc = extract_npc(chain, f)

    symbols = f.codomain(params.n_max)
    col = {y: j for j, y in enumerate(symbols)}
    skip = int(burn_in * length)
    if skip >= length - 1:
        raise ValueError("burn-in leaves no samples to evaluate")
    y_idx = np.fromiter(
        (col[y] for y in npc.symbols[skip:]), dtype=np.int64, count=length - skip
    )
    if estimator == "supervised":
        x_idx = np.fromiter(
            (g.n - 1 for g in chain.states[skip:]), dtype=np.int64, count=length - skip
        )
        est = estimate_supervised(y_idx, x_idx, params.n_max, len(symbols))
        emit = est.emit
        note = "pipeline, supervised emissions"
    else:
        est, _ = baum_welch(y_idx, params.n_max, len(symbols))
        emit = est.emit
        note = "pipeline, baum-welch emissions"

    hmm = Hmm(
        node_stationary_analytic(params).values,
        node_count_matrix(params),
        emit,
        symbols,
        note=note,
    )
    eval_idx = y_idx if eval_window is None else y_idx[-eval_window:]
    scales = _forward_scales(hmm, eval_idx)
    with np.errstate(divide="ignore"):
        cum = np.cumsum(np.log2(scales))
    series = -cum / np.arange(1, len(eval_idx) + 1)
    return NpcPipelineResult(
        rate=float(series[-1]),
        series=series,
        hmm=hmm,
        npc=npc,
        burn_in_steps=skip,
        eval_steps=len(eval_idx),
    )
