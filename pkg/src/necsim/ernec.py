"""Edge-probability (Gilbert) specialization of network evolution chains.

An ERNEC constrains the generic model so that its stationary law,
conditioned on the number of nodes, is exactly the independent-edge random
graph law G(n, q):

* t, r, s depend only on the node count (vectors indexed by 1..n_max),
* addition wires each candidate edge independently with probability q,
* deletion is uniform over labels, compacting larger labels by one.

Under these rules the node-count process is itself a Markov chain with a
tridiagonal transition matrix, its stationary vector has the closed form
pi_i / pi_1 = prod_{j<i} t_j / prod_{j=2..i} r_j, and the stationary
probability of a graph with N nodes and E edges is
pi_N * q^E * (1-q)^(C(N,2)-E). All entropies here are in bits.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb, log2

import numpy as np

from .errors import BoundsError, ModelValidationError, NumericError
from .graphs import SIM_CAP, LabeledGraph, pair_count
from .kernel import (
    AdditionModel,
    DeletionModel,
    NecModel,
    StationaryDistribution,
    TransitionPolicy,
)


@dataclass(frozen=True)
class ErnecParams:
    """Per-node-count scheme probabilities plus the edge probability q.

    ``t[i-1]``, ``r[i-1]``, ``s[i-1]`` apply to every graph with i nodes.
    Construction enforces the model rules: each triple sums to 1, t vanishes
    only at n_max, r vanishes only at node count 1, s is always positive,
    and q lies strictly inside (0, 1) (q at an endpoint would make part of
    the labeled state space unreachable).
    """

    n_max: int
    q: float
    t: tuple[float, ...]
    r: tuple[float, ...]
    s: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "t", tuple(float(x) for x in self.t))
        object.__setattr__(self, "r", tuple(float(x) for x in self.r))
        object.__setattr__(self, "s", tuple(float(x) for x in self.s))
        if not 1 <= self.n_max <= SIM_CAP:
            raise BoundsError(f"n_max must lie in [1, {SIM_CAP}], got {self.n_max}")
        if not 0.0 < self.q < 1.0:
            raise ModelValidationError(
                f"edge probability q must lie strictly inside (0, 1), got {self.q}"
            )
        for name, vec in (("t", self.t), ("r", self.r), ("s", self.s)):
            if len(vec) != self.n_max:
                raise ModelValidationError(
                    f"{name} must have one entry per node count 1..{self.n_max}"
                )
            if any(x < 0 for x in vec):
                raise ModelValidationError(f"{name} entries must be nonnegative")
        for i in range(1, self.n_max + 1):
            total = self.t[i - 1] + self.r[i - 1] + self.s[i - 1]
            if abs(total - 1.0) > 1e-12:
                raise ModelValidationError(
                    f"t+r+s at node count {i} sums to {total}, not 1"
                )
        if self.t[self.n_max - 1] != 0.0:
            raise ModelValidationError("t must be 0 at node count n_max")
        if any(x <= 0 for x in self.t[: self.n_max - 1]):
            raise ModelValidationError("t must be positive below node count n_max")
        if self.r[0] != 0.0:
            raise ModelValidationError("r must be 0 at node count 1")
        if any(x <= 0 for x in self.r[1:]):
            raise ModelValidationError("r must be positive above node count 1")
        if any(x <= 0 for x in self.s):
            raise ModelValidationError("s must be positive at every node count")

    def t_at(self, n: int) -> float:
        return self.t[n - 1]

    def r_at(self, n: int) -> float:
        return self.r[n - 1]

    def s_at(self, n: int) -> float:
        return self.s[n - 1]


def random_ernec_params(n_max: int, q: float, seed) -> ErnecParams:
    """Draw scheme probabilities by uniform splits of [0, 1].

    For interior node counts two uniform points cut [0, 1] into (t, r, s);
    at node count 1 a single point cuts it into (t, s); at n_max into
    (r, s). Degenerate draws (a zero-length piece) are redrawn.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    t = [0.0] * n_max
    r = [0.0] * n_max
    s = [0.0] * n_max
    if n_max == 1:
        return ErnecParams(1, q, (0.0,), (0.0,), (1.0,))
    for i in range(1, n_max + 1):
        while True:
            if i == 1:
                u = rng.random()
                cand = (u, 0.0, 1.0 - u)
            elif i == n_max:
                u = rng.random()
                cand = (0.0, u, 1.0 - u)
            else:
                a, b = sorted(rng.random(2))
                cand = (a, b - a, 1.0 - b)
            ok = cand[2] > 0.0
            if i < n_max:
                ok = ok and cand[0] > 0.0
            if i > 1:
                ok = ok and cand[1] > 0.0
            if ok:
                t[i - 1], r[i - 1], s[i - 1] = cand
                break
    return ErnecParams(n_max, q, tuple(t), tuple(r), tuple(s))


def make_ernec(params: ErnecParams) -> NecModel:
    """Model with independent-q edge addition and uniform label deletion.

    The parameter invariants checked at ErnecParams construction imply all
    model-level rules, so no kernel-wide revalidation is run here.
    """
    q = params.q
    t_vec, r_vec, s_vec = params.t, params.r, params.s

    def t(g: LabeledGraph) -> float:
        return t_vec[g.n - 1]

    def r(g: LabeledGraph) -> float:
        return r_vec[g.n - 1]

    def s(g: LabeledGraph) -> float:
        return s_vec[g.n - 1]

    def pattern_prob(g: LabeledGraph, pattern: int) -> float:
        if pattern < 0 or pattern >> g.n:
            raise ValueError(f"pattern must use exactly {g.n} bits")
        k = pattern.bit_count()
        return q**k * (1.0 - q) ** (g.n - k)

    def sample_pattern(g: LabeledGraph, rng: np.random.Generator) -> int:
        draws = rng.random(g.n)
        pattern = 0
        for i in range(g.n):
            if draws[i] < q:
                pattern |= 1 << i
        return pattern

    def node_prob(g: LabeledGraph, label: int) -> float:
        if not 1 <= label <= g.n:
            raise ValueError(f"label {label} out of range 1..{g.n}")
        return 1.0 / g.n

    def sample_label(g: LabeledGraph, rng: np.random.Generator) -> int:
        return min(int(rng.random() * g.n) + 1, g.n)

    return NecModel(
        n_max=params.n_max,
        policy=TransitionPolicy(t=t, r=r, s=s),
        addition=AdditionModel(pattern_prob=pattern_prob, sample=sample_pattern),
        deletion=DeletionModel(node_prob=node_prob, sample=sample_label),
    )


def node_count_matrix(params: ErnecParams) -> np.ndarray:
    """Tridiagonal transition matrix of the node-count Markov chain."""
    m = params.n_max
    P = np.zeros((m, m))
    for i in range(1, m + 1):
        P[i - 1, i - 1] = params.s_at(i)
        if i < m:
            P[i - 1, i] = params.t_at(i)
        if i > 1:
            P[i - 1, i - 2] = params.r_at(i)
    return P


def node_stationary_analytic(params: ErnecParams) -> StationaryDistribution:
    """Closed-form stationary node-count law.

    pi_i / pi_1 = (t_1 ... t_{i-1}) / (r_2 ... r_i), then normalized. The
    result does not involve s at all.
    """
    ratios = [1.0]
    for i in range(2, params.n_max + 1):
        ratios.append(ratios[-1] * params.t_at(i - 1) / params.r_at(i))
    pi = np.array(ratios)
    pi /= pi.sum()
    return StationaryDistribution(pi, over="node-counts", provenance="analytic")


def node_stationary_numeric(
    params: ErnecParams, *, residual_tol: float = 1e-12
) -> StationaryDistribution:
    """Stationary node-count law from the eigenvector of the matrix."""
    P = node_count_matrix(params)
    if params.n_max == 1:
        return StationaryDistribution(
            np.array([1.0]), over="node-counts", provenance="numeric"
        )
    w, v = np.linalg.eig(P.T)
    idx = int(np.argmin(np.abs(w - 1.0)))
    pi = np.real(v[:, idx])
    pi = pi / pi.sum()
    if pi.min() < -1e-9:
        raise NumericError("eigenvector solve produced negative probabilities")
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    residual = float(np.max(np.abs(pi @ P - pi)))
    if residual > residual_tol:
        raise NumericError(
            f"stationary solve residual {residual:.3e} exceeds {residual_tol}"
        )
    return StationaryDistribution(pi, over="node-counts", provenance="numeric")


@lru_cache(maxsize=128)
def _node_pi_cached(params: ErnecParams) -> tuple[float, ...]:
    return tuple(node_stationary_analytic(params).values)


def graph_stationary_prob(params: ErnecParams, g: LabeledGraph) -> float:
    """Stationary probability of one labeled graph.

    pi_N * q^E * (1-q)^(C(N,2)-E) for an N-node, E-edge graph; the exponent
    pair is exactly the G(N, q) weight of the graph, so conditioning on N
    recovers the independent-edge law.
    """
    if g.n > params.n_max:
        raise BoundsError(f"graph {g.encode()} exceeds n_max={params.n_max}")
    pi = _node_pi_cached(params)
    if g.n == 1:
        return pi[0]
    e = g.edge_count
    return pi[g.n - 1] * params.q**e * (1.0 - params.q) ** (pair_count(g.n) - e)


def _xlog2(p: float) -> float:
    """p * log2(p) with the 0 log 0 = 0 convention."""
    return p * log2(p) if p > 0.0 else 0.0


def ernec_entropy_rate(params: ErnecParams) -> float:
    """Closed-form entropy rate in bits per step.

    Three sums over node counts weighted by the stationary law: the scheme
    entropy -sum pi_i (t log t + r log r + s log s); the addition term,
    the binomial average of -log(q^j (1-q)^(i-j)) over how many of the i
    candidate edges appear; and the deletion term sum pi_i r_i log i, the
    cost of naming which node was removed. The deletion term prices node
    identity, so on graphs where two deletions collide into the same
    labeled graph this rate exceeds the entropy rate of the graph-valued
    kernel itself (see entropy.kernel_entropy_rate for the exact one).
    """
    pi = _node_pi_cached(params)
    q = params.q
    h_scheme = 0.0
    h_addition = 0.0
    h_deletion = 0.0
    for i in range(1, params.n_max + 1):
        p_i = pi[i - 1]
        h_scheme -= p_i * (
            _xlog2(params.t_at(i)) + _xlog2(params.r_at(i)) + _xlog2(params.s_at(i))
        )
        if i < params.n_max:
            inner = 0.0
            for j in range(i + 1):
                w = q**j * (1.0 - q) ** (i - j)
                if w > 0.0:
                    inner += comb(i, j) * w * log2(w)
            h_addition -= p_i * params.t_at(i) * inner
        if i >= 2:
            h_deletion += p_i * params.r_at(i) * log2(i)
    return h_scheme + h_addition + h_deletion
