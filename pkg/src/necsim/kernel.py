"""Network evolution chains: model definition, simulation, exact kernel.

A chain starts from the single-node graph and at each step either adds a
node (probability t(g)), deletes a node (r(g)) or stays the same (s(g)),
with t+r+s = 1 for every graph g. Addition wires the new node according to
an AdditionModel, deletion picks a label according to a DeletionModel.
t must vanish exactly at n_max-node graphs and nowhere else; r must vanish
exactly at the single-node graph; s is positive everywhere. Under these
rules the chain is a finite, irreducible, aperiodic Markov chain over all
labeled graphs on 1..n_max nodes.

Reproducibility contract: one step consumes one uniform draw for the
scheme (u < t(g): addition; u < t(g)+r(g): deletion; otherwise same),
followed by the addition/deletion sampler's own draws. All samplers must
draw only from the generator handed to them.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable, Iterator

import numpy as np
from scipy import sparse

from .errors import BoundsError, NumericError
from .graphs import (
    ENUM_CAP,
    SIM_CAP,
    LabeledGraph,
    SINGLE_NODE,
    StateSpace,
    add_node,
    delete_node,
    enumerate_state_space,
    split_highest,
)

PROB_ATOL = 1e-12


class TransitionScheme(Enum):
    """Per-step choice among growing, shrinking, or staying unchanged."""

    ADDITION = "A"
    DELETION = "D"
    SAME = "S"


@dataclass(frozen=True)
class TransitionPolicy:
    """Graph-dependent scheme probabilities t, r, s (addition, deletion, same)."""

    t: Callable[[LabeledGraph], float]
    r: Callable[[LabeledGraph], float]
    s: Callable[[LabeledGraph], float]


@dataclass(frozen=True)
class AdditionModel:
    """Distribution over edge patterns for a newly added node.

    ``pattern_prob(g, pattern)`` returns the probability of wiring the new
    node to g per the pattern bitset; ``sample(g, rng)`` draws one pattern.
    Probabilities must sum to 1 over all 2^n patterns for every g.
    """

    pattern_prob: Callable[[LabeledGraph, int], float]
    sample: Callable[[LabeledGraph, np.random.Generator], int]


@dataclass(frozen=True)
class DeletionModel:
    """Distribution over which node label to delete.

    ``node_prob(g, label)`` must sum to 1 over labels 1..g.n for every g
    with at least two nodes.
    """

    node_prob: Callable[[LabeledGraph, int], float]
    sample: Callable[[LabeledGraph, np.random.Generator], int]


@dataclass(frozen=True)
class NecModel:
    """Complete specification of a network evolution chain.

    Construct via a validating factory (ernec.make_ernec, or build_model for
    hand-rolled policies); direct construction performs no checks so that
    validate_model can report on intentionally broken models.
    """

    n_max: int
    policy: TransitionPolicy
    addition: AdditionModel
    deletion: DeletionModel


@dataclass
class GraphChain:
    """A simulated trajectory of graphs.

    ``schemes[k]`` is the transition that produced ``states[k+1]`` from
    ``states[k]``; ``deleted_labels[k]`` records which label a deletion
    step removed (None for other schemes). The label record is what makes
    path probabilities computable without aggregating over the distinct
    deletions that can yield the same labeled graph.
    """

    seed: int | None
    states: list[LabeledGraph]
    schemes: list[TransitionScheme] | None = None
    deleted_labels: list[int | None] | None = None
    n_max: int | None = None

    def __post_init__(self):
        if not self.states:
            raise ValueError("a chain holds at least one state")
        if self.states[0].n != 1:
            raise ValueError("a chain starts at the single-node graph")
        if self.schemes is not None and len(self.schemes) != len(self.states) - 1:
            raise ValueError("schemes must have one entry per transition")
        if self.deleted_labels is not None and self.schemes is None:
            raise ValueError("deletion labels require scheme annotations")
        if (
            self.deleted_labels is not None
            and len(self.deleted_labels) != len(self.states) - 1
        ):
            raise ValueError("deleted_labels must have one entry per transition")

    def __len__(self) -> int:
        return len(self.states)


@dataclass(frozen=True, eq=False)
class StationaryDistribution:
    """Probability vector over graphs or over node counts.

    ``over`` is "graphs" (aligned with StateSpace order) or "node-counts"
    (index i-1 holds node count i). ``provenance`` records how the vector
    was obtained: "analytic", "numeric", or "empirical".
    """

    values: np.ndarray
    over: str
    provenance: str

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))


def validate_model(
    model: NecModel, *, sample_steps: int = 1000, seed: int = 0
) -> list[str]:
    """Check the scheme-probability rules; return violations (empty = valid).

    With n_max within the enumeration cap every graph in the state space is
    checked, and addition/deletion distributions are verified to normalize.
    Larger models are spot-checked along a short simulated trajectory.
    """
    violations: list[str] = []
    if model.n_max < 1:
        return [f"n_max must be at least 1, got {model.n_max}"]
    if model.n_max <= ENUM_CAP:
        graphs: Iterable[LabeledGraph] = enumerate_state_space(model.n_max)
    else:
        seen = {SINGLE_NODE}
        rng = np.random.default_rng(seed)
        g = SINGLE_NODE
        for _ in range(sample_steps):
            try:
                g, _, _ = _step(model, g, rng)
            except Exception as exc:  # broken samplers shouldn't mask the report
                violations.append(f"sampling failed at {g.encode()}: {exc}")
                break
            seen.add(g)
        graphs = sorted(seen, key=lambda h: (h.n, h.adj))

    for g in graphs:
        t = model.policy.t(g)
        r = model.policy.r(g)
        s = model.policy.s(g)
        enc = g.encode()
        for name, v in (("t", t), ("r", r), ("s", s)):
            if v < 0 or v > 1:
                violations.append(f"{name}({enc}) = {v} outside [0, 1]")
        if abs(t + r + s - 1.0) > PROB_ATOL:
            violations.append(f"t+r+s at {enc} sums to {t + r + s}, not 1")
        if g.n == model.n_max and t != 0:
            violations.append(f"t({enc}) = {t} but graphs at n_max must have t = 0")
        if g.n < model.n_max and t <= 0:
            violations.append(f"t({enc}) = {t} but must be positive below n_max")
        if g.n == 1 and r != 0:
            violations.append(f"r({enc}) = {r} but the single-node graph needs r = 0")
        if g.n > 1 and r <= 0:
            violations.append(f"r({enc}) = {r} but must be positive above one node")
        if s <= 0:
            violations.append(f"s({enc}) = {s} but must be positive for every graph")

        if g.n < model.n_max and t > 0 and g.n <= ENUM_CAP:
            total = sum(
                model.addition.pattern_prob(g, p) for p in range(1 << g.n)
            )
            if abs(total - 1.0) > 1e-9:
                violations.append(
                    f"addition pattern probabilities at {enc} sum to {total}"
                )
        if g.n > 1 and r > 0:
            total = sum(
                model.deletion.node_prob(g, lab) for lab in range(1, g.n + 1)
            )
            if abs(total - 1.0) > 1e-9:
                violations.append(
                    f"deletion node probabilities at {enc} sum to {total}"
                )
    return violations


def build_model(
    n_max: int,
    policy: TransitionPolicy,
    addition: AdditionModel,
    deletion: DeletionModel,
) -> NecModel:
    """Validating constructor for hand-rolled models."""
    if not 1 <= n_max <= SIM_CAP:
        raise BoundsError(f"n_max must lie in [1, {SIM_CAP}], got {n_max}")
    model = NecModel(n_max, policy, addition, deletion)
    violations = validate_model(model)
    if violations:
        raise ValueError(
            "invalid model: " + "; ".join(violations[:5])
            + ("" if len(violations) <= 5 else f" (+{len(violations) - 5} more)")
        )
    return model


def _step(
    model: NecModel, g: LabeledGraph, rng: np.random.Generator
) -> tuple[LabeledGraph, TransitionScheme, int | None]:
    """One transition; returns (next graph, scheme, deleted label or None)."""
    u = rng.random()
    t = model.policy.t(g)
    if u < t:
        pattern = model.addition.sample(g, rng)
        return add_node(g, pattern), TransitionScheme.ADDITION, None
    if u < t + model.policy.r(g):
        label = model.deletion.sample(g, rng)
        return delete_node(g, label), TransitionScheme.DELETION, label
    return g, TransitionScheme.SAME, None


def step(
    model: NecModel, g: LabeledGraph, rng: np.random.Generator
) -> tuple[LabeledGraph, TransitionScheme]:
    """Sample one transition from g under the model."""
    if g.n > model.n_max:
        raise BoundsError(f"graph {g.encode()} exceeds n_max={model.n_max}")
    g2, scheme, _ = _step(model, g, rng)
    return g2, scheme


def stream_chain(
    model: NecModel, length: int, seed
) -> Iterator[tuple[LabeledGraph, TransitionScheme | None, int | None]]:
    """Lazily yield (state, scheme-into-state, deleted label) for a fresh chain.

    The first tuple carries the single-node start with no scheme. Useful for
    long chains whose statistics can be accumulated without storing states.
    """
    if length < 1:
        raise ValueError(f"chain length must be at least 1, got {length}")
    rng = np.random.default_rng(seed)
    g = SINGLE_NODE
    yield g, None, None
    for _ in range(length - 1):
        g, scheme, label = _step(model, g, rng)
        yield g, scheme, label


def simulate(model: NecModel, length: int, seed) -> GraphChain:
    """Simulate a chain of exactly ``length`` states, reproducible from seed."""
    states: list[LabeledGraph] = []
    schemes: list[TransitionScheme] = []
    labels: list[int | None] = []
    for g, scheme, label in stream_chain(model, length, seed):
        states.append(g)
        if scheme is not None:
            schemes.append(scheme)
            labels.append(label)
    stored_seed = seed if isinstance(seed, int) else None
    return GraphChain(stored_seed, states, schemes, labels, n_max=model.n_max)


def derive_seed(seed: int, *keys: int) -> int:
    """Deterministic integer sub-seed for stream k of a top-level seed."""
    ss = np.random.SeedSequence([int(seed), *[int(k) for k in keys]])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def transition_prob(model: NecModel, g: LabeledGraph, g2: LabeledGraph) -> float:
    """Exact one-step probability p(g2 | g) over labeled graphs.

    Distinct deletion labels that land on the same labeled graph have their
    probabilities aggregated, so rows of this kernel sum to 1.
    """
    for h in (g, g2):
        if h.n > model.n_max:
            raise BoundsError(f"graph {h.encode()} exceeds n_max={model.n_max}")
    p = 0.0
    if g2 == g:
        p += model.policy.s(g)
    if g2.n == g.n + 1:
        rest, pattern = split_highest(g2)
        if rest == g:
            p += model.policy.t(g) * model.addition.pattern_prob(g, pattern)
    elif g2.n == g.n - 1:
        r = model.policy.r(g)
        if r > 0:
            for label in range(1, g.n + 1):
                if delete_node(g, label) == g2:
                    p += r * model.deletion.node_prob(g, label)
    return p


def successors(model: NecModel, g: LabeledGraph) -> dict[LabeledGraph, float]:
    """Aggregated one-step law from g as a sparse {graph: probability} row."""
    out: dict[LabeledGraph, float] = {}
    s = model.policy.s(g)
    if s > 0:
        out[g] = s
    t = model.policy.t(g)
    if t > 0 and g.n < model.n_max:
        for pattern in range(1 << g.n):
            p = model.addition.pattern_prob(g, pattern)
            if p > 0:
                g2 = add_node(g, pattern)
                out[g2] = out.get(g2, 0.0) + t * p
    r = model.policy.r(g)
    if r > 0 and g.n > 1:
        for label in range(1, g.n + 1):
            p = model.deletion.node_prob(g, label)
            if p > 0:
                g2 = delete_node(g, label)
                out[g2] = out.get(g2, 0.0) + r * p
    return out


def build_kernel(model: NecModel, space: StateSpace | None = None) -> sparse.csr_matrix:
    """Full one-step transition matrix over the enumerated state space."""
    if space is None:
        space = enumerate_state_space(model.n_max)
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    for g in space:
        row = successors(model, g)
        for g2, p in sorted(row.items(), key=lambda kv: space.index(kv[0])):
            indices.append(space.index(g2))
            data.append(p)
        indptr.append(len(indices))
    m = len(space)
    return sparse.csr_matrix(
        (np.array(data), np.array(indices), np.array(indptr)), shape=(m, m)
    )


def stationary_graph_distribution(
    model: NecModel,
    *,
    tol: float = 1e-12,
    max_iter: int = 1_000_000,
    initial: np.ndarray | None = None,
) -> StationaryDistribution:
    """Stationary law over the full graph space, by power iteration.

    Iterates pi <- pi P until the L1 residual ||pi P - pi|| drops below
    ``tol``. The kernel row for every graph keeps positive mass on itself
    (s > 0), so the chain is aperiodic and the iteration converges to the
    unique stationary vector.
    """
    space = enumerate_state_space(model.n_max)
    kernel_t = build_kernel(model, space).T.tocsr()
    m = kernel_t.shape[0]
    if initial is None:
        pi = np.full(m, 1.0 / m)
    else:
        pi = np.asarray(initial, dtype=float)
        if pi.shape != (m,) or pi.min() < 0 or pi.sum() <= 0:
            raise ValueError("initial vector must be a nonnegative length-|S| vector")
        pi = pi / pi.sum()
    residual = np.inf
    for _ in range(max_iter):
        nxt = kernel_t @ pi
        nxt /= nxt.sum()
        residual = float(np.abs(nxt - pi).sum())
        pi = nxt
        if residual < tol:
            return StationaryDistribution(pi, over="graphs", provenance="numeric")
    raise NumericError(
        f"power iteration failed to reach residual {tol} within {max_iter} "
        f"iterations (last residual {residual:.3e})"
    )


def empirical_graph_distribution(
    states: Iterable[LabeledGraph] | GraphChain, space: StateSpace
) -> StationaryDistribution:
    """Visit frequencies of each graph in the state space."""
    if isinstance(states, GraphChain):
        states = states.states
    counts = np.zeros(len(space))
    total = 0
    for g in states:
        counts[space.index(g)] += 1
        total += 1
    if total == 0:
        raise ValueError("no states supplied")
    return StationaryDistribution(counts / total, over="graphs", provenance="empirical")


def empirical_node_distribution(
    states: Iterable[LabeledGraph] | GraphChain, n_max: int
) -> StationaryDistribution:
    """Visit frequencies of each node count 1..n_max."""
    if isinstance(states, GraphChain):
        states = states.states
    counts = np.zeros(n_max)
    total = 0
    for g in states:
        counts[g.n - 1] += 1
        total += 1
    if total == 0:
        raise ValueError("no states supplied")
    return StationaryDistribution(
        counts / total, over="node-counts", provenance="empirical"
    )
