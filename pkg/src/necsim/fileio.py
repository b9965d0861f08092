"""Plain-text file formats for chains, property chains and trajectories.

All formats are line-oriented with a versioned header and round-trip
exactly through their writer/loader pair:

* chain file:       "nec-chain v1 n_max=<k> seed=<s>", then one state per
                    line as ``n:HEX``, followed for non-initial states by
                    the scheme letter A|D|S and, for deletions, the deleted
                    label.
* property file:    "npc v1 f=<name>", then one integer symbol per line.
* trajectory file:  "ctmc v1", then lines ``n:HEX <holding_seconds>``.

Model parameters travel as JSON objects with keys n_max, q and either the
t/r/s arrays or a random_seed that generates them by uniform splits.
"""

from __future__ import annotations

import json
import re
from pathlib import Path

import numpy as np

from .ctmc import CtmcTrajectory
from .ernec import ErnecParams, random_ernec_params
from .errors import FormatVersionError, ParseError
from .graphs import parse_graph
from .kernel import GraphChain, TransitionScheme

_CHAIN_HEADER = re.compile(r"^nec-chain v(\d+) n_max=(\d+) seed=(\S+)$")
_NPC_HEADER = re.compile(r"^npc v(\d+) f=(\S+)$")
_CTMC_HEADER = re.compile(r"^ctmc v(\d+)$")


def write_chain(chain: GraphChain, path) -> None:
    seed = chain.seed if chain.seed is not None else "none"
    n_max = chain.n_max if chain.n_max is not None else max(g.n for g in chain.states)
    lines = [f"nec-chain v1 n_max={n_max} seed={seed}"]
    lines.append(chain.states[0].encode())
    for k in range(1, len(chain.states)):
        parts = [chain.states[k].encode()]
        if chain.schemes is not None:
            scheme = chain.schemes[k - 1]
            parts.append(scheme.value)
            if scheme is TransitionScheme.DELETION and chain.deleted_labels:
                label = chain.deleted_labels[k - 1]
                if label is not None:
                    parts.append(str(label))
        lines.append(" ".join(parts))
    Path(path).write_text("\n".join(lines) + "\n")


def load_chain(path) -> GraphChain:
    path = Path(path)
    text = path.read_text().splitlines()
    if not text:
        raise ParseError("empty chain file", path=path, line=1)
    m = _CHAIN_HEADER.match(text[0])
    if not m:
        if text[0].startswith("nec-chain"):
            raise FormatVersionError(
                f"unrecognized chain header {text[0]!r}", path=path, line=1
            )
        raise ParseError(f"missing chain header, got {text[0]!r}", path=path, line=1)
    if m.group(1) != "1":
        raise FormatVersionError(
            f"unsupported chain format version v{m.group(1)}", path=path, line=1
        )
    n_max = int(m.group(2))
    seed = None if m.group(3) == "none" else int(m.group(3))

    states = []
    schemes: list[TransitionScheme] = []
    labels: list[int | None] = []
    scheme_codes = {s.value: s for s in TransitionScheme}
    for lineno, raw in enumerate(text[1:], start=2):
        if not raw.strip():
            continue
        parts = raw.split()
        try:
            g = parse_graph(parts[0])
        except ValueError as exc:
            raise ParseError(str(exc), path=path, line=lineno) from None
        states.append(g)
        if len(states) == 1:
            if len(parts) > 1:
                raise ParseError(
                    "first state carries no scheme column", path=path, line=lineno
                )
            continue
        if len(parts) == 1:
            schemes.append(None)  # type: ignore[arg-type]
            labels.append(None)
            continue
        if parts[1] not in scheme_codes:
            raise ParseError(
                f"unknown scheme code {parts[1]!r}", path=path, line=lineno
            )
        scheme = scheme_codes[parts[1]]
        schemes.append(scheme)
        if scheme is TransitionScheme.DELETION and len(parts) >= 3:
            try:
                labels.append(int(parts[2]))
            except ValueError:
                raise ParseError(
                    f"bad deletion label {parts[2]!r}", path=path, line=lineno
                ) from None
        else:
            labels.append(None)
    if not states:
        raise ParseError("chain file has no states", path=path, line=len(text))
    has_schemes = any(s is not None for s in schemes)
    if has_schemes and any(s is None for s in schemes):
        raise ParseError(
            "scheme column must be present on all transitions or none",
            path=path,
            line=len(text),
        )
    try:
        return GraphChain(
            seed,
            states,
            schemes if has_schemes else None,
            labels if has_schemes else None,
            n_max=n_max,
        )
    except ValueError as exc:
        raise ParseError(str(exc), path=path, line=len(text)) from None


def write_npc(npc, path) -> None:
    lines = [f"npc v1 f={npc.f_name}"]
    lines.extend(str(y) for y in npc.symbols)
    Path(path).write_text("\n".join(lines) + "\n")


def load_npc(path):
    from .propchain import PropertyChainData

    path = Path(path)
    text = path.read_text().splitlines()
    if not text:
        raise ParseError("empty property-chain file", path=path, line=1)
    m = _NPC_HEADER.match(text[0])
    if not m:
        if text[0].startswith("npc"):
            raise FormatVersionError(
                f"unrecognized property-chain header {text[0]!r}", path=path, line=1
            )
        raise ParseError(
            f"missing property-chain header, got {text[0]!r}", path=path, line=1
        )
    if m.group(1) != "1":
        raise FormatVersionError(
            f"unsupported property-chain version v{m.group(1)}", path=path, line=1
        )
    symbols = []
    for lineno, raw in enumerate(text[1:], start=2):
        if not raw.strip():
            continue
        try:
            symbols.append(int(raw))
        except ValueError:
            raise ParseError(f"bad symbol {raw!r}", path=path, line=lineno) from None
    if not symbols:
        raise ParseError("property-chain file has no symbols", path=path, line=len(text))
    return PropertyChainData(symbols, m.group(2))


def write_trajectory(traj: CtmcTrajectory, path) -> None:
    lines = ["ctmc v1"]
    for g, h in zip(traj.states, traj.holding_times):
        lines.append(f"{g.encode()} {float(h)!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_trajectory(path) -> CtmcTrajectory:
    path = Path(path)
    text = path.read_text().splitlines()
    if not text:
        raise ParseError("empty trajectory file", path=path, line=1)
    m = _CTMC_HEADER.match(text[0])
    if not m:
        raise ParseError(
            f"missing trajectory header, got {text[0]!r}", path=path, line=1
        )
    if m.group(1) != "1":
        raise FormatVersionError(
            f"unsupported trajectory version v{m.group(1)}", path=path, line=1
        )
    states = []
    holds = []
    for lineno, raw in enumerate(text[1:], start=2):
        if not raw.strip():
            continue
        parts = raw.split()
        if len(parts) != 2:
            raise ParseError(
                f"trajectory line needs 'n:HEX seconds', got {raw!r}",
                path=path,
                line=lineno,
            )
        try:
            states.append(parse_graph(parts[0]))
            holds.append(float(parts[1]))
        except ValueError as exc:
            raise ParseError(str(exc), path=path, line=lineno) from None
    try:
        return CtmcTrajectory(
            states=states,
            holding_times=np.array(holds),
            seed=None,
            horizon=float(sum(holds)),
        )
    except ValueError as exc:
        raise ParseError(str(exc), path=path, line=len(text)) from None


def params_from_dict(data: dict) -> ErnecParams:
    """Build parameters from a config mapping.

    Accepts either explicit t/r/s arrays or a ``random_seed`` that draws
    them by the uniform-split scheme.
    """
    try:
        n_max = int(data["n_max"])
        q = float(data["q"])
    except KeyError as exc:
        raise ParseError(f"params need key {exc.args[0]!r}") from None
    if "random_seed" in data:
        return random_ernec_params(n_max, q, int(data["random_seed"]))
    try:
        return ErnecParams(
            n_max, q, tuple(data["t"]), tuple(data["r"]), tuple(data["s"])
        )
    except KeyError as exc:
        raise ParseError(
            f"params need either t/r/s arrays or random_seed (missing {exc.args[0]!r})"
        ) from None


def load_params(path) -> ErnecParams:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"bad JSON: {exc.msg}", path=path, line=exc.lineno) from None
    return params_from_dict(data)


def save_params(params: ErnecParams, path) -> None:
    Path(path).write_text(
        json.dumps(
            {
                "n_max": params.n_max,
                "q": params.q,
                "t": list(params.t),
                "r": list(params.r),
                "s": list(params.s),
            },
            indent=2,
        )
        + "\n"
    )
