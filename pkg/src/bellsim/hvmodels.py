"""Hidden-influence model layer.

A ModelConfig plus a Geometry decides, per device pair, whether nonlocal
coordination is ON or OFF: the finite-speed rule cuts a pair when the
devices outrun an influence at speed v, the multisimultaneity rule when
the pair is in before-before timing, and mixtures switch between the
quantum (all ON) and local (all OFF) maps per trial.  effective_behavior
turns the map into a probability table: ON parts reproduce the target,
OFF parts are replaced by a declared local surrogate.  sample_runs draws
reproducible outcome records from that table.

The localized surrogate choices (documented per function) are declared
conventions, not claims of uniqueness; surrogate-independent conclusions
come from the feasibility analysis in the signaling module.
"""

from __future__ import annotations

import concurrent.futures
import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .quantum import Behavior, marginal, no_signaling_defect
from .spacetime import (
    SPEED_OF_LIGHT,
    Boost,
    Event,
    TimingScenario,
    before_before,
    finite_speed_cut,
)

MODEL_KINDS = ("quantum", "local", "finite_speed", "multisim", "mixture")

#: Trials per sampling chunk; part of the determinism contract.
CHUNK = 2**16

ON = "ON"
OFF = "OFF"


class UnsupportedConfigurationError(ValueError):
    """The coordination pattern has no expressible surrogate behavior."""


@dataclass(frozen=True)
class Geometry:
    """Device arrival events and rest-frame boosts, one per party.

    critical_distance optionally records the layout's threshold
    separation; it is carried for reporting and not used by the
    coordination rules, which work from the events and boosts.
    """

    events: tuple[Event, ...]
    boosts: tuple[Boost, ...]
    critical_distance: float | None = None
    c: float = SPEED_OF_LIGHT

    def __post_init__(self) -> None:
        events = tuple(self.events)
        boosts = tuple(self.boosts)
        if len(events) < 2:
            raise ValueError("geometry needs at least two devices")
        if len(events) != len(boosts):
            raise ValueError(
                f"{len(events)} events but {len(boosts)} boosts; counts must match"
            )
        if self.critical_distance is not None and not self.critical_distance > 0:
            raise ValueError(f"critical_distance must be > 0, got {self.critical_distance!r}")
        object.__setattr__(self, "events", events)
        object.__setattr__(self, "boosts", boosts)

    @property
    def parties(self) -> int:
        return len(self.events)

    def pairs(self) -> tuple[tuple[int, int], ...]:
        return tuple(itertools.combinations(range(self.parties), 2))

    def distance(self, i: int, j: int) -> float:
        return math.hypot(
            self.events[j].x - self.events[i].x, self.events[j].y - self.events[i].y
        )

    def arrival_dt(self, i: int, j: int) -> float:
        return abs(self.events[j].t - self.events[i].t)

    def recession_speed(self, i: int, j: int) -> float:
        """Pair recession speed feeding the before-before criterion.

        Each device's speed away from the other is its x velocity
        projected on the line of sight; the pair value is the smaller of
        the two, floored at zero, so a pair counts as receding only when
        both members are.  With this projection the criterion matches
        the device-frame time ordering exactly, y offsets included.
        """
        dist = self.distance(i, j)
        if dist == 0.0:
            return 0.0
        toward_j = (self.events[j].x - self.events[i].x) / dist
        w_i = -self.boosts[i].beta * self.c * toward_j
        w_j = self.boosts[j].beta * self.c * toward_j
        return min(max(0.0, w_i), max(0.0, w_j))


@dataclass(frozen=True)
class ModelConfig:
    """Tagged hidden-influence model description.

    kind "finite_speed" needs v (influence speed in the preferred frame,
    taken to be the lab frame); "mixture" needs p plus a switching
    schedule ("coin" per-trial or "block" with block_length).  Other
    kinds take no parameters.
    """

    kind: str
    v: float | None = None
    p: float | None = None
    schedule: str = "coin"
    block_length: int = 1

    def __post_init__(self) -> None:
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}; choose from {MODEL_KINDS}")
        if self.kind == "finite_speed":
            if self.v is None or not self.v > 0:
                raise ValueError(f"finite_speed needs v > 0, got {self.v!r}")
        elif self.v is not None:
            raise ValueError(f"model kind {self.kind!r} takes no v")
        if self.kind == "mixture":
            if self.p is None or not 0.0 <= self.p <= 1.0:
                raise ValueError(f"mixture needs p in [0, 1], got {self.p!r}")
            if self.schedule not in ("coin", "block"):
                raise ValueError(f"schedule must be 'coin' or 'block', got {self.schedule!r}")
            if self.schedule == "block" and self.block_length < 1:
                raise ValueError(f"block_length must be >= 1, got {self.block_length}")
        elif self.p is not None:
            raise ValueError(f"model kind {self.kind!r} takes no p")


@dataclass(frozen=True)
class RunRecord:
    """One sampled trial: settings, outcomes, and the coordination in effect."""

    trial: int
    settings: tuple[int, ...]
    outcomes: tuple[int, ...]
    coordination: dict[tuple[int, int], str] = field(compare=True)

    def __post_init__(self) -> None:
        if any(o not in (-1, 1) for o in self.outcomes):
            raise ValueError(f"outcomes must be +1/-1, got {self.outcomes!r}")


def coordination_map(
    model: ModelConfig, g: Geometry, mixture_branch: str = "nonlocal"
) -> dict[tuple[int, int], str]:
    """ON/OFF state per device pair under the model's rule.

    Mixtures have no single static map; ``mixture_branch`` selects which
    branch ("nonlocal" = quantum, "local") to report, and sample_runs
    applies the per-trial switching schedule itself.
    """
    result: dict[tuple[int, int], str] = {}
    for i, j in g.pairs():
        if model.kind == "quantum":
            state = ON
        elif model.kind == "local":
            state = OFF
        elif model.kind == "mixture":
            if mixture_branch not in ("nonlocal", "local"):
                raise ValueError(f"mixture_branch must be 'nonlocal' or 'local', got {mixture_branch!r}")
            state = ON if mixture_branch == "nonlocal" else OFF
        else:
            L = g.distance(i, j)
            if L == 0.0:
                # Coincident devices can never be separated by timing.
                state = ON
            elif model.kind == "finite_speed":
                s = TimingScenario(L=L, dt=g.arrival_dt(i, j), v_bb=0.0, v=model.v, c=g.c)
                state = OFF if finite_speed_cut(s) else ON
            else:  # multisim; v is unused by the criterion, any positive works
                s = TimingScenario(
                    L=L, dt=g.arrival_dt(i, j), v_bb=g.recession_speed(i, j), v=g.c, c=g.c
                )
                state = OFF if before_before(s) else ON
        result[(i, j)] = state
    return result


_SETTING_LETTERS = "STUV"
_OUTCOME_LETTERS = "abcd"


def _marginal_table(b: Behavior, subset: tuple[int, ...]) -> np.ndarray:
    """Subset marginal at remote settings fixed to 0 (b must be no-signaling)."""
    family = marginal(b, subset)
    key = (0,) * (b.parties - len(subset))
    return family[key].table


def _subscript(subset: tuple[int, ...]) -> str:
    return "".join(_SETTING_LETTERS[q] for q in subset) + "".join(
        _OUTCOME_LETTERS[q] for q in subset
    )


def _product_of_components(target: Behavior, components: list[tuple[int, ...]]) -> np.ndarray:
    tables = [_marginal_table(target, comp) for comp in components]
    out = _subscript(tuple(range(target.parties)))
    expr = ",".join(_subscript(comp) for comp in components) + "->" + out
    return np.einsum(expr, *tables)


def _one_off_pair_tripartite(target: Behavior, off: tuple[int, int]) -> np.ndarray:
    """Joint table for a tripartite target with exactly one pair OFF.

    The spectator k joins its lower-indexed OFF partner through their
    exact pairwise marginal; the remaining party is drawn from its
    conditional given the spectator's outcome.  Both marginals that
    contain k are then exact; the OFF pair's correlation is mediated by
    k's outcome only, hence local.
    """
    (k,) = tuple(set(range(3)) - set(off))
    partner, other = off
    kp = tuple(sorted((k, partner)))
    ko = tuple(sorted((k, other)))
    joint_kp = _marginal_table(target, kp)
    joint_ko = _marginal_table(target, ko)
    p_k = _marginal_table(target, (k,))
    # Broadcast P(a_k | x_k) into joint_ko's axes to divide it out.
    pos = ko.index(k)
    shape = [1, 1, 1, 1]
    shape[pos] = p_k.shape[0]
    shape[2 + pos] = 2
    p_k_exp = p_k.reshape(shape)
    safe = np.where(p_k_exp > 0, p_k_exp, 1.0)
    # Outcomes with zero spectator probability never occur; any
    # normalized filler row keeps the table a valid distribution.
    cond = np.where(p_k_exp > 0, joint_ko / safe, 0.5)
    expr = f"{_subscript(kp)},{_subscript(ko)}->{_subscript((0, 1, 2))}"
    return np.einsum(expr, joint_kp, cond)


def constructive_off_behavior(target: Behavior, off_pair: tuple[int, int]) -> Behavior:
    """Observable statistics of the explicit model with one pair cut.

    This is the spectator-mediated construction used when exactly one
    pair of a tripartite target loses coordination: both marginals that
    contain the spectator stay exact, and the cut pair's joint outcomes
    are correlated only through the spectator's outcome.  Exposed so the
    signaling layer can quantify the marginal shift this model displays.
    """
    if target.parties != 3:
        raise ValueError(f"need a tripartite behavior, got {target.parties} parties")
    off = tuple(sorted(int(i) for i in off_pair))
    if len(set(off)) != 2 or not set(off) <= {0, 1, 2}:
        raise ValueError(f"off_pair must be two distinct parties, got {off_pair!r}")
    table = _one_off_pair_tripartite(_validated(target), off)
    return Behavior(3, target.settings_per_party, table)


def _components_of_on_graph(parties: int, cmap: dict[tuple[int, int], str]) -> list[tuple[int, ...]]:
    adj: dict[int, set[int]] = {i: set() for i in range(parties)}
    for (i, j), state in cmap.items():
        if state == ON:
            adj[i].add(j)
            adj[j].add(i)
    seen: set[int] = set()
    components: list[tuple[int, ...]] = []
    for start in range(parties):
        if start in seen:
            continue
        stack, comp = [start], set()
        while stack:
            q = stack.pop()
            if q in comp:
                continue
            comp.add(q)
            stack.extend(adj[q] - comp)
        seen |= comp
        components.append(tuple(sorted(comp)))
    return components


def effective_behavior(model: ModelConfig, g: Geometry, target: Behavior) -> Behavior:
    """The model's observable statistics for the given geometry and target.

    All pairs ON returns the target unchanged.  A pattern that splits
    the parties into components (every within-component pair ON, every
    cross pair OFF) yields the product of the target's component
    marginals.  A tripartite pattern with exactly one pair OFF uses the
    spectator-mediated construction.  Mixtures return the p-weighted
    convex combination of the local (all OFF) and quantum branches.
    Anything else raises UnsupportedConfigurationError.
    """
    if g.parties != target.parties:
        raise ValueError(
            f"geometry has {g.parties} devices but target has {target.parties} parties"
        )
    if model.kind == "mixture":
        local_table = _product_of_components(
            _validated(target), [(q,) for q in range(target.parties)]
        )
        mixed = (1.0 - model.p) * target.table + model.p * local_table
        return Behavior(target.parties, target.settings_per_party, mixed)

    cmap = coordination_map(model, g)
    if all(state == ON for state in cmap.values()):
        return target
    components = _components_of_on_graph(target.parties, cmap)
    by_component = {q: comp for comp in components for q in comp}
    is_partition_pattern = all(
        (cmap[(i, j)] == ON) == (by_component[i] is by_component[j])
        for i, j in g.pairs()
    )
    if is_partition_pattern:
        table = _product_of_components(_validated(target), components)
    elif target.parties == 3 and sum(1 for s in cmap.values() if s == OFF) == 1:
        off = next(pair for pair, s in cmap.items() if s == OFF)
        table = _one_off_pair_tripartite(_validated(target), off)
    else:
        raise UnsupportedConfigurationError(
            f"no expressible surrogate for coordination pattern {cmap!r}"
        )
    return Behavior(target.parties, target.settings_per_party, table)


def _validated(target: Behavior) -> Behavior:
    defect = no_signaling_defect(target)
    if defect > 1e-9:
        raise ValueError(
            f"target behavior signals (marginal defect {defect:.3e}); "
            "its party marginals are not well defined"
        )
    return target


@dataclass(frozen=True, eq=False)
class RunSample:
    """Columnar sample of RunRecords; behaves as a sequence of records."""

    parties: int
    pairs: tuple[tuple[int, int], ...]
    settings: np.ndarray  # (trials, parties) int16
    outcomes: np.ndarray  # (trials, parties) int8, values +1/-1
    map_nonlocal: tuple[str, ...]
    map_local: tuple[str, ...]
    branch_local: np.ndarray | None  # bool per trial for mixtures, else None

    def __len__(self) -> int:
        return self.settings.shape[0]

    def coordination_for(self, trial: int) -> dict[tuple[int, int], str]:
        states = self.map_nonlocal
        if self.branch_local is not None and bool(self.branch_local[trial]):
            states = self.map_local
        return dict(zip(self.pairs, states))

    def __getitem__(self, trial: int) -> RunRecord:
        if not 0 <= trial < len(self):
            raise IndexError(trial)
        return RunRecord(
            trial=trial,
            settings=tuple(int(s) for s in self.settings[trial]),
            outcomes=tuple(int(o) for o in self.outcomes[trial]),
            coordination=self.coordination_for(trial),
        )

    def __iter__(self) -> Iterator[RunRecord]:
        return (self[t] for t in range(len(self)))

    def empirical_correlator(self, settings: Sequence[int]) -> tuple[float, float, int]:
        """Mean outcome product, its standard error, and the trial count."""
        want = np.asarray(settings, dtype=self.settings.dtype)
        mask = np.all(self.settings == want, axis=1)
        count = int(mask.sum())
        if count == 0:
            return 0.0, math.inf, 0
        prods = np.prod(self.outcomes[mask], axis=1).astype(np.float64)
        mean = float(prods.mean())
        if count < 2:
            return mean, math.inf, count
        se = float(prods.std(ddof=1) / math.sqrt(count))
        return mean, se, count


def _block_local_mask(trial_indices: np.ndarray, p: float, block_length: int) -> np.ndarray:
    """Deterministic switching: block j is local iff the running tally of
    floor((j+1)p) advances, giving long-run local fraction p."""
    blocks = trial_indices // block_length
    return np.floor((blocks + 1) * p) - np.floor(blocks * p) >= 1.0


def _flat_tables(b: Behavior) -> np.ndarray:
    n_settings = int(np.prod(b.settings_per_party))
    return b.table.reshape(n_settings, 2**b.parties).cumsum(axis=1)


def sample_runs(
    model: ModelConfig,
    g: Geometry,
    target: Behavior,
    schedule: Sequence[Sequence[int]],
    trials: int,
    seed: int,
    workers: int = 1,
) -> RunSample:
    """Draw i.i.d. trials from the model's effective behavior.

    Trial t uses schedule[t % len(schedule)] as its setting tuple.  For
    mixtures, each trial is local with probability p (or per the block
    schedule) and quantum otherwise.  Output is deterministic given
    (seed, trials, schedule) and independent of ``workers``: trials are
    partitioned into fixed chunks of 2**16, chunk j draws from a child
    generator spawned as SeedSequence(seed, spawn_key=(j,)), and inside
    a chunk the branch coins are drawn before the outcome variates.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    sched = np.asarray([[int(s) for s in row] for row in schedule], dtype=np.int16)
    if sched.ndim != 2 or sched.shape[0] == 0 or sched.shape[1] != target.parties:
        raise ValueError("schedule must be a non-empty list of full setting tuples")
    for q in range(target.parties):
        if sched[:, q].min() < 0 or sched[:, q].max() >= target.settings_per_party[q]:
            raise ValueError(f"schedule settings out of range for party {q}")

    if model.kind == "mixture":
        behavior_quantum = target
        behavior_local = effective_behavior(ModelConfig(kind="local"), g, target)
    else:
        behavior_quantum = effective_behavior(model, g, target)
        behavior_local = None

    cum_quantum = _flat_tables(behavior_quantum)
    cum_local = _flat_tables(behavior_local) if behavior_local is not None else None
    strides = np.array(
        [int(np.prod(target.settings_per_party[q + 1 :])) for q in range(target.parties)],
        dtype=np.int64,
    )
    flat_sched = (sched.astype(np.int64) * strides).sum(axis=1)
    n_out = 2**target.parties
    bit_shift = np.arange(target.parties - 1, -1, -1, dtype=np.int64)

    def sample_chunk(j: int) -> tuple[np.ndarray, np.ndarray | None]:
        lo = j * CHUNK
        hi = min(trials, lo + CHUNK)
        idx = np.arange(lo, hi, dtype=np.int64)
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(j,)))
        local_mask: np.ndarray | None = None
        if model.kind == "mixture":
            if model.schedule == "coin":
                local_mask = rng.random(idx.size) < model.p
            else:
                local_mask = _block_local_mask(idx, model.p, model.block_length)
        u = rng.random(idx.size)
        sidx = flat_sched[idx % sched.shape[0]]
        codes = np.empty(idx.size, dtype=np.int64)
        groups = sidx if local_mask is None else sidx + local_mask * cum_quantum.shape[0]
        for gid in np.unique(groups):
            sel = groups == gid
            if local_mask is not None and gid >= cum_quantum.shape[0]:
                cum = cum_local[gid - cum_quantum.shape[0]]
            else:
                cum = cum_quantum[gid]
            codes[sel] = np.searchsorted(cum, u[sel], side="right")
        np.minimum(codes, n_out - 1, out=codes)
        return codes, local_mask

    n_chunks = (trials + CHUNK - 1) // CHUNK
    if workers > 1 and n_chunks > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(sample_chunk, range(n_chunks)))
    else:
        results = [sample_chunk(j) for j in range(n_chunks)]

    codes = np.concatenate([r[0] for r in results])
    branch_local = (
        np.concatenate([r[1] for r in results]) if model.kind == "mixture" else None
    )
    outcomes = (1 - 2 * ((codes[:, None] >> bit_shift) & 1)).astype(np.int8)
    all_trials = np.arange(trials, dtype=np.int64)
    settings = sched[all_trials % sched.shape[0]]

    pairs = g.pairs()
    if model.kind == "mixture":
        map_nl = tuple(ON for _ in pairs)
        map_loc = tuple(OFF for _ in pairs)
    else:
        cmap = coordination_map(model, g)
        map_nl = map_loc = tuple(cmap[p] for p in pairs)
    return RunSample(
        parties=target.parties,
        pairs=pairs,
        settings=settings,
        outcomes=outcomes,
        map_nonlocal=map_nl,
        map_local=map_loc,
        branch_local=branch_local,
    )


RUN_CSV_HEADER = "trial,x,y,z,a,b,c,coord_ab,coord_ac,coord_bc"

_PAIR_COLUMNS = ((0, 1), (0, 2), (1, 2))


def run_csv_lines(sample: RunSample) -> Iterator[str]:
    """Rows of the run CSV, header first; parties beyond the sample blank."""
    if sample.parties > 3:
        raise ValueError("run CSV covers at most three parties")
    yield RUN_CSV_HEADER
    pair_index = {pair: k for k, pair in enumerate(sample.pairs)}
    for t in range(len(sample)):
        states = sample.map_nonlocal
        if sample.branch_local is not None and bool(sample.branch_local[t]):
            states = sample.map_local
        cells = [str(t)]
        for q in range(3):
            cells.append(str(int(sample.settings[t, q])) if q < sample.parties else "")
        for q in range(3):
            cells.append(str(int(sample.outcomes[t, q])) if q < sample.parties else "")
        for pair in _PAIR_COLUMNS:
            k = pair_index.get(pair)
            cells.append(states[k] if k is not None else "")
        yield ",".join(cells)


def write_run_csv(sample: RunSample, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in run_csv_lines(sample):
            fh.write(line + "\n")
