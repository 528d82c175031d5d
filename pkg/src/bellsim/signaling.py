"""Setting-dependence of marginals, local-polytope membership, and the
local-parts feasibility program.

The central operation asks: given a tripartite target behavior and an
uncoordinated pair (canonically Bob-Charlie), does any no-signaling
distribution Q match the target's Alice-Bob and Alice-Charlie marginals
for every setting while keeping the Bob-Charlie marginal independent of
Alice's setting and inside the local polytope?  Infeasibility means
every model with a local Bob-Charlie part must let that marginal depend
on Alice's setting, which is a superluminal channel once the spacetime
layout provides a point D inside both receiver lightcones.

All linear programs are solved with scipy's HiGHS backend, and every
witness or certificate is re-checked directly against the constraint
system, so solver tolerances never carry a conclusion on their own.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .hvmodels import Geometry, constructive_off_behavior
from .quantum import Behavior, behavior_to_json, marginal
from .spacetime import find_point_d

#: Residual tolerance for re-checking witnesses and certificates.
RECHECK_TOL = 1e-9

MAX_MEMBER_SETTINGS = 4
MAX_FEASIBILITY_SETTINGS = 3


def signaling_distance(b: Behavior, receivers: tuple[int, ...] | list[int]) -> float:
    """Largest total-variation shift of the receivers' marginal.

    Maximized over pairs of remote setting tuples and over the
    receivers' own settings (per-setting maximum, not average); zero
    means the receivers cannot detect remote settings at all.
    """
    family = marginal(b, tuple(receivers))
    keys = sorted(family.keys())
    n_rec = len(tuple(receivers))
    outcome_axes = tuple(range(n_rec, 2 * n_rec))
    worst = 0.0
    for k1, k2 in itertools.combinations(keys, 2):
        diff = np.abs(family[k1].table - family[k2].table)
        tv = 0.5 * diff.sum(axis=outcome_axes)
        worst = max(worst, float(tv.max()))
    return worst


def _local_vertices(ma: int, mb: int) -> np.ndarray:
    """Deterministic-strategy behaviors, one row per (Alice, Bob) assignment.

    Assignments map each setting to an outcome index (0 is +1); rows are
    flattened tables over (x, y, a, b) in C order.
    """
    dim = ma * mb * 4
    rows = []
    for bits_a in itertools.product((0, 1), repeat=ma):
        for bits_b in itertools.product((0, 1), repeat=mb):
            v = np.zeros((ma, mb, 2, 2))
            for x in range(ma):
                for y in range(mb):
                    v[x, y, bits_a[x], bits_b[y]] = 1.0
            rows.append(v.reshape(dim))
    return np.array(rows)


@dataclass(frozen=True, eq=False)
class SeparatingInequality:
    """Bell-type functional h with local bound: h . b <= bound for every
    local behavior, while the tested behavior reaches value."""

    h: np.ndarray  # shape (ma, mb, 2, 2)
    bound: float
    value: float

    @property
    def margin(self) -> float:
        return self.value - self.bound

    def inequality_string(self) -> str:
        terms = []
        ma, mb = self.h.shape[:2]
        for x, y, a, b in itertools.product(range(ma), range(mb), (0, 1), (0, 1)):
            coeff = self.h[x, y, a, b]
            if abs(coeff) > 1e-12:
                terms.append(f"{coeff:+.6f} P({1 - 2 * a:+d},{1 - 2 * b:+d}|{x},{y})")
            # zero coefficients are omitted
        lhs = " ".join(terms) if terms else "0"
        return f"{lhs} <= {self.bound:.6f} (local bound); behavior gives {self.value:.6f}"


@dataclass(frozen=True, eq=False)
class PolytopeResult:
    member: bool
    weights: np.ndarray | None
    certificate: SeparatingInequality | None


def local_polytope_member(bc: Behavior) -> PolytopeResult:
    """Decide membership in the local polytope by linear programming.

    Membership returns convex weights over the deterministic vertices;
    rejection returns a separating inequality found by the dual LP, with
    the local bound re-computed directly over all vertices.
    """
    if bc.parties != 2:
        raise ValueError(f"need a bipartite behavior, got {bc.parties} parties")
    ma, mb = bc.settings_per_party
    if max(ma, mb) > MAX_MEMBER_SETTINGS:
        raise ValueError(
            f"vertex enumeration limited to {MAX_MEMBER_SETTINGS} settings per side"
        )
    vertices = _local_vertices(ma, mb)
    n_v, dim = vertices.shape
    b_vec = bc.table.reshape(dim)
    a_eq = np.vstack([vertices.T, np.ones((1, n_v))])
    b_eq = np.concatenate([b_vec, [1.0]])
    res = linprog(np.zeros(n_v), A_eq=a_eq, b_eq=b_eq, bounds=(0, 1), method="highs")
    if res.status == 0:
        return PolytopeResult(member=True, weights=res.x, certificate=None)
    if res.status != 2:
        raise RuntimeError(f"membership LP failed with status {res.status}: {res.message}")
    # Separation: max h.b - t subject to h.v <= t for all vertices, |h| <= 1.
    c = np.concatenate([-b_vec, [1.0]])
    a_ub = np.hstack([vertices, -np.ones((n_v, 1))])
    sep = linprog(
        c,
        A_ub=a_ub,
        b_ub=np.zeros(n_v),
        bounds=[(-1, 1)] * dim + [(None, None)],
        method="highs",
    )
    if sep.status != 0:
        raise RuntimeError(f"separation LP failed with status {sep.status}: {sep.message}")
    h = sep.x[:dim]
    bound = float(np.max(vertices @ h))
    value = float(h @ b_vec)
    cert = SeparatingInequality(h=h.reshape(ma, mb, 2, 2), bound=bound, value=value)
    if cert.margin <= RECHECK_TOL:
        raise RuntimeError("separation LP produced no verifiable margin")
    return PolytopeResult(member=False, weights=None, certificate=cert)


def recheck_membership_witness(bc: Behavior, weights: np.ndarray) -> float:
    """Max residual of the convex-combination witness, checked directly."""
    vertices = _local_vertices(*bc.settings_per_party)
    resid = float(np.max(np.abs(vertices.T @ weights - bc.table.ravel())))
    resid = max(resid, abs(float(weights.sum()) - 1.0))
    resid = max(resid, float(max(0.0, -weights.min())))
    return resid


@dataclass(frozen=True, eq=False)
class FeasibilityProblem:
    """Equality system A z = b over z = [Q entries; strategy weights] >= 0.

    Q runs over (x, y, z, a, b, c) in C order for the permuted party
    order (spectator first); strategies enumerate deterministic outcome
    assignments for the uncoordinated pair.  Any feasible z also obeys
    z <= 1, which certificate re-checking relies on.
    """

    a_eq: np.ndarray
    b_eq: np.ndarray
    n_q: int
    strategies: tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]
    settings: tuple[int, int, int]

    def __post_init__(self) -> None:
        rows, cols = self.a_eq.shape
        if self.b_eq.shape != (rows,):
            raise ValueError("constraint matrix and rhs disagree on row count")
        if cols != self.n_q + len(self.strategies):
            raise ValueError("variable count does not match Q size plus strategies")
        if self.b_eq.min() < -1e-12 or self.b_eq.max() > 1.0 + 1e-12:
            raise ValueError("target marginal values must lie in [0, 1]")


@dataclass(frozen=True, eq=False)
class FarkasCertificate:
    """Infeasibility certificate y: y.b > 0 while (A^T y)_j <= 0.

    margin is re-checked as y.b - sum_j max(0, (A^T y)_j), which bounds
    y.(A z) - y.b away from zero for every z in [0, 1]^n, so a positive
    margin rules out all candidate distributions, solver-independent.
    """

    y: np.ndarray
    margin: float

    def inequality_string(self) -> str:
        return (
            f"certificate y with y.rhs = margin {self.margin:.6e} > 0 while "
            "y.A <= 0 componentwise: the marginal-matching and local-"
            "decomposition constraints are jointly unsatisfiable"
        )


@dataclass(frozen=True, eq=False)
class FeasibilityResult:
    feasible: bool
    witness: Behavior | None
    witness_weights: np.ndarray | None
    certificate: FarkasCertificate | None
    problem: FeasibilityProblem
    max_residual: float | None


def _pair_marginal_checked(target: Behavior, pair: tuple[int, int], what: str) -> np.ndarray:
    family = marginal(target, pair)
    tables = [family[k].table for k in sorted(family.keys())]
    for t in tables[1:]:
        if np.max(np.abs(t - tables[0])) > RECHECK_TOL:
            raise ValueError(
                f"target's {what} marginal depends on the remaining party's setting"
            )
    return tables[0]


def build_feasibility_problem(target: Behavior, off_pair: tuple[int, int]) -> FeasibilityProblem:
    """Constraint system for the local-parts question with ``off_pair`` cut.

    Parties are permuted so the spectator comes first.  Constraints, in
    row order: normalization of Q; no-signaling of Q (adjacent-setting
    differences per party); spectator-partner marginal matching for both
    partners; and the decomposition of the pair marginal into shared
    strategy weights, which enforces both its spectator-independence and
    its local-polytope membership.
    """
    if target.parties != 3:
        raise ValueError(f"need a tripartite behavior, got {target.parties} parties")
    off = tuple(sorted(int(i) for i in off_pair))
    if len(off) != 2 or not set(off) <= {0, 1, 2}:
        raise ValueError(f"off_pair must be two distinct parties, got {off_pair!r}")
    if max(target.settings_per_party) > MAX_FEASIBILITY_SETTINGS:
        raise ValueError(
            f"feasibility limited to {MAX_FEASIBILITY_SETTINGS} settings per party"
        )
    (spect,) = tuple(set(range(3)) - set(off))
    perm = (spect, off[0], off[1])
    axes = tuple(perm) + tuple(3 + q for q in perm)
    table = np.transpose(target.table, axes)
    spp = tuple(target.settings_per_party[q] for q in perm)
    permuted = Behavior(3, spp, np.ascontiguousarray(table))
    ma, mb, mc = spp

    t_ab = _pair_marginal_checked(permuted, (0, 1), "spectator-first-partner")
    t_ac = _pair_marginal_checked(permuted, (0, 2), "spectator-second-partner")

    q_shape = (ma, mb, mc, 2, 2, 2)
    n_q = int(np.prod(q_shape))
    strategies = tuple(
        (bits_b, bits_c)
        for bits_b in itertools.product((0, 1), repeat=mb)
        for bits_c in itertools.product((0, 1), repeat=mc)
    )
    n_w = len(strategies)

    def q_index(x: int, y: int, z: int, a: int, b: int, c: int) -> int:
        return int(np.ravel_multi_index((x, y, z, a, b, c), q_shape))

    rows: list[np.ndarray] = []
    rhs: list[float] = []

    def new_row() -> np.ndarray:
        return np.zeros(n_q + n_w)

    for x, y, z in itertools.product(range(ma), range(mb), range(mc)):
        row = new_row()
        for a, b, c in itertools.product((0, 1), repeat=3):
            row[q_index(x, y, z, a, b, c)] = 1.0
        rows.append(row)
        rhs.append(1.0)

    # No-signaling: summing out one party's outcome must not depend on its
    # setting; adjacent setting pairs generate all equalities.
    for x in range(ma - 1):
        for y, z, b, c in itertools.product(range(mb), range(mc), (0, 1), (0, 1)):
            row = new_row()
            for a in (0, 1):
                row[q_index(x, y, z, a, b, c)] += 1.0
                row[q_index(x + 1, y, z, a, b, c)] -= 1.0
            rows.append(row)
            rhs.append(0.0)
    for y in range(mb - 1):
        for x, z, a, c in itertools.product(range(ma), range(mc), (0, 1), (0, 1)):
            row = new_row()
            for b in (0, 1):
                row[q_index(x, y, z, a, b, c)] += 1.0
                row[q_index(x, y + 1, z, a, b, c)] -= 1.0
            rows.append(row)
            rhs.append(0.0)
    for z in range(mc - 1):
        for x, y, a, b in itertools.product(range(ma), range(mb), (0, 1), (0, 1)):
            row = new_row()
            for c in (0, 1):
                row[q_index(x, y, z, a, b, c)] += 1.0
                row[q_index(x, y, z + 1, a, b, c)] -= 1.0
            rows.append(row)
            rhs.append(0.0)

    for x, y, z, a, b in itertools.product(range(ma), range(mb), range(mc), (0, 1), (0, 1)):
        row = new_row()
        for c in (0, 1):
            row[q_index(x, y, z, a, b, c)] = 1.0
        rows.append(row)
        rhs.append(float(t_ab[x, y, a, b]))

    for x, y, z, a, c in itertools.product(range(ma), range(mb), range(mc), (0, 1), (0, 1)):
        row = new_row()
        for b in (0, 1):
            row[q_index(x, y, z, a, b, c)] = 1.0
        rows.append(row)
        rhs.append(float(t_ac[x, z, a, c]))

    for x, y, z, b, c in itertools.product(range(ma), range(mb), range(mc), (0, 1), (0, 1)):
        row = new_row()
        for a in (0, 1):
            row[q_index(x, y, z, a, b, c)] = 1.0
        for k, (bits_b, bits_c) in enumerate(strategies):
            if bits_b[y] == b and bits_c[z] == c:
                row[n_q + k] -= 1.0
        rows.append(row)
        rhs.append(0.0)

    return FeasibilityProblem(
        a_eq=np.array(rows),
        b_eq=np.array(rhs),
        n_q=n_q,
        strategies=strategies,
        settings=spp,
    )


def recheck_feasibility_witness(problem: FeasibilityProblem, z: np.ndarray) -> float:
    resid = float(np.max(np.abs(problem.a_eq @ z - problem.b_eq)))
    resid = max(resid, float(max(0.0, -z.min())))
    resid = max(resid, float(max(0.0, z.max() - 1.0)))
    return resid


def recheck_farkas_certificate(problem: FeasibilityProblem, y: np.ndarray) -> float:
    """Contradiction margin valid for all z in [0,1]^n; > 0 proves infeasibility."""
    aty = problem.a_eq.T @ y
    return float(y @ problem.b_eq - np.clip(aty, 0.0, None).sum())


def localparts_feasible(target: Behavior, off_pair: tuple[int, int]) -> FeasibilityResult:
    """Solve the local-parts feasibility program.

    Feasible instances return the witness distribution (in the original
    party order) plus the strategy weights; infeasible ones return a
    Farkas certificate from the explicit dual program.  Both outcomes
    carry independently re-checked residuals or margins.
    """
    problem = build_feasibility_problem(target, off_pair)
    off = tuple(sorted(int(i) for i in off_pair))
    (spect,) = tuple(set(range(3)) - set(off))
    perm = (spect, off[0], off[1])
    res = linprog(
        np.zeros(problem.a_eq.shape[1]),
        A_eq=problem.a_eq,
        b_eq=problem.b_eq,
        bounds=(0, 1),
        method="highs",
    )
    if res.status == 0:
        z = np.clip(res.x, 0.0, None)
        resid = recheck_feasibility_witness(problem, res.x)
        if resid > RECHECK_TOL:
            raise RuntimeError(f"witness failed re-checking with residual {resid:.3e}")
        ma, mb, mc = problem.settings
        q = z[: problem.n_q].reshape(ma, mb, mc, 2, 2, 2)
        # Solver roundoff can leave conditionals a few ulp off 1.
        q = q / q.sum(axis=(3, 4, 5), keepdims=True)
        inverse = tuple(np.argsort(perm)) + tuple(3 + int(i) for i in np.argsort(perm))
        witness = Behavior(
            3,
            target.settings_per_party,
            np.ascontiguousarray(np.transpose(q, inverse)),
        )
        return FeasibilityResult(
            feasible=True,
            witness=witness,
            witness_weights=z[problem.n_q :],
            certificate=None,
            problem=problem,
            max_residual=resid,
        )
    if res.status != 2:
        raise RuntimeError(f"feasibility LP failed with status {res.status}: {res.message}")
    dual = linprog(
        -problem.b_eq,
        A_ub=problem.a_eq.T,
        b_ub=np.zeros(problem.a_eq.shape[1]),
        bounds=(-1, 1),
        method="highs",
    )
    if dual.status != 0:
        raise RuntimeError(f"dual LP failed with status {dual.status}: {dual.message}")
    margin = recheck_farkas_certificate(problem, dual.x)
    if margin <= RECHECK_TOL:
        raise RuntimeError(f"certificate failed re-checking with margin {margin:.3e}")
    return FeasibilityResult(
        feasible=False,
        witness=None,
        witness_weights=None,
        certificate=FarkasCertificate(y=dual.x, margin=margin),
        problem=problem,
        max_residual=None,
    )


def infeasibility_slack(target: Behavior, off_pair: tuple[int, int]) -> float:
    """Smallest max-norm constraint violation over candidate distributions.

    Zero (up to solver tolerance) exactly when the instance is feasible;
    positive values rank how strongly an instance resists a local-parts
    account, which guides the settings search.
    """
    problem = build_feasibility_problem(target, off_pair)
    n = problem.a_eq.shape[1]
    # Variables [z; t]: minimize t with -t <= (A z - b)_i <= t.
    c = np.zeros(n + 1)
    c[-1] = 1.0
    ones = np.ones((problem.a_eq.shape[0], 1))
    a_ub = np.vstack(
        [np.hstack([problem.a_eq, -ones]), np.hstack([-problem.a_eq, -ones])]
    )
    b_ub = np.concatenate([problem.b_eq, -problem.b_eq])
    res = linprog(
        c,
        A_ub=a_ub,
        b_ub=b_ub,
        bounds=[(0, 1)] * n + [(0, None)],
        method="highs",
    )
    if res.status != 0:
        raise RuntimeError(f"slack LP failed with status {res.status}: {res.message}")
    return float(res.x[-1])


def pr_box_behavior() -> Behavior:
    """The PR box: a xor b = x and y in bit form, uniform marginals."""
    table = np.zeros((2, 2, 2, 2))
    for x, y, a, b in itertools.product((0, 1), repeat=4):
        if a ^ b == (x & y):
            table[x, y, a, b] = 0.5
    return Behavior(2, (2, 2), table)


def double_pr_target() -> Behavior:
    """Tripartite target whose AB and AC marginals are both PR boxes.

    Alice's bit is uniform; b = a xor (x and y), c = a xor (x and z).
    PR-box monogamy makes the local-parts program infeasible here, so
    this target exercises the certificate path.  The behavior itself
    signals (its BC marginal depends on x), which is allowed: only its
    AB and AC marginals enter the feasibility constraints.
    """
    table = np.zeros((2, 2, 2, 2, 2, 2))
    for x, y, z, a in itertools.product((0, 1), repeat=4):
        b = a ^ (x & y)
        c = a ^ (x & z)
        table[x, y, z, a, b, c] = 0.5
    return Behavior(3, (2, 2, 2), table)


def ftl_protocol_report(
    target: Behavior,
    off_pair: tuple[int, int],
    geometry: Geometry,
    settings: object = None,
) -> dict:
    """Compose the signaling channel with the point-D geometry.

    The channel strength is the constructive OFF-pair model's marginal
    shift at the given target; the timing advantage comes from the
    point-D construction on the geometry (spectator device as A).  The
    bias field is the per-use total-variation bias, with no
    coding-theorem claim attached.
    """
    off = tuple(sorted(int(i) for i in off_pair))
    (spect,) = tuple(set(range(3)) - set(off))
    if geometry.parties != 3:
        raise ValueError("geometry must have three devices")
    point = find_point_d(
        geometry.events[spect], geometry.events[off[0]], geometry.events[off[1]], c=geometry.c
    )
    if point is None:
        raise ValueError("geometry admits no point D; no timing advantage exists")
    d, advantage = point

    model = constructive_off_behavior(target, off)
    sd = signaling_distance(model, off)
    alone = {
        str(off[0]): signaling_distance(model, (off[0],)),
        str(off[1]): signaling_distance(model, (off[1],)),
    }
    feas = localparts_feasible(target, off)

    report: dict = {
        "feasible": feas.feasible,
        "signaling_distance": sd,
        "bias": sd / 2.0,
        "channel": "binary" if sd > RECHECK_TOL else "none",
        "settings": settings,
        "advantage_seconds": advantage,
        "point_d": {"t": d.t, "x": d.x, "y": d.y},
        "off_pair": list(off),
        "spectator": spect,
        "receiver_alone_distances": alone,
        "note": (
            "the marginal shift is visible only in the joint outcomes of the "
            "uncoordinated pair; neither receiver alone sees it"
        ),
    }
    if feas.feasible:
        report["witness"] = behavior_to_json(feas.witness)
        report["witness_max_residual"] = feas.max_residual
    else:
        report["certificate"] = {
            "y": feas.certificate.y.tolist(),
            "margin": feas.certificate.margin,
            "inequality": feas.certificate.inequality_string(),
        }
    return report


@dataclass(frozen=True, eq=False)
class SearchReport:
    """Outcome of the infeasibility settings sweep."""

    outcome: str  # "infeasible_found" or "all_feasible"
    instances_checked: int
    max_slack: float
    best_settings: tuple[tuple[float, ...], ...]
    best_state: str
    certificate_margin: float | None
    witness_residual: float | None


def _ghz_family_state(phi: float):
    from .quantum import state_from_amplitudes

    amps = np.zeros(8)
    amps[0] = math.cos(phi)
    amps[7] = math.sin(phi)
    return state_from_amplitudes(amps)


def search_infeasible_instance(
    grid: int = 8,
    refine_rounds: int = 2,
    family_phis: tuple[float, ...] = (
        math.pi / 16,
        math.pi / 8,
        3 * math.pi / 16,
        5 * math.pi / 16,
        3 * math.pi / 8,
        7 * math.pi / 16,
    ),
    slack_threshold: float = 1e-7,
) -> SearchReport:
    """Sweep measurement settings (and a weighted state family) for an
    infeasible local-parts instance with the pair (1, 2) cut.

    Stage 1 scans a symmetric two-setting ansatz (Bob and Charlie share
    angles) on a coarse grid; stage 2 refines all six angles around the
    best candidates by coordinate descent on the infeasibility slack;
    stage 3 repeats the scan over amplitude-weighted superpositions
    cos(phi)|000> + sin(phi)|111>.  Every instance is scored by
    infeasibility_slack; any instance crossing the threshold is solved
    for a certificate and re-checked.  The honest outcome is reported
    either way: feasible-everywhere is a result, not a failure.
    """
    from .quantum import born_behavior, make_ghz3

    axis = [k * math.pi / grid for k in range(grid)]
    checked = 0
    best_slack = -1.0
    best_angles: tuple[tuple[float, ...], ...] = ((0.0, 0.0), (0.0, 0.0), (0.0, 0.0))
    best_state = "ghz3"

    def score(state, angles) -> float:
        nonlocal checked, best_slack, best_angles, best_state
        target = born_behavior(state, angles)
        slack = infeasibility_slack(target, (1, 2))
        checked += 1
        if slack > best_slack:
            best_slack = slack
            best_angles = tuple(tuple(a) for a in angles)
            best_state = state_label
        return slack

    state_label = "ghz3"
    ghz = make_ghz3()
    candidates: list[tuple[float, tuple[tuple[float, ...], ...]]] = []
    for a1, a2, b1, b2 in itertools.product(axis, repeat=4):
        if a1 >= a2:
            # The ansatz is symmetric under swapping Alice's settings.
            continue
        angles = ((a1, a2), (b1, b2), (b1, b2))
        slack = score(ghz, angles)
        candidates.append((slack, angles))
        if slack > slack_threshold:
            return _conclude(checked, slack, angles, "ghz3")

    candidates.sort(key=lambda item: item[0], reverse=True)
    step = math.pi / (2 * grid)
    for _, start in candidates[:4]:
        current = [list(a) for a in start]
        for _ in range(refine_rounds):
            for party, k in itertools.product(range(3), range(2)):
                base = current[party][k]
                for delta in (-step, step, -step / 2, step / 2):
                    current[party][k] = base + delta
                    slack = score(ghz, tuple(tuple(a) for a in current))
                    if slack > slack_threshold:
                        return _conclude(
                            checked, slack, tuple(tuple(a) for a in current), "ghz3"
                        )
                    if slack <= best_slack:
                        current[party][k] = base

    coarse = [k * math.pi / 4 for k in range(4)]
    for phi in family_phis:
        state_label = f"weighted_ghz(phi={phi:.6f})"
        state = _ghz_family_state(phi)
        for a1, a2, b1 in itertools.product(coarse, repeat=3):
            if a1 >= a2:
                continue
            angles = ((a1, a2), (b1, b1 + math.pi / 4), (b1, b1 + math.pi / 4))
            slack = score(state, angles)
            if slack > slack_threshold:
                return _conclude(checked, slack, angles, state_label)

    return SearchReport(
        outcome="all_feasible",
        instances_checked=checked,
        max_slack=best_slack,
        best_settings=best_angles,
        best_state=best_state,
        certificate_margin=None,
        witness_residual=None,
    )


def _conclude(checked, slack, angles, label) -> SearchReport:
    from .quantum import born_behavior, make_ghz3

    state = make_ghz3() if label == "ghz3" else _ghz_family_state(
        float(label.split("=")[1].rstrip(")"))
    )
    result = localparts_feasible(born_behavior(state, angles), (1, 2))
    if result.feasible:
        # The slack LP flagged a borderline instance the exact program
        # accepts; treat it as feasible rather than over-claim.
        return SearchReport(
            outcome="all_feasible",
            instances_checked=checked,
            max_slack=slack,
            best_settings=angles,
            best_state=label,
            certificate_margin=None,
            witness_residual=result.max_residual,
        )
    return SearchReport(
        outcome="infeasible_found",
        instances_checked=checked,
        max_slack=slack,
        best_settings=angles,
        best_state=label,
        certificate_margin=result.certificate.margin,
        witness_residual=None,
    )
