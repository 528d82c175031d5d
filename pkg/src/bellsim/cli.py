"""Command-line front door.

Subcommands cover the timing criteria, CHSH and chained-inequality
numbers, model sampling to CSV, the marginal-shift signaling report, the
point-D construction, shipped presets, and scenario validation.  Every
result is a JSON document on stdout (and optionally files under --out);
failures put a machine-readable JSON object on stderr.  Exit codes:
0 success, 2 malformed scenario or usage, 1 other errors.  Outputs are
deterministic for a given scenario and seed, independent of --workers.
"""

from __future__ import annotations

import argparse
import itertools
import json
import math
import os
import sys

from . import inequality
from .hvmodels import (
    UnsupportedConfigurationError,
    coordination_map,
    effective_behavior,
    sample_runs,
    write_run_csv,
)
from .presets import PRESETS, get_preset
from .quantum import behavior_to_json, born_behavior, correlator, marginal
from .scenario import ScenarioError, load_scenario, parse_speed, scenario_from_doc
from .signaling import RECHECK_TOL, localparts_feasible, signaling_distance
from .spacetime import (
    SPEED_OF_LIGHT,
    Event,
    TimingScenario,
    before_before,
    equivalent_vbb,
    find_point_d,
    finite_speed_cut,
    in_future_lightcone,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_SCHEMA = 2


class CliError(Exception):
    """Carries an exit code and a JSON payload for stderr."""

    def __init__(self, code: int, payload: dict):
        self.code = code
        self.payload = payload
        super().__init__(payload.get("error", {}).get("message", "error"))


def _usage_error(message: str) -> CliError:
    return CliError(EXIT_SCHEMA, {"error": {"code": "usage", "message": message}})


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # noqa: D102 - argparse hook
        raise _usage_error(message)


def _json_text(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _emit(obj, out_dir: str | None, filename: str) -> None:
    text = _json_text(obj)
    sys.stdout.write(text)
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, filename), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _finite_or_none(value: float) -> float | None:
    return float(value) if math.isfinite(value) else None


def _pair_key(pair: tuple[int, int]) -> str:
    return f"{pair[0]}-{pair[1]}"


def _resolve_scenario(args) -> tuple:
    if getattr(args, "scenario", None):
        sc = load_scenario(args.scenario)
        pipeline = None
    elif getattr(args, "preset", None):
        preset = get_preset(args.preset)
        sc = scenario_from_doc(preset.doc)
        pipeline = preset.pipeline
    else:
        raise _usage_error("one of --scenario or --preset is required")
    doc = dict(sc.doc)
    if getattr(args, "trials", None) is not None:
        if args.trials < 1:
            raise _usage_error("--trials must be >= 1")
        doc = {**doc, "trials": args.trials}
        sc = scenario_from_doc(doc)
    if getattr(args, "seed", None) is not None:
        doc = {**doc, "seed": args.seed}
        sc = scenario_from_doc(doc)
    return sc, pipeline


def _timing_block(sc) -> dict:
    """Per-pair timing quantities for finite-speed and multisim models."""
    g = sc.geometry
    out = {}
    for i, j in g.pairs():
        entry = {
            "L": g.distance(i, j),
            "dt": g.arrival_dt(i, j),
            "recession_speed": g.recession_speed(i, j),
        }
        if g.distance(i, j) > 0:
            if sc.model.kind == "finite_speed":
                s = TimingScenario(
                    L=entry["L"], dt=entry["dt"], v_bb=0.0, v=sc.model.v, c=g.c
                )
                entry["v"] = sc.model.v
                entry["v_bb_equivalent"] = equivalent_vbb(sc.model.v, g.c)
                entry["finite_speed_cut"] = finite_speed_cut(s)
            elif sc.model.kind == "multisim":
                s = TimingScenario(
                    L=entry["L"],
                    dt=entry["dt"],
                    v_bb=entry["recession_speed"],
                    v=g.c,
                    c=g.c,
                )
                entry["before_before"] = before_before(s)
        out[_pair_key((i, j))] = entry
    return out


def cmd_timing(args) -> int:
    c = 1.0 if args.c_units else SPEED_OF_LIGHT
    v = parse_speed(args.v, c)
    v_bb_equiv = equivalent_vbb(v, c)
    v_bb = parse_speed(args.v_bb, c) if args.v_bb is not None else v_bb_equiv
    s = TimingScenario(L=args.L, dt=args.dt, v_bb=v_bb, v=v, c=c)
    fsc = finite_speed_cut(s)
    bb = before_before(s)
    _emit(
        {
            "schema": "bellsim-timing-1",
            "inputs": {"L": args.L, "dt": args.dt, "v": v, "v_bb": v_bb, "c": c},
            "v_bb_equivalent": v_bb_equiv,
            "v_equivalent": c * c / v_bb,
            "finite_speed_cut": fsc,
            "before_before": bb,
            "criteria_agree": fsc == bb,
        },
        args.out,
        "timing.json",
    )
    return EXIT_OK


def _empirical_summary(sc, schedule, workers: int) -> tuple:
    target = born_behavior(sc.state, sc.settings)
    sample = sample_runs(
        sc.model, sc.geometry, target, schedule, sc.trials, sc.seed, workers=workers
    )
    eff = effective_behavior(sc.model, sc.geometry, target)
    correlators = []
    for combo in schedule:
        mean, se, count = sample.empirical_correlator(combo)
        correlators.append(
            {
                "settings": list(combo),
                "mean": float(mean),
                "se": _finite_or_none(se),
                "count": count,
                "predicted": correlator(eff, combo),
            }
        )
    return sample, eff, correlators


def _derived_block(sc, eff, sample) -> dict:
    derived = {}
    if sc.parties != 2:
        return derived
    n_a, n_b = len(sc.settings[0]), len(sc.settings[1])
    if n_a == n_b and n_a >= 2:
        spec = inequality.chain_spec(n_a)
        value = se2 = 0.0
        for (ia, ib), sign in spec.terms:
            mean, se, _ = sample.empirical_correlator((ia, ib))
            value += sign * mean
            se2 += se * se if math.isfinite(se) else math.inf
        block = {
            "n": n_a,
            "empirical_value": float(value),
            "se": _finite_or_none(math.sqrt(se2) if math.isfinite(se2) else math.inf),
            "predicted_value": inequality.chain_value(eff, spec),
            "local_bound": inequality.local_bound(spec),
            "quantum_optimum": inequality.quantum_chain_optimum(n_a).value,
        }
        derived["chain"] = block
        if n_a == 2:
            derived["chsh"] = {
                "empirical_value": block["empirical_value"],
                "se": block["se"],
                "predicted_value": block["predicted_value"],
                "local_bound": 2.0,
                "tsirelson": 2.0 * math.sqrt(2.0),
            }
    if sc.model.kind == "mixture":
        n = len(sc.settings[0])
        if n == len(sc.settings[1]) and 2 <= n <= inequality.MAX_CHAIN_N:
            derived["mixture"] = {
                "p": sc.model.p,
                "max_value": inequality.mixture_max_value(sc.model.p, n),
                "deviation": inequality.mixture_deviation(sc.model.p, n),
            }
    return derived


def cmd_simulate(args) -> int:
    sc, _ = _resolve_scenario(args)
    schedule = [
        list(combo)
        for combo in itertools.product(*(range(len(s)) for s in sc.settings))
    ]
    sample, eff, correlators = _empirical_summary(sc, schedule, args.workers)
    if sc.model.kind == "mixture":
        coordination = {
            "nonlocal": {
                _pair_key(p): s
                for p, s in coordination_map(sc.model, sc.geometry, "nonlocal").items()
            },
            "local": {
                _pair_key(p): s
                for p, s in coordination_map(sc.model, sc.geometry, "local").items()
            },
        }
    else:
        coordination = {
            _pair_key(p): s for p, s in coordination_map(sc.model, sc.geometry).items()
        }
    summary = {
        "schema": "bellsim-summary-1",
        "scenario": sc.doc,
        "coordination": coordination,
        "correlators": correlators,
        "derived": _derived_block(sc, eff, sample),
    }
    if sc.model.kind in ("finite_speed", "multisim"):
        summary["timing"] = _timing_block(sc)
    out_dir = args.out if args.out is not None else "."
    runs_name = sc.outputs.get(
        "runs_csv" if args.format == "csv" else "runs_json",
        "runs.csv" if args.format == "csv" else "runs.json",
    )
    os.makedirs(out_dir, exist_ok=True)
    runs_path = os.path.join(out_dir, runs_name)
    if args.format == "csv":
        write_run_csv(sample, runs_path)
    else:
        records = [
            {
                "trial": rec.trial,
                "settings": list(rec.settings),
                "outcomes": list(rec.outcomes),
                "coordination": {_pair_key(p): s for p, s in rec.coordination.items()},
            }
            for rec in sample
        ]
        with open(runs_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(_json_text({"schema": "bellsim-runs-1", "records": records}))
    _emit(summary, out_dir, sc.outputs.get("summary_json", "summary.json"))
    return EXIT_OK


def _signal_report(sc, off_override: tuple[int, int] | None) -> dict:
    if sc.parties != 3:
        raise CliError(
            EXIT_ERROR,
            {"error": {"code": "invalid", "message": "signal needs a tripartite scenario"}},
        )
    if sc.model.kind == "mixture":
        raise CliError(
            EXIT_ERROR,
            {
                "error": {
                    "code": "invalid",
                    "message": "signal needs a model with a static coordination map",
                }
            },
        )
    target = born_behavior(sc.state, sc.settings)
    cmap = coordination_map(sc.model, sc.geometry)
    off_pairs = [pair for pair, state in cmap.items() if state == "OFF"]
    if off_override is not None:
        off = off_override
    elif len(off_pairs) == 1:
        off = off_pairs[0]
    elif not off_pairs:
        off = (1, 2)
    else:
        raise CliError(
            EXIT_ERROR,
            {
                "error": {
                    "code": "invalid",
                    "message": f"coordination map cuts {len(off_pairs)} pairs; "
                    "pass --off-pair to choose the receiver pair",
                }
            },
        )
    (spect,) = tuple(set(range(3)) - set(off))
    eff = effective_behavior(sc.model, sc.geometry, target)
    sd = signaling_distance(eff, off)
    feas = localparts_feasible(target, off)
    family = marginal(eff, off)
    tables = {
        f"spectator_setting={key[0]}": family[key].table.tolist()
        for key in sorted(family)
    }
    g = sc.geometry
    point = find_point_d(g.events[spect], g.events[off[0]], g.events[off[1]], c=g.c)
    report = {
        "schema": "bellsim-signal-1",
        "scenario": sc.doc,
        "coordination": {_pair_key(p): s for p, s in cmap.items()},
        "off_pair": list(off),
        "spectator": spect,
        "settings": [list(row) for row in sc.settings],
        "feasible": feas.feasible,
        "signaling_distance": sd,
        "bias": sd / 2.0,
        "channel": "binary" if sd > RECHECK_TOL else "none",
        "marginal_tables": tables,
        "receiver_alone_distances": {
            str(off[0]): signaling_distance(eff, (off[0],)),
            str(off[1]): signaling_distance(eff, (off[1],)),
        },
        "advantage_seconds": None if point is None else point[1],
        "point_d": None
        if point is None
        else {"t": point[0].t, "x": point[0].x, "y": point[0].y},
        "note": (
            "a marginal shift is visible only in the cut pair's joint "
            "outcomes; neither receiver alone sees it"
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


def cmd_signal(args) -> int:
    sc, _ = _resolve_scenario(args)
    off = None
    if args.off_pair:
        try:
            i, j = (int(part) for part in args.off_pair.split(","))
        except ValueError:
            raise _usage_error("--off-pair must look like '1,2'") from None
        if i == j or not {i, j} <= {0, 1, 2}:
            raise _usage_error("--off-pair must name two distinct parties in 0..2")
        off = (min(i, j), max(i, j))
    report = _signal_report(sc, off)
    _emit(report, args.out, sc.outputs.get("report_json", "report.json"))
    return EXIT_OK


def cmd_chsh(args) -> int:
    opt = inequality.quantum_chain_optimum(2)
    out = {
        "schema": "bellsim-chsh-1",
        "local_bound": 2.0,
        "tsirelson": 2.0 * math.sqrt(2.0),
        "quantum_optimum": opt.value,
        "angles": {"a": list(opt.angles_a), "b": list(opt.angles_b)},
    }
    if args.trials:
        sc = _inline_scenario(
            "chsh", [list(opt.angles_a), list(opt.angles_b)], args
        )
        schedule = [[x, y] for x in range(2) for y in range(2)]
        sample, eff, correlators = _empirical_summary(sc, schedule, args.workers)
        out["correlators"] = correlators
        out["empirical"] = _derived_block(sc, eff, sample)["chsh"]
        out["model"] = {"kind": sc.model.kind, "p": sc.model.p}
    _emit(out, args.out, "chsh.json")
    return EXIT_OK


def cmd_chain(args) -> int:
    if args.n < 2 or args.n > inequality.MAX_CHAIN_N:
        raise _usage_error(f"--n must be in 2..{inequality.MAX_CHAIN_N}")
    spec = inequality.chain_spec(args.n)
    want_all = not args.local_bound and not args.quantum
    out = {"schema": "bellsim-chain-1", "n": args.n}
    if args.local_bound or want_all:
        out["local_bound"] = inequality.local_bound(spec)
    if args.quantum or want_all:
        opt = inequality.quantum_chain_optimum(args.n)
        out["quantum_optimum"] = opt.value
        out["closed_form"] = 2 * args.n * math.cos(math.pi / (2 * args.n))
        out["angles"] = {"a": list(opt.angles_a), "b": list(opt.angles_b)}
    if args.p is not None and args.model != "mixture":
        raise _usage_error("--p needs --model mixture")
    if args.trials:
        opt = inequality.quantum_chain_optimum(args.n)
        sc = _inline_scenario(
            "chain", [list(opt.angles_a), list(opt.angles_b)], args
        )
        schedule = [[x, y] for x in range(args.n) for y in range(args.n)]
        sample, eff, correlators = _empirical_summary(sc, schedule, args.workers)
        derived = _derived_block(sc, eff, sample)
        out["empirical"] = derived["chain"]
        if "mixture" in derived:
            out["mixture"] = derived["mixture"]
        out["model"] = {"kind": sc.model.kind, "p": sc.model.p}
    _emit(out, args.out, "chain.json")
    return EXIT_OK


def _inline_scenario(name: str, settings, args):
    """A bipartite singlet scenario built from command-line flags."""
    model: dict = {"kind": args.model}
    if args.model == "mixture":
        if args.p is None:
            raise _usage_error("--model mixture needs --p")
        model["p"] = args.p
    doc = {
        "schema": "bellsim-scenario-1",
        "name": name,
        "geometry": {
            "events": [{"t": 0.0, "x": -1.0}, {"t": 0.0, "x": 1.0}],
            "boosts": [{"beta": 0.0}, {"beta": 0.0}],
        },
        "model": model,
        "state": {"kind": "singlet"},
        "settings": settings,
        "trials": args.trials,
        "seed": args.seed,
    }
    return scenario_from_doc(doc)


def _parse_event(text: str, flag: str) -> Event:
    parts = text.split(",")
    if len(parts) not in (2, 3):
        raise _usage_error(f"{flag} must look like 't,x' or 't,x,y'")
    try:
        numbers = [float(part) for part in parts]
    except ValueError:
        raise _usage_error(f"{flag} must contain numbers") from None
    return Event(numbers[0], numbers[1], numbers[2] if len(numbers) == 3 else 0.0)


def cmd_point_d(args) -> int:
    if args.scenario or args.preset:
        sc, _ = _resolve_scenario(args)
        if sc.parties != 3:
            raise CliError(
                EXIT_ERROR,
                {
                    "error": {
                        "code": "invalid",
                        "message": "point-d needs three devices",
                    }
                },
            )
        a, b, c_ev = sc.geometry.events
        c = sc.geometry.c
    elif args.a and args.b and args.c:
        a = _parse_event(args.a, "--a")
        b = _parse_event(args.b, "--b")
        c_ev = _parse_event(args.c, "--c")
        c = 1.0 if args.c_units else SPEED_OF_LIGHT
    else:
        raise _usage_error("give --scenario/--preset or all of --a, --b, --c")
    point = find_point_d(a, b, c_ev, c=c)
    if point is None:
        out = {
            "schema": "bellsim-pointd-1",
            "found": False,
            "point": None,
            "advantage_seconds": None,
            "predicates": None,
        }
    else:
        d, advantage = point
        out = {
            "schema": "bellsim-pointd-1",
            "found": True,
            "point": {"t": d.t, "x": d.x, "y": d.y},
            "advantage_seconds": advantage,
            "predicates": {
                "inside_b_cone": in_future_lightcone(b, d, c=c),
                "inside_c_cone": in_future_lightcone(c_ev, d, c=c),
                "outside_a_cone": not in_future_lightcone(a, d, c=c),
            },
        }
    _emit(out, args.out, "point_d.json")
    return EXIT_OK


def cmd_preset(args) -> int:
    if args.action == "list":
        _emit(
            [
                {"name": p.name, "description": p.description, "pipeline": p.pipeline}
                for p in PRESETS.values()
            ],
            args.out,
            "presets.json",
        )
        return EXIT_OK
    if not args.name:
        raise _usage_error("preset run needs a preset name")
    preset = get_preset(args.name)
    args.scenario = None
    args.preset = preset.name
    if preset.pipeline == "signal":
        args.off_pair = None
        return cmd_signal(args)
    return cmd_simulate(args)


def cmd_validate(args) -> int:
    try:
        load_scenario(args.file)
    except ScenarioError as exc:
        payload = {"ok": False, "errors": [e.as_dict() for e in exc.errors]}
        sys.stderr.write(_json_text(payload))
        return EXIT_SCHEMA
    sys.stdout.write(_json_text({"ok": True}))
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="bellsim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, scenario=False, sampling=False):
        p.add_argument("--out", default=None, help="directory for output files")
        if scenario:
            p.add_argument("--scenario", default=None, help="scenario JSON file")
            p.add_argument("--preset", default=None, help="shipped preset name")
        if sampling:
            p.add_argument("--trials", type=int, default=None)
            p.add_argument("--seed", type=int, default=None)
            p.add_argument("--workers", type=int, default=1)
            p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("timing", help="evaluate the timing criteria")
    p.add_argument("--L", type=float, required=True, help="separation in meters")
    p.add_argument("--dt", type=float, default=0.0, help="arrival gap in seconds")
    p.add_argument("--v", required=True, help="influence speed (m/s or e.g. '100000c')")
    p.add_argument("--v-bb", default=None, help="recession speed (default c**2/v)")
    p.add_argument("--c-units", action="store_true", help="set c = 1")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_timing)

    p = sub.add_parser("chsh", help="CHSH numbers and optional sampling")
    p.add_argument("--trials", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--model", choices=("quantum", "local", "mixture"), default="quantum")
    p.add_argument("--p", type=float, default=None, help="local weight for mixtures")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_chsh)

    p = sub.add_parser("chain", help="chained-inequality numbers and sampling")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--local-bound", action="store_true", help="report the local bound")
    p.add_argument("--quantum", action="store_true", help="report the quantum optimum")
    p.add_argument("--trials", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--model", choices=("quantum", "local", "mixture"), default="quantum")
    p.add_argument("--p", type=float, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_chain)

    p = sub.add_parser("simulate", help="sample a scenario to CSV plus summary")
    add_common(p, scenario=True, sampling=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("signal", help="marginal-shift report for a tripartite scenario")
    add_common(p, scenario=True)
    p.add_argument("--off-pair", default=None, help="receiver pair, e.g. '1,2'")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_signal)

    p = sub.add_parser("point-d", help="point-D construction for three events")
    add_common(p, scenario=True)
    p.add_argument("--a", default=None, help="event 't,x[,y]' for the sender")
    p.add_argument("--b", default=None, help="event 't,x[,y]' for receiver B")
    p.add_argument("--c", default=None, help="event 't,x[,y]' for receiver C")
    p.add_argument("--c-units", action="store_true", help="set c = 1")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_point_d)

    p = sub.add_parser("preset", help="list shipped presets or run one")
    p.add_argument("action", choices=("list", "run"))
    p.add_argument("name", nargs="?", default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_preset)

    p = sub.add_parser("validate", help="check a scenario file against the schema")
    p.add_argument("file")
    p.set_defaults(func=cmd_validate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except CliError as exc:
        sys.stderr.write(_json_text(exc.payload))
        return exc.code
    except ScenarioError as exc:
        payload = {
            "error": {
                "code": "schema",
                "message": "scenario failed validation",
                "errors": [e.as_dict() for e in exc.errors],
            }
        }
        sys.stderr.write(_json_text(payload))
        return EXIT_SCHEMA
    except FileNotFoundError as exc:
        sys.stderr.write(
            _json_text({"error": {"code": "io", "message": str(exc)}})
        )
        return EXIT_ERROR
    except (ValueError, UnsupportedConfigurationError) as exc:
        sys.stderr.write(
            _json_text({"error": {"code": "invalid", "message": str(exc)}})
        )
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
