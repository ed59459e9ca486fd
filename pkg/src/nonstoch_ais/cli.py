"""Command-line entry point: ``nonstoch-ais <command> --config run.json``.

A run config is a JSON object::

    {
      "model": {... model or {"env": {...}} ...} | "relative/path/model.json",
      "seed": 0,
      "abstraction": "memory" | "terminal" | "info-state" | "wall-ais"
                     | {"kind": "quantized", "gamma": 1}
                     | {"kind": "pursuit-ais", "gamma": 1}
                     | {"kind": "data-driven", "k": 1 | "full", "data": "exhaustive" | {"policy": ..., "n": ...}},
      "initial_observations": "all" | [y0, ...],
      "compare": {"a": <abstraction>, "b": <abstraction>},
      "bounds": {"gamma": 1 | [0, 1, 2], "abstraction": <abstraction>},
      "simulate": {"n": 100},
      "learn": {"data": ..., "k": 1}
    }

Exit codes: 0 success, 1 other library error, 2 schema violation,
3 model too large, 4 bound violation.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import quantize as q
from .datadriven import (
    EmpiricalRangeModel,
    build_empirical_ranges,
    exhaustive_dataset,
    generate_dataset,
    solve_dp_from_data,
)
from .dp import (
    CompressedAbstraction,
    ConditionalRangeAbstraction,
    MemoryAbstraction,
    alpha_bound,
    evaluate_strategy_worst_case,
    simulate_rollouts,
    solve_abstraction_dp,
)
from .envs import pursuit_target_quantizer, wall_ais, wall_attacker_quantizer
from .errors import ModelTooLarge, NonstochError, SchemaError
from .model import DEFAULT_BUDGET, TERMINAL, Memory, freeze, load_model
from .ranges import FinitePointSet

EXIT_ERROR, EXIT_SCHEMA, EXIT_TOO_LARGE, EXIT_BOUNDS = 1, 2, 3, 4


class BoundViolation(NonstochError):
    """A measured quantity exceeded its theoretical bound."""


# ---------------------------------------------------------------------------
# Realization encoding and atomic output
# ---------------------------------------------------------------------------


def encode(obj):
    """JSON-safe tagged form of a realization or action."""
    if isinstance(obj, FinitePointSet):
        return {"set": [encode(x) for x in obj]}
    if isinstance(obj, Memory):
        return {"memory": {"ys": encode(obj.ys), "us": encode(obj.us)}}
    if isinstance(obj, tuple):
        return [encode(x) for x in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return {"float": repr(obj)}
    return obj


def decode(obj):
    if isinstance(obj, dict):
        if "set" in obj:
            return FinitePointSet(decode(x) for x in obj["set"])
        if "memory" in obj:
            return Memory(decode(obj["memory"]["ys"]), decode(obj["memory"]["us"]))
        if "float" in obj:
            return float(obj["float"])
        raise SchemaError(f"unknown tagged value {obj!r}")
    if isinstance(obj, list):
        return tuple(decode(x) for x in obj)
    return obj


def write_atomic(path: Path, text: str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def solve_artifact(values, strategy) -> dict:
    return {
        "value": values.value,
        "criterion": values.criterion,
        "provenance": values.provenance,
        "runtime_ms": values.runtime_ms,
        "counts": values.counts(),
        "initial": [encode(pi) for pi in values.initial],
        "layers": [
            [{"realization": encode(pi), "value": V[pi], "action": encode(strategy.table[t][pi])} for pi in sorted(V)]
            for t, V in enumerate(values.V)
        ],
    }


def load_solve_artifact(path) -> dict:
    """Reload a solve artifact: value tables and strategy tables keyed by decoded realizations."""
    with open(path) as fh:
        d = json.load(fh)
    V = [{decode(e["realization"]): e["value"] for e in layer} for layer in d["layers"]]
    S = [{decode(e["realization"]): decode(e["action"]) for e in layer} for layer in d["layers"]]
    return {"value": d["value"], "criterion": d["criterion"], "counts": d["counts"],
            "initial": tuple(decode(p) for p in d["initial"]), "V": V, "strategy": S}


# ---------------------------------------------------------------------------
# Config
# ---------------------------------------------------------------------------


def load_config(path) -> dict:
    path = Path(path)
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON in {path}: {exc}") from exc
    except OSError as exc:
        raise SchemaError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise SchemaError("config must be a JSON object")
    if "model" not in cfg:
        if "horizon" in cfg or "env" in cfg:
            cfg = {"model": cfg}
        else:
            raise SchemaError("config needs a 'model' entry")
    if isinstance(cfg["model"], str):
        cfg["model"] = str((path.parent / cfg["model"]).resolve())
    return cfg


def build_model(cfg: dict):
    return load_model(cfg["model"])


def _parse_abstraction(spec) -> dict:
    if isinstance(spec, str):
        spec = {"kind": spec}
    if not isinstance(spec, dict) or "kind" not in spec:
        raise SchemaError(f"bad abstraction spec {spec!r}")
    kinds = {"memory", "terminal", "info-state", "quantized", "wall-ais", "pursuit-ais", "data-driven"}
    if spec["kind"] not in kinds:
        raise SchemaError(f"unknown abstraction kind {spec['kind']!r}")
    return spec


def _label(spec: dict) -> str:
    extra = [f"{k}={v}" for k, v in sorted(spec.items()) if k not in ("kind", "data")]
    return spec["kind"] + (f"({','.join(extra)})" if extra else "")


def _grids_for(sys, gamma: float):
    return [q.build_grid(sys.states(t), gamma, sys.state_metric) for t in range(sys.horizon + 1)]


def make_abstraction(sys, spec: dict, budget: int):
    """Abstraction object and its γ grids (None when not a quantization)."""
    kind = spec["kind"]
    if kind in ("memory", "terminal"):
        return MemoryAbstraction(sys, budget), None
    if kind == "info-state":
        return ConditionalRangeAbstraction(sys, bool(spec.get("with_initial_observation", False))), None
    if kind == "quantized":
        grids = _grids_for(sys, float(spec.get("gamma", 1)))
        return q.quantized_abstraction(sys, grids, with_initial_observation=bool(spec.get("with_initial_observation", False))), grids
    if kind == "wall-ais":
        return wall_ais(sys), wall_attacker_quantizer(sys)
    if kind == "pursuit-ais":
        grids = pursuit_target_quantizer(sys, float(spec.get("gamma", 1)))
        return q.quantized_abstraction(sys, grids), grids
    raise SchemaError(f"abstraction {kind!r} is not model-based")


def _learned_model(sys, spec: dict, seed: int):
    data = spec.get("data", "exhaustive")
    if data == "exhaustive":
        d = exhaustive_dataset(sys)
    elif isinstance(data, dict):
        d = generate_dataset(sys, data.get("policy", "uniform"), int(data.get("n", 100)), int(data.get("seed", seed)))
    else:
        raise SchemaError(f"bad data spec {data!r}")
    k = spec.get("k", 1)
    k = sys.horizon + 1 if k == "full" else int(k)
    return d, build_empirical_ranges(d, k)


@dataclass
class Solved:
    label: str
    values: object
    strategy: object
    abstraction: object
    grids: object
    runtime_ms: float

    @property
    def count(self) -> int:
        return sum(self.values.counts())


def solve(sys, spec: dict, budget: int, seed: int = 0) -> Solved:
    start = time.perf_counter()
    if spec["kind"] == "data-driven":
        _, model = _learned_model(sys, spec, seed)
        values, strategy = solve_dp_from_data(model, sys)
        a, grids = strategy.abstraction, None
    else:
        a, grids = make_abstraction(sys, spec, budget)
        values, strategy = solve_abstraction_dp(sys, a)
    return Solved(_label(spec), values, strategy, a, grids, (time.perf_counter() - start) * 1e3)


def worst_case(sys, s: Solved, budget: int) -> float:
    """Evaluated worst case of a solved strategy, using the cheapest exact route."""
    a = s.abstraction
    if isinstance(a, CompressedAbstraction) and a.base.exact:
        return evaluate_strategy_worst_case(sys, s.strategy, via="base")
    if a is not None and a.exact and not isinstance(a, MemoryAbstraction):
        return evaluate_strategy_worst_case(sys, s.strategy, via=a)
    return evaluate_strategy_worst_case(sys, s.strategy, budget)


def alpha0(sys, s: Solved) -> float | None:
    """α_0 from measured (ε, δ, L_V̂) for a compression of an exact abstraction; 0 for exact ones."""
    a = s.abstraction
    if isinstance(a, CompressedAbstraction):
        eps, delta = q.empirical_eps_delta(sys, a, via="state")
        vl = q.verify_value_lipschitz(s.values, a)
        return alpha_bound(eps, delta, q.lips_for_alpha(vl), terminal=sys.criterion == TERMINAL)[0]
    if a is not None and a.exact:
        return 0.0
    return None


def _initials(sys, cfg) -> list:
    raw = cfg.get("initial_observations", "all")
    if raw == "all":
        return list(sys.initial_observation_set())
    if not isinstance(raw, list):
        raise SchemaError("initial_observations must be 'all' or a list")
    return [freeze(y) for y in raw]


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_solve(cfg: dict, out: Path, budget: int, seed: int, jobs: int) -> int:
    sys_ = build_model(cfg)
    spec = _parse_abstraction(cfg.get("abstraction", "memory"))
    s = solve(sys_, spec, budget, seed)
    art = solve_artifact(s.values, s.strategy)
    art["abstraction"] = s.label
    art["runtime_ms"] = s.runtime_ms
    write_atomic(out / "solve.json", _json(art))
    print(f"{s.label}: value {s.values.value} over {s.count} realizations ({s.runtime_ms:.1f} ms)")
    return 0


def _bound_gammas(cfg) -> list[float]:
    g = cfg.get("bounds", {}).get("gamma", [0, 1])
    return [float(x) for x in (g if isinstance(g, list) else [g])]


def cmd_verify_bounds(cfg: dict, out: Path, budget: int, seed: int, jobs: int) -> int:
    sys_ = build_model(cfg)
    bcfg = cfg.get("bounds", {})
    spec = _parse_abstraction(bcfg.get("abstraction", "quantized"))
    bad = []
    runs = [None] if spec["kind"] == "wall-ais" else _bound_gammas(cfg)
    for gamma in runs:
        if gamma is not None:
            spec = dict(spec, gamma=gamma)
        a, grids = make_abstraction(sys_, spec, budget)
        if not isinstance(a, CompressedAbstraction):
            raise SchemaError("bounds need a quantized abstraction")
        rep = q.bound_report(sys_, grids, kind=bcfg.get("kind", "auto"), abstraction=a)
        tag = _label(spec).replace("(", "_").replace(")", "").replace(",", "_").replace("=", "")
        write_atomic(out / f"bounds_{tag}.json", rep.to_json() + "\n")
        write_atomic(out / f"bounds_{tag}.csv", rep.to_csv())
        v = rep.violations()
        status = "ok" if not v else f"{len(v)} violation(s)"
        print(f"{_label(spec)}: alpha0={rep.alpha[0]:g} V0={rep.value} Vhat0={rep.approx_value} {status}")
        bad.extend(f"{_label(spec)}: {msg}" for msg in v)
    if bad:
        raise BoundViolation("; ".join(bad))
    return 0


COMPARE_COLUMNS = [
    "init_id", "value_A", "value_B", "worstcost_A", "worstcost_B", "runtime_A_ms", "runtime_B_ms",
    "alpha0", "gap", "gap_le_2alpha0", "realizations_A", "realizations_B",
]


def _compare_row(cfg: dict, y0, budget: int, seed: int) -> list:
    base = build_model(cfg)
    sys_ = base.restrict([y0])
    A = _parse_abstraction(cfg["compare"]["a"])
    B = _parse_abstraction(cfg["compare"]["b"])
    ra, rb = solve(sys_, A, budget, seed), solve(sys_, B, budget, seed)
    wa, wb = worst_case(sys_, ra, budget), worst_case(sys_, rb, budget)
    al = alpha0(sys_, rb)
    gap = wb - wa
    flag = "" if al is None else str(gap <= 2 * al + q.TOL).lower()
    return [json.dumps(encode(y0)), ra.values.value, rb.values.value, wa, wb, round(ra.runtime_ms, 3),
            round(rb.runtime_ms, 3), "" if al is None else al, gap, flag, ra.count, rb.count]


def _compare_row_job(args):
    return _compare_row(*args)


def cmd_compare(cfg: dict, out: Path, budget: int, seed: int, jobs: int) -> int:
    if "compare" not in cfg or not {"a", "b"} <= set(cfg["compare"]):
        raise SchemaError("compare needs 'compare': {'a': ..., 'b': ...}")
    inits = _initials(build_model(cfg), cfg)
    tasks = [(cfg, y0, budget, seed) for y0 in inits]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(_compare_row_job, tasks))
    else:
        rows = [_compare_row_job(t) for t in tasks]
    text = _csv(COMPARE_COLUMNS, rows)
    write_atomic(out / "compare.csv", text)
    sys.stdout.write(text)
    return 0


def cmd_simulate(cfg: dict, out: Path, budget: int, seed: int, jobs: int) -> int:
    sys_ = build_model(cfg)
    spec = _parse_abstraction(cfg.get("abstraction", "info-state"))
    n = int(cfg.get("simulate", {}).get("n", 100))
    s = solve(sys_, spec, budget, seed)
    res = simulate_rollouts(sys_, s.strategy, n, seed=seed, record=True)
    cols = ["replicate", "t", "state", "observation", "action", "stage_cost"]
    rows = [[r["replicate"], r["t"]] + [json.dumps(encode(r[c])) for c in cols[2:5]] + [r["stage_cost"]]
            for r in res.traces]
    write_atomic(out / "rollouts.csv", _csv(cols, rows))
    summary = {"abstraction": s.label, "n": n, "seed": seed, "value": s.values.value,
               "empirical_max_cost": res.max_cost, "costs": res.costs, "runtime_ms": res.runtime_ms}
    write_atomic(out / "simulate.json", _json(summary))
    print(f"{s.label}: {n} rollouts, empirical max cost {res.max_cost} (guaranteed {s.values.value})")
    return 0


def cmd_learn_ranges(cfg: dict, out: Path, budget: int, seed: int, jobs: int) -> int:
    sys_ = build_model(cfg)
    spec = dict(cfg.get("learn", {}), kind="data-driven")
    d, model = _learned_model(sys_, spec, seed)
    write_atomic(out / "dataset.ndjson", d.to_ndjson())
    write_atomic(out / "ranges.json", model.to_json() + "\n")
    values, strategy = solve_dp_from_data(model, sys_)
    art = solve_artifact(values, strategy)
    art.update(k=model.k, dataset=d.metadata)
    write_atomic(out / "learn.json", _json(art))
    print(f"learned k={model.k} from {len(d)} trajectories: value {values.value}")
    return 0


def cmd_report(cfg: dict, out: Path, budget: int, seed: int, jobs: int) -> int:
    sys_ = build_model(cfg)
    T = sys_.horizon
    rep = {"name": getattr(sys_, "name", ""), "horizon": T, "criterion": sys_.criterion,
           "actions": [len(sys_.actions(t)) for t in range(T + 1)],
           "initial_observations": len(sys_.initial_observation_set())}
    if sys_.is_state_space:
        rep["states"] = [len(sys_.states(t)) for t in range(T + 1)]
    a = ConditionalRangeAbstraction(sys_)
    rep["information_state_realizations"] = [len(layer) for layer in a.layers()]
    try:
        rep["memories"] = [len(layer) for layer in sys_.memory_tree(budget).layers]
    except ModelTooLarge as exc:
        rep["memories"] = f"over budget ({exc})"
    write_atomic(out / "report.json", _json(rep))
    for k, v in rep.items():
        print(f"{k}: {v}")
    return 0


COMMANDS = {
    "solve": cmd_solve,
    "verify-bounds": cmd_verify_bounds,
    "compare": cmd_compare,
    "simulate": cmd_simulate,
    "learn-ranges": cmd_learn_ranges,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nonstoch-ais", description="Worst-case control with (approximate) information states.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="run config JSON")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="max reachable memories")
        sp.add_argument("--jobs", type=int, default=None, help="worker processes (env NONSTOCH_AIS_JOBS)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    jobs = args.jobs if args.jobs is not None else int(os.environ.get("NONSTOCH_AIS_JOBS", "1") or 1)
    try:
        cfg = load_config(args.config)
        seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
        return COMMANDS[args.command](cfg, Path(args.out), args.budget, seed, max(1, jobs))
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except ModelTooLarge as exc:
        print(f"model too large: {exc}", file=sys.stderr)
        return EXIT_TOO_LARGE
    except BoundViolation as exc:
        print(f"bound violation: {exc}", file=sys.stderr)
        return EXIT_BOUNDS
    except NonstochError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
