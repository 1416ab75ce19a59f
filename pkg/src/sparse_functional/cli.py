"""Experiment runner: ``sparse-functional <subcommand> --seed S [--config F] [--out DIR]``.

Each subcommand writes ``<subcommand>.csv`` plus a ``<subcommand>.json``
sidecar holding the resolved config, the library version and a summary.
"""
from __future__ import annotations

import argparse
import copy
import csv
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from . import coherence as coh
from . import dictionary as dic
from . import functional as fl
from . import oracle as orc
from . import sampling as smp
from . import sparse_coding as sc
from . import taylor as tay
from .errors import ConfigError, SparseFunctionalError

SCHEMA_VERSION = 1

DEFAULTS = {
    "coherence-study": {"d": 1, "max_freq": 16, "eps": 0.1, "m": None, "s": None, "probes": 100, "trials": 500},
    "discretize-study": {"d": 1, "max_freq": 16, "eps": 0.1, "m": None, "s": None, "probes": 100,
                         "exhaustive": False, "trials": 500},
    "recover": {"d": 1, "max_freq": 8, "grid": True, "m": None, "s": 1, "J": 5, "support": [1],
                "values": [1.0], "trials": 1},
    "oracle": {"d": 1, "max_freq": 7, "grid": True, "m": None, "s": 3, "trials": 50},
    "taylor-check": {"d": [1, 2, 3], "s_max": 2, "n_cells": [4, 8, 16], "per_axis": 256, "trials": 10},
    "pipeline": {"d": 1, "max_freq": 16, "eps": 0.1, "m": None, "s": 1, "J": 20, "alpha": 2.0,
                 "functional": {"kind": "L2Norm"}, "decoder": {"kind": "ExactComposition"}, "trials": 20},
    "rates": {"class": {"kind": "A1Alpha", "alpha": 2.0, "max_freq": 256}, "s": [1, 2, 4, 8, 16, 32],
              "J": 50, "m_design": 32, "n_design": 64, "trials": 20},
}

_NUM = {"type": "number"}
_INT = {"type": "integer", "minimum": 0}
_POS = {"type": "integer", "minimum": 1}
_OPT_POS = {"type": ["integer", "null"], "minimum": 1}
_INTS = {"type": "array", "items": _POS, "minItems": 1}

_PROPS = {
    "schema_version": {"const": SCHEMA_VERSION},
    "seed": _INT,
    "trials": _POS,
    "workers": _POS,
    "d": {"oneOf": [_POS, _INTS]},
    "max_freq": _INT,
    "eps": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
    "m": _OPT_POS,
    "s": {"oneOf": [_OPT_POS, _INTS]},
    "probes": _POS,
    "exhaustive": {"type": "boolean"},
    "grid": {"type": "boolean"},
    "J": _INT,
    "support": {"type": "array", "items": _INT},
    "values": {"type": "array", "items": _NUM},
    "s_max": _POS,
    "n_cells": _INTS,
    "per_axis": _POS,
    "alpha": {"type": "number", "exclusiveMinimum": 0},
    "functional": {
        "type": "object",
        "properties": {"kind": {"enum": [fl.L2_NORM, fl.INNER_PRODUCT]}},
        "required": ["kind"],
        "additionalProperties": False,
    },
    "decoder": {
        "type": "object",
        "properties": {
            "kind": {"enum": [fl.EXACT, fl.TAYLOR]},
            "n_cells": _POS,
            "box": {"type": "number", "exclusiveMinimum": 0},
        },
        "required": ["kind"],
        "additionalProperties": False,
    },
    "class": {
        "type": "object",
        "properties": {
            "kind": {"enum": ["A1Alpha", "MixedSmooth"]},
            "alpha": {"type": "number", "exclusiveMinimum": 0},
            "a": {"type": "number", "exclusiveMinimum": 0},
            "b": _NUM,
            "d": _POS,
            "max_level": _INT,
            "max_freq": _POS,
        },
        "required": ["kind"],
        "additionalProperties": False,
    },
    "m_design": _POS,
    "n_design": _POS,
}


def schema_for(command: str) -> dict:
    keys = set(DEFAULTS[command]) | {"schema_version", "seed", "trials", "workers"}
    return {
        "type": "object",
        "properties": {k: _PROPS[k] for k in keys},
        "additionalProperties": False,
    }


def _line_of(text: str, path) -> int:
    """Best-effort line number of the JSON value at ``path``."""
    pos = 0
    for key in path:
        if isinstance(key, str):
            hit = text.find(json.dumps(key), pos)
            if hit < 0:
                break
            pos = hit
    return text.count("\n", 0, pos) + 1


def load_config(command: str, path: str | None) -> dict:
    cfg = copy.deepcopy(DEFAULTS[command])
    if path is None:
        return cfg
    text = Path(path).read_text(encoding="utf-8")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if "schema_version" not in raw:
        raise ConfigError(f"{path}:1: missing schema_version (expected {SCHEMA_VERSION})")
    errors = sorted(jsonschema.Draft202012Validator(schema_for(command)).iter_errors(raw),
                    key=lambda e: list(map(str, e.path)))
    if errors:
        err = errors[0]
        where = "/".join(map(str, err.path)) or "<root>"
        raise ConfigError(f"{path}:{_line_of(text, err.path)}: {where}: {err.message}")
    raw.pop("schema_version")
    cfg.update(raw)
    return cfg


def trial_seeds(seed: int, trials: int) -> list[int]:
    return [int(c.generate_state(1)[0]) for c in np.random.SeedSequence(seed).spawn(trials)]


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def write_csv(path: Path, rows: list[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        for r in rows:
            writer.writerow({k: _fmt(v) for k, v in r.items()})


def _dictionary(cfg) -> dic.Dictionary:
    return dic.build_trig_dictionary(cfg["d"], cfg["max_freq"])


def _lemma8_setup(cfg):
    D = _dictionary(cfg)
    m = cfg["m"] or smp.min_samples_lemma8(D.gamma, D.n, cfg["eps"])
    s = cfg["s"] or max(1, coh.select_sparsity_lemma8(D.gamma, m, D.n, cfg["eps"]))
    return D, m, s


# ---------------------------------------------------------------- trials


def _coherence_trial(cfg, seed):
    D, m, s = _lemma8_setup(cfg)
    samples = smp.draw_samples(D.domain, m, seed)
    U = D.evaluate(samples.points)
    design = coh.design_from_matrix(U, D.gamma)
    bound = coh.coherence_bound_lemma8(D.gamma, m, D.n, cfg["eps"])
    _, energy_ok = smp.column_energy_check(design)
    rep = smp.check_universal_discretization(D, samples, s, 2, cfg["probes"], seed + 1, U=U)
    return {
        "seed": seed, "m": m, "N": D.n, "s": s, "mu": design.mu, "mu_bound": bound,
        "mu_ok": design.mu <= bound, "energy_ok": energy_ok,
        "worst_lower": rep.worst_lower, "worst_upper": rep.worst_upper, "disc_ok": rep.passed,
    }


def _discretize_trial(cfg, seed):
    D, m, s = _lemma8_setup(cfg)
    samples = smp.draw_samples(D.domain, m, seed)
    U = D.evaluate(samples.points)
    rep = smp.check_universal_discretization(D, samples, s, 2, cfg["probes"], seed + 1, U=U)
    row = smp.discretization_row(seed, m, D.n, rep)
    if cfg.get("exhaustive"):
        lo, hi = smp.exhaustive_discretization_extremes(U, D.gamma, s)
        row.update(exact_lower=lo, exact_upper=hi,
                   exact_pass=smp.C1_LEMMA8 <= lo and hi <= smp.C2_LEMMA8)
    return row


def _sample_set(cfg, D, seed):
    if cfg["grid"]:
        per_axis = cfg["m"] or 2 * cfg["max_freq"] + 1
        return smp.grid_samples(D.domain, per_axis)
    return smp.draw_samples(D.domain, cfg["m"] or 2 * D.n, seed)


def _oracle_trial(cfg, seed):
    D = _dictionary(cfg)
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(D.n)
    samples = _sample_set(cfg, D, seed)
    U = D.evaluate(samples.points)
    y = U @ c
    ex = orc.best_s_term_exhaustive(U, y, cfg["s"])
    gr = orc.omp(U, y, cfg["s"])
    top = " ".join(str(i) for i in orc.top_s_support(c, cfg["s"]))
    rows = []
    for res in (ex, gr):
        row = {"seed": seed}
        row.update(orc.oracle_row(res))
        row["top_s"] = top
        rows.append(row)
    return rows


def _taylor_trial(cfg, seed):
    rows = []
    for d in cfg["d"] if isinstance(cfg["d"], list) else [cfg["d"]]:
        f = tay.random_lipschitz_function(d, seed)
        for s in range(1, min(d, cfg["s_max"]) + 1):
            for n in cfg["n_cells"]:
                approx = tay.localized_taylor(f, 0, 1.0, n, d, s)
                err = tay.sup_error_on_sparse_set(f, approx, cfg["per_axis"])
                row = tay.sweep_row(d, 0, 1.0, n, err, tay.taylor_error_bound(d, 0, 1.0, n))
                row.update(seed=seed, s=s, n_active=approx.n_active,
                           active_bound=tay.active_cell_bound(d, n, s))
                rows.append(row)
    return rows


def _pipeline_trial(cfg, seed):
    D = _dictionary(cfg)
    m = cfg["m"] or smp.min_samples_lemma8(D.gamma, D.n, cfg["eps"])
    fseed, sseed = trial_seeds(seed, 2)
    f = dic.sample_a1_alpha(D, cfg["alpha"], fseed)
    samples = smp.draw_samples(D.domain, m, sseed)
    kind = cfg["functional"]["kind"]
    g = None
    if kind == fl.INNER_PRODUCT:
        g = np.zeros(D.n)
        g[0] = 1.0 / math.sqrt(D.gamma)
    P = fl.make_functional(kind, D, g=g)
    dec = cfg["decoder"]
    rep = fl.evaluate_pipeline(P, f, D, samples, cfg["s"], cfg["J"], decoder=dec["kind"],
                               n_cells=dec.get("n_cells"), box=dec.get("box"), seed=seed)
    return {
        "seed": seed, "valid": rep.valid, "support": " ".join(map(str, rep.support)),
        "l2_error": rep.l2_error, "P_f": rep.P_f, "P_hat": rep.P_hat, "abs_error": rep.abs_error,
        "holder_bound": rep.holder_bound, "composite_bound": rep.composite_bound,
        "functional_bound": rep.functional_bound, "sigma_tail": rep.sigma_tail,
    }


_TRIALS = {
    "coherence-study": _coherence_trial,
    "discretize-study": _discretize_trial,
    "oracle": _oracle_trial,
    "taylor-check": _taylor_trial,
    "pipeline": _pipeline_trial,
}


def _map(fn, cfg, seeds, workers):
    if workers > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, [cfg] * len(seeds), seeds, chunksize=max(1, len(seeds) // (4 * workers))))
    return [fn(cfg, s) for s in seeds]


def _flatten(results):
    rows = []
    for r in results:
        rows.extend(r if isinstance(r, list) else [r])
    return rows


def _rate(rows, key):
    return float(np.mean([bool(r[key]) for r in rows]))


def run(command: str, cfg: dict, seed: int, workers: int = 1) -> tuple[list[dict], dict]:
    """Execute one study and return ``(csv_rows, summary)``."""
    if command == "recover":
        return _run_recover(cfg)
    if command == "rates":
        return _run_rates(cfg, seed)
    seeds = trial_seeds(seed, cfg["trials"])
    rows = _flatten(_map(_TRIALS[command], cfg, seeds, workers))
    summary: dict = {"rows": len(rows)}
    if command == "coherence-study":
        summary.update({k: _rate(rows, k) for k in ("mu_ok", "energy_ok", "disc_ok")})
        summary["target"] = 1.0 - cfg["eps"]
    elif command == "discretize-study":
        summary["pass_rate"] = _rate(rows, "pass")
    elif command == "oracle":
        ex = [r for r in rows if r["method"] == "exhaustive"]
        gr = [r for r in rows if r["method"] == "omp"]
        summary["top_s_agreement"] = float(np.mean([r["support"] == r["top_s"] for r in ex]))
        summary["exhaustive_never_worse"] = all(e["residual"] <= g["residual"] + 1e-12 for e, g in zip(ex, gr))
    elif command == "taylor-check":
        summary["all_within_bound"] = all(r["measured_sup_error"] <= r["bound"] for r in rows)
        summary["all_active_within_bound"] = all(r["n_active"] <= r["active_bound"] for r in rows)
    elif command == "pipeline":
        summary["valid_rate"] = _rate(rows, "valid")
        summary["holder_step_ok"] = all(r["abs_error"] <= r["holder_bound"] + 1e-10 for r in rows)
    return rows, summary


def _run_recover(cfg):
    D = _dictionary(cfg)
    samples = _sample_set(cfg, D, 0)
    U = D.evaluate(samples.points)
    design = coh.design_from_matrix(U, D.gamma)
    c = np.zeros(D.n)
    c[cfg["support"]] = cfg["values"]
    x_star = c / design.normalizer
    B = float(np.abs(x_star).max())
    code = sc.encode(design, U @ c, cfg["s"], B, 0.0, cfg["J"], coeff_bound=B, trace=True)
    rows = sc.trace_rows(code, x_star)
    summary = {"mu": design.mu, "rho": code.schedule.rho, "support": [int(i) for i in code.support],
               "final_l1_error": rows[-1]["l1_error"]}
    return rows, summary


def _run_rates(cfg, seed):
    out = fl.rate_experiment(cfg["class"], {"s": cfg["s"], "J": cfg["J"], "m": cfg["m_design"],
                                            "n": cfg["n_design"]}, cfg["trials"], seed)
    # the s-sweep uses its own default sample count; m_design only sizes the encoder designs
    rows = []
    for sweep, res in out.items():
        for r in res["rows"]:
            rows.append({"sweep": sweep, "param": r["param"], "mean_error": r["mean_error"],
                         "std_error": r["std_error"], "bound": r["bound"], "slope_window": r["slope_window"]})
    summary = {f"slope_{k}": v["slope"] for k, v in out.items()}
    if "J" in out:
        summary["log_rho"] = out["J"]["log_rho"]
    return rows, summary


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sparse-functional", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in DEFAULTS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file with schema_version")
        p.add_argument("--seed", type=int, required=True, help="master seed (unsigned 64-bit)")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--trials", type=int, help="override the trial count")
        p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if not 0 <= args.seed < 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return 2
    try:
        cfg = load_config(args.command, args.config)
        if args.trials is not None:
            cfg["trials"] = args.trials
        rows, summary = run(args.command, cfg, args.seed, max(1, args.workers))
    except SparseFunctionalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / f"{args.command}.csv", rows)
    meta = {"command": args.command, "version": __version__, "schema_version": SCHEMA_VERSION,
            "seed": args.seed, "config": cfg, "summary": summary}
    (out / f"{args.command}.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(json.dumps(summary, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
