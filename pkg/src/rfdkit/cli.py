"""Command line runner: ``rfdkit <subcommand> [flags]``.

Every subcommand writes ``results.jsonl`` (one record per line) and
``summary.json`` into ``--out`` when given, and prints a short summary.
Exit codes: 0 all checks passed, 2 something was inconclusive, 1 a check
failed or an error occurred, 64 the configuration is invalid.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from .amalgam import (Amalgam, AmalgamWord, Budget, HNNWord, abels_experiment, abels_witness,
                      parse_element, separate_amalgam, separate_hnn)
from .characters import Character, psd_check
from .errors import ConfigError, RfdError, SearchExhausted
from .groups import builtin_group, load_group, random_word, evaluate_word
from .quotients import (DEFAULT_CAP, central_image, enumerate_quotient, filtration_witness,
                        profinite_probe)
from .repkit import (StateVector, character_approx_sequence, exact_level_rep, gns_from_state,
                     kernel_consistency_check)

EXIT_OK, EXIT_FAIL, EXIT_INCONCLUSIVE, EXIT_CONFIG = 0, 1, 2, 64

COMMANDS = ("quotient", "filtration", "probe", "char-approx", "psd", "gns", "kernel",
            "separate-amalgam", "separate-hnn", "abels")

DEFAULTS = {
    "group": "heisenberg", "p": 2, "modulus_range": "1..8", "epsilon": 0.1, "seed": 0,
    "cap": DEFAULT_CAP, "out": None, "workers": 1, "theta": None, "word": None,
    "outside": None, "central": None, "pair": None, "levels": 1, "seeds": None,
    "samples": None, "max_size": 12, "sep_max_modulus": 5,
}

COMMAND_DEFAULTS = {
    "probe": {"modulus_range": "1..32"},
    "char-approx": {"modulus_range": None},
    "gns": {"modulus_range": "3..3"},
    "kernel": {"modulus_range": "3..3", "samples": 50},
    "psd": {"samples": 100},
    "filtration": {"modulus_range": "1..64"},
    "separate-amalgam": {"modulus_range": "2..16", "seeds": 4, "word": "L:x R:x^-1"},
    "separate-hnn": {"modulus_range": "2..16", "seeds": 8, "word": "t^-1 x t x^-1"},
    "abels": {"group": "abels", "modulus_range": "3..99", "seeds": 4},
}


# -- configuration ------------------------------------------------------------------

def parse_range(text) -> list[int]:
    if isinstance(text, (list, tuple)):
        vals = [int(v) for v in text]
    else:
        a, sep, b = str(text).partition("..")
        try:
            vals = list(range(int(a), int(b) + 1)) if sep else [int(a)]
        except ValueError:
            raise ConfigError(f"modulus range must look like 'a..b', got {text!r}") from None
    if not vals or any(v < 1 for v in vals):
        raise ConfigError(f"modulus range {text!r} must be nonempty and positive")
    return vals


def resolve_config(command: str, args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    cfg.update(COMMAND_DEFAULTS.get(command, {}))
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        data = {k.replace("-", "_"): v for k, v in data.items()}
        unknown = set(data) - set(DEFAULTS) - {"character"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(data)
    cfg["command"] = command
    for key in ("epsilon", "cap", "workers", "levels", "max_size", "sep_max_modulus", "p"):
        try:
            ok = float(cfg[key]) > 0
        except (TypeError, ValueError):
            ok = False
        if not ok:
            raise ConfigError(f"{key} must be positive, got {cfg[key]!r}")
    for key in ("seeds", "samples"):
        if cfg[key] is not None and int(cfg[key]) < 1:
            raise ConfigError(f"{key} must be positive")
    if not isinstance(cfg["seed"], int) or cfg["seed"] < 0:
        raise ConfigError("seed must be a non-negative integer")
    if cfg["modulus_range"] is not None:
        parse_range(cfg["modulus_range"])
    return cfg


def load_group_from(cfg: dict):
    name = cfg["group"]
    try:
        if isinstance(name, dict):
            from .groups import group_from_config
            return group_from_config(name)
        if name in ("heisenberg", "abels"):
            return builtin_group(name, int(cfg["p"]))
        return load_group(name)
    except RfdError as exc:
        raise ConfigError(f"bad group {name!r}: {exc}") from None


def character_from(cfg: dict, G) -> Character:
    try:
        if cfg.get("character") is not None:
            return Character.from_config(G, cfg["character"])
        return Character.from_config(G, cfg["theta"])
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad character: {exc}") from None


def _elements(G, text):
    if not text:
        return []
    items = text if isinstance(text, list) else str(text).split(",")
    try:
        return [parse_element(G, s) for s in items]
    except (RfdError, ValueError, KeyError) as exc:
        raise ConfigError(f"bad element list {text!r}: {exc}") from None


def _budget(cfg: dict, ms: list[int], seeds: int) -> Budget:
    return Budget(max_modulus=max(ms), levels=int(cfg["levels"]), seeds=seeds,
                  min_modulus=min(ms), cap=int(cfg["cap"]), moduli=tuple(ms))


# -- subcommands ----------------------------------------------------------------------

def run_quotient(cfg, G):
    records, code = [], EXIT_OK
    for m in parse_range(cfg["modulus_range"]):
        t0 = time.perf_counter()
        rec = {"modulus": m}
        try:
            Q = enumerate_quotient(G, m, int(cfg["cap"]))
            rec.update(order=Q.order, c_image_order=Q.central.order,
                       transversal=len(Q.transversal), status="ok")
        except RfdError as exc:
            rec.update(status="error", error=str(exc))
            code = max(code, EXIT_INCONCLUSIVE)
        rec["metadata"] = {"elapsed_ms": round(1000 * (time.perf_counter() - t0), 3)}
        records.append(rec)
    return records, {"enumerated": sum(r["status"] == "ok" for r in records)}, code


def run_filtration(cfg, G):
    outside = _elements(G, cfg["outside"]) or [G.generators[0][1]]
    pairs = []
    for pair in cfg["pair"] or []:
        a, b = _elements(G, pair.split(":") if isinstance(pair, str) else pair)
        pairs.append((a, b))
    try:
        m, Q = filtration_witness(G, outside, pairs, parse_range(cfg["modulus_range"]),
                                  int(cfg["cap"]))
    except SearchExhausted as exc:
        return [], {"witness": None, "reason": str(exc)}, EXIT_INCONCLUSIVE
    rec = {"modulus": m, "order": Q.order, "c_image_order": Q.central.order}
    return [rec], {"witness": m}, EXIT_OK


def run_probe(cfg, G):
    if cfg["word"]:
        x = _elements(G, [cfg["word"]])[0]
    elif G.name.startswith("abels"):
        x = abels_witness(G.ring.param)[1]
    else:
        x = G.generators[0][1]
    report = profinite_probe(G, x, parse_range(cfg["modulus_range"]), int(cfg["cap"]),
                             workers=int(cfg["workers"]))
    summary = report.summary
    return report.records, summary, EXIT_FAIL if summary["errors"] else EXIT_OK


def run_char_approx(cfg, G):
    lam = character_from(cfg, G)
    outside = _elements(G, cfg["outside"]) or [g for _, g in G.generators if not G.in_center(g)][:1]
    central = _elements(G, cfg["central"]) or None
    ms = parse_range(cfg["modulus_range"]) if cfg["modulus_range"] else None
    try:
        certs = character_approx_sequence(G, lam, float(cfg["epsilon"]), outside, central,
                                          budget=int(cfg["levels"]) - 1, m_range=ms,
                                          cap=int(cfg["cap"]))
    except SearchExhausted as exc:
        recs = [c.to_json() for c in exc.partial]
        return recs, {"certified_levels": len(recs), "reason": str(exc)}, EXIT_INCONCLUSIVE
    recs = [c.to_json() for c in certs]
    ok = all(c.passed for c in certs)
    return recs, {"certified_levels": len(recs), "max_central_error":
                  max(c.max_central_error for c in certs)}, EXIT_OK if ok else EXIT_FAIL


def run_psd(cfg, G):
    lam = character_from(cfg, G)
    rng = np.random.default_rng(cfg["seed"])
    records = []
    for i in range(int(cfg["samples"])):
        size = int(rng.integers(1, int(cfg["max_size"]) + 1))
        F = [evaluate_word(G, random_word(G, rng, int(rng.integers(0, 6)))) for _ in range(size)]
        res = psd_check(G, lam, F)
        records.append({"sample": i, "size": size, "min_eigenvalue": res.min_eigenvalue,
                        "passed": res.passed})
    failed = sum(not r["passed"] for r in records)
    return records, {"samples": len(records), "failed": failed,
                     "min_eigenvalue": min(r["min_eigenvalue"] for r in records)}, \
        EXIT_FAIL if failed else EXIT_OK


def run_gns(cfg, G):
    lam = character_from(cfg, G)
    records, code = [], EXIT_OK
    for m in parse_range(cfg["modulus_range"]):
        try:
            rho = exact_level_rep(G, lam, m, int(cfg["cap"]))
        except RfdError as exc:
            records.append({"modulus": m, "status": "skipped", "reason": str(exc)})
            code = max(code, EXIT_INCONCLUSIVE)
            continue
        Q = rho.Q
        res = gns_from_state(rho, StateVector.normalized_trace(), Q)
        xi = res.cyclic_vector
        repro = max(abs(xi.conj() @ res.rep.matrices[q] @ xi - rho.normalized_trace(q))
                    for q in range(Q.order))
        scalar_err = max(float(np.max(np.abs(res.rep(c) - rho.normalized_trace(c) * np.eye(res.dim))))
                         for _, c in G.c_generators)
        ok = res.dim <= rho.dim ** 2 and repro <= 1e-9 and scalar_err <= 1e-12
        records.append({"modulus": m, "rep_dim": rho.dim, "gns_dim": res.dim,
                        "state_error": float(repro), "central_scalar_error": scalar_err,
                        "status": "pass" if ok else "fail"})
        if not ok:
            code = EXIT_FAIL
    return records, {"checked": len(records)}, code


def run_kernel(cfg, G):
    lam = character_from(cfg, G)
    rng = np.random.default_rng(cfg["seed"])
    reps = []
    for m in parse_range(cfg["modulus_range"]):
        try:
            reps.append(exact_level_rep(G, lam, m, int(cfg["cap"])))
        except RfdError:
            continue
    records = []
    for i in range(int(cfg["samples"])):
        g = evaluate_word(G, random_word(G, rng, int(rng.integers(0, 6))))
        coords = [int(v) for v in rng.integers(-5, 6, size=G.free_rank)]
        coords += [int(rng.integers(0, d)) for d in G.torsion]
        c = G.from_c_coordinates(coords)
        lc = lam.value(G.c_coordinates(c))
        for rho in reps:
            chk = kernel_consistency_check(G, lam, [(g @ c, 1), (g, -lc)], rho)
            records.append({"sample": i, "modulus": rho.Q.modulus, **chk.to_json()})
    statuses = [r["status"] for r in records]
    code = EXIT_FAIL if "fail" in statuses else (
        EXIT_INCONCLUSIVE if not records or "skipped" in statuses else EXIT_OK)
    return records, {"checks": len(records), "pass": statuses.count("pass"),
                     "fail": statuses.count("fail"), "skipped": statuses.count("skipped")}, code


def _separation_code(report) -> int:
    return EXIT_INCONCLUSIVE if report.outcome == "inconclusive" else EXIT_OK


def run_separate_amalgam(cfg, G):
    A = Amalgam(G, G)
    lam = character_from(cfg, G)
    try:
        w = AmalgamWord.parse(A, cfg["word"])
    except (RfdError, ValueError, KeyError) as exc:
        raise ConfigError(f"bad amalgam word: {exc}") from None
    ms = parse_range(cfg["modulus_range"])
    rep = separate_amalgam(A, w, lam, float(cfg["epsilon"]), _budget(cfg, ms, int(cfg["seeds"])),
                           cfg["seed"], int(cfg["workers"]))
    out = rep.to_json()
    return rep.attempts, {k: v for k, v in out.items() if k != "attempts"}, _separation_code(rep)


def run_separate_hnn(cfg, G):
    lam = character_from(cfg, G)
    try:
        w = HNNWord.parse(G, cfg["word"])
    except (RfdError, ValueError, KeyError) as exc:
        raise ConfigError(f"bad HNN word: {exc}") from None
    ms = parse_range(cfg["modulus_range"])
    rep = separate_hnn(G, w, lam, float(cfg["epsilon"]), _budget(cfg, ms, int(cfg["seeds"])),
                       cfg["seed"], int(cfg["workers"]))
    out = rep.to_json()
    return rep.attempts, {k: v for k, v in out.items() if k != "attempts"}, _separation_code(rep)


def run_abels(cfg, G):
    p = G.ring.param
    ms = [m for m in parse_range(cfg["modulus_range"]) if math.gcd(m, p) == 1]
    budget = Budget(max_modulus=int(cfg["sep_max_modulus"]), levels=int(cfg["levels"]),
                    seeds=int(cfg["seeds"]), cap=int(cfg["cap"]), dim_cap=10 ** 5)
    lam = character_from(cfg, G) if (cfg["theta"] or cfg.get("character")) else None
    rep = abels_experiment(p, ms, budget, lam, cfg["seed"], int(cfg["workers"]))
    out = rep.to_json()
    records = out["probe"]["records"] + [{"separation": a} for a in out["separation"]["attempts"]]
    summary = {"p": p, "probe_inside": out["probe"]["inside"], "probe_tested": out["probe"]["tested"],
               "witness": out["witness"], "separation_successes": out["separation_successes"],
               "separation_outcome": out["separation"]["outcome"],
               "not_attempted": out["not_attempted"], "metadata": out["metadata"]}
    return records, summary, rep.exit_code


RUNNERS = {
    "quotient": run_quotient, "filtration": run_filtration, "probe": run_probe,
    "char-approx": run_char_approx, "psd": run_psd, "gns": run_gns, "kernel": run_kernel,
    "separate-amalgam": run_separate_amalgam, "separate-hnn": run_separate_hnn,
    "abels": run_abels,
}


# -- entry point -------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rfdkit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--group", help="heisenberg, abels, or a JSON group file")
        sp.add_argument("--p", type=int, help="prime for the abels group")
        sp.add_argument("--modulus-range", dest="modulus_range", help="a..b")
        sp.add_argument("--epsilon", type=float)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--cap", type=int)
        sp.add_argument("--out", help="directory for results.jsonl and summary.json")
        sp.add_argument("--config", help="JSON file; its values override flags")
        sp.add_argument("--workers", type=int)
        sp.add_argument("--theta", help="character angles, comma separated ('1/3' or 0.414...)")
        sp.add_argument("--word", help="element, amalgam word or HNN word")
        sp.add_argument("--outside", help="comma separated elements outside C")
        sp.add_argument("--central", help="comma separated elements of C")
        sp.add_argument("--pair", action="append", help="two elements of C as 'a:b'")
        sp.add_argument("--levels", type=int, help="number of tolerance levels")
        sp.add_argument("--seeds", type=int)
        sp.add_argument("--samples", type=int)
        sp.add_argument("--max-size", dest="max_size", type=int)
        sp.add_argument("--sep-max-modulus", dest="sep_max_modulus", type=int)
    return parser


def _jsonable(obj):
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(f"not serializable: {type(obj)}")


def write_outputs(out: str | None, records: list, summary: dict):
    if not out:
        return
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    with open(path / "results.jsonl", "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True, default=_jsonable) + "\n")
    (path / "summary.json").write_text(json.dumps(summary, sort_keys=True, indent=2,
                                                  default=_jsonable) + "\n")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    t0 = time.perf_counter()
    try:
        cfg = resolve_config(args.command, args)
        G = load_group_from(cfg)
        records, summary, code = RUNNERS[args.command](cfg, G)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RfdError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    summary = dict(summary)
    summary["config"] = cfg
    summary["exit_code"] = code
    summary.setdefault("metadata", {})["wall_ms"] = round(1000 * (time.perf_counter() - t0), 3)
    write_outputs(cfg["out"], records, summary)
    shown = {k: v for k, v in summary.items() if k not in ("config", "metadata")}
    print(f"{args.command}: exit {code}")
    print(json.dumps(shown, sort_keys=True, indent=2, default=_jsonable))
    return code


if __name__ == "__main__":
    sys.exit(main())
