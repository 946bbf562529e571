"""Batch driver: instance generation, learning runs, solving, benchmarks.

Exit codes: 0 success, 2 invalid input, 3 query budget exhausted, 4 search
failure.  Every command is deterministic given its inputs and seed; wall
times are the only nondeterministic outputs.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time

import numpy as np

from . import __version__
from .bimatrix import (BimatrixGame, SolveConfig, lower_bound_game, make_br_oracles,
                       solve_wsne, verify_wsne)
from .cdgbs import GbsConfig, cd_gbs, cd_gbs_adversarial
from .crgbs import CrConfig, cr_gbs
from .labelling import is_eps_close
from .multiplayer import (NormalFormGame, learn_multiplayer_labellings, make_multi_oracles,
                          random_game, solve_wsne_multiplayer, verify_wsne_multiplayer)
from .partition import QueryBudgetError, UEPP, make_oracle, random_uepp

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_BUDGET = 3
EXIT_SEARCH = 4

ORACLE_KINDS = {"lex": "lexicographic", "adv": "adversarial"}


def _digest(path: str) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()[:16]


def _write(path: str, text: str) -> None:
    with open(path, "w") as fh:
        fh.write(text)
        if not text.endswith("\n"):
            fh.write("\n")


def _load_instance(path: str):
    with open(path) as fh:
        data = json.load(fh)
    if "A" in data and "b" in data:
        return "uepp", UEPP(np.array(data["A"], float), np.array(data["b"], float))
    if "A" in data and "B" in data:
        return "bimatrix", BimatrixGame(np.array(data["A"], float), np.array(data["B"], float))
    if "u" in data and "k" in data:
        return "multiplayer", NormalFormGame.from_json(json.dumps(data))
    raise ValueError("unrecognised instance file")


def cmd_gen(args) -> int:
    if args.kind == "uepp":
        inst = random_uepp(args.m, args.n, seed=args.seed,
                           duplicate_rows=args.duplicate_rows, empty_cells=args.empty_cells)
        text = inst.to_json()
    elif args.kind == "bimatrix":
        rng = np.random.default_rng(args.seed)
        game = BimatrixGame(rng.random((args.m, args.n)), rng.random((args.m, args.n)))
        text = game.to_json()
    elif args.kind == "lbgame":
        game = lower_bound_game(args.x, args.y)
        text = game.to_json()
    elif args.kind == "multiplayer":
        game = random_game(args.players, args.k, seed=args.seed)
        text = game.to_json()
    else:
        raise ValueError("unknown kind")
    _write(args.out, text)
    print(f"wrote {args.out} sha256:{_digest(args.out)}")
    return EXIT_OK


def cmd_learn(args) -> int:
    kind, inst = _load_instance(args.instance)
    if kind == "bimatrix":
        raise ValueError("learn expects a UEPP instance; use solve for games")
    oracle = make_oracle(inst, kind=ORACLE_KINDS[args.oracle], policy=args.policy,
                         seed=args.seed, budget=args.budget, record=False)
    t0 = time.perf_counter()
    if args.algo == "cdgbs":
        cfg = GbsConfig(inst.m, inst.n, args.eps, oracle_kind=ORACLE_KINDS[args.oracle],
                        seed=args.seed)
        lab = cd_gbs_adversarial(cfg, oracle) if args.oracle == "adv" else cd_gbs(cfg, oracle)
        per_level = lab.stats.per_level_uncovered
        merges = lab.stats.merges
    else:
        cfg = CrConfig(inst.m, inst.n, args.eps, oracle_kind=ORACLE_KINDS[args.oracle],
                       seed=args.seed)
        lab = cr_gbs(cfg, oracle)
        per_level = []
        merges = lab.stats.merges
    wall_ms = (time.perf_counter() - t0) * 1e3
    report = is_eps_close(lab, None, args.eps)
    manifest = {
        "version": __version__,
        "command": "learn",
        "algo": args.algo,
        "oracle": args.oracle,
        "policy": args.policy,
        "eps": args.eps,
        "seed": args.seed,
        "instance": _digest(args.instance),
        "queries": oracle.log.count,
        "per_level_uncovered": per_level,
        "merges": [list(m) for m in merges],
        "eps_close": bool(report.is_close),
        "wall_ms": wall_ms,
    }
    if args.out:
        _write(args.out, lab.to_json())
        _write(args.out + ".manifest.json", json.dumps(manifest, indent=1))
    print(json.dumps({k: manifest[k] for k in
                      ("queries", "eps_close", "merges", "per_level_uncovered")}))
    return EXIT_OK if report.is_close else EXIT_SEARCH


def cmd_solve(args) -> int:
    kind, inst = _load_instance(args.instance)
    t0 = time.perf_counter()
    if kind == "bimatrix":
        oracles = make_br_oracles(inst, kind=ORACLE_KINDS[args.oracle], policy=args.policy,
                                  seed=args.seed, budget=args.budget)
        cert = solve_wsne(oracles, args.eps, SolveConfig(seed=args.seed))
        check = verify_wsne(inst, cert.u, cert.v, args.eps)
        cert.row_regrets, cert.col_regrets = check.row_regrets, check.col_regrets
        cert.valid = check.valid
        audit_clean = oracles.audit.clean
        queries = cert.queries_row + cert.queries_col
    elif kind == "multiplayer":
        oracles, audit = make_multi_oracles(inst, kind=ORACLE_KINDS[args.oracle],
                                            policy=args.policy, seed=args.seed,
                                            budget=args.budget)
        labs, _net = learn_multiplayer_labellings(oracles, args.eps)
        queries = sum(o.log.count for o in oracles)
        cert = solve_wsne_multiplayer(labs, inst, args.eps, queries=queries)
        check = verify_wsne_multiplayer(inst, cert.profile, args.eps)
        cert.regrets, cert.valid = check.regrets, check.valid
        audit_clean = audit.clean
    else:
        raise ValueError("solve expects a game instance")
    wall_ms = (time.perf_counter() - t0) * 1e3
    payload = json.loads(cert.to_json())
    payload.update({"version": __version__, "seed": args.seed, "queries": queries,
                    "audit_clean": audit_clean, "wall_ms": wall_ms})
    if args.out:
        _write(args.out, json.dumps(payload, indent=1))
    print(json.dumps({"valid": cert.valid, "queries": queries, "audit_clean": audit_clean}))
    if not audit_clean:
        return EXIT_INVALID
    return EXIT_OK if cert.valid else EXIT_SEARCH


def _bench_row(family: str, eps: float, seed: int, args):
    t0 = time.perf_counter()
    if family == "lbgame":
        rng = np.random.default_rng(seed)
        game = lower_bound_game(float(rng.uniform(0.05, 0.95)), float(rng.uniform(0.05, 0.95)))
        oracles = make_br_oracles(game, seed=seed)
        cert = solve_wsne(oracles, eps, SolveConfig(seed=seed))
        ok = verify_wsne(game, cert.u, cert.v, eps).valid
        q = cert.queries_row + cert.queries_col
        m, n = game.m, game.n
    elif family == "bimatrix":
        rng = np.random.default_rng(seed)
        game = BimatrixGame(rng.random((args.m, args.n)), rng.random((args.m, args.n)))
        oracles = make_br_oracles(game, seed=seed)
        cert = solve_wsne(oracles, eps, SolveConfig(seed=seed))
        ok = verify_wsne(game, cert.u, cert.v, eps).valid
        q = cert.queries_row + cert.queries_col
        m, n = game.m, game.n
    elif family == "uepp":
        inst = random_uepp(args.m, args.n, seed=seed)
        oracle = make_oracle(inst, kind="lexicographic", seed=seed, record=False)
        lab = cd_gbs(GbsConfig(inst.m, inst.n, eps, seed=seed), oracle)
        ok = is_eps_close(lab, None, eps).is_close
        q = oracle.log.count
        m, n = inst.m, inst.n
    elif family == "multiplayer":
        game = random_game(args.players, args.k, seed=seed)
        oracles, _ = make_multi_oracles(game, seed=seed)
        labs, _net = learn_multiplayer_labellings(oracles, eps)
        q = sum(o.log.count for o in oracles)
        cert = solve_wsne_multiplayer(labs, game, eps, queries=q)
        ok = verify_wsne_multiplayer(game, cert.profile, eps).valid
        m, n = game.n, game.k
    else:
        raise ValueError("unknown family")
    return {"family": family, "m": m, "n": n, "eps": eps, "seed": seed,
            "queries": q, "wall_ms": (time.perf_counter() - t0) * 1e3, "verified": bool(ok)}


def cmd_bench(args) -> int:
    eps_list = [float(e) for e in args.eps_list.split(",")] if args.eps_list else []
    seeds = [int(s) for s in args.seeds.split(",")] if args.seeds else []
    rows = []
    any_ok = False
    for eps in eps_list:
        for seed in seeds:
            try:
                row = _bench_row(args.family, eps, seed, args)
                any_ok = True
            except Exception as exc:   # per-row failures are recorded, not fatal
                row = {"family": args.family, "m": args.m, "n": args.n, "eps": eps,
                       "seed": seed, "queries": -1, "wall_ms": -1.0, "verified": False,
                       "error": str(exc)[:60]}
            rows.append(row)
    header = ["family", "m", "n", "eps", "seed", "queries", "wall_ms", "verified"]
    out = args.out or "bench.csv"
    with open(out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=header, extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    print(f"wrote {out} ({len(rows)} rows)")
    if rows and not any_ok:
        return EXIT_SEARCH
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="partlearn",
                                description="learn polytope partitions; compute approximate equilibria")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate an instance file")
    g.add_argument("--kind", required=True, choices=["uepp", "bimatrix", "lbgame", "multiplayer"])
    g.add_argument("--m", type=int, default=2)
    g.add_argument("--n", type=int, default=3)
    g.add_argument("--players", type=int, default=3)
    g.add_argument("--k", type=int, default=2)
    g.add_argument("--x", type=float, default=0.5)
    g.add_argument("--y", type=float, default=0.5)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--duplicate-rows", type=int, default=0)
    g.add_argument("--empty-cells", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    l = sub.add_parser("learn", help="learn a labelling of a UEPP instance")
    l.add_argument("--instance", required=True)
    l.add_argument("--algo", default="cdgbs", choices=["cdgbs", "crgbs"])
    l.add_argument("--oracle", default="lex", choices=["lex", "adv"])
    l.add_argument("--policy", default="seeded", choices=["seeded", "maxindex", "antilearner"])
    l.add_argument("--eps", type=float, required=True)
    l.add_argument("--seed", type=int, default=0)
    l.add_argument("--budget", type=int, default=None)
    l.add_argument("--out", default=None)
    l.set_defaults(func=cmd_learn)

    s = sub.add_parser("solve", help="compute a verified eps-WSNE from best-response queries")
    s.add_argument("--instance", required=True)
    s.add_argument("--oracle", default="adv", choices=["lex", "adv"])
    s.add_argument("--policy", default="seeded", choices=["seeded", "maxindex", "antilearner"])
    s.add_argument("--eps", type=float, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--budget", type=int, default=None)
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("bench", help="sweep instances and write a CSV of query counts")
    b.add_argument("--family", required=True, choices=["lbgame", "uepp", "bimatrix", "multiplayer"])
    b.add_argument("--eps-list", default="")
    b.add_argument("--seeds", default="")
    b.add_argument("--m", type=int, default=2)
    b.add_argument("--n", type=int, default=3)
    b.add_argument("--players", type=int, default=3)
    b.add_argument("--k", type=int, default=2)
    b.add_argument("--out", default=None)
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except QueryBudgetError:
        print("error: query budget exhausted", file=sys.stderr)
        return EXIT_BUDGET
    except RuntimeError as exc:
        if "fixed point not found" in str(exc):
            print(f"error: {exc}; retry with a finer grid", file=sys.stderr)
            return EXIT_SEARCH
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SEARCH
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
