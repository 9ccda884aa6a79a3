"""``stokes-shrink <command> --config <path> [--block.key=value ...]``"""
from __future__ import annotations

import argparse
import shutil
import sys
import time
from pathlib import Path

from ..errors import CacheCorrupt, CommandUnknown, ConfigInvalid, StokesShrinkError
from .cache import ResultRecord, cache_dir, cache_lookup, experiment_id, store
from .commands import COMMANDS, get_command, json_bytes
from .config import ExperimentConfig, load_config


# per-command short flags, each a synonym for one dotted config key
FLAG_ALIASES = {
    "eigens": {"eps": "geometry.eps", "kmax": "solver.k_max", "nr": "solver.N_r",
               "nmax": "solver.n_max"},
    "sweep": {"eps-list": "sweep.eps_list", "kmax": "sweep.k_max", "nr": "sweep.N_r",
              "nmax": "solver.n_max"},
    "semigroup-gap": {"eps-list": "semigroup.eps_list", "T": "semigroup.T",
                      "theta": "semigroup.thetas"},
    "ns-run": {"eps": "geometry.eps", "domain": "ns.domain", "nu": "ns.nu", "T": "ns.T",
               "N": "ns.N", "init": "ns.init"},
    "ns-sweep": {"eps-list": "ns.eps_list", "nu": "ns.nu", "T": "ns.T", "N": "ns.N",
                 "init": "ns.init"},
}


def expand_aliases(command: str, extra) -> list:
    """Rewrite short flags such as ``--eps=1e-3`` or ``--init=eig:2`` as dotted overrides."""
    table = FLAG_ALIASES.get(command, {})
    out = []
    for arg in extra:
        key, raw = arg.lstrip("-").split("=", 1)
        if key not in table:
            out.append(arg)
        elif key == "init" and ":" in raw:
            kind, num = raw.split(":", 1)
            sub = "k" if kind == "eig" else "seed"
            out += [f"--ns.init={kind}", f"--ns.{sub}={num}"]
        elif key == "theta":
            names = []
            for item in raw.split(","):
                kind, _, num = item.partition(":")
                names.append(kind + num if kind == "eig" else kind)
                if kind == "random" and num:
                    out.append(f"--seed={num}")
            out.append(f"--{table[key]}=[{', '.join(names)}]")
        else:
            out.append(f"--{table[key]}={raw}")
    return out


def run(config, command: str, use_cache: bool = True, cache_root=None,
        out_dir=None) -> ResultRecord:
    """Execute (or fetch from cache) one command and copy its payloads to the output directory."""
    fn = get_command(command)
    ec = config if isinstance(config, ExperimentConfig) else load_config(config)
    rid = experiment_id(ec.canonical(), command)
    root = Path(cache_root) if cache_root is not None else cache_dir()
    rec = cache_lookup(rid, root) if use_cache else None
    if rec is None:
        t0 = time.perf_counter()
        tables, summary = fn(ec)
        summary = dict(summary, id=rid, command=command)
        fmts = set(ec.block("output")["formats"])
        files = {k: v for k, v in tables.items() if "csv" in fmts}
        if "json" in fmts:
            files["summary.json"] = json_bytes(summary)
        rec = ResultRecord(rid, command, {}, time.perf_counter() - t0, summary)
        rec = store(rec, files, root)
    dest = Path(out_dir if out_dir is not None else ec.block("output")["directory"]) / command
    dest.mkdir(parents=True, exist_ok=True)
    payloads = {}
    for name, src in rec.payloads.items():
        shutil.copyfile(src, dest / name)
        payloads[name] = str(dest / name)
    rec.payloads = payloads
    return rec


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="stokes-shrink",
                                 description="Stokes and Navier-Stokes experiments on a disk with a shrinking hole.")
    ap.add_argument("command", help="one of: " + ", ".join(COMMANDS))
    ap.add_argument("--config", default=None, help="YAML or JSON experiment config (defaults if omitted)")
    ap.add_argument("--out", default=None, help="output directory (overrides output.directory)")
    ap.add_argument("--no-cache", action="store_true", help="recompute even if a cached record exists")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args, extra = ap.parse_known_args(argv)
    bad = [x for x in extra if not (x.startswith("--") and "=" in x)]
    if bad:
        ap.error(f"unrecognised arguments: {' '.join(bad)}")
    try:
        ec = load_config(args.config, expand_aliases(args.command, extra))
        rec = run(ec, args.command, use_cache=not args.no_cache, out_dir=args.out)
    except (ConfigInvalid, CommandUnknown) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except CacheCorrupt as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except StokesShrinkError as exc:
        print(f"error in {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 4
    s = rec.summary
    status = "PASS" if rec.passed else "FAIL"
    print(f"{args.command} {rec.id[:12]} {status} failures={s.get('failures', 0)}"
          + (" (cached)" if rec.cached else ""))
    for name in s.get("failed", []):
        print(f"  failed: {name}")
    for name, path in sorted(rec.payloads.items()):
        print(f"  {name}: {path}")
    return 0 if rec.passed else 1


if __name__ == "__main__":
    sys.exit(main())
