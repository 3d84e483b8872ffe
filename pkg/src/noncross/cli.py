"""``noncross`` command line: simulate | project | bound | asymptotics | verify.

Exit codes: 0 ok, 1 check failure, 2 usage or I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from pathlib import Path

from .bounds import ld_slope, theorem1_upper_bound
from .cones import project_v2plus
from .config import ConfigError, RunConfig, load_config
from .field_sim import Method, estimate_importance, estimate_plain
from .grid import DomainError, GridError
from .rkhs import rkhs_to_json_dict

EXIT_OK, EXIT_CHECK, EXIT_USAGE = 0, 1, 2

BATCH_HEADER = ("gamma", "n", "method", "p_hat", "std_err", "seed")


class UsageError(Exception):
    pass


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def atomic_write(path: str | Path, text: str) -> None:
    """Write to a temporary file in the target directory, then rename over ``path``."""
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


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        atomic_write(out, text)


def _provenance(cfg: RunConfig) -> dict:
    return {"config_hash": cfg.hash(), "seed": cfg.estimator.seed}


def _csv_text(rows, header) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


# --- commands -----------------------------------------------------------------------


def cmd_simulate(cfg: RunConfig, out: str | None) -> int:
    f, u = cfg.trend_fn(), cfg.boundary_field()
    e = cfg.estimator
    method = Method(e.method)
    if method is Method.PLAIN:
        est = estimate_plain(f, u, e.n_samples, e.seed, threads=cfg.threads)
    else:
        if e.shift not in ("projection", "none"):
            raise ConfigError(f"estimator.shift must be 'projection' or 'none', got {e.shift!r}")
        shift = None if e.shift == "projection" else 0.0 * f
        est = estimate_importance(f, u, e.n_samples, e.seed, shift=shift, threads=cfg.threads)
    fmt = cfg.output.format
    if fmt == "json":
        _emit(dumps({**est.to_json_dict(), **_provenance(cfg)}), out)
    elif fmt == "csv":
        row = (cfg.trend.scale, cfg.grid.n, method.value, repr(est.p_hat), repr(est.std_err), e.seed)
        if out is not None and Path(out).exists():
            old = Path(out).read_text()
            if not old.startswith(",".join(BATCH_HEADER)):
                raise UsageError(f"{out}: existing file is not a batch CSV")
            text = old + _csv_text([row], BATCH_HEADER).split("\n", 1)[1]
        else:
            text = _csv_text([row], BATCH_HEADER)
        _emit(text, out)
    else:
        raise ConfigError(f"output.format must be json or csv, got {fmt!r}")
    return EXIT_OK


def cmd_project(cfg: RunConfig, out: str | None) -> int:
    f = cfg.trend_fn()
    r = project_v2plus(f, tol=cfg.tolerances.projection)
    doc = {
        "projection": rkhs_to_json_dict(r.projection),
        "polar": rkhs_to_json_dict(r.polar_part),
        "norm_sq": r.norm_sq(),
        "polar_norm_sq": r.polar_part.norm_sq(),
        "iterations": r.iterations,
        "residual": r.residual,
        "orthogonality_defect": r.orthogonality_defect,
        **_provenance(cfg),
    }
    _emit(dumps(doc), out)
    return EXIT_OK


def cmd_bound(cfg: RunConfig, out: str | None) -> int:
    rep = theorem1_upper_bound(
        cfg.trend_fn(),
        cfg.boundary_field(),
        residual_mode=cfg.bound.residual_mode,
        n_samples=cfg.estimator.n_samples,
        seed=cfg.estimator.seed,
        p0_samples=cfg.bound.p0_samples,
        threads=cfg.threads,
        tol=cfg.tolerances.conditions,
    )
    _emit(dumps({**rep.to_json_dict(), **_provenance(cfg)}), out)
    return EXIT_OK


def cmd_asymptotics(cfg: RunConfig, out: str | None) -> int:
    res = ld_slope(
        cfg.trend_fn(),
        cfg.boundary_field(),
        cfg.asymptotics.gammas,
        n_samples=cfg.estimator.n_samples,
        seed=cfg.estimator.seed,
        method=cfg.asymptotics.method,
        paired=cfg.asymptotics.paired,
        threads=cfg.threads,
    )
    rows = [(repr(r.gamma), repr(r.ln_p), *map(repr, r.ln_ci())) for r in res.rows]
    table = _csv_text(rows, ("gamma", "ln_p_hat", "ci_lo", "ci_hi"))
    summary = dumps({**res.summary(), **_provenance(cfg)})
    if out is None:
        sys.stdout.write(table + summary)
    else:
        atomic_write(out, table)
        atomic_write(summary_path(out), summary)
    return EXIT_OK


def summary_path(out: str | Path) -> Path:
    out = Path(out)
    return out.with_name(out.stem + ".summary.json")


def cmd_verify(cfg: RunConfig, out: str | None) -> int:
    from .verify import run_suites

    suites = run_suites(cfg)
    ok = all(s.passed for s in suites)
    doc = {"passed": ok, "suites": [s.to_json_dict() for s in suites], **_provenance(cfg)}
    _emit(dumps(doc), out)
    for s in suites:
        for name in s.failures():
            print(f"FAILED {s.name}: {name}", file=sys.stderr)
    return EXIT_OK if ok else EXIT_CHECK


COMMANDS = {
    "simulate": cmd_simulate,
    "project": cmd_project,
    "bound": cmd_bound,
    "asymptotics": cmd_asymptotics,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="noncross", description="Boundary non-crossing probabilities of additive Wiener fields.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", metavar="PATH", help="JSON run configuration (defaults apply when omitted)")
    p.add_argument("--seed", type=int, metavar="U64", help="override estimator.seed")
    p.add_argument("--out", metavar="PATH", help="output file (stdout when omitted)")
    p.add_argument("--threads", type=int, metavar="K", help="override threads")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise UsageError("--seed must be an unsigned 64-bit integer")
            cfg.estimator.seed = args.seed
        if args.threads is not None:
            if args.threads < 1:
                raise UsageError("--threads must be at least 1")
            cfg.threads = args.threads
        out = args.out if args.out is not None else cfg.output.path
        return COMMANDS[args.command](cfg, out)
    except (FileNotFoundError, IsADirectoryError, PermissionError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, UsageError, GridError, DomainError, KeyError, TypeError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
