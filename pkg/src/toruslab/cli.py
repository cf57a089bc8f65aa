"""``toruslab`` command-line experiments.

Every run writes ``report.json`` (versioned schema) into the output directory,
plus CSV tables and PGM images where relevant.  Exit status: 0 on success,
2 when the result is inconclusive at the chosen resolution, 1 on error.
Outputs carry no timestamps or host names, so identical arguments reproduce
byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import grid as G
from . import lab, loops
from .endo import check_conservative, load_endomorphism, make_counterexample, min_abs_jacobian
from .hetzel import hetzel_statistic
from .linear import classify, coset_representatives, is_all_transitive_class, parse_matrix

SCHEMA_VERSION = 1
COMMANDS = ("classify", "transitivity", "counterexample", "invariant-demo", "hetzel", "loop-lemma")
EXIT_OK, EXIT_ERROR, EXIT_INCONCLUSIVE = 0, 1, 2


@dataclass
class ExperimentConfig:
    command: str
    matrix: str | None = None
    map_source: str | None = None
    resolutions: list[int] = field(default_factory=list)
    steps: int | None = None
    samples: int | None = None
    seed: int = 0
    out: str = "toruslab-out"
    max_iter: int = 1000
    cell_samples: int = 4
    eps: float = 0.05
    degree: int = 1
    max_n: int = 5
    mode: str = "exact"


# ------------------------------------------------------------------- output


def write_atomic(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json_default(obj):
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")


def write_json(path: Path, doc) -> None:
    write_atomic(path, (json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n").encode())


def write_csv(path: Path, header: list[str], rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    write_atomic(path, buf.getvalue().encode())


def _report(cfg: ExperimentConfig, results: dict, status: str) -> dict:
    config = asdict(cfg)
    return {"schema_version": SCHEMA_VERSION, "command": cfg.command, "status": status,
            "config": config, "results": results}


# ----------------------------------------------------------------- commands


def _cmd_classify(cfg: ExperimentConfig, out: Path) -> int:
    if cfg.matrix is not None:
        M = parse_matrix(cfg.matrix)
    elif cfg.map_source is not None:
        M = load_endomorphism(cfg.map_source).linear
    else:
        raise ValueError("classify needs --matrix or --map/--preset")
    sc = classify(M)
    results = {
        "matrix": M.rows(),
        "classification": sc.to_json(),
        "all_transitive": is_all_transitive_class(M) if abs(M.det) >= 2 else None,
        "coset_representatives": [list(v) for v in coset_representatives(M)] if M.det else None,
    }
    write_json(out / "report.json", _report(cfg, results, "ok"))
    return EXIT_OK


def _cmd_transitivity(cfg: ExperimentConfig, out: Path) -> int:
    f = load_endomorphism(cfg.map_source or "expanding-shear")
    resolutions = cfg.resolutions or [16, 32, 64]
    rep = lab.transitivity_report(f, tuple(resolutions), cfg.cell_samples, cfg.max_iter,
                                  cfg.steps if cfg.steps is not None else 100_000)
    write_csv(out / "transitivity.csv",
              ["N", "strongly_connected", "scc_count", "pair", "confirmed_at", "coverage"],
              [[r["N"], r["strongly_connected"], r["scc_count"], r["pair"], r["confirmed_at"], r["coverage"]]
               for r in rep.per_resolution])
    if rep.witness is not None:
        write_atomic(out / "witness_U.pgm", rep.witness[0].to_pgm())
        write_atomic(out / "witness_V.pgm", rep.witness[1].to_pgm())
    status = "inconclusive" if rep.verdict == "undetermined" else "ok"
    write_json(out / "report.json", _report(cfg, {"map": f.to_json(), "report": rep.to_json()}, status))
    return EXIT_INCONCLUSIVE if status == "inconclusive" else EXIT_OK


def _cmd_counterexample(cfg: ExperimentConfig, out: Path) -> int:
    f = make_counterexample(cfg.eps, cfg.degree)
    starts_n = cfg.samples if cfg.samples is not None else 10
    steps = cfg.steps if cfg.steps is not None else 1_000_000
    resolutions = cfg.resolutions or [64]
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    starts = rng.random((starts_n, 2))
    cons = check_conservative(f, 100, cfg.seed, 1e-6)
    coverage_N = resolutions[-1]
    cov = lab.orbit_coverages(f, starts, steps, coverage_N)
    sccs = []
    for N in resolutions:
        r = lab.scc_transitivity(lab.build_symbolic_image(f, N, cfg.cell_samples))
        sccs.append({"N": N, "strongly_connected": r.strongly_connected, "scc_count": r.scc_count})
    write_csv(out / "coverage.csv", ["start", "x", "y", "steps", "N", "coverage"],
              [[k, float(s[0]), float(s[1]), steps, coverage_N, float(c)] for k, (s, c) in enumerate(zip(starts, cov))])
    results = {
        "map": f.to_json(),
        "min_jacobian": min_abs_jacobian(f),
        "conservativity": cons.to_json(),
        "coverage": [float(c) for c in cov],
        "symbolic_image": sccs,
    }
    write_json(out / "report.json", _report(cfg, results, "ok"))
    return EXIT_OK


def _reference_strips(N: int) -> G.GridOpenSet:
    """Grid version of T x ((0, 1/4) u (1/2, 3/4))."""
    q = N // 4
    return G.GridOpenSet.from_rows(N, list(range(0, q)) + list(range(2 * q, 3 * q)))


def _cmd_invariant_demo(cfg: ExperimentConfig, out: Path) -> int:
    source = cfg.map_source or "example-2x-halfshift"
    f = load_endomorphism(source)
    N = cfg.resolutions[0] if cfg.resolutions else 8
    search = lab.find_invariant_pair(f, N, max_iter=cfg.max_iter, samples_per_cell=cfg.cell_samples)
    results = {"map": f.to_json(), "N": N, "search": search.to_json()}
    if search.status == "found":
        U, V = search.U, search.V
        write_atomic(out / "U.pgm", U.to_pgm())
        write_atomic(out / "V.pgm", V.to_pgm())
        comps = []
        for C in G.components(U):
            comps.append({
                "cells": len(C),
                "winding": G.winding_class(C).to_json(),
                "simply_connected_lift": G.simply_connected_lift_check(C),
                "period": lab.component_period(f, U, C, 16, cfg.cell_samples),
            })
        results["verification"] = {
            "U_strictly_invariant": lab.verify_strict_invariance(f, U, cfg.cell_samples),
            "V_strictly_invariant": lab.verify_strict_invariance(f, V, cfg.cell_samples),
            "complementary": G.perp(U) == V and G.perp(V) == U,
        }
        results["components"] = comps
    if source == "example-2x-halfshift" and N % 4 == 0:
        S = _reference_strips(N)
        T = S.complement()
        write_atomic(out / "strips_U.pgm", S.to_pgm())
        write_atomic(out / "strips_V.pgm", T.to_pgm())
        results["reference_strips"] = {
            "U": S.to_json(),
            "V": T.to_json(),
            "U_strictly_invariant": lab.verify_strict_invariance(f, S, cfg.cell_samples),
            "V_strictly_invariant": lab.verify_strict_invariance(f, T, cfg.cell_samples),
            "periods": [lab.component_period(f, S, C, 16, cfg.cell_samples) for C in G.components(S)],
        }
    status = "inconclusive" if search.status == "inconclusive" else "ok"
    write_json(out / "report.json", _report(cfg, results, status))
    return EXIT_INCONCLUSIVE if status == "inconclusive" else EXIT_OK


def _cmd_hetzel(cfg: ExperimentConfig, out: Path) -> int:
    samples = cfg.samples if cfg.samples is not None else 100_000
    table = hetzel_statistic(cfg.max_n, cfg.mode, samples, cfg.seed)
    rows = []
    for N, p in table:
        if isinstance(p, Fraction):
            rows.append([N, cfg.mode, float(p), p.numerator, p.denominator])
        else:
            rows.append([N, cfg.mode, p, "", ""])
    write_csv(out / "hetzel.csv", ["N", "mode", "probability", "numerator", "denominator"], rows)
    results = {"table": [{"N": N, "probability": float(p),
                          "exact": f"{p.numerator}/{p.denominator}" if isinstance(p, Fraction) else None}
                         for N, p in table]}
    write_json(out / "report.json", _report(cfg, results, "ok"))
    return EXIT_OK


def _cmd_loop_lemma(cfg: ExperimentConfig, out: Path) -> int:
    pairs = cfg.samples if cfg.samples is not None else 1000
    ind_rng, par_rng = (np.random.default_rng(s) for s in np.random.SeedSequence(cfg.seed).spawn(2))
    rows, failures, disjoint_parallel = [], 0, 0
    for k in range(pairs):
        g, s = loops.independent_pair(ind_rng)
        hit = loops.loops_intersect(g, s)
        failures += not hit
        rows.append(["independent", k, f"{g.klass.p} {g.klass.q}", f"{s.klass.p} {s.klass.q}", hit])
    for k in range(pairs):
        g, s = loops.parallel_pair(par_rng)
        hit = loops.loops_intersect(g, s)
        disjoint_parallel += not hit
        rows.append(["parallel", k, f"{g.klass.p} {g.klass.q}", f"{s.klass.p} {s.klass.q}", hit])
    write_csv(out / "loop_pairs.csv", ["kind", "index", "class_gamma", "class_sigma", "intersect"], rows)
    results = {"pairs": pairs, "independent_failures": failures, "parallel_disjoint": disjoint_parallel}
    write_json(out / "report.json", _report(cfg, results, "ok" if failures == 0 else "failed"))
    if failures:
        raise RuntimeError(f"{failures} independent loop pairs did not intersect")
    return EXIT_OK


_HANDLERS = {
    "classify": _cmd_classify,
    "transitivity": _cmd_transitivity,
    "counterexample": _cmd_counterexample,
    "invariant-demo": _cmd_invariant_demo,
    "hetzel": _cmd_hetzel,
    "loop-lemma": _cmd_loop_lemma,
}


def run_preset(name: str, config: ExperimentConfig) -> int:
    if name not in _HANDLERS:
        raise ValueError(f"unknown preset {name!r}")
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    return _HANDLERS[name](config, out)


# --------------------------------------------------------------------- main


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # exit code 2 is reserved for inconclusive runs
        self.exit(EXIT_ERROR, f"toruslab: error: usage: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="toruslab", description="Transitivity experiments for toral endomorphisms.")
    p.add_argument("preset", metavar="PRESET", help=f"one of: {', '.join(COMMANDS)}")
    p.add_argument("--matrix", help='integer matrix, "a b; c d" or [[a,b],[c,d]]')
    src = p.add_mutually_exclusive_group()
    src.add_argument("--map", dest="map_file", help="endomorphism JSON file")
    src.add_argument("--preset", dest="map_preset", help="named endomorphism preset")
    p.add_argument("--resolution", help="grid resolution(s), comma separated")
    p.add_argument("--steps", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="toruslab-out")
    p.add_argument("--max-iter", type=int, default=1000)
    p.add_argument("--cell-samples", type=int, default=4, help="samples per cell side for symbolic images")
    p.add_argument("--eps", type=float, default=0.05, help="counterexample perturbation size")
    p.add_argument("--degree", type=int, default=1, choices=(1, 2), help="counterexample f2 degree")
    p.add_argument("--max-n", type=int, default=5, help="largest entry bound for hetzel")
    p.add_argument("--mode", default="exact", choices=("exact", "montecarlo"))
    return p


def config_from_args(args) -> ExperimentConfig:
    if args.preset not in COMMANDS:
        raise ValueError(f"unknown preset {args.preset!r}; choose from {', '.join(COMMANDS)}")
    resolutions = []
    if args.resolution:
        try:
            resolutions = [int(v) for v in args.resolution.split(",") if v.strip()]
        except ValueError:
            raise ValueError(f"bad --resolution {args.resolution!r}") from None
    return ExperimentConfig(
        command=args.preset,
        matrix=args.matrix,
        map_source=args.map_file or args.map_preset,
        resolutions=resolutions,
        steps=args.steps,
        samples=args.samples,
        seed=args.seed,
        out=args.out,
        max_iter=args.max_iter,
        cell_samples=args.cell_samples,
        eps=args.eps,
        degree=args.degree,
        max_n=args.max_n,
        mode=args.mode,
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        return run_preset(cfg.command, cfg)
    except Exception as exc:  # one-line machine-parsable diagnostic
        print(f"toruslab: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
