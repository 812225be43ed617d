"""Batch command-line interface.

    python -m nctorus product a.json b.json --theta 0.25 --out ab.json
    python -m nctorus pair --projection powers-rieffel --cocycle tau --theta-grid 0.25,0.3333,0.7
    python -m nctorus verify [--smoke] [--inject-phase-bug]

Every flag can also be set through an environment variable NCTORUS_<FLAG>,
e.g. NCTORUS_THETA=0.3 or NCTORUS_THETA_GRID=0.25,0.5. Command-line values win.
Exit codes: 0 success, 2 validation failure, 3 input error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Sequence

from . import graded as G

ENV_PREFIX = "NCTORUS_"
EXIT_OK, EXIT_VALIDATION, EXIT_INPUT = 0, 2, 3
CSV_COLUMNS = ("theta", "value_re", "value_im", "normalized", "integer_distance")


class InputError(Exception):
    pass


@dataclass
class RunConfig:
    theta: float = 0.25
    theta_grid: List[float] = field(default_factory=lambda: [0.25, 1 / 3, 0.7])
    cutoff: int = 24
    fourier_cutoff: int = 64
    window: int = 8
    tol: float = 1e-6
    format: str = "json"
    seed: int = 0
    out: Optional[str] = None

    def validate(self) -> None:
        vals = [self.theta] + list(self.theta_grid)
        if not all(math.isfinite(v) for v in vals):
            raise InputError("theta values must be finite")
        if self.tol <= 0:
            raise InputError("tolerance must be positive")
        if self.cutoff < 1 or self.fourier_cutoff < 1 or self.window < 1:
            raise InputError("cutoffs and window must be positive")
        if self.format not in ("json", "csv"):
            raise InputError("format must be json or csv")


def _grid(text: str) -> List[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad theta grid {text!r}") from exc


def _env(name: str, default):
    return os.environ.get(ENV_PREFIX + name.upper().replace("-", "_"), default)


def _common(parser: argparse.ArgumentParser) -> None:
    d = RunConfig()
    parser.add_argument("--theta", type=float, default=_env("theta", d.theta))
    parser.add_argument("--theta-grid", type=_grid, default=_env("theta_grid", ",".join(map(str, d.theta_grid))))
    parser.add_argument("--cutoff", type=int, default=_env("cutoff", d.cutoff), help="spectral cutoff N")
    parser.add_argument("--fourier-cutoff", type=int, default=_env("fourier_cutoff", d.fourier_cutoff),
                        help="Fourier cutoff M of projections")
    parser.add_argument("--window", type=int, default=_env("window", d.window), help="crossed-product window K = L")
    parser.add_argument("--tol", type=float, default=_env("tol", d.tol))
    parser.add_argument("--format", choices=("json", "csv"), default=_env("format", d.format))
    parser.add_argument("--seed", type=int, default=_env("seed", d.seed))
    parser.add_argument("--out", default=_env("out", None), help="output file (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nctorus", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    pp = sub.add_parser("product", help="deformed product of two element files")
    pp.add_argument("a")
    pp.add_argument("b")
    pp.add_argument("--check-commutative", action="store_true",
                    help="also verify a*b = b*a at theta = 0 (exit 2 on failure)")
    _common(pp)

    pa = sub.add_parser("pair", help="pair a cocycle with a projection across the theta grid")
    pa.add_argument("--projection", default="powers-rieffel",
                    help="powers-rieffel, bott, trivial, or a matrix JSON file")
    pa.add_argument("--cocycle", default="tau", choices=("tau", "ch2", "combined", "iitau"))
    _common(pa)

    pv = sub.add_parser("verify", help="run the invariant suite and acceptance criteria")
    pv.add_argument("--smoke", action="store_true", help="echo the configuration and exit")
    pv.add_argument("--inject-phase-bug", action="store_true",
                    help="run the associativity criterion with a corrupted phase")
    pv.add_argument("--only", type=str, default=None, help="comma-separated criterion numbers")
    _common(pv)
    return p


def _config(ns) -> RunConfig:
    grid = ns.theta_grid if isinstance(ns.theta_grid, list) else _grid(ns.theta_grid)
    cfg = RunConfig(theta=float(ns.theta), theta_grid=grid, cutoff=int(ns.cutoff),
                    fourier_cutoff=int(ns.fourier_cutoff), window=int(ns.window), tol=float(ns.tol),
                    format=ns.format, seed=int(ns.seed), out=ns.out)
    cfg.validate()
    return cfg


def _emit(text: str, cfg: RunConfig) -> None:
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load(path: str):
    try:
        return G.load_json(path)
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def cmd_product(ns, cfg: RunConfig) -> int:
    a, b = _load(ns.a), _load(ns.b)
    if isinstance(a, G.MatrixGradedElement) or isinstance(b, G.MatrixGradedElement):
        if not (isinstance(a, G.MatrixGradedElement) and isinstance(b, G.MatrixGradedElement)):
            raise InputError("cannot multiply a matrix by a scalar element")
        res = a.product(b, cfg.theta)
        rec = G.matrix_to_json(res)
    else:
        res = G.deformed_product(a, b, cfg.theta)
        rec = G.element_to_json(res)
    _emit(json.dumps(rec, indent=1) + "\n", cfg)
    if ns.check_commutative:
        if isinstance(a, G.MatrixGradedElement):
            raise InputError("commutativity check is for scalar elements")
        d = G.deformed_product(a, b, 0.0).dist(G.deformed_product(b, a, 0.0))
        sys.stderr.write(f"commutativity defect at theta=0: {d:.3e}\n")
        if d > cfg.tol:
            return EXIT_VALIDATION
    return EXIT_OK


def _projection(name: str, theta: float, cfg: RunConfig):
    from .projections import bott_projection, powers_rieffel
    if name == "powers-rieffel":
        return powers_rieffel(theta, cfg.fourier_cutoff)
    if name == "bott":
        return bott_projection(min(cfg.fourier_cutoff, 8))
    if name == "trivial":
        return G.MatrixGradedElement.identity(1)
    obj = _load(name)
    return obj if isinstance(obj, G.MatrixGradedElement) else G.MatrixGradedElement.scalar(obj)


def cmd_pair(ns, cfg: RunConfig) -> int:
    from .cocycles import TAU, ProjectionError, chern_cochain, combined_pairing, double_contraction, k0_pairing
    rows = []
    for th in cfg.theta_grid:
        p = _projection(ns.projection, th, cfg)
        # projections over the commutative torus are paired at theta = 0
        commutative = ns.projection == "bott" or ns.cocycle == "combined"
        tol = max(cfg.tol, 1e-3) if ns.projection == "bott" else cfg.tol
        try:
            if ns.cocycle == "tau":
                r = k0_pairing(TAU, p, 0.0 if commutative else th, tol=tol)
            elif ns.cocycle == "iitau":
                r = k0_pairing(double_contraction(TAU), p, 0.0 if commutative else th, tol=tol)
            elif ns.cocycle == "combined":
                r = combined_pairing(p, th, tol=tol)
            else:
                r = k0_pairing(chern_cochain(2), p, 0.0 if commutative else th, N=cfg.cutoff, tol=tol)
        except ProjectionError as exc:
            sys.stderr.write(f"theta={th}: {exc}\n")
            return EXIT_VALIDATION
        rec = r.to_json()
        rec["theta"] = th
        rows.append(rec)
    ints = {round(r["normalized"]) for r in rows}
    stable = len(ints) == 1 and all(r["integer_distance"] < 5e-3 for r in rows)
    if cfg.format == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        text = buf.getvalue()
    else:
        text = json.dumps({"projection": ns.projection, "cocycle": ns.cocycle, "rows": rows,
                           "integer_stable": stable}, indent=1) + "\n"
    _emit(text, cfg)
    return EXIT_OK


def cmd_verify(ns, cfg: RunConfig) -> int:
    if ns.smoke:
        _emit(json.dumps({"config": asdict(cfg), "smoke": True}, indent=1) + "\n", cfg)
        return EXIT_OK
    from .acceptance import CRITERIA, Settings, buggy_product, invariant_suite
    from . import graded
    settings = Settings(theta_grid=tuple(cfg.theta_grid), seed=cfg.seed, index_cutoff=cfg.cutoff,
                        fourier_cutoff=cfg.fourier_cutoff, window=cfg.window)
    records = []
    if ns.inject_phase_bug:
        settings.product = buggy_product
        chosen = [CRITERIA[1]]
    else:
        records.extend(invariant_suite(cfg.seed))
        only = None if ns.only is None else {int(x) for x in ns.only.split(",")}
        chosen = [c for i, c in enumerate(CRITERIA, 1) if only is None or i in only]
    for crit in chosen:
        rec = crit(settings)
        sys.stderr.write(rec.line() + "\n")
        records.append(rec)
    ok = all(r.passed for r in records)
    summary = {"pass": ok, "mutation_mode": bool(ns.inject_phase_bug), "config": asdict(cfg),
               "records": [r.to_json() for r in records]}
    if cfg.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["criterion", "name", "value", "tol", "pass", "seconds"])
        for r in records:
            w.writerow([r.criterion, r.name, r.value, r.tol, r.passed, f"{r.seconds:.2f}"])
        text = buf.getvalue()
    else:
        text = json.dumps(summary, indent=1, default=str) + "\n"
    _emit(text, cfg)
    return EXIT_OK if ok else EXIT_VALIDATION


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        cfg = _config(ns)
        handler = {"product": cmd_product, "pair": cmd_pair, "verify": cmd_verify}[ns.command]
        return handler(ns, cfg)
    except (InputError, argparse.ArgumentTypeError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
