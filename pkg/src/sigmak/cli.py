"""Command-line front end.

    sigmak identities --nmax 12 [--output-dir DIR]
    sigmak solve --config run.json
    sigmak probe --config run.json --gamma 1,2,3
    sigmak intersect --config run.json

Exit codes: 0 ok, 1 usage error, 2 non-convergence, 3 negative verification.
``SIGMAK_OUTPUT_DIR`` overrides the output directory.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .geometry import Family, WarpedBackground, beta0, c_kn, c_kn_closed_form
from .grid import RadialGrid, write_csv
from .operator import SigmaProblem, indicial_roots
from .solver import SolverParams, fredholm_probe, intersection_check, newton_solve

EXIT_OK, EXIT_USAGE, EXIT_NONCONVERGED, EXIT_NEGATIVE = 0, 1, 2, 3
NMAX_LIMIT = 12

log = logging.getLogger("sigmak")


class UsageError(Exception):
    pass


_SECTIONS = {
    "background": {"family", "a"},
    "grid": {"T", "N"},
    "solver": {"tol", "max_iter"},
}
_TOP = {"n", "k", "beta", "output_dir"} | set(_SECTIONS)


@dataclass
class RunConfig:
    n: int
    k: int
    beta: float
    family: str = "hyperbolic"
    a: float = 0.0
    T: float = 16.0
    N: int = 4000
    tol: float = 1e-10
    max_iter: int = 25
    output_dir: Path = field(default_factory=lambda: Path("sigmak_out"))

    def background(self) -> WarpedBackground:
        return WarpedBackground(self.n, self.family, self.a)

    def grid(self) -> RadialGrid:
        return RadialGrid(self.T, self.N)

    def problem(self) -> SigmaProblem:
        return SigmaProblem(self.n, self.k, self.beta, self.background(), self.grid())

    def params(self) -> SolverParams:
        return SolverParams(tol=self.tol, max_iter=self.max_iter)


def _number(value, key, kind=float):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise UsageError(f"{key}: expected a number, got {value!r}")
    if kind is int and int(value) != value:
        raise UsageError(f"{key}: expected an integer, got {value!r}")
    return kind(value)


def parse_config(doc: dict) -> RunConfig:
    """Validate a config document; unknown keys and bad values raise UsageError."""
    if not isinstance(doc, dict):
        raise UsageError("config must be a JSON object")
    unknown = set(doc) - _TOP
    if unknown:
        raise UsageError(f"unknown config key: {sorted(unknown)[0]}")
    for section, allowed in _SECTIONS.items():
        sub = doc.get(section, {})
        if not isinstance(sub, dict):
            raise UsageError(f"{section}: expected an object")
        extra = set(sub) - allowed
        if extra:
            raise UsageError(f"unknown config key: {section}.{sorted(extra)[0]}")
    for key in ("n", "k", "beta"):
        if key not in doc:
            raise UsageError(f"missing config key: {key}")
    n = _number(doc["n"], "n", int)
    k = _number(doc["k"], "k", int)
    if n < 2:
        raise UsageError(f"n: must be >= 2, got {n}")
    if not 1 <= k <= n + 1:
        raise UsageError(f"k: must lie in 1..{n + 1}, got {k}")
    raw_beta = doc["beta"]
    if raw_beta == "beta0":
        beta = beta0(n, k)
    else:
        beta = _number(raw_beta, "beta")
        if not beta > 0:
            raise UsageError(f"beta: must be positive, got {beta}")
    bgd = doc.get("background", {})
    family = bgd.get("family", "hyperbolic")
    if family not in {f.value for f in Family}:
        raise UsageError(f"background.family: unknown family {family!r}")
    a = _number(bgd.get("a", 0.0), "background.a")
    if a != 0.0 and family != "perturbed":
        raise UsageError("background.a: amplitude requires family 'perturbed'")
    gd = doc.get("grid", {})
    T = _number(gd.get("T", 16.0), "grid.T")
    N = _number(gd.get("N", 4000), "grid.N", int)
    if not T > 0:
        raise UsageError(f"grid.T: must be positive, got {T}")
    if N < 16:
        raise UsageError(f"grid.N: must be >= 16, got {N}")
    sd = doc.get("solver", {})
    tol = _number(sd.get("tol", 1e-10), "solver.tol")
    max_iter = _number(sd.get("max_iter", 25), "solver.max_iter", int)
    if not tol > 0:
        raise UsageError(f"solver.tol: must be positive, got {tol}")
    if max_iter < 1:
        raise UsageError(f"solver.max_iter: must be >= 1, got {max_iter}")
    out = doc.get("output_dir", "sigmak_out")
    if not isinstance(out, str):
        raise UsageError("output_dir: expected a string")
    cfg = RunConfig(n, k, beta, family, a, T, N, tol, max_iter, Path(out))
    try:
        cfg.background()
    except ValueError as exc:
        raise UsageError(f"background.a: {exc}") from None
    return cfg


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from None
    return parse_config(doc)


def _output_dir(default) -> Path:
    out = Path(os.environ.get("SIGMAK_OUTPUT_DIR") or default)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _dump_json(path: Path, doc) -> None:
    with open(path, "w", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _g(x) -> str:
    return f"{x:.17g}"


def identities_rows(n_max: int):
    rows = []
    for n in range(2, n_max + 1):
        for k in range(1, n + 2):
            b0 = beta0(n, k)
            c_alt, c_cf = c_kn(n, k), c_kn_closed_form(n, k)
            ind = indicial_roots(n, k, b0)
            rows.append({
                "n": n, "k": k, "beta0": b0, "c_kn": c_alt, "c_kn_closed_form": c_cf,
                "gamma_minus": ind.gamma_minus, "gamma_plus": ind.gamma_plus,
                "c_mismatch": c_alt != c_cf,
            })
    return rows


def cmd_identities(n_max: int, output_dir="sigmak_out") -> Path:
    if not 2 <= n_max <= NMAX_LIMIT:
        raise UsageError(f"--nmax must lie in 2..{NMAX_LIMIT}, got {n_max}")
    path = _output_dir(output_dir) / "identities.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        cols = ["n", "k", "beta0", "c_kn", "c_kn_closed_form", "gamma_minus", "gamma_plus",
                "c_mismatch"]
        writer.writerow(cols)
        for row in identities_rows(n_max):
            writer.writerow([row["n"], row["k"]]
                            + [_g(row[c]) for c in cols[2:7]]
                            + [int(row["c_mismatch"])])
    return path


def cmd_solve(cfg: RunConfig) -> int:
    out = _output_dir(cfg.output_dir)
    rep = newton_solve(cfg.problem(), cfg.params())
    _dump_json(out / "report.json", rep.to_json())
    write_csv(out / "solution.csv", rep.u, "u")
    log.info("solve: converged=%s iterations=%d", rep.converged, rep.iterations)
    return EXIT_OK if rep.converged else EXIT_NONCONVERGED


def cmd_probe(cfg: RunConfig, gammas) -> int:
    if not gammas:
        raise UsageError("--gamma needs at least one value")
    out = _output_dir(cfg.output_dir)
    p = cfg.problem()
    rows = [fredholm_probe(p, g).to_json() for g in gammas]
    _dump_json(out / "probe.json", {"n": cfg.n, "k": cfg.k, "beta": cfg.beta, "probes": rows})
    if any(r["singular"] for r in rows):
        return EXIT_NONCONVERGED
    return EXIT_OK


def cmd_intersect(cfg: RunConfig) -> int:
    out = _output_dir(cfg.output_dir)
    rep = intersection_check(cfg.background(), cfg.grid())
    _dump_json(out / "intersect.json", rep.to_json())
    return EXIT_OK if rep.einstein else EXIT_NEGATIVE


def _parse_gammas(text: str):
    parts = [s for s in text.split(",") if s.strip()]
    try:
        return [float(s) for s in parts]
    except ValueError:
        raise UsageError(f"--gamma: cannot parse {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sigmak", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    ident = sub.add_parser("identities", help="beta_k^0, c_kn and indicial roots table")
    ident.add_argument("--nmax", type=int, required=True)
    ident.add_argument("--output-dir", default="sigmak_out")
    solve = sub.add_parser("solve", help="Newton solve of the sigma_k-Yamabe equation")
    solve.add_argument("--config", required=True)
    probe = sub.add_parser("probe", help="Fredholm-window probes at given weights")
    probe.add_argument("--config", required=True)
    probe.add_argument("--gamma", required=True)
    inter = sub.add_parser("intersect", help="Poincare-Einstein intersection check")
    inter.add_argument("--config", required=True)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "identities":
            cmd_identities(args.nmax, args.output_dir)
            return EXIT_OK
        cfg = load_config(args.config)
        if args.command == "solve":
            return cmd_solve(cfg)
        if args.command == "probe":
            return cmd_probe(cfg, _parse_gammas(args.gamma))
        return cmd_intersect(cfg)
    except UsageError as exc:
        print(f"sigmak: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
