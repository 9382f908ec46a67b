"""Command-line front end: ``python -m robinlap <command> [options]``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import hypotheses, multipliers, resolvent, spectral
from .boundary import sample_alpha
from .bumps import random_bumps
from .errors import ConfigError, RobinLapError
from .grid import build_grid, radial_weight
from .operator import assemble

log = logging.getLogger("robinlap")

COMMANDS = ("assemble", "eigs", "check", "identities", "cutoff", "hardy", "trace",
            "resolvent-sweep", "report")
FORMATS = ("csv", "json", "svg")
THEOREMS = ("auto", "T1.1", "T1.2", "T1.5")
SCHEMA_VERSION = 1

EXIT_OK, EXIT_ERROR, EXIT_FAIL = 0, 1, 2


def parse_complex(value: Any, name: str) -> complex:
    """Accept ``[re, im]``, a number, or a string such as ``"1+0.5i"``."""
    try:
        if isinstance(value, (list, tuple)):
            re, im = value
            return complex(float(re), float(im))
        if isinstance(value, str):
            return complex(value.replace(" ", "").replace("i", "j").replace("I", "j"))
        return complex(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(name, f"cannot read {value!r} as a complex number") from exc


@dataclass
class RunConfig:
    command: str = "check"
    dim: int = 2
    half_width: float = 10.0
    spacing: float = 0.1
    alpha: Any = 0.0
    # solver and classification
    residual_tol: float = 1e-8
    solve_tol: float = 1e-10
    eig_count: int = 10
    eig_interval: list = field(default_factory=lambda: [-5.0, 5.0])
    shifts: list = field(default_factory=list)
    # hypothesis constants
    theorem: str = "auto"
    C_star: float = 1.0
    S_star: float | None = None
    hardy_variant: str = "hardy"
    # manufactured problems and inequality checks
    lam: Any = "2+1i"
    refinements: int = 3
    profile_width: float | None = None
    R_list: list = field(default_factory=lambda: [2.0, 4.0, 8.0])
    bump_count: int = 100
    epsilons: list = field(default_factory=lambda: [0.1, 1.0, 10.0])
    # resolvent sweep
    re_range: list = field(default_factory=lambda: [-3.0, 3.0])
    im_range: list = field(default_factory=lambda: [0.5, 2.0])
    re_count: int = 5
    im_count: int = 3
    f_count: int = 20
    operator_norms: bool = False
    exclusion_radius: float = resolvent.EXCLUSION_RADIUS
    # run plumbing
    seed: int = 0
    jobs: int = 1
    out: str = "out"
    formats: list = field(default_factory=lambda: ["csv", "json"])

    @classmethod
    def from_mapping(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        for key in data:
            if key not in known:
                raise ConfigError(key, "unknown configuration key")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        def positive(name):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or isinstance(v, bool) or not v > 0:
                raise ConfigError(name, f"must be a positive number, got {v!r}")

        if self.command not in COMMANDS:
            raise ConfigError("command", f"must be one of {', '.join(COMMANDS)}")
        if self.dim not in (1, 2, 3, 4) or isinstance(self.dim, bool):
            raise ConfigError("dim", "must be 1, 2, 3 or 4")
        for name in ("half_width", "spacing", "residual_tol", "solve_tol", "C_star",
                     "refinements", "bump_count", "f_count", "jobs", "eig_count",
                     "re_count", "im_count", "exclusion_radius"):
            positive(name)
        for name in ("refinements", "bump_count", "f_count", "jobs", "eig_count",
                     "re_count", "im_count", "seed"):
            if not isinstance(getattr(self, name), int):
                raise ConfigError(name, "must be an integer")
        if self.S_star is not None:
            positive("S_star")
        if self.profile_width is not None:
            positive("profile_width")
        if self.theorem not in THEOREMS:
            raise ConfigError("theorem", f"must be one of {', '.join(THEOREMS)}")
        if self.hardy_variant not in ("hardy", "sufficient"):
            raise ConfigError("hardy_variant", "must be 'hardy' or 'sufficient'")
        bad = [f for f in self.formats if f not in FORMATS]
        if bad or not self.formats:
            raise ConfigError("formats", f"choose from {', '.join(FORMATS)}")
        for name in ("eig_interval", "re_range", "im_range"):
            pair = getattr(self, name)
            if len(pair) != 2 or not float(pair[0]) <= float(pair[1]):
                raise ConfigError(name, "must be an increasing pair [lo, hi]")
        for R in self.R_list:
            if not float(R) > 0:
                raise ConfigError("R_list", "radii must be positive")
        for eps in self.epsilons:
            if not float(eps) > 0:
                raise ConfigError("epsilons", "epsilon values must be positive")
        self.lambda_value()
        self.shift_values()

    def lambda_value(self) -> complex:
        return parse_complex(self.lam, "lam")

    def shift_values(self) -> list[complex]:
        return [parse_complex(s, "shifts") for s in self.shifts]

    def resolved(self) -> dict:
        return json.loads(json.dumps(asdict(self), default=str))


def load_config_file(path: str | Path) -> dict:
    """TOML or JSON by extension, with line-level diagnostics."""
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"{path}: line {exc.lineno}: {exc.msg}") from exc
    elif path.suffix.lower() == ".toml":
        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError("config", f"{path}: {exc}") from exc
    else:
        raise ConfigError("config", f"{path}: expected a .toml or .json file")
    if not isinstance(data, dict):
        raise ConfigError("config", f"{path}: top level must be a table")
    return data


def _override_value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def build_config(args: argparse.Namespace) -> RunConfig:
    data: dict = {}
    if args.config:
        data.update(load_config_file(args.config))
    for item in args.set or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(key or "set", "overrides take the form key=value")
        data[key.strip()] = _override_value(value.strip())
    data["command"] = args.command
    if args.out is not None:
        data["out"] = args.out
    if args.jobs is not None:
        data["jobs"] = args.jobs
    if args.seed is not None:
        data["seed"] = args.seed
    if args.format:
        data["formats"] = list(dict.fromkeys(args.format))
    return RunConfig.from_mapping(data)


# -- output helpers ------------------------------------------------------------------

def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, np.generic):
        return _jsonable(obj.item())
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


def write_json(path: Path, payload: dict, cfg: RunConfig) -> None:
    body = {"schema_version": SCHEMA_VERSION, "command": cfg.command,
            "config": cfg.resolved(), **payload}
    path.write_text(json.dumps(_jsonable(body), indent=2, sort_keys=True) + "\n")


def write_csv(path: Path, rows: list[dict], columns: list[str] | None = None) -> None:
    columns = columns or (list(rows[0]) if rows else [])
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, quoting=csv.QUOTE_MINIMAL)
        w.writeheader()
        for r in rows:
            w.writerow({k: (f"{v:.17g}" if isinstance(v, float) else v) for k, v in r.items()})


def _grid(cfg: RunConfig, boundary_only: bool = False):
    return build_grid(cfg.dim, cfg.half_width, cfg.spacing,
                      boundary_only=boundary_only or cfg.dim == 4)


# -- commands ------------------------------------------------------------------------

def cmd_assemble(cfg: RunConfig, out: Path) -> int:
    grid = _grid(cfg)
    alpha = sample_alpha(cfg.alpha, grid)
    op = assemble(grid, alpha)
    op.to_matrix_market(out / "operator.mtx")
    if "csv" in cfg.formats and grid.dim > 1:
        alpha.to_csv(out / "alpha.csv", grid)
    if "json" in cfg.formats:
        write_json(out / "assemble.json",
                   {"unknowns": op.size, "nonzeros": int(op.matrix.nnz),
                    "selfadjoint": op.symmetric, "alpha": alpha.provenance}, cfg)
    return EXIT_OK


def cmd_eigs(cfg: RunConfig, out: Path) -> int:
    grid = _grid(cfg)
    op = assemble(grid, sample_alpha(cfg.alpha, grid))
    if op.symmetric and not cfg.shifts:
        lo, hi = map(float, cfg.eig_interval)
        spec = spectral.cover_interval(op, lo, hi, count=cfg.eig_count, tol=cfg.residual_tol)
    else:
        shifts = cfg.shift_values() or [complex(float(cfg.eig_interval[0]), 0.0)]
        spec = spectral.eig_nonselfadjoint(op, shifts, cfg.eig_count, tol=cfg.residual_tol,
                                           jobs=cfg.jobs)
    spectral.classify(spec, grid)
    if "csv" in cfg.formats:
        spec.to_csv(out / "eigs.csv")
    if "json" in cfg.formats:
        write_json(out / "eigs.json", json.loads(spec.to_json()), cfg)
    return EXIT_OK


def _theorem_for(cfg: RunConfig, alpha) -> str:
    if cfg.theorem != "auto":
        return cfg.theorem
    if alpha.is_real:
        return "T1.1"
    return "T1.2" if cfg.dim == 3 else "T1.5"


def cmd_check(cfg: RunConfig, out: Path) -> int:
    grid = build_grid(cfg.dim, cfg.half_width, cfg.spacing, boundary_only=cfg.dim > 1)
    alpha = sample_alpha(cfg.alpha, grid)
    theorem = _theorem_for(cfg, alpha)
    if theorem == "T1.1":
        report = hypotheses.check_selfadjoint_hypotheses(alpha, grid)
    elif theorem == "T1.2":
        report = hypotheses.check_thm12_hypotheses(alpha, grid, C_star=cfg.C_star,
                                                   S_star=cfg.S_star)
    else:
        report = hypotheses.check_thm15_hypotheses(alpha, grid, variant=cfg.hardy_variant)
    for w in report.warnings:
        log.warning(w)
    if "json" in cfg.formats:
        write_json(out / "check.json", {"report": report.to_dict(),
                                        "verdict": report.verdict}, cfg)
    if "csv" in cfg.formats:
        hypotheses.write_summary_csv([report], out / "check.csv")
    print(f"{report.theorem_id}: {report.verdict}")
    return EXIT_OK if report.verdict == "PASS" else EXIT_FAIL


def _default_profile(cfg: RunConfig) -> multipliers.Profile:
    L, n = cfg.half_width, cfg.dim
    width = cfg.profile_width or L / 12
    center = [0.2 * L] * (n - 1) + [0.1 * L]
    wave = [0.7] * n
    return multipliers.Profile(tuple(center), width=width, wavevector=tuple(wave),
                               normal_poly=(1.0, 0.5))


def cmd_identities(cfg: RunConfig, out: Path) -> int:
    profile = _default_profile(cfg)
    lam = cfg.lambda_value()
    previous, rows = None, []
    for level in range(cfg.refinements):
        grid = build_grid(cfg.dim, cfg.half_width, cfg.spacing / 2 ** level)
        problem = multipliers.manufactured_problem(profile, lam,
                                                   sample_alpha(cfg.alpha, grid), grid)
        reports = multipliers.identity_residuals(problem)
        if previous is not None:
            multipliers.with_order_estimates(previous, reports)
        rows.extend(reports)
        previous = reports
    if "csv" in cfg.formats:
        path = out / "identities.csv"
        path.unlink(missing_ok=True)
        multipliers.append_ledger(rows, path)
    if "json" in cfg.formats:
        write_json(out / "identities.json",
                   json.loads(multipliers.reports_to_json(rows)), cfg)
    return EXIT_OK


def cmd_cutoff(cfg: RunConfig, out: Path) -> int:
    grid = _grid(cfg)
    r, _ = radial_weight(grid)
    table = multipliers.cutoff_errors(np.exp(-r), grid, cfg.R_list)
    rows = [asdict(t) for t in table]
    if "csv" in cfg.formats:
        write_csv(out / "cutoff.csv", rows)
    if "json" in cfg.formats:
        write_json(out / "cutoff.json", {"profile": "exp(-|x|)", "rows": rows}, cfg)
    return EXIT_OK


def cmd_hardy(cfg: RunConfig, out: Path) -> int:
    grid = _grid(cfg)
    variant = "unweighted" if cfg.dim >= 3 else "weighted"
    ratios = [multipliers.hardy_ratio(b, grid, variant)
              for b in random_bumps(grid, cfg.bump_count, seed=cfg.seed)]
    constant = multipliers.hardy_constant(cfg.dim, variant)
    rows = [{"index": i, "ratio": r} for i, r in enumerate(ratios)]
    if "csv" in cfg.formats:
        write_csv(out / "hardy.csv", rows)
    if "json" in cfg.formats:
        write_json(out / "hardy.json", {"variant": variant, "constant": constant,
                                        "max_ratio": max(ratios), "ratios": ratios}, cfg)
    return EXIT_OK


def cmd_trace(cfg: RunConfig, out: Path) -> int:
    grid = _grid(cfg)
    rows = []
    for i, b in enumerate(random_bumps(grid, cfg.bump_count, seed=cfg.seed)):
        row = {"index": i}
        if grid.dim > 1:
            row.update(multipliers.trace_half_norm_check(b, grid))
        for eps in cfg.epsilons:
            row[f"interp_margin_{eps:g}"] = multipliers.trace_interpolation_check(
                b, grid, float(eps))["margin"]
        rows.append(row)
    if "csv" in cfg.formats:
        write_csv(out / "trace.csv", rows)
    if "json" in cfg.formats:
        write_json(out / "trace.json", {"rows": rows}, cfg)
    return EXIT_OK


def cmd_resolvent_sweep(cfg: RunConfig, out: Path) -> int:
    grid = _grid(cfg)
    op = assemble(grid, sample_alpha(cfg.alpha, grid))
    lams = resolvent.lambda_rectangle(cfg.re_range, cfg.im_range, cfg.re_count, cfg.im_count)
    family = random_bumps(grid, cfg.f_count, seed=cfg.seed)
    result = resolvent.sweep(op, lams, family, exclusion_radius=cfg.exclusion_radius,
                             operator_norms=cfg.operator_norms, jobs=cfg.jobs)
    if "csv" in cfg.formats:
        result.to_csv(out / "sweep.csv")
    if "json" in cfg.formats:
        write_json(out / "sweep.json", {"summary": result.summary, "failures": result.failures,
                                        "norms": result.norms}, cfg)
    if "svg" in cfg.formats:
        result.to_svg(out / "sweep.svg")
    return EXIT_OK


def cmd_report(cfg: RunConfig, out: Path) -> int:
    """Aggregate the JSON reports already present in the output directory."""
    rows, failed = [], False
    for path in sorted(out.glob("*.json")):
        if path.name == "report.json":
            continue
        data = json.loads(path.read_text())
        verdict = data.get("verdict", "")
        failed |= verdict == "FAIL"
        rows.append({"file": path.name, "command": data.get("command", ""), "verdict": verdict})
    if "csv" in cfg.formats:
        write_csv(out / "report.csv", rows, ["file", "command", "verdict"])
    if "json" in cfg.formats:
        write_json(out / "report.json", {"entries": rows,
                                         "verdict": "FAIL" if failed else "PASS"}, cfg)
    return EXIT_FAIL if failed else EXIT_OK


HANDLERS = {"assemble": cmd_assemble, "eigs": cmd_eigs, "check": cmd_check,
            "identities": cmd_identities, "cutoff": cmd_cutoff, "hardy": cmd_hardy,
            "trace": cmd_trace, "resolvent-sweep": cmd_resolvent_sweep, "report": cmd_report}


def run(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return HANDLERS[cfg.command](cfg, out)


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="robinlap",
                                     description="Discrete Robin Laplacian experiments.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="TOML or JSON run configuration")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--jobs", type=int, help="worker cap")
    parser.add_argument("--seed", type=int, help="random seed for bump families")
    parser.add_argument("--format", action="append", choices=FORMATS,
                        help="output format (repeatable)")
    parser.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a configuration key (JSON value)")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = build_config(args)
        return run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (RobinLapError, OSError, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
