"""Command-line runner: ``ouriesz {spectral-check,kernel-check,hormander,counterexample,table}``.

Reports go to ``<out>.json`` and ``<out>.csv`` (``table`` also writes
``<out>.txt``).  Files carry no timings so identical inputs give identical
bytes; wall-clock times are printed to stdout instead.

Exit status: 0 when every case passes, 1 on a failed case or an
inconclusive verdict, 2 on usage or configuration errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import experiments as ex
from .checks import Case, kernel_suite, spectral_suite
from .kernels import hormander_bmo, hormander_h1
from .quadrature import QuadratureSpec
from .spaces import AdmissibleRegion

COMMANDS = ("spectral-check", "kernel-check", "hormander", "counterexample", "table")

_DEFAULT_DIMS = {
    "spectral-check": (1, 2, 3),
    "kernel-check": (1, 2),
    "hormander": (1, 2),
    "counterexample": (2,),
    "table": (1, 2),
}
_DEFAULT_XIS = {
    "hormander": (2.0, 4.0, 8.0),
    "counterexample": ex.DEFAULT_LADDER,
    "table": ex.DEFAULT_LADDER,
}

EXPECTED_PATTERN = {
    1: {ex.H1: "B B B B", ex.BMO: "B B B B"},
    2: {ex.H1: "U U B B", ex.BMO: "B B U U"},
}

_CONFIG_KEYS = {
    "dim", "xi", "tol", "seed", "out", "nodes", "outer_nodes", "panels_per_octave",
    "slope_threshold", "samples",
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    dims: tuple = ()
    xis: tuple = ()
    tol: float | None = None
    seed: int = 0
    out: str = ""
    nodes: int = 12
    outer_nodes: int = 16
    panels_per_octave: int = 2
    slope_threshold: float | None = None
    samples: int = 10_000
    inject_fault: bool = False

    def __post_init__(self):
        if any(int(d) < 1 for d in self.dims):
            raise ConfigError("dimensions must be >= 1")
        if any(b <= a for a, b in zip(self.xis, self.xis[1:])):
            raise ConfigError("the xi ladder must be strictly increasing")
        if any(x <= 0 for x in self.xis):
            raise ConfigError("xi values must be positive")
        if self.tol is not None and not self.tol > 0:
            raise ConfigError("tolerances must be positive")

    @property
    def spec(self) -> QuadratureSpec:
        kw = dict(nodes=self.nodes, outer_nodes=self.outer_nodes, panels_per_octave=self.panels_per_octave)
        if self.tol is not None:
            kw.update(rtol=self.tol, atol=min(1e-13, self.tol))
        return QuadratureSpec(**kw)


def _parse_list(text: str, conv) -> tuple:
    try:
        return tuple(conv(p) for p in str(text).replace(" ", "").split(",") if p)
    except ValueError as exc:
        raise ConfigError(f"cannot parse list {text!r}: {exc}") from None


def _as_tuple(value, conv) -> tuple:
    if isinstance(value, (list, tuple)):
        return tuple(conv(v) for v in value)
    if isinstance(value, str):
        return _parse_list(value, conv)
    return (conv(value),)


def load_config_file(path: str) -> dict:
    """Flat ``key = value`` TOML; nested tables and unknown keys are rejected."""
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(path)
    try:
        data = tomllib.loads(p.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    for k, v in data.items():
        if isinstance(v, dict):
            raise ConfigError(f"{path}: nested table [{k}] is not supported; use flat keys")
        if k not in _CONFIG_KEYS:
            raise ConfigError(f"{path}: unknown key {k!r}")
    return data


def build_config(args: argparse.Namespace) -> RunConfig:
    raw = load_config_file(args.config) if args.config else {}
    for key in ("dim", "xi", "tol", "seed", "out"):
        val = getattr(args, key)
        if val is not None:
            raw[key] = val
    cmd = args.command
    try:
        kw = dict(
            command=cmd,
            dims=_as_tuple(raw["dim"], int) if "dim" in raw else _DEFAULT_DIMS[cmd],
            xis=_as_tuple(raw["xi"], float) if "xi" in raw else _DEFAULT_XIS.get(cmd, ()),
            tol=float(raw["tol"]) if "tol" in raw else None,
            seed=int(raw.get("seed", 0)),
            out=str(raw.get("out", f"reports/{cmd}")),
            nodes=int(raw.get("nodes", 12)),
            outer_nodes=int(raw.get("outer_nodes", 16)),
            panels_per_octave=int(raw.get("panels_per_octave", 2)),
            slope_threshold=float(raw["slope_threshold"]) if "slope_threshold" in raw else None,
            samples=int(raw.get("samples", 10_000)),
            inject_fault=bool(getattr(args, "inject_fault", False)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    return RunConfig(**kw)


# ---------------------------------------------------------------- reports

@dataclass
class Report:
    suite: str
    cases: list = field(default_factory=list)
    verdicts: list = field(default_factory=list)
    rows: list = field(default_factory=list)
    text: str = ""

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.cases) and all(v.get("class") != ex.INCONCLUSIVE for v in self.verdicts)

    def to_json(self) -> str:
        doc = {
            "suite": self.suite,
            "cases": [c.as_dict() for c in self.cases],
            "verdicts": self.verdicts,
        }
        return json.dumps(doc, indent=2, allow_nan=False) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["op", "dim", "direction", "xi", "value"])
        for row in self.rows:
            w.writerow([_csv_cell(v) for v in row])
        return buf.getvalue()

    def write(self, out: str) -> list[Path]:
        stem = Path(out[:-5] if out.endswith(".json") else out)
        stem.parent.mkdir(parents=True, exist_ok=True)
        paths = [stem.with_name(stem.name + ".json"), stem.with_name(stem.name + ".csv")]
        paths[0].write_text(self.to_json())
        paths[1].write_text(self.to_csv())
        if self.text:
            paths.append(stem.with_name(stem.name + ".txt"))
            paths[2].write_text(self.text + "\n")
        return paths


def _csv_cell(v):
    if isinstance(v, float):
        return repr(v)
    return v


def _finite_or_none(v: float):
    return v if isinstance(v, (int, float)) and math.isfinite(v) else None


def _verdict_dict(v: ex.Verdict) -> dict:
    return {
        "op": v.op,
        "dim": v.dim,
        "direction": v.direction,
        "class": v.classification,
        "slope": _finite_or_none(v.slope),
        "r2": _finite_or_none(v.r2),
    }


def _series_rows(s: ex.GrowthSeries) -> list:
    return [[s.op, s.dim, s.direction, xi, val] for xi, val in zip(s.xis, s.values)]


# ---------------------------------------------------------------- commands

def _faulty_multiplier(j: int) -> float:
    return 1.0 if j == 0 else 1.0 / math.sqrt(j)


def cmd_spectral_check(cfg: RunConfig) -> Report:
    kw = {"multiplier": _faulty_multiplier} if cfg.inject_fault else {}
    return Report("spectral-check", spectral_suite(cfg.dims, cfg.seed, **kw))


def cmd_kernel_check(cfg: RunConfig) -> Report:
    return Report("kernel-check", kernel_suite(cfg.dims, cfg.seed, cfg.spec))


def _need_ladder(cfg: RunConfig) -> None:
    if len(cfg.xis) < 3:
        raise ex.DegenerateLadderError(f"a ladder needs at least 3 xi values, got {len(cfg.xis)}")


def cmd_hormander(cfg: RunConfig) -> Report:
    """Hormander integrals over maximal balls at (xi, 0, ...), plus the S* majorant check."""
    _need_ladder(cfg)
    rep = Report("hormander")
    spec = cfg.spec
    for d in cfg.dims:
        if d > 2:
            raise ConfigError("Hormander integrals are implemented for d = 1, 2")
        balls = [AdmissibleRegion.maximal_ball((xi,) + (0.0,) * (d - 1)) for xi in cfg.xis]
        for op, direction, fn in (
            ("Sstar", ex.H1, lambda b: hormander_h1("Sstar", 1, b, spec)),
            ("R", ex.BMO, lambda b: hormander_bmo("R", 1, b, spec)),
            ("R", ex.H1, lambda b: hormander_h1("R", 1, b, spec)),
            ("Sstar", ex.BMO, lambda b: hormander_bmo("Sstar", 1, b, spec)),
        ):
            s = ex.GrowthSeries(cfg.xis, [fn(b) for b in balls], op, d, direction)
            rep.rows.extend(_series_rows(s))
            rep.verdicts.append(_verdict_dict(ex.classify_growth(s, cfg.slope_threshold)))
            rep.cases.append(Case(f"d{d}/{op}/{direction}/finite", max(s.values), None,
                                  all(math.isfinite(v) for v in s.values)))
        for xi, b in zip(cfg.xis, balls):
            bound = ex.s_star_h1_functional(b, spec)
            rep.cases.append(Case(f"d{d}/xi={xi:g}/s_star_functional_below_majorant",
                                  bound.functional, bound.majorant, bound.functional <= bound.majorant))
    return rep


def cmd_counterexample(cfg: RunConfig) -> Report:
    _need_ladder(cfg)
    rep = Report("counterexample")
    spec = cfg.spec
    for d in cfg.dims:
        if d < 2:
            raise ConfigError("the counterexamples need d >= 2")
        for op, direction, fn in (
            ("R", ex.H1, ex.lower_bound_functional_r1),
            ("Sstar", ex.BMO, ex.bmo_divergence_s_star),
        ):
            try:
                vals = [fn(ex.CounterexampleGeometry(xi, d), spec) for xi in cfg.xis]
            except ex.QuadratureNonConvergence as exc:
                rep.cases.append(Case(f"d{d}/{op}/{direction}/converged", str(exc), None, False))
                rep.verdicts.append(_verdict_dict(ex.Verdict(op, d, direction, ex.INCONCLUSIVE)))
                continue
            s = ex.GrowthSeries(cfg.xis, vals, op, d, direction)
            rep.rows.extend(_series_rows(s))
            v = ex.classify_growth(s, cfg.slope_threshold)
            rep.verdicts.append(_verdict_dict(v))
            rep.cases.append(Case(f"d{d}/{op}/{direction}/strictly_increasing", s.increasing, True, s.increasing))
            rep.cases.append(Case(f"d{d}/{op}/{direction}/log_growth", s.slope, v.threshold,
                                  v.classification == ex.LOG_GROWTH))
        xi_top = max(cfg.xis)
        if xi_top >= 16:
            r = ex.verify_pointwise_bounds(ex.CounterexampleGeometry(xi_top, d), cfg.samples, cfg.seed)
            for name, ok in r.flags.items():
                rep.cases.append(Case(f"d{d}/xi={xi_top:g}/{name}", ok, True, ok))
            for name, (lo, hi) in r.ranges.items():
                rep.cases.append(Case(f"d{d}/xi={xi_top:g}/{name}_min", lo, None, True))
                rep.cases.append(Case(f"d{d}/xi={xi_top:g}/{name}_max", hi, None, True))
    return rep


def cmd_table(cfg: RunConfig) -> Report:
    _need_ladder(cfg)
    rep = Report("table")
    texts = []
    for d in cfg.dims:
        run = ex.run_table(d, cfg.xis, cfg.spec, cfg.slope_threshold, cfg.seed)
        for s in run.series:
            rep.rows.extend(_series_rows(s))
        for op in ex.TABLE_OPS:
            for direction in ex.TABLE_DIRECTIONS:
                v = run.table.cells[(op, direction)]
                rep.verdicts.append(_verdict_dict(v))
        for key, msg in sorted(run.errors.items()):
            rep.cases.append(Case(f"d{d}/{key[0]}/{key[1]}/converged", msg, None, False))
        for name, res in sorted(run.table.residuals.items()):
            rep.cases.append(Case(f"d{d}/duality_residual/{name}", res, 1e-10, res <= 1e-10))
        pattern = run.table.pattern()
        expected = EXPECTED_PATTERN.get(d, EXPECTED_PATTERN[2])
        for direction in ex.TABLE_DIRECTIONS:
            rep.cases.append(Case(f"d{d}/pattern/{direction}", pattern[direction], expected[direction],
                                  pattern[direction] == expected[direction]))
        for op in ex.TABLE_OPS:
            for direction in ex.TABLE_DIRECTIONS:
                rep.rows.append([op, d, direction, "", run.table.cells[(op, direction)].letter])
        texts.append(run.table.text())
        for key, secs in run.timings.items():
            print(f"  d={d} {key[0]:>5} {key[1]:<9} ladder: {secs:.1f} s")
    rep.text = "\n\n".join(texts)
    return rep


_HANDLERS = {
    "spectral-check": cmd_spectral_check,
    "kernel-check": cmd_kernel_check,
    "hormander": cmd_hormander,
    "counterexample": cmd_counterexample,
    "table": cmd_table,
}


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ouriesz", description="Gaussian Riesz transform experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="flat TOML file with run settings")
        p.add_argument("--dim", type=lambda s: _parse_list(s, int), help="dimension(s), comma separated")
        p.add_argument("--xi", type=lambda s: _parse_list(s, float), help="xi ladder, comma separated")
        p.add_argument("--tol", type=float, help="relative tolerance of the adaptive r-integrals")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="report path stem (writes .json and .csv)")
        if name == "spectral-check":
            p.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = build_config(args)
    except FileNotFoundError as exc:
        parser.print_usage(sys.stderr)
        print(f"ouriesz: error: config file not found: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        parser.print_usage(sys.stderr)
        print(f"ouriesz: error: {exc}", file=sys.stderr)
        return 2
    t0 = time.perf_counter()
    try:
        report = _HANDLERS[cfg.command](cfg)
    except (ex.DegenerateLadderError, ConfigError) as exc:
        print(f"ouriesz: error: {exc}", file=sys.stderr)
        return 2
    paths = report.write(cfg.out)
    failed = [c for c in report.cases if not c.passed]
    for c in failed:
        print(f"FAIL {c.name}: value={c.value!r} tolerance={c.tolerance!r}")
    if report.text:
        print(report.text)
    status = "PASS" if report.passed else "FAIL"
    print(f"{status} {cfg.command}: {len(report.cases) - len(failed)}/{len(report.cases)} cases; "
          f"{time.perf_counter() - t0:.1f} s; wrote {', '.join(str(p) for p in paths)}")
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
