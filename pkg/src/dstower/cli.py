"""Command-line front end.

Subcommands: tower, polys, scan, exact, growth, closure-compare, d1, figure.
Exit codes: 0 success, 1 configuration or contract error, 2 solver failures
in some orders (outputs are still written).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import mpmath

from .asymptotics import (
    default_growth_model,
    exact_sequence,
    growth_rate_analytic,
    linearization_zero,
    richardson_rate,
)
from .d1 import d1_leading_mass
from .errors import ContractViolation
from .figures import FIGURES, FigureDataset, build_dataset, curve_dataset, emit_figure, render_svg
from .oracle import closed_form_reference, contour_for, exact_greens, reference_index
from .solver import RootSet, SolverConfig, select_physical, solve_truncation
from .tower import eliminate_univariate, generate_tower, get_theory, tower_for_order, truncate

log = logging.getLogger("dstower")

EXIT_OK, EXIT_CONFIG, EXIT_PARTIAL = 0, 1, 2

_SOLVER_KEYS = {f.name: f.type for f in dataclasses.fields(SolverConfig)}


@dataclass
class RunConfig:
    """Resolved scan configuration.

    Keys accepted in a config file (``key = value`` per line, ``#`` comments):
    ``theory``, ``orders`` (``A..B``), ``closure`` (zero | asymptotic | exact),
    ``out_dir``, ``format`` (comma list of csv, json, svg), ``workers`` and
    any :class:`SolverConfig` field (``precision_bits``, ``seed``, ...).
    """

    theory: str = "hermitian_quartic"
    orders: tuple[int, int] = (2, 10)
    closure: str = "zero"
    out_dir: str = "out"
    formats: tuple[str, ...] = ("csv", "json")
    workers: int = 1
    solver: dict = field(default_factory=dict)

    def solver_config(self) -> SolverConfig:
        return SolverConfig().with_overrides(**self.solver)

    def order_list(self) -> list[int]:
        return list(range(self.orders[0], self.orders[1] + 1))

    def validate(self) -> "RunConfig":
        th = get_theory(self.theory)
        lo, hi = self.orders
        if lo > hi:
            raise ContractViolation(f"empty order range {lo}..{hi}")
        if lo < th.min_order:
            raise ContractViolation(f"{th.name} starts at order {th.min_order}, got {lo}")
        if self.closure not in ("zero", "asymptotic", "exact"):
            raise ContractViolation(f"unknown closure {self.closure!r}")
        bad = set(self.formats) - {"csv", "json", "svg"}
        if bad:
            raise ContractViolation(f"unknown formats {sorted(bad)}")
        if self.workers < 1:
            raise ContractViolation("workers must be >= 1")
        self.solver_config()
        return self

    def echo(self) -> str:
        lines = [f"theory = {self.theory}", f"orders = {self.orders[0]}..{self.orders[1]}",
                 f"closure = {self.closure}", f"out_dir = {self.out_dir}",
                 f"format = {','.join(self.formats)}", f"workers = {self.workers}"]
        sc = self.solver_config()
        lines += [f"{k} = {getattr(sc, k)}" for k in _SOLVER_KEYS]
        return "\n".join(lines) + "\n"


def parse_orders(text: str) -> tuple[int, int]:
    """``"A..B"`` or a single order ``"A"``."""
    try:
        if ".." in text:
            a, b = text.split("..", 1)
            return int(a), int(b)
        return int(text), int(text)
    except ValueError:
        raise ContractViolation(f"bad order range {text!r}; expected A..B") from None


def _coerce(key: str, value: str):
    kind = _SOLVER_KEYS[key]
    kind = kind if isinstance(kind, str) else kind.__name__
    try:
        return int(value) if kind == "int" else float(value)
    except ValueError:
        raise ContractViolation(f"{key} expects {kind}, got {value!r}") from None


def apply_settings(cfg: RunConfig, items: dict) -> RunConfig:
    """Apply flat ``key -> string`` settings; unknown keys are rejected."""
    for key, value in items.items():
        key = key.strip().replace("-", "_")
        value = value.strip()
        if key == "theory":
            cfg.theory = value
        elif key == "orders":
            cfg.orders = parse_orders(value)
        elif key == "closure":
            cfg.closure = value
        elif key == "out_dir":
            cfg.out_dir = value
        elif key in ("format", "formats"):
            cfg.formats = tuple(v.strip() for v in value.split(",") if v.strip())
        elif key == "workers":
            cfg.workers = int(value)
        elif key in _SOLVER_KEYS:
            cfg.solver[key] = _coerce(key, value)
        else:
            raise ContractViolation(f"unknown config key {key!r}")
    return cfg


def read_config_file(path) -> dict:
    items = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ContractViolation(f"{path}:{lineno}: expected key = value")
        k, v = line.split("=", 1)
        items[k.strip()] = v
    return items


# -- scan -------------------------------------------------------------------------

def closure_input(theory_name: str, closure: str, max_order: int):
    """The object ``truncate`` expects for a closure scheme."""
    if closure == "zero":
        return "zero"
    theory = get_theory(theory_name)
    if closure == "asymptotic":
        return default_growth_model(theory)
    top = theory.top_index(max_order)
    return exact_sequence(theory, top)


def _solve_order(args) -> RootSet:
    theory_name, order, scheme, closure, solver_cfg = args
    theory = get_theory(theory_name)
    try:
        system = truncate(tower_for_order(theory, order), order, closure)
        return solve_truncation(system, solver_cfg)
    except (ArithmeticError, ContractViolation, MemoryError) as exc:
        rs = RootSet(theory.seed_indices, theory=theory_name, order=order,
                     closure=scheme,
                     diagnostics=[f"order failed: {type(exc).__name__}: {exc}"])
        rs.path_failures = -1
        return rs


def scan(config: RunConfig) -> list[RootSet]:
    """Solve every order in the configured range; failures are recorded, not raised."""
    config.validate()
    closure = closure_input(config.theory, config.closure, config.orders[1])
    cfg = config.solver_config()
    jobs = [(config.theory, n, config.closure, closure, cfg) for n in config.order_list()]
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            results = list(pool.map(_solve_order, jobs))
    else:
        results = [_solve_order(j) for j in jobs]
    for rs in results:
        log.info("%s order %s: %d roots", rs.theory, rs.order, len(rs))
    return results


def _failed(rs: RootSet) -> bool:
    """Roots are missing, or the order raised before solving."""
    return rs.path_failures < 0 or not rs.complete


def write_scan(config: RunConfig, results: list[RootSet]) -> list[Path]:
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = f"{config.theory}_{config.closure}"
    paths = []
    (out / f"{stem}.config.txt").write_text(config.echo())
    paths.append(out / f"{stem}.config.txt")
    if "csv" in config.formats:
        p = out / f"{stem}.csv"
        with p.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(RootSet.CSV_HEADER)
            for rs in results:
                w.writerows(rs.to_rows())
        paths.append(p)
    if "json" in config.formats:
        p = out / f"{stem}.json"
        p.write_text(json.dumps([rs.to_dict() for rs in results], indent=1, sort_keys=True) + "\n")
        paths.append(p)
    if "svg" in config.formats:
        # first seed component of every root, all orders in one cloud
        rows = [(rs.order, f"{complex(v).real:.15g}", f"{complex(v).imag:.15g}")
                for rs in results for v in rs.values()]
        ds = FigureDataset(stem, ("order", "re", "im"), rows,
                           {"title": f"{config.theory} roots, {config.closure} closure"})
        p = out / f"{stem}.svg"
        p.write_text(render_svg(ds))
        paths.append(p)
    return paths


# -- subcommand handlers ----------------------------------------------------------

def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, indent=1, sort_keys=True) + "\n")


def _num(v, digits=15):
    v = mpmath.mpc(v)
    if not v.imag:
        return mpmath.nstr(v.real, digits)
    return [mpmath.nstr(v.real, digits), mpmath.nstr(v.imag, digits)]


def cmd_tower(a) -> int:
    th = get_theory(a.theory)
    tw = tower_for_order(th, a.order) if a.order else generate_tower(th, a.equations)
    for top, eq in zip(tw.top_indices, tw.equations):
        if a.order and top > th.top_index(a.order):
            break
        print(f"{eq} = 0")
    return EXIT_OK


def cmd_polys(a) -> int:
    th = get_theory(a.theory)
    lo, hi = parse_orders(a.orders)
    tw = tower_for_order(th, hi)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(("order", "degree", "numerator", "denominator", "imag_numerator", "imag_denominator"))
    for n in range(max(lo, th.min_order), hi + 1):
        p = eliminate_univariate(tw, n)
        (seed,) = th.seed_indices
        for d, c in enumerate(p.univariate_coeffs(seed)):
            if c.is_zero():
                continue
            w.writerow((n, d, int(c.re.numerator), int(c.re.denominator),
                        int(c.im.numerator), int(c.im.denominator)))
    return EXIT_OK


def _run_config(a) -> RunConfig:
    cfg = RunConfig()
    if a.config:
        apply_settings(cfg, read_config_file(a.config))
    flags = {"theory": a.theory, "orders": a.orders, "closure": a.closure,
             "out_dir": a.out_dir, "format": a.format,
             "workers": None if a.workers is None else str(a.workers),
             "precision_bits": None if a.precision_bits is None else str(a.precision_bits),
             "seed": None if a.seed is None else str(a.seed)}
    apply_settings(cfg, {k: v for k, v in flags.items() if v is not None})
    for item in a.set or []:
        if "=" not in item:
            raise ContractViolation(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        apply_settings(cfg, {k: v})
    return cfg.validate()


def cmd_scan(a) -> int:
    cfg = _run_config(a)
    sys.stderr.write(cfg.echo())
    results = scan(cfg)
    for p in write_scan(cfg, results):
        log.info("wrote %s", p)
    bad = [rs.order for rs in results if _failed(rs)]
    if bad:
        sys.stderr.write(f"solver failures at orders {bad}\n")
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_exact(a) -> int:
    """CSV of exact G_n by quadrature; the error estimate is the change under +64 bits."""
    th = get_theory(a.theory)
    contour = contour_for(th, a.choice) if a.choice else None
    lo = exact_greens(th, a.max_order, contour, precision=a.precision)
    hi = exact_greens(th, a.max_order, contour, precision=a.precision + 64)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(("n", "re", "im", "error_estimate"))
    with mpmath.workprec(a.precision + 64):
        for n in sorted(hi):
            v = mpmath.mpc(hi[n])
            err = abs(v - lo[n])
            w.writerow((n, mpmath.nstr(v.real, 20), mpmath.nstr(v.imag, 20), mpmath.nstr(err, 3)))
    return EXIT_OK


def cmd_growth(a) -> int:
    th = get_theory(a.theory)
    out = {"theory": th.name}
    if a.method in ("richardson", "both"):
        out["richardson"] = richardson_rate(th).to_dict()
    if a.method in ("analytic", "both"):
        x0 = linearization_zero(th)
        out["analytic"] = {"x0": mpmath.nstr(x0, 15), "r": mpmath.nstr(growth_rate_analytic(th), 15)}
    _emit(out)
    return EXIT_OK


def cmd_closure_compare(a) -> int:
    th = get_theory(a.theory)
    lo, hi = parse_orders(a.orders)
    idx = reference_index(th)
    exact = closed_form_reference(th)
    model = default_growth_model(th)
    cfg = SolverConfig()
    rows = []
    for n in range(max(lo, th.min_order), hi + 1):
        tw = tower_for_order(th, n)
        errs = {}
        for name, closure in (("zero", "zero"), ("asymptotic", model)):
            rs = solve_truncation(truncate(tw, n, closure), cfg)
            if name == "zero" and th.parity_symmetric:
                sel = select_physical(rs, "largest_real", index=idx)
                vals = sel.values(idx) or rs.values(idx)
            else:
                vals = rs.values(idx)
            errs[name] = min(abs(v - exact) for v in vals) if vals else mpmath.inf
        rows.append({"order": n, "zero_error": mpmath.nstr(errs["zero"], 6),
                     "asymptotic_error": mpmath.nstr(errs["asymptotic"], 6)})
    _emit({"theory": th.name, "reference": _num(exact), "model": model.to_dict(), "rows": rows})
    return EXIT_OK


def cmd_d1(a) -> int:
    _emit(d1_leading_mass(a.theory).to_dict())
    return EXIT_OK


def cmd_figure(a) -> int:
    spec = FIGURES.get(a.id)
    if spec is None:
        raise ContractViolation(f"unknown figure {a.id!r}; choose from {sorted(FIGURES)}")
    formats = tuple(v.strip() for v in a.format.split(","))
    if spec.kind == "curve":
        ds = curve_dataset(a.id)
        emit_figure(ds, formats, a.out_dir)
        return EXIT_OK
    lo, hi = spec.long_orders if a.long_run else spec.orders
    if a.orders:
        lo, hi = parse_orders(a.orders)
    cfg = RunConfig(theory=spec.theory, orders=(lo, hi), closure=spec.closure,
                    out_dir=a.out_dir, formats=formats, workers=a.workers or 1)
    if a.precision_bits:
        cfg.solver["precision_bits"] = a.precision_bits
    cfg.validate()
    sys.stderr.write(cfg.echo())
    results = scan(cfg)
    ds = build_dataset(a.id, {rs.order: rs for rs in results}, orders=cfg.order_list())
    Path(a.out_dir).mkdir(parents=True, exist_ok=True)
    (Path(a.out_dir) / f"{a.id}.config.txt").write_text(cfg.echo())
    for p in emit_figure(ds, formats, a.out_dir):
        log.info("wrote %s", p)
    return EXIT_PARTIAL if any(_failed(rs) for rs in results) else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dstower", description="Truncated Dyson-Schwinger towers in zero dimensions")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("tower", help="print the DS equations")
    s.add_argument("--theory", required=True)
    s.add_argument("--order", type=int, help="equations up to the top index of this truncation order")
    s.add_argument("--equations", type=int, default=4, help="number of equations when --order is absent")
    s.set_defaults(func=cmd_tower)

    s = sub.add_parser("polys", help="monic P_n coefficients as exact rationals (CSV)")
    s.add_argument("--theory", default="hermitian_quartic")
    s.add_argument("--orders", default="2..5")
    s.set_defaults(func=cmd_polys)

    s = sub.add_parser("scan", help="solve truncations over a range of orders")
    s.add_argument("--config", help="key = value file")
    s.add_argument("--theory")
    s.add_argument("--orders", help="A..B")
    s.add_argument("--closure", choices=["zero", "asymptotic", "exact"])
    s.add_argument("--precision-bits", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--out-dir")
    s.add_argument("--format", help="comma list of csv,json,svg")
    s.add_argument("--workers", type=int)
    s.add_argument("--set", action="append", metavar="KEY=VALUE", help="solver setting override")
    s.set_defaults(func=cmd_scan)

    s = sub.add_parser("exact", help="exact Green's functions by contour quadrature (CSV)")
    s.add_argument("--theory", required=True)
    s.add_argument("--max-order", type=int, default=10)
    s.add_argument("--choice", help="sector pair, e.g. pt_upper for the quintic")
    s.add_argument("--precision", type=int, default=256)
    s.set_defaults(func=cmd_exact)

    s = sub.add_parser("growth", help="factorial growth rate r")
    s.add_argument("--theory", required=True)
    s.add_argument("--method", choices=["richardson", "analytic", "both"], default="both")
    s.set_defaults(func=cmd_growth)

    s = sub.add_parser("closure-compare", help="zero versus asymptotic closure errors")
    s.add_argument("--theory", default="hermitian_quartic")
    s.add_argument("--orders", default="2..12")
    s.set_defaults(func=cmd_closure_compare)

    s = sub.add_parser("d1", help="leading-order D=1 masses")
    s.add_argument("--theory", choices=["hermitian", "pt"], required=True)
    s.set_defaults(func=cmd_d1)

    s = sub.add_parser("figure", help="figure dataset (CSV/JSON, optional SVG)")
    s.add_argument("--id", required=True, choices=sorted(FIGURES))
    s.add_argument("--orders", help="override the default order range")
    s.add_argument("--long-run", action="store_true", help="use the full published order range")
    s.add_argument("--out-dir", default="figures")
    s.add_argument("--format", default="csv,json,svg")
    s.add_argument("--precision-bits", type=int)
    s.add_argument("--workers", type=int)
    s.set_defaults(func=cmd_figure)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ContractViolation, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
