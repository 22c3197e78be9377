"""Command-line experiment runner.

    fixpoint --scenario scenarios/ [--only NAME] [--max-iters N] [--tol T]
             [--seed S] [--out-dir DIR] [--summary FILE] [--parallel]

Exit codes: 0 success, 2 configuration/validation, 3 numeric range,
4 violation found.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import analysis
from .errors import ConfigurationError, FixpointError, NumericRangeError
from .iteration import check_fejer_bound, run
from .mappings import verify_total_asymptotic
from .scenario import Scenario, load_scenarios

log = logging.getLogger("fixpoint")

EXIT_OK, EXIT_CONFIG, EXIT_RANGE, EXIT_VIOLATION = 0, 2, 3, 4


@dataclass
class Outcome:
    name: str
    kind: str
    exit_code: int
    stop_condition: str
    metric_name: str
    metric: float | str
    wall_time: float
    message: str = ""

    def summary_line(self) -> str:
        metric = _fmt(self.metric) if isinstance(self.metric, float) else self.metric
        return (
            f"{self.name} [{self.kind}] exit={self.exit_code} stop={self.stop_condition} "
            f"{self.metric_name}={metric} wall={self.wall_time:.3f}s{' ' + self.message if self.message else ''}"
        )


def _fmt(v) -> str:
    return "" if v is None else format(float(v), ".17g")


def _write_csv(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _execute_iterate(s: Scenario, out: Path):
    config = s.payload["config"]
    trace = run(config)
    trace.to_csv(out)
    trace.to_json(out.with_suffix(".json"))
    code, msg = EXIT_OK, ""
    if s.payload["fejer_audit"]:
        rep = check_fejer_bound(trace, config)
        if not rep.ok:
            code, msg = EXIT_VIOLATION, f"fejer violations at n={rep.violations[:5]}"
    return code, trace.stop_reason, "final_max_residual", trace.max_residual, msg


def _execute_certify(s: Scenario, out: Path):
    p = s.payload
    T, params, n_max, region = p["map"], p["params"], p["n_max"], p["region"]
    samples, seed = p["samples"], s.seed
    rep = verify_total_asymptotic(T, params, n_max, samples, seed, sampling_box=region)
    near = analysis.nearly_chain_check(T, params.a, n_max, region, samples, seed)
    asym = None
    if p["asymptotic_factor"] is not None:
        asym = analysis.asymptotic_chain_check(T, p["asymptotic_factor"], n_max, region, samples, seed)
    rows = []
    for k, row in enumerate(rep.rows):
        n = row.n
        a_n = params.a(n)
        eta = analysis.estimate_eta(T, n, a_n, region, samples, seed)
        a_hat, sigma_hat = analysis.estimate_intermediate_defect(T, n, region, samples, seed)
        rows.append([
            n, _fmt(row.worst_margin), row.violations,
            _fmt(eta.eta_hat), _fmt(a_n), _fmt(a_hat), _fmt(sigma_hat),
            "" if asym is None else _fmt(asym.margins[k]), _fmt(near.margins[k]),
        ])
    _write_csv(
        out,
        ["n", "worst_margin", "violations", "eta_hat", "a_n", "a_n_hat", "sigma_n_hat",
         "asymptotic_chain_margin", "nearly_chain_margin"],
        rows,
    )
    bad = rep.violations + near.violations + (asym.violations if asym else 0)
    worst = min(r.worst_margin for r in rep.rows)
    if bad:
        first = next((r for r in rep.rows if r.violations), None)
        msg = f"violation at n={first.n} pair={first.first_violation}" if first else "inclusion chain violated"
        return EXIT_VIOLATION, "violation", "worst_margin", worst, msg
    return EXIT_OK, "no_violation", "worst_margin", worst, ""


def _execute_lemma(s: Scenario, out: Path):
    p = s.payload
    env = analysis.sequence_bound(p["a1"], p["alpha"], p["b"], p["N"])
    rows = [[1, _fmt(env.values[0]), _fmt(1.0), _fmt(0.0)]]
    rows += [[k + 2, _fmt(env.values[k + 1]), _fmt(env.products[k]), _fmt(env.sums[k])] for k in range(p["N"])]
    _write_csv(out, ["n", "a_n", "product", "sum_b"], rows)
    code, msg = EXIT_OK, f"bound={_fmt(env.bound)} stable_n={env.first_stable_n}"
    if not env.bounded:
        code = EXIT_VIOLATION
    if "convexity" in p:
        audit = analysis.convexity_audit(seed=s.seed, **p["convexity"])
        msg += f" convexity_min_margin={_fmt(audit.min_margin)}"
        if audit.min_margin < -1e-10:
            code = EXIT_VIOLATION
    return code, "bounded" if env.bounded else "unbounded", "envelope_max", float(env.values.max()), msg


def _execute_counterexample(s: Scenario, out: Path):
    rows = analysis.counterexample_demo(s.payload["N"])
    _write_csv(out, ["n", "step_diff", "image_diff_log10"], [[r.n, _fmt(r.step_diff), _fmt(r.image_diff_log10)] for r in rows])
    return EXIT_OK, "complete", "final_image_diff_log10", rows[-1].image_diff_log10, ""


_EXECUTORS = {
    "iterate": _execute_iterate,
    "certify": _execute_certify,
    "lemma-audit": _execute_lemma,
    "counterexample": _execute_counterexample,
}


def execute(s: Scenario, out_dir: Path | str = ".") -> Outcome:
    """Run one validated scenario, writing its artifacts under `out_dir`."""
    out = Path(out_dir) / s.output_path
    out.parent.mkdir(parents=True, exist_ok=True)
    log.info("running %s (%s, seed %d) -> %s", s.name, s.kind, s.seed, out)
    start = time.perf_counter()
    try:
        code, stop, metric_name, metric, msg = _EXECUTORS[s.kind](s, out)
    except NumericRangeError as exc:
        code, stop, metric_name, metric, msg = EXIT_RANGE, "numeric_range", "", "", f"{s.name}: {exc}"
    except ConfigurationError as exc:
        code, stop, metric_name, metric, msg = EXIT_CONFIG, "configuration", "", "", f"{s.name}: {exc}"
    except FixpointError as exc:
        code, stop, metric_name, metric, msg = EXIT_CONFIG, "invalid_input", "", "", f"{s.name}: {exc}"
    return Outcome(s.name, s.kind, code, stop, metric_name, metric, time.perf_counter() - start, msg)


def write_summary(path: Path, outcomes) -> None:
    _write_csv(
        path,
        ["name", "kind", "exit_code", "stop_condition", "metric_name", "metric", "wall_time"],
        [
            [o.name, o.kind, o.exit_code, o.stop_condition, o.metric_name,
             _fmt(o.metric) if isinstance(o.metric, float) else o.metric, f"{o.wall_time:.6f}"]
            for o in outcomes
        ],
    )


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fixpoint", description="Run fixed-point iteration scenarios.")
    ap.add_argument("--scenario", required=True, help="scenario YAML file or directory of them")
    ap.add_argument("--only", help="run only the scenario with this name")
    ap.add_argument("--max-iters", type=int, help="override max_iters of iterate scenarios")
    ap.add_argument("--tol", type=float, help="override residual_tol of iterate scenarios")
    ap.add_argument("--seed", type=int, help="override every scenario seed")
    ap.add_argument("--out-dir", default=".", help="directory for output files (default: cwd)")
    ap.add_argument("--summary", help="summary CSV path (default: <out-dir>/summary.csv for multi-scenario runs)")
    ap.add_argument("--parallel", action="store_true", help="run scenarios concurrently")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    overrides = {"max_iters": args.max_iters, "tol": args.tol, "seed": args.seed}
    if args.max_iters is not None and args.max_iters < 1:
        print("error: --max-iters must be positive", file=sys.stderr)
        return EXIT_CONFIG
    try:
        scenarios = load_scenarios(args.scenario, overrides, args.only)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = Path(args.out_dir)
    if args.parallel and len(scenarios) > 1:
        with ThreadPoolExecutor() as pool:
            outcomes = list(pool.map(lambda s: execute(s, out_dir), scenarios))
    else:
        outcomes = [execute(s, out_dir) for s in scenarios]
    for o in outcomes:
        print(o.summary_line())
    summary = args.summary or (out_dir / "summary.csv" if len(outcomes) > 1 else None)
    if summary:
        write_summary(Path(summary), outcomes)
    return next((o.exit_code for o in outcomes if o.exit_code), EXIT_OK)


if __name__ == "__main__":
    sys.exit(main())
