"""Command line interface.

Subcommands: ``check`` (topology prediction), ``run`` (windowed waveform
relaxation with iterate CSV + report JSON), ``mono`` (monolithic reference
CSV), ``sweep`` (order-in-H study), ``lemma`` (perturbation-gain table).

Exit codes: 0 success, 1 usage/input error, 2 solver failure, 3 declared
divergence (``run``). Every invocation ends with one machine-parseable JSON
line carrying at least {"verdict": ..., "files": [...]}.
"""

import argparse
import json
import sys
from pathlib import Path

from .cosim import Verdict, WrConfig
from .errors import ConfigError, InconsistentStartError, NetlistError, SolverError
from .netlist import load_netlist
from .oracle import build_coupled, monolithic_solve
from .studies import (build_systems, iterate_study, lemma_check, order_study,
                      report_json)
from .topology import predict

DEFAULT_H_LIST = "0.5,0.25,0.125,0.0625,0.03125"
DEFAULT_DT_LIST = "0.01,0.005,0.0025,0.00125"


def _add_run_flags(p: argparse.ArgumentParser):
    p.add_argument("--scheme", default="gs", help="gs or jacobi (default gs)")
    p.add_argument("--H", dest="h", type=float, default=0.5, help="window length in s")
    p.add_argument("--dt", type=float, default=1e-3, help="time step in s")
    p.add_argument("--kmax", type=int, default=8, help="max iterations per window")
    p.add_argument("--tol", type=float, default=1e-8, help="stopping tolerance on ||dv||+||di||")
    p.add_argument("--t-end", dest="t_end", type=float, default=5.0, help="horizon in s")
    p.add_argument("--divergence-factor", type=float, default=1e6)
    p.add_argument("--threads", type=int, default=1,
                   help="1 = deterministic reference path; 2 runs Jacobi sweeps concurrently")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wrcosim",
                                 description="Waveform-relaxation co-simulation toolkit")
    sub = ap.add_subparsers(dest="cmd", required=True)

    for name, helptext in (
        ("check", "predict convergence from the coupling-node topology"),
        ("run", "windowed waveform relaxation; writes iterate CSV and report JSON"),
        ("mono", "monolithic reference solve; writes trajectory CSV"),
        ("sweep", "order-in-H error study; writes CSV and SVG"),
        ("lemma", "perturbation-gain table across a dt sweep"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("netlist", help="netlist path (bundled circuit_a.net / circuit_b.net also resolve)")
        p.add_argument("--out-dir", default="out", help="output directory (default ./out)")
        if name == "run":
            _add_run_flags(p)
        elif name == "mono":
            p.add_argument("--dt", type=float, default=1e-3)
            p.add_argument("--t-end", dest="t_end", type=float, default=5.0)
        elif name == "sweep":
            _add_run_flags(p)
            p.add_argument("--h-list", default=DEFAULT_H_LIST,
                           help="comma-separated window sizes, largest first")
            p.add_argument("--k", type=int, default=1, help="fixed iteration count per window")
        elif name == "lemma":
            p.add_argument("--dt-list", default=DEFAULT_DT_LIST,
                           help="comma-separated time steps, largest first")
            p.add_argument("--shape", default="hat", choices=("hat", "sin", "zero"))
            p.add_argument("--amplitude", type=float, default=1e-3)
            p.add_argument("--t-end", dest="t_end", type=float, default=1.0)
    return ap


def _finish(verdict: str, files: list[str], extra: dict | None = None) -> None:
    doc = {"verdict": verdict, "files": files}
    if extra:
        doc.update(extra)
    print(json.dumps(doc))


def _cfg_from(args) -> WrConfig:
    return WrConfig(scheme=args.scheme, h=args.h, dt=args.dt, k_max=args.kmax,
                    tol=args.tol, divergence_factor=args.divergence_factor,
                    t_end=args.t_end, threads=args.threads)


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad numeric list {text!r}") from exc


def _dispatch(args) -> int:
    graph = load_netlist(args.netlist)
    out = Path(args.out_dir)

    if args.cmd == "check":
        verdict = predict(graph)
        print(verdict.human())
        out.mkdir(parents=True, exist_ok=True)
        vfile = out / "verdict.json"
        vfile.write_text(json.dumps(verdict.to_dict(), indent=2) + "\n")
        _finish(verdict.prediction.value, [str(vfile)], verdict.to_dict())
        return 0

    if args.cmd == "run":
        cfg = _cfg_from(args)
        result = iterate_study(graph, cfg, out_dir=out)
        report_path = out / "report.json"
        report_path.write_text(report_json(result.wr, extra={
            "prediction": result.prediction.prediction.value,
            "err_per_iteration": result.err_per_k,
        }))
        files = result.files + [str(report_path)]
        verdict = result.wr.report.verdict
        print(f"verdict: {verdict.value}; prediction: {result.prediction.prediction.value}")
        _finish(verdict.value, files)
        return 3 if verdict is Verdict.DIVERGED else 0

    if args.cmd == "mono":
        mna, model = build_systems(graph)
        mono = monolithic_solve(build_coupled(mna, model), args.dt, args.t_end)
        out.mkdir(parents=True, exist_ok=True)
        path = out / "mono.csv"
        path.write_text(mono.csv_text())
        _finish("ok", [str(path)])
        return 0

    if args.cmd == "sweep":
        cfg = _cfg_from(args)
        result = order_study(graph, _floats(args.h_list), args.k, cfg, out_dir=out)
        print(f"fitted slope: {result.fitted_slope:.3f} over {result.fit_rows} rows"
              + ("" if result.slope_valid else " (rejected)"))
        _finish("ok" if result.slope_valid else "slope-rejected", result.files,
                {"slope": result.fitted_slope, "warnings": result.warnings})
        return 0

    if args.cmd == "lemma":
        result = lemma_check(graph, _floats(args.dt_list), shape=args.shape,
                             amplitude=args.amplitude, t_end=args.t_end, out_dir=out)
        for dt, nu in result.rows:
            print(f"dt={dt:g}  nu_hat={nu:.6g}")
        _finish(result.verdict, result.files, {"ratios": result.ratios})
        return 0

    raise ConfigError(f"unknown subcommand {args.cmd!r}")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else 1
        if code == 0:
            return 0  # --help
        _finish("error", [], {"error": "usage"})
        return 1
    try:
        return _dispatch(args)
    except (NetlistError, ConfigError, InconsistentStartError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        _finish("error", [], {"error": str(exc)})
        return 1
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        _finish("error", [], {"error": str(exc)})
        return 2


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
