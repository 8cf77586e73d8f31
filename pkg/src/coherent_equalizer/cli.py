"""Command-line front end.

Subcommands::

    synthesize   full design; writes report.txt and psd.csv
    check-pr     classical design plus the physical-realizability check
    psd          closed-loop power spectral density as CSV
    demo         both modes of the cavity example and their comparison

Exit status: 0 success, 2 configuration error, 3 synthesis or
precondition failure, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import io
import json
import sys
import time
from pathlib import Path

import numpy as np

from .config import ProblemConfig, build_problem, load_config, parse_config
from .errors import ConfigError, DimensionError, NumericalError, PreconditionError
from .lqg import lqg_gains
from .pipeline import SynthesisReport, evaluate_cost, frequency_grid, psd, synthesize_equalizer
from .realize import check_passive_realizable, complete_active, verify_active_pr

EXIT_OK, EXIT_CONFIG, EXIT_SYNTHESIS, EXIT_NUMERICAL = 0, 2, 3, 4

REFERENCE_COSTS = {"passive": 18.05, "active": 16.17}
COST_RTOL = 0.05


def _fmt(x: float) -> str:
    return f"{x:.10g}"


def _matrix(name: str, M) -> str:
    M = np.asarray(M)
    body = np.array2string(
        M, precision=8, suppress_small=False, max_line_width=120, threshold=10_000
    )
    return f"{name} ({M.shape[0]}x{M.shape[1]}):\n{body}\n"


def format_report(rep: SynthesisReport) -> str:
    """Human-readable synthesis report; contains no timing so reruns are bit-identical."""
    out = io.StringIO()
    w = out.write
    w(f"mode: {rep.mode}\n")
    w(f"cost J_cl = Tr(Rbar Qbar): {_fmt(rep.cost)}\n")
    w(f"cost under half-intensity vacuum noise: {_fmt(rep.cost_half_intensity)}\n")
    if rep.hinf_norm is not None:
        w(f"controller H-infinity norm: {_fmt(rep.hinf_norm)}\n")
    w(f"PR residuals: {', '.join(f'{r:.3e}' for r in rep.pr_residuals)}\n")
    for k, v in rep.solver_residuals.items():
        w(f"{k} residual: {v:.3e}\n")
    w(f"mu: {_fmt(rep.weights.mu)}\n\n")
    p = rep.plant
    for name in ("A", "B_hat", "B_w1", "C", "D_w1"):
        w(_matrix(f"plant {name}", getattr(p, name)))
    g = rep.gains
    w(_matrix("control Riccati P", g.P))
    w(_matrix("filter Riccati Q", g.Q))
    w(_matrix("state-feedback gain F", g.F))
    w(_matrix("filter gain K", g.K))
    c = rep.controller
    for name in ("A_k", "B_y", "C_k", "B_v1", "B_v2"):
        M = getattr(c, name)
        if M.size:
            w(_matrix(f"controller {name}", M))
        else:
            w(f"controller {name}: empty ({M.shape[0]}x{M.shape[1]})\n")
    if c.transform is not None:
        w(_matrix("realizing transform X^(1/2)", c.transform))
    w(_matrix("closed loop A_cl", rep.closed_loop.A_cl))
    w(_matrix("closed loop B_cl", rep.closed_loop.B_cl))
    w(_matrix("steady-state covariance Qbar", rep.covariance))
    return out.getvalue()


def format_psd_csv(result) -> str:
    m = result.per_output.shape[1]
    header = ["omega", "psd_total"] + [f"psd_out_{i + 1}" for i in range(m)]
    lines = [",".join(header)]
    for w, tot, row in zip(result.omega, result.total, result.per_output):
        lines.append(",".join(f"{v:.12e}" for v in (w, tot, *row)))
    return "\n".join(lines) + "\n"


def run_synthesis(cfg: ProblemConfig, out_dir=None):
    """Run the three design steps for ``cfg``; optionally write report and CSV.

    Returns the report, the PSD result and the paths written.
    """
    plant, weights = build_problem(cfg)
    rep = synthesize_equalizer(plant, weights)
    grid = frequency_grid(rep.closed_loop, cfg.psd.omega_min, cfg.psd.omega_max, cfg.psd.points)
    spectrum = psd(rep.closed_loop, grid)
    paths = []
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.txt").write_text(format_report(rep))
        (out / "psd.csv").write_text(format_psd_csv(spectrum))
        (out / "config.json").write_text(cfg.to_json() + "\n")
        paths = [out / "report.txt", out / "psd.csv", out / "config.json"]
    return rep, spectrum, paths


def _grid_overrides(args) -> dict:
    keys = ("omega_min", "omega_max", "points")
    return {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}


def _config_from_args(args) -> ProblemConfig:
    if args.config:
        data = load_config(args.config).model_dump(mode="json", exclude_none=True)
    else:
        data = {"preset": "paper-example"}
    if getattr(args, "mode", None):
        data["mode"] = args.mode
    grid = _grid_overrides(args)
    if grid:
        data["psd"] = {**data.get("psd", {}), **grid}
    return parse_config(json.dumps(data))


def cmd_synthesize(args) -> int:
    cfg = _config_from_args(args)
    t0 = time.perf_counter()
    rep, _, paths = run_synthesis(cfg, args.out or cfg.output)
    if not paths:
        sys.stdout.write(format_report(rep))
    else:
        print(f"{rep.mode} cost J_cl = {_fmt(rep.cost)}")
        for p in paths:
            print(f"wrote {p}")
    print(f"elapsed {time.perf_counter() - t0:.3f} s", file=sys.stderr)
    return EXIT_OK


def cmd_check_pr(args) -> int:
    cfg = _config_from_args(args)
    plant, weights = build_problem(cfg)
    ctrl = lqg_gains(plant, weights).controller
    if plant.is_complex:
        chk = check_passive_realizable(ctrl.A_k, ctrl.B_y, ctrl.C_k)
        print(f"Hurwitz: {chk.hurwitz}")
        print(f"H-infinity norm: {_fmt(chk.hinf_norm)} (bound 1)")
        print(f"controllable: {chk.controllable}, observable: {chk.observable}")
        print(f"physically realizable: {chk.realizable}")
        if not chk:
            print(
                f"error: controller is not bounded real (H-infinity norm {_fmt(chk.hinf_norm)})",
                file=sys.stderr,
            )
            return EXIT_SYNTHESIS
        return EXIT_OK
    coh = complete_active(ctrl)
    chk = verify_active_pr(
        coh.as_quadrature_system(), n_v=coh.C_k.shape[0] + coh.n_v2, n_u=coh.B_y.shape[1]
    )
    print(f"vacuum channels: n_v1={coh.C_k.shape[0]}, n_v2={coh.n_v2}")
    print(f"commutation residual: {chk.commutation_residual:.3e}")
    print(f"output residual: {chk.output_residual:.3e}")
    print(f"physically realizable: {chk.realizable}")
    return EXIT_OK if chk else EXIT_NUMERICAL


def cmd_psd(args) -> int:
    cfg = _config_from_args(args)
    _, spectrum, paths = run_synthesis(cfg, args.out or cfg.output)
    if paths:
        print(f"wrote {paths[1]}")
    else:
        sys.stdout.write(format_psd_csv(spectrum))
    return EXIT_OK


def cmd_demo(args) -> int:
    costs = {}
    for mode in ("passive", "active"):
        data = {"preset": "paper-example", "mode": mode}
        if _grid_overrides(args):
            data["psd"] = _grid_overrides(args)
        cfg = parse_config(json.dumps(data))
        out = Path(args.out) / mode if args.out else None
        t0 = time.perf_counter()
        rep, _, _ = run_synthesis(cfg, out)
        dt = time.perf_counter() - t0
        target = REFERENCE_COSTS[mode]
        rel = (rep.cost - target) / target
        costs[mode] = rep.cost
        if mode == "passive":
            costs["passive_quadrature"] = evaluate_cost(rep.closed_loop.to_quadrature())
        print(f"{mode:8s} J_cl = {_fmt(rep.cost):>14s}   reference {target:6.2f}   "
              f"rel. error {rel:+.3%}   ({dt * 1e3:.1f} ms)")
        if abs(rel) > COST_RTOL:
            print(f"{'':8s} half-intensity noise convention: J_cl = {_fmt(rep.cost_half_intensity)}")
    order = "active <= passive" if costs["active"] <= costs["passive"] else "active > passive"
    print(f"comparison: {order} "
          f"(ratio active/passive = {costs['active'] / costs['passive']:.4f})")
    print(f"passive loop in quadrature units: J_cl = {_fmt(costs['passive_quadrature'])} "
          f"(ratio active/passive = {costs['active'] / costs['passive_quadrature']:.4f})")
    if args.out:
        print(f"artifacts in {args.out}/passive and {args.out}/active")
    return EXIT_OK


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="coherent-equalizer",
        description="Coherent quantum LQG equalizer synthesis.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, with_out=True):
        sp.add_argument("--config", help="JSON problem description (default: cavity example)")
        sp.add_argument("--mode", choices=("passive", "active"))
        if with_out:
            sp.add_argument("--out", help="output directory")
        sp.add_argument("--omega-min", type=float, dest="omega_min")
        sp.add_argument("--omega-max", type=float, dest="omega_max")
        sp.add_argument("--points", type=int)

    common(sub.add_parser("synthesize", help="run the full design"))
    common(sub.add_parser("check-pr", help="check physical realizability"), with_out=False)
    common(sub.add_parser("psd", help="closed-loop PSD as CSV"))
    demo = sub.add_parser("demo", help="both modes of the cavity example")
    demo.add_argument("--out", help="output directory")
    demo.add_argument("--omega-min", type=float, dest="omega_min")
    demo.add_argument("--omega-max", type=float, dest="omega_max")
    demo.add_argument("--points", type=int)
    return p


COMMANDS = {
    "synthesize": cmd_synthesize,
    "check-pr": cmd_check_pr,
    "psd": cmd_psd,
    "demo": cmd_demo,
}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (PreconditionError, DimensionError) as exc:
        print(f"synthesis failed: {exc}", file=sys.stderr)
        return EXIT_SYNTHESIS
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
