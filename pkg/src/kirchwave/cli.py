"""Command-line client for the simulation service.

Every subcommand except ``plot`` and ``serve`` is a thin client: it loads
the problem JSON, posts it to the service (in-process by default, or a
remote server via --base-url), and writes the returned series and reports
under the output directory together with a manifest.

Exit codes: 0 success, 2 config parse error, 3 hypothesis violations
(check), 4 numerical abort.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .manifest import write_manifest
from .plots import emit_svg

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VIOLATIONS = 3
EXIT_NUMERICAL = 4


class _CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _client(base_url: str | None):
    if base_url:
        import httpx

        return httpx.Client(base_url=base_url, timeout=None)
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DeprecationWarning)
        from fastapi.testclient import TestClient

    from .service.app import create_app

    return TestClient(create_app())


def _load_config(path: str) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise _CliError(EXIT_CONFIG, f"cannot read config {path}: {exc}")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise _CliError(EXIT_CONFIG, f"config {path} is not valid JSON: {exc}")
    if not isinstance(doc, dict):
        raise _CliError(EXIT_CONFIG, f"config {path} must hold a JSON object")
    return doc


def _post(client, route: str, payload: dict) -> dict:
    resp = client.post(route, json=payload)
    if resp.status_code == 200:
        return resp.json()
    try:
        detail = resp.json().get("detail")
    except Exception:
        detail = resp.text
    if resp.status_code == 422:
        raise _CliError(EXIT_CONFIG, f"config rejected: {detail}")
    if isinstance(detail, dict) and detail.get("kind") == "numerical-abort":
        raise _CliError(
            EXIT_NUMERICAL, f"numerical abort at step {detail.get('step')} (t = {detail.get('t')})"
        )
    if isinstance(detail, dict) and detail.get("kind") == "config-error":
        raise _CliError(EXIT_CONFIG, f"config error: {detail.get('message')}")
    raise _CliError(EXIT_NUMERICAL, f"service error {resp.status_code}: {detail}")


def _write_csv(path: Path, columns, rows) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([repr(float(x)) for x in row])


def _ic_payload(args) -> dict:
    return {
        "u0_mode": args.u0_mode,
        "u0_amp": args.u0_amp,
        "v0_mode": args.v0_mode,
        "v0_amp": args.v0_amp,
    }


def _add_ic_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--u0-mode", type=int, default=1, dest="u0_mode")
    p.add_argument("--u0-amp", type=float, default=1.0, dest="u0_amp")
    p.add_argument("--v0-mode", type=int, default=1, dest="v0_mode")
    p.add_argument("--v0-amp", type=float, default=0.0, dest="v0_amp")


def _cmd_init(args, client) -> int:
    resp = client.get("/problems/default")
    doc = resp.json()
    out = Path(args.out)
    out.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {out}")
    return EXIT_OK


def _cmd_check(args, client) -> int:
    config = _load_config(args.config)
    body = _post(client, "/check", {"problem": config})
    for chk in body["lyapunov_checks"]:
        if not chk["satisfied"]:
            print(f"warning: auxiliary-parameter constraint not met: {chk['name']}: {chk['detail']}")
    if body["violations"]:
        for v in body["violations"]:
            print(f"violation {v['equation']}: {v['message']}")
        return EXIT_VIOLATIONS
    print("all hypothesis checks passed")
    return EXIT_OK


def _cmd_simulate(args, client) -> int:
    config = _load_config(args.config)
    body = _post(
        client,
        "/simulate",
        {"problem": config, "t_final": args.T, "dt": args.dt, "ic": _ic_payload(args)},
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "energy.csv", body["energy"]["columns"], body["energy"]["rows"])
    write_manifest(out, "simulate", config, ["energy.csv"])
    print(f"simulated {body['n_steps']} steps; final squared phase norm {body['final_norm_h_sq']:.6g}")
    print(f"outputs in {out}")
    return EXIT_OK


def _cmd_decompose(args, client) -> int:
    config = _load_config(args.config)
    body = _post(
        client,
        "/decompose",
        {"problem": config, "t_final": args.T, "dt": args.dt, "ic": _ic_payload(args)},
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "decomposition.csv", body["series"]["columns"], body["series"]["rows"])
    report = {
        "fit": body["fit"],
        "fit_error": body.get("fit_error"),
        "w2": body["w2"],
        "max_additivity_defect": body["max_additivity_defect"],
    }
    (out / "decomposition_report.json").write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    write_manifest(out, "decompose", config, ["decomposition.csv", "decomposition_report.json"])
    fit = body["fit"]
    if fit is None:
        print(f"w1 decay fit unavailable: {body.get('fit_error')}")
    else:
        print(f"w1 decay rate {fit['rate']:.4g} (r^2 = {fit['r_squared']:.4f})")
    print(
        f"w2 sup {body['w2']['sup_full']:.6g}, max additivity defect {body['max_additivity_defect']:.3e}"
    )
    return EXIT_OK


def _cmd_absorb(args, client) -> int:
    config = _load_config(args.config)
    ensemble = {
        "n_traj": args.n_traj,
        "radii": [float(r) for r in args.radii.split(",")],
        "seed": args.seed,
        "t_final": args.T,
        "dt": args.dt,
        "threshold_R": args.threshold,
    }
    body = _post(client, "/absorb", {"problem": config, "ensemble": ensemble})
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "probe.json").write_text(json.dumps(body, indent=2) + "\n", encoding="utf-8")
    write_manifest(out, "absorb", config, ["probe.json"], seed=args.seed)
    status = "all trajectories absorbed" if body["all_absorbed"] else "absorption FAILED"
    print(f"{status}; threshold_R = {body['threshold_R']:.6g}, max entry time = {body['max_entry_time']}")
    return EXIT_OK


def _cmd_pair(args, client) -> int:
    config = _load_config(args.config)
    body = _post(
        client,
        "/pair",
        {
            "problem": config,
            "t_final": args.T,
            "dt": args.dt,
            "ic1": {"u0_mode": 1, "u0_amp": args.ic1, "v0_mode": 1, "v0_amp": 0.0},
            "ic2": {"u0_mode": 1, "u0_amp": args.ic2, "v0_mode": 1, "v0_amp": 0.0},
        },
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = list(zip(body["t"], body["Atilde1"], body["E"]))
    _write_csv(out / "pair.csv", ["t", "Atilde1", "E"], rows)
    report = {k: body[k] for k in ("T", "C_Atilde1", "Phi_T", "lhs", "rhs", "bound_rhs", "holds")}
    (out / "pair_report.json").write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    write_manifest(out, "pair", config, ["pair.csv", "pair_report.json"])
    print(
        f"T*Atilde1(T) = {body['lhs']:.6g} vs C + Phi = {body['rhs']:.6g} "
        f"({'holds' if body['holds'] else 'VIOLATED'})"
    )
    return EXIT_OK


def _cmd_converge(args, client) -> int:
    config = _load_config(args.config)
    if args.modes is not None:
        config = dict(config)
        domain = dict(config.get("domain", {}))
        domain["n_modes"] = args.modes
        domain.pop("n_phys", None)
        config["domain"] = domain
    dts = [float(x) for x in args.dts.split(",")]
    body = _post(
        client,
        "/converge",
        {"problem": config, "dts": dts, "t_final": args.T, "dt_ref": args.dt_ref},
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = [[r["dt"], r["error"], r["ratio"] if r["ratio"] is not None else float("nan")] for r in body["rows"]]
    _write_csv(out / "convergence.csv", ["dt", "error", "ratio"], rows)
    write_manifest(out, "converge", config, ["convergence.csv"])
    for r in body["rows"]:
        note = f"  ({r['note']})" if r["note"] else ""
        ratio = f"{r['ratio']:.3f}" if r["ratio"] is not None else "-"
        print(f"dt = {r['dt']:.3e}  error = {r['error']:.6e}  ratio = {ratio}{note}")
    return EXIT_OK


def _cmd_plot(args, client) -> int:
    path = Path(args.csv)
    if not path.exists():
        raise _CliError(EXIT_CONFIG, f"no such CSV: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header:
            raise _CliError(EXIT_CONFIG, f"{path} is empty")
        if args.col not in header:
            raise _CliError(EXIT_CONFIG, f"column {args.col!r} not in {header}")
        xi = header.index("t") if "t" in header else 0
        yi = header.index(args.col)
        xs, ys = [], []
        for row in reader:
            if not row:
                continue
            xs.append(float(row[xi]))
            ys.append(float(row[yi]))
    if not xs:
        raise _CliError(EXIT_CONFIG, f"{path} has no data rows")
    emit_svg(xs, ys, args.out, title=args.col, xlabel=header[xi], ylabel=args.col, log_y=args.log)
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_serve(args, client) -> int:
    import uvicorn

    from .service.app import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port, log_level="info")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kirchwave", description=__doc__)
    parser.add_argument("--base-url", default=None, help="drive a remote service instead of in-process")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init", help="write the canonical problem config")
    p.add_argument("--out", default="default.json")
    p.set_defaults(func=_cmd_init)

    p = sub.add_parser("check", help="run the hypothesis validators")
    p.add_argument("config")
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("simulate", help="advance a trajectory and record the energy series")
    p.add_argument("config")
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--dt", type=float, required=True)
    p.add_argument("--out", required=True)
    _add_ic_options(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("decompose", help="co-integrate the two-part splitting")
    p.add_argument("config")
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--dt", type=float, required=True)
    p.add_argument("--out", required=True)
    _add_ic_options(p)
    p.set_defaults(func=_cmd_decompose)

    p = sub.add_parser("absorb", help="ensemble probe of a candidate absorbing ball")
    p.add_argument("config")
    p.add_argument("--n-traj", type=int, default=10, dest="n_traj")
    p.add_argument("--radii", default="1,10")
    p.add_argument("--seed", type=int, default=2024)
    p.add_argument("--T", type=float, default=25.0)
    p.add_argument("--dt", type=float, default=2e-3)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_absorb)

    p = sub.add_parser("pair", help="two-trajectory contraction study")
    p.add_argument("config")
    p.add_argument("--T", type=float, default=10.0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--ic1", type=float, default=1.0, help="mode-1 amplitude of the first run")
    p.add_argument("--ic2", type=float, default=1.1, help="mode-1 amplitude of the second run")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_pair)

    p = sub.add_parser("converge", help="step-size study against the explicit reference")
    p.add_argument("config")
    p.add_argument("--dts", default="4e-3,2e-3,1e-3")
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--dt-ref", type=float, default=1e-5, dest="dt_ref")
    p.add_argument("--modes", type=int, default=None, help="override the mode count")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_converge)

    p = sub.add_parser("plot", help="render one CSV column as SVG")
    p.add_argument("csv")
    p.add_argument("--col", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--log", action="store_true")
    p.set_defaults(func=_cmd_plot)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8321)
    p.set_defaults(func=_cmd_serve)

    return parser


def cli_main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    client = None
    try:
        if args.func not in (_cmd_plot, _cmd_serve):
            client = _client(args.base_url)
        return args.func(args, client)
    except _CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    finally:
        if client is not None:
            client.close()


def main() -> None:  # console entry point
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
