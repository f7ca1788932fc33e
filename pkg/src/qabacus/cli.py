"""Command-line interface: schedule runs, spectra, scattering, programs,
verification, and an HTTP service launcher.

Every subcommand goes through the shared request/response operations in
`service.ops`; by default they execute in-process, and `--server URL` routes
the identical request to a running service instead (artifacts are
byte-identical either way).  Flag values resolve as flag > config file >
built-in default, where `--config FILE` names a JSON object keyed by the
long flag names with dashes replaced by underscores.

Exit codes: 0 success, 1 engine-accuracy failure (or failed verification),
2 parse error, 3 physics-contract violation.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from .errors import EngineAccuracyError, PhysicsContractError, ScheduleParseError
from .service import ops
from .service.models import (
    CompileRequest,
    ConfigModel,
    ProgramRequest,
    RunRequest,
    ScatterRequest,
    SpectrumRequest,
    VerifyRequest,
)

EXIT_OK = 0
EXIT_ACCURACY = 1
EXIT_PARSE = 2
EXIT_PHYSICS = 3

_KIND_TO_ERROR = {
    "parse": ScheduleParseError,
    "physics-contract": PhysicsContractError,
    "engine-accuracy": EngineAccuracyError,
}


# --------------------------------------------------------------------------
# plumbing


def _load_json_file(path: str, what: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ScheduleParseError(f"cannot read {what} {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ScheduleParseError(f"{what} {path!r} is not valid JSON: {exc}") from exc


def _parse_gate_arg(text: str):
    t = text.strip()
    if t.startswith("["):
        try:
            return json.loads(t)
        except json.JSONDecodeError as exc:
            raise ScheduleParseError(f"gate matrix is not valid JSON: {exc}") from exc
    return t


class Settings:
    """Flag > config file > default resolution for one parsed invocation."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.file_values = {}
        if getattr(args, "config", None):
            values = _load_json_file(args.config, "config file")
            if not isinstance(values, dict):
                raise ScheduleParseError("config file must hold a JSON object")
            self.file_values = values

    def get(self, key: str, default=None):
        v = getattr(self.args, key, None)
        if v is not None:
            return v
        if key in self.file_values:
            return self.file_values[key]
        return default

    def physical_config(self) -> ConfigModel:
        keys = ("mass", "omega", "hbar", "l0")
        return ConfigModel(**{k: float(self.file_values[k])
                              for k in keys if k in self.file_values})


def _call(settings: Settings, name: str, req) -> dict:
    """Run one operation locally or against --server; returns the JSON body."""
    server = settings.get("server")
    if not server:
        fn = getattr(ops, f"do_{name}")
        return fn(req).model_dump(mode="json")
    import httpx

    url = f"{server.rstrip('/')}/{name}"
    try:
        resp = httpx.post(url, json=req.model_dump(mode="json"), timeout=600.0)
    except httpx.HTTPError as exc:
        raise EngineAccuracyError(f"server request failed: {exc}") from exc
    if resp.status_code >= 400:
        try:
            body = resp.json()
        except json.JSONDecodeError:
            body = {}
        kind = body.get("kind", "")
        message = body.get("message", resp.text)
        exc_type = _KIND_TO_ERROR.get(kind)
        if exc_type is None:
            raise EngineAccuracyError(
                f"server error {resp.status_code} at {url}: {message}")
        raise exc_type(message)
    return resp.json()


def _emit(payload: dict, fmt: str, out: str | None, csv_text: str | None) -> None:
    """Write csv/json output to a file or stdout."""
    if fmt == "csv":
        if csv_text is None:
            raise ScheduleParseError("this command has no CSV form; use --format json")
        text = csv_text
    else:
        payload = dict(payload)
        payload.pop("csv", None)
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------------------
# subcommands


def cmd_run(args: argparse.Namespace) -> int:
    settings = Settings(args)
    schedule_path = settings.get("schedule")
    if not schedule_path:
        raise ScheduleParseError("--schedule FILE is required for 'run'")
    schedule = _load_json_file(schedule_path, "schedule")
    snapshots = settings.get("snapshots", True)
    req = RunRequest(
        schedule=schedule,
        engine=settings.get("engine", "modal"),
        profile=settings.get("profile", "bump"),
        bit=int(settings.get("bit", 0)),
        grid_nodes=settings.get("grid_nodes"),
        xmax=settings.get("xmax"),
        dt=settings.get("dt"),
        n_modes=settings.get("n_modes"),
        check_accuracy=settings.get("check_accuracy"),
        include_states=bool(snapshots),
    )
    resp = _call(settings, "run", req)

    out_dir = settings.get("out", "abacus_run")
    os.makedirs(out_dir, exist_ok=True)
    step_csv = resp.pop("step_state_csv", None) or []
    final_csv = resp.pop("final_state_csv", None)
    artifacts = []
    for i, text in enumerate(step_csv):
        name = f"step_{i:03d}.csv"
        with open(os.path.join(out_dir, name), "w", encoding="ascii") as fh:
            fh.write(text)
        artifacts.append(name)
    if final_csv is not None:
        with open(os.path.join(out_dir, "final_state.csv"), "w",
                  encoding="ascii") as fh:
            fh.write(final_csv)
        artifacts.append("final_state.csv")

    manifest = dict(resp)
    manifest["seed"] = int(settings.get("seed", 0))
    manifest["inputs"] = {"schedule": schedule_path}
    manifest["artifacts"] = sorted(artifacts) + ["manifest.json"]
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")

    ro = resp["readout"]
    print(f"{resp['engine']} run: {len(resp['steps'])} steps, "
          f"norm {resp['norm']:.12f}, p0 {ro['p0']:.6f}, p1 {ro['p1']:.6f} "
          f"-> {out_dir}/manifest.json")
    return EXIT_OK


def cmd_spectrum(args: argparse.Namespace) -> int:
    settings = Settings(args)
    gate = settings.get("gate")
    theta = settings.get("theta")
    req = SpectrumRequest(
        gate=None if gate is None else _parse_gate_arg(str(gate)),
        theta=None if theta is None else float(theta),
        count=int(settings.get("count", 8)),
        method=settings.get("method", "analytic"),
        config=settings.physical_config(),
    )
    resp = _call(settings, "spectrum", req)
    _emit(resp, settings.get("format", "csv"), settings.get("out"), resp["csv"])
    return EXIT_OK


def cmd_scatter(args: argparse.Namespace) -> int:
    settings = Settings(args)
    gate = settings.get("gate")
    if gate is None:
        raise ScheduleParseError("--gate is required for 'scatter'")
    req = ScatterRequest(
        gate=_parse_gate_arg(str(gate)),
        k_min=float(settings.get("k_min", 0.1)),
        k_max=float(settings.get("k_max", 10.0)),
        count=int(settings.get("count", 50)),
        spacing=settings.get("spacing", "log"),
        config=settings.physical_config(),
    )
    resp = _call(settings, "scatter", req)
    _emit(resp, settings.get("format", "csv"), settings.get("out"), resp["csv"])
    return EXIT_OK


def cmd_compile(args: argparse.Namespace) -> int:
    settings = Settings(args)
    gate = settings.get("gate")
    if gate is None:
        raise ScheduleParseError("--gate is required for 'compile'")
    req = CompileRequest(gate=_parse_gate_arg(str(gate)),
                         config=settings.physical_config())
    resp = _call(settings, "compile", req)
    if settings.get("format", "json") == "csv":
        raise ScheduleParseError("compile emits a schedule; use --format json")
    out = settings.get("out")
    schedule_text = json.dumps(resp["schedule"], indent=2, sort_keys=True) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(schedule_text)
        ph = resp["recorded_phase"]
        print(f"compiled: {resp['n_steps']} steps ({resp['n_gate_steps']} "
              f"gate steps), recorded phase {ph[0]:+.12f}{ph[1]:+.12f}j -> {out}")
    else:
        sys.stdout.write(schedule_text)
    return EXIT_OK


def cmd_program(args: argparse.Namespace) -> int:
    settings = Settings(args)
    program_path = settings.get("program")
    if not program_path:
        raise ScheduleParseError("--program FILE is required for 'program'")
    program = _load_json_file(program_path, "program")
    if not isinstance(program, list):
        raise ScheduleParseError("program file must hold a JSON list of ops")
    req = ProgramRequest(
        program=program,
        engine=settings.get("engine", "modal"),
        grid_nodes=settings.get("grid_nodes"),
        dt=settings.get("dt"),
        config=settings.physical_config(),
    )
    resp = _call(settings, "program", req)
    _emit(resp, "json", settings.get("out"), None)
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    settings = Settings(args)
    criteria = settings.get("criteria")
    if isinstance(criteria, str):
        try:
            criteria = [int(c) for c in criteria.split(",") if c.strip()]
        except ValueError as exc:
            raise ScheduleParseError(
                "--criteria must be comma-separated integers") from exc
    req = VerifyRequest(
        level=settings.get("level", "quick"),
        seed=int(settings.get("seed", 12345)),
        criteria=criteria,
        grid_nodes=settings.get("grid_nodes"),
        dt=settings.get("dt"),
    )
    resp = _call(settings, "verify", req)
    for line in resp["lines"]:
        print(line)
    out = settings.get("out")
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            json.dump(resp, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return EXIT_OK if resp["all_passed"] else EXIT_ACCURACY


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    uvicorn.run("qabacus.service.app:app", host=args.host, port=args.port,
                log_level="info")
    return EXIT_OK


# --------------------------------------------------------------------------
# parser


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file of default flag values")
    p.add_argument("--server", help="service URL (default: run in-process)")
    p.add_argument("--out", help="output file or directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qabacus",
        description="Harmonic trap with a tunable junction: run gate "
        "schedules, tabulate spectra and scattering, verify the simulator. "
        "ABACUS_NUM_THREADS caps verification parallelism.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute a schedule file on a prepared qubit")
    p.add_argument("--schedule", help="schedule JSON file")
    p.add_argument("--engine", choices=["modal", "grid"])
    p.add_argument("--profile", choices=["bump", "ground"])
    p.add_argument("--bit", type=int, choices=[0, 1])
    p.add_argument("--grid-nodes", type=int, dest="grid_nodes")
    p.add_argument("--xmax", type=float, help="box half-width in trap lengths")
    p.add_argument("--dt", type=float, help="grid-engine time step")
    p.add_argument("--n-modes", type=int, dest="n_modes")
    p.add_argument("--seed", type=int)
    acc = p.add_mutually_exclusive_group()
    acc.add_argument("--check-accuracy", dest="check_accuracy",
                     action="store_true", default=None)
    acc.add_argument("--no-check-accuracy", dest="check_accuracy",
                     action="store_false", default=None)
    snap = p.add_mutually_exclusive_group()
    snap.add_argument("--snapshots", dest="snapshots", action="store_true",
                      default=None)
    snap.add_argument("--no-snapshots", dest="snapshots", action="store_false",
                      default=None)
    _add_common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("spectrum", help="lowest trap levels of a junction gate")
    p.add_argument("--gate", help="gate name or [re,im] matrix rows")
    p.add_argument("--theta", type=float, help="single-side reflection angle")
    p.add_argument("--count", type=int)
    p.add_argument("--method", choices=["analytic", "fd"])
    p.add_argument("--format", choices=["csv", "json"])
    _add_common(p)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("scatter", help="transmission/reflection vs wavenumber")
    p.add_argument("--gate", help="gate name or [re,im] matrix rows")
    p.add_argument("--k-min", type=float, dest="k_min")
    p.add_argument("--k-max", type=float, dest="k_max")
    p.add_argument("--count", type=int)
    p.add_argument("--spacing", choices=["log", "linear"])
    p.add_argument("--format", choices=["csv", "json"])
    _add_common(p)
    p.set_defaults(func=cmd_scatter)

    p = sub.add_parser("compile", help="compile a gate into a schedule")
    p.add_argument("--gate", help="gate name or [re,im] matrix rows")
    p.add_argument("--format", choices=["csv", "json"])
    _add_common(p)
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("program", help="run a qubit program (prepare/gate/cnot/readout)")
    p.add_argument("--program", help="program JSON file")
    p.add_argument("--engine", choices=["modal", "grid"])
    p.add_argument("--grid-nodes", type=int, dest="grid_nodes")
    p.add_argument("--dt", type=float)
    _add_common(p)
    p.set_defaults(func=cmd_program)

    p = sub.add_parser("verify", help="run the verification suite")
    p.add_argument("--level", choices=["quick", "full"])
    p.add_argument("--seed", type=int)
    p.add_argument("--criteria", help="comma-separated criterion numbers")
    p.add_argument("--grid-nodes", type=int, dest="grid_nodes")
    p.add_argument("--dt", type=float)
    _add_common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("serve", help="launch the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScheduleParseError as exc:
        print(f"error [parse]: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except PhysicsContractError as exc:
        print(f"error [physics-contract]: {exc}", file=sys.stderr)
        return EXIT_PHYSICS
    except EngineAccuracyError as exc:
        print(f"error [engine-accuracy]: {exc}", file=sys.stderr)
        return EXIT_ACCURACY
    except ValueError as exc:  # request validation (pydantic) and kin
        print(f"error [parse]: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
