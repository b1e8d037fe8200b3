"""Command-line client for the simulation service.

The CLI validates a JSON config (flags override file keys), ships it to the
service, and writes the returned rows as CSV plus a normalized config echo.
Without --server the service layer runs in-process, so no daemon is needed;
with --server URL the same request goes over HTTP.

Exit codes: 0 success, 1 at least one pass/fail row failed, 2 bad usage or
config, 3 epoch budget exceeded (partial output was written).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from pydantic import ValidationError

from . import __version__
from .errors import ConfigurationError
from .service import handlers, schemas
from .tables import COLUMNS, write_config_echo, write_rows

EXIT_OK = 0
EXIT_FAILED_CHECKS = 1
EXIT_USAGE = 2
EXIT_BUDGET = 3

_SUBCOMMANDS = {
    "simulate": (schemas.SimulateRequest, handlers.run_simulate, "/simulate"),
    "sweep": (schemas.SweepRequest, handlers.run_sweep, "/sweep"),
    "kappa": (schemas.KappaRequest, handlers.run_kappa, "/kappa"),
    "oracle": (schemas.OracleRequest, handlers.run_oracle, "/oracle"),
    "renewal-check": (
        schemas.RenewalCheckRequest,
        handlers.run_renewal_check,
        "/renewal-check",
    ),
}


@dataclass(frozen=True)
class RunPlan:
    subcommand: str
    request: schemas.StrictModel
    out: Path
    server: str | None


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="brownsync",
        description="Brownian particles with stochastic synchronizing jumps",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON config file")
    common.add_argument("--seed", type=int, help="base seed (mandatory)")
    common.add_argument("--out", type=Path, help="output CSV path")
    common.add_argument("--replicas", type=int, help="Monte Carlo replicas")
    common.add_argument("--workers", type=int, help="parallel workers")
    common.add_argument(
        "--max-epochs", type=int, dest="max_epochs",
        help="per-replica epoch budget (default 10^8)",
    )
    common.add_argument("--server", help="run against this service URL")

    for name in _SUBCOMMANDS:
        sub.add_parser(name, parents=[common], help=f"run the {name} operation")

    serve = sub.add_parser("serve", help="start the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    return parser


def _location(loc) -> str:
    parts = []
    for item in loc:
        if isinstance(item, int):
            parts.append(f"[{item}]")
        else:
            parts.append(f".{item}" if parts else str(item))
    return "".join(parts) or "<config>"


def parse_config(args: argparse.Namespace) -> RunPlan:
    """Merge config file and flags into a validated run plan.

    Flags override file keys.  Unknown keys and invariant violations are
    rejected with the offending key path; JSON syntax errors carry the line
    number.  A seed is mandatory so that every output is reproducible.
    """
    payload: dict = {}
    if args.config is not None:
        try:
            payload = json.loads(args.config.read_text())
        except FileNotFoundError:
            raise ConfigurationError(f"config file not found: {args.config}")
        except json.JSONDecodeError as exc:
            raise ConfigurationError(
                f"{args.config}:{exc.lineno}:{exc.colno}: invalid JSON ({exc.msg})"
            )
        if not isinstance(payload, dict):
            raise ConfigurationError("config file must hold a JSON object")
    for key in ("seed", "replicas", "workers", "max_epochs"):
        value = getattr(args, key, None)
        if value is not None:
            payload[key] = value
    if "seed" not in payload:
        raise ConfigurationError(
            "a seed is mandatory (pass --seed or a 'seed' key); "
            "unseeded runs would not be reproducible"
        )
    model = _SUBCOMMANDS[args.subcommand][0]
    try:
        request = model.model_validate(payload)
    except ValidationError as exc:
        lines = [
            f"config error at {_location(err['loc'])}: {err['msg']}"
            for err in exc.errors()
        ]
        raise ConfigurationError("\n".join(lines))
    out = args.out if args.out is not None else Path(f"{args.subcommand}.csv")
    return RunPlan(args.subcommand, request, out, args.server)


def _execute(plan: RunPlan) -> dict:
    """Run the request in-process or against a remote service."""
    body = plan.request.model_dump(mode="json", by_alias=True)
    if plan.server is None:
        handler = _SUBCOMMANDS[plan.subcommand][1]
        response = handler(plan.request)
        return response.model_dump(mode="json", by_alias=True)
    import httpx

    path = _SUBCOMMANDS[plan.subcommand][2]
    reply = httpx.post(
        plan.server.rstrip("/") + path, json=body, timeout=None
    )
    if reply.status_code != 200:
        raise ConfigurationError(
            f"service returned {reply.status_code}: {reply.text}"
        )
    return reply.json()


def run(plan: RunPlan) -> int:
    """Execute a plan, write CSV + config echo, and map the exit status."""
    data = _execute(plan)
    write_rows(plan.out, COLUMNS[plan.subcommand], data["rows"])
    write_config_echo(plan.out, plan.subcommand, data["config"], data["version"])
    if data.get("budget_exceeded"):
        print(
            f"warning: epoch budget exceeded; partial output in {plan.out}",
            file=sys.stderr,
        )
        return EXIT_BUDGET
    failed = [row for row in data["rows"] if row.get("pass") is False]
    if failed:
        print(f"{len(failed)} row(s) failed their check", file=sys.stderr)
        return EXIT_FAILED_CHECKS
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.subcommand == "serve":
        import uvicorn

        from .service import create_app

        uvicorn.run(create_app(), host=args.host, port=args.port)
        return EXIT_OK
    try:
        plan = parse_config(args)
        return run(plan)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
