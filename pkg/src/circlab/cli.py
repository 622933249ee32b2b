"""Batch CLI: `circlab <command> --config <path> [--out <dir>] [--server <url>]`.

Runs locally through the same execution layer as the service; with
--server the config is posted to a running circlab service and the returned
tables are materialized to the same files.  Exit codes: 0 success, 2 config
error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import base64
import sys

from .configs import Command, ConfigError, parse_config_file
from .runner import (
    NumericalRunError,
    RunOutput,
    TableResult,
    execute,
    write_outputs,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _remote_run(server: str, config) -> RunOutput:
    import httpx

    body = dict(config.params.model_dump())
    body["command"] = config.command.value
    resp = httpx.post(server.rstrip("/") + "/run", json=body, timeout=3600.0)
    if resp.status_code == 422:
        raise ConfigError(resp.json().get("error", resp.text))
    if resp.status_code != 200:
        raise NumericalRunError(resp.json().get("error", resp.text))
    payload = resp.json()
    return RunOutput(
        command=payload["command"],
        tables=[
            TableResult(name=t["name"], columns=t["columns"], rows=t["rows"])
            for t in payload["tables"]
        ],
        extra_files={
            k: base64.b64decode(v) for k, v in payload["extra_files_b64"].items()
        },
        resolved_params=payload["resolved_params"],
        defaults_applied=payload["defaults_applied"],
    )


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="circlab",
        description="Circulator design workbench: switch sweeps, sideband "
        "scattering, transient simulation, design trade-offs, flux noise.",
    )
    parser.add_argument("command", choices=[c.value for c in Command])
    parser.add_argument("--config", required=True, help="JSON run configuration")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--server", default=None, help="run remotely on a circlab service")
    args = parser.parse_args(argv)

    try:
        config = parse_config_file(args.config, command=args.command)
    except ConfigError as e:
        print("config error: %s" % e, file=sys.stderr)
        return EXIT_CONFIG
    except OSError as e:
        print("config error: cannot read %s (%s)" % (args.config, e), file=sys.stderr)
        return EXIT_CONFIG

    out_dir = args.out or config.output_dir
    try:
        if args.server:
            output = _remote_run(args.server, config)
        else:
            output = execute(config)
        manifest = write_outputs(output, out_dir)
    except ConfigError as e:
        print("config error: %s" % e, file=sys.stderr)
        return EXIT_CONFIG
    except NumericalRunError as e:
        print("numerical failure: %s" % e, file=sys.stderr)
        return EXIT_NUMERICAL

    for entry in manifest["outputs"]:
        print("wrote %s/%s" % (out_dir, entry["file"]))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
