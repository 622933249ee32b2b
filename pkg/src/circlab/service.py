"""HTTP front-end: the same run configurations accepted by the CLI, served
over a small FastAPI app.  Results come back as JSON tables; file layout and
checksumming stay client-side."""

from __future__ import annotations

import base64
import json

from fastapi import FastAPI
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .configs import Command, ConfigError, parse_config
from .runner import NumericalRunError, execute

app = FastAPI(title="circlab", version="0.1.0")


class TablePayload(BaseModel):
    name: str
    columns: list[str]
    rows: list[list]


class RunResponse(BaseModel):
    command: str
    tables: list[TablePayload]
    extra_files_b64: dict[str, str]
    resolved_params: dict
    defaults_applied: list[str]


class HealthResponse(BaseModel):
    status: str


class CommandListResponse(BaseModel):
    commands: list[str]


@app.get("/health", response_model=HealthResponse)
def health():
    return HealthResponse(status="ok")


@app.get("/commands", response_model=CommandListResponse)
def commands():
    return CommandListResponse(commands=[c.value for c in Command])


@app.post("/run", response_model=RunResponse)
async def run_command(config: dict):
    try:
        run_config = parse_config(json.dumps(config))
    except ConfigError as e:
        return JSONResponse(status_code=422, content={"error": str(e), "kind": "config"})
    try:
        out = execute(run_config)
    except NumericalRunError as e:
        return JSONResponse(status_code=500, content={"error": str(e), "kind": "numerical"})
    return RunResponse(
        command=out.command,
        tables=[
            TablePayload(name=t.name, columns=list(t.columns), rows=[list(r) for r in t.rows])
            for t in out.tables
        ],
        extra_files_b64={
            k: base64.b64encode(v).decode() for k, v in out.extra_files.items()
        },
        resolved_params=out.resolved_params,
        defaults_applied=out.defaults_applied,
    )
