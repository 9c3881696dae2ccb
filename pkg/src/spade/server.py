"""HTTP front end for the campaign store plus static dashboard assets.

Endpoints (versioned JSON bodies, schema 1):
  POST /campaigns                   create; body {schema, pool, config?, endpoint, seed?, policy?}
  GET  /campaigns                   list campaign ids
  GET  /campaigns/{id}              state summary
  POST /campaigns/{id}/suggest      body {override?: bool}
  POST /campaigns/{id}/results      body {observations: [{ligand_id, pic}], off_batch?: bool}
  GET  /campaigns/{id}/events       full event log
Static files are served from the assets directory at / (the dashboard).
"""
from __future__ import annotations

import json
import mimetypes
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Optional

from .core import ConfigError, EndpointSpec, PolicyConfig
from .service import (
    CampaignStore,
    LivePool,
    PendingBatchConflict,
    ServiceError,
    UnknownCampaign,
)


def endpoint_from_payload(payload: dict) -> EndpointSpec:
    return EndpointSpec(kind=payload["kind"], k=int(payload["k"]),
                        target=float(payload["target"]))


def config_from_payload(payload: Optional[dict]) -> PolicyConfig:
    if not payload:
        return PolicyConfig()
    known = {f for f in PolicyConfig.__dataclass_fields__}
    unknown = set(payload) - known
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    return PolicyConfig(**payload)


class _Handler(BaseHTTPRequestHandler):
    store: CampaignStore = None
    assets_dir: Optional[Path] = None
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):  # quiet by default
        pass

    # -- helpers ----------------------------------------------------------

    def _send_json(self, status: int, payload):
        body = json.dumps(payload, sort_keys=True).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _error(self, status: int, message: str):
        self._send_json(status, {"error": message})

    def _read_body(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        if length == 0:
            return {}
        raw = self.rfile.read(length)
        try:
            return json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ServiceError(f"invalid JSON body: {exc}") from exc

    def _serve_static(self, path: str):
        if self.assets_dir is None:
            return self._error(404, "no dashboard assets configured")
        rel = path.lstrip("/") or "index.html"
        target = (self.assets_dir / rel).resolve()
        if not str(target).startswith(str(self.assets_dir.resolve())) \
                or not target.is_file():
            return self._error(404, f"not found: {path}")
        body = target.read_bytes()
        ctype = mimetypes.guess_type(str(target))[0] or "application/octet-stream"
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    # -- verbs ------------------------------------------------------------

    def do_GET(self):
        try:
            parts = [p for p in self.path.split("?")[0].split("/") if p]
            if not parts:
                return self._serve_static("index.html")
            if parts[0] == "campaigns":
                if len(parts) == 1:
                    return self._send_json(200, {"campaigns": self.store.campaign_ids()})
                if len(parts) == 2:
                    return self._send_json(200, self.store.get_state(parts[1]))
                if len(parts) == 3 and parts[2] == "events":
                    return self._send_json(200, {"events": self.store.events(parts[1])})
                return self._error(404, f"unknown path {self.path}")
            return self._serve_static(self.path)
        except UnknownCampaign as exc:
            self._error(404, str(exc))
        except ServiceError as exc:
            self._error(400, str(exc))

    def do_POST(self):
        try:
            parts = [p for p in self.path.split("?")[0].split("/") if p]
            body = self._read_body()
            if parts == ["campaigns"]:
                schema = body.get("schema", 1)
                if schema != 1:
                    raise ServiceError(f"unsupported schema version {schema}")
                pool = LivePool.from_payload(body["pool"])
                campaign_id = self.store.create_campaign(
                    pool,
                    config_from_payload(body.get("config")),
                    endpoint_from_payload(body["endpoint"]),
                    seed=int(body.get("seed", 0)),
                    policy=body.get("policy", "spade"),
                )
                return self._send_json(201, {"campaign_id": campaign_id})
            if len(parts) == 3 and parts[0] == "campaigns":
                if parts[2] == "suggest":
                    out = self.store.suggest(parts[1],
                                             override=bool(body.get("override", False)))
                    return self._send_json(200, out)
                if parts[2] == "results":
                    out = self.store.submit_results(
                        parts[1], body.get("observations", []),
                        off_batch=bool(body.get("off_batch", False)))
                    return self._send_json(200, out)
            return self._error(404, f"unknown path {self.path}")
        except UnknownCampaign as exc:
            self._error(404, str(exc))
        except PendingBatchConflict as exc:
            self._error(409, str(exc))
        except (ServiceError, ConfigError, KeyError, TypeError, ValueError) as exc:
            self._error(400, f"{type(exc).__name__}: {exc}")


def make_server(data_dir, port: int = 0, host: str = "127.0.0.1",
                assets_dir=None) -> ThreadingHTTPServer:
    """Build (but do not start) the HTTP server; port 0 picks a free port."""
    store = CampaignStore(data_dir)

    class Handler(_Handler):
        pass

    Handler.store = store
    Handler.assets_dir = Path(assets_dir) if assets_dir else None
    server = ThreadingHTTPServer((host, port), Handler)
    server.store = store
    return server


def serve_forever(data_dir, port: int, host: str = "127.0.0.1", assets_dir=None):
    server = make_server(data_dir, port=port, host=host, assets_dir=assets_dir)
    print(f"serving campaigns from {data_dir} on http://{host}:{server.server_address[1]}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()
