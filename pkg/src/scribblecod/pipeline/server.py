"""HTTP backend for the scribble annotation tool.

Serves the images of one dataset split, accepts validated ternary scribble
uploads, and keeps a per-image annotation-time log. Uploads are written
atomically; the last writer wins. The optional frontend directory is served
statically at the root path.

API:
    GET  /api/images            -> [{id, width, height, has_scribble, elapsed_ms}]
    GET  /api/image/<id>        -> image bytes
    GET  /api/scribble/<id>     -> scribble PNG bytes (404 when absent)
    PUT  /api/scribble/<id>     -> validate and store a scribble PNG
    GET  /api/timing            -> {entries: [{id, elapsed_ms}], mean_ms}
    PUT  /api/timing/<id>       -> {"elapsed_ms": int}
"""

from __future__ import annotations

import io
import json
import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import urlparse

import numpy as np
from PIL import Image, UnidentifiedImageError

from ..data.core import IMAGE_EXTS, atomic_write_bytes, check_scribble

_ID_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._-]*$")

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json",
    ".png": "image/png",
    ".jpg": "image/jpeg",
    ".jpeg": "image/jpeg",
    ".svg": "image/svg+xml",
    ".map": "application/json",
    ".ico": "image/x-icon",
}

_FALLBACK_INDEX = """<!doctype html>
<title>scribblecod annotator</title>
<h1>scribblecod annotation backend</h1>
<p>No frontend bundle is configured. The API is live under <a href="/api/images">/api/images</a>.</p>
"""


class AnnotationServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, address, root: Path, split: str, frontend_dir: Path | None):
        self.split_dir = Path(root) / split
        self.images_dir = self.split_dir / "images"
        self.scribbles_dir = self.split_dir / "scribbles"
        self.timing_path = self.split_dir / "timing.json"
        self.frontend_dir = Path(frontend_dir).resolve() if frontend_dir else None
        self.timing_lock = threading.Lock()
        super().__init__(address, _Handler)

    # timing log: {"<id>": elapsed_ms}
    def read_timing(self) -> dict[str, int]:
        if not self.timing_path.is_file():
            return {}
        try:
            return json.loads(self.timing_path.read_text())
        except json.JSONDecodeError:
            return {}

    def write_timing_entry(self, image_id: str, elapsed_ms: int) -> None:
        with self.timing_lock:
            log = self.read_timing()
            log[image_id] = elapsed_ms
            self.split_dir.mkdir(parents=True, exist_ok=True)
            atomic_write_bytes(self.timing_path, (json.dumps(log, indent=2) + "\n").encode())

    def image_path(self, image_id: str) -> Path | None:
        for ext in IMAGE_EXTS:
            p = self.images_dir / f"{image_id}{ext}"
            if p.is_file():
                return p
        return None

    def list_images(self) -> list[dict]:
        if not self.images_dir.is_dir():
            return []
        timing = self.read_timing()
        entries = []
        for path in sorted(self.images_dir.iterdir()):
            if not (path.is_file() and path.suffix.lower() in IMAGE_EXTS):
                continue
            try:
                with Image.open(path) as im:
                    width, height = im.size
            except (OSError, UnidentifiedImageError):
                continue
            image_id = path.stem
            entries.append({
                "id": image_id,
                "width": width,
                "height": height,
                "has_scribble": (self.scribbles_dir / f"{image_id}.png").is_file(),
                "elapsed_ms": timing.get(image_id),
            })
        return entries


class _Handler(BaseHTTPRequestHandler):
    server: AnnotationServer
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):  # quiet by default
        pass

    # -- plumbing -----------------------------------------------------------
    def _send(self, code: int, body: bytes, content_type: str) -> None:
        self.send_response(code)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _json(self, code: int, obj) -> None:
        self._send(code, json.dumps(obj).encode(), "application/json")

    def _error(self, code: int, message: str) -> None:
        self._json(code, {"error": message})

    def _read_body(self) -> bytes:
        length = int(self.headers.get("Content-Length", 0))
        return self.rfile.read(length) if length > 0 else b""

    def _route(self) -> tuple[str, str | None]:
        path = urlparse(self.path).path
        parts = [p for p in path.split("/") if p]
        if len(parts) >= 1 and parts[0] == "api":
            if len(parts) == 2:
                return f"api/{parts[1]}", None
            if len(parts) == 3:
                return f"api/{parts[1]}", parts[2]
            return "bad", None
        return "static", path

    # -- GET ----------------------------------------------------------------
    def do_GET(self):
        kind, arg = self._route()
        if kind == "api/images":
            return self._json(200, self.server.list_images())
        if kind == "api/image":
            return self._get_image(arg)
        if kind == "api/scribble":
            return self._get_scribble(arg)
        if kind == "api/timing":
            return self._get_timing()
        if kind == "static":
            return self._get_static(arg or "/")
        return self._error(404, "unknown endpoint")

    def _get_image(self, image_id: str | None):
        if not image_id or not _ID_RE.match(image_id):
            return self._error(400, "bad image id")
        path = self.server.image_path(image_id)
        if path is None:
            return self._error(404, f"no image '{image_id}'")
        ctype = _CONTENT_TYPES.get(path.suffix.lower(), "application/octet-stream")
        self._send(200, path.read_bytes(), ctype)

    def _get_scribble(self, image_id: str | None):
        if not image_id or not _ID_RE.match(image_id):
            return self._error(400, "bad image id")
        path = self.server.scribbles_dir / f"{image_id}.png"
        if not path.is_file():
            return self._error(404, f"no scribble for '{image_id}'")
        self._send(200, path.read_bytes(), "image/png")

    def _get_timing(self):
        log = self.server.read_timing()
        entries = [{"id": k, "elapsed_ms": v} for k, v in sorted(log.items())]
        mean_ms = float(np.mean([e["elapsed_ms"] for e in entries])) if entries else None
        self._json(200, {"entries": entries, "mean_ms": mean_ms})

    def _get_static(self, path: str):
        rel = path.lstrip("/") or "index.html"
        if self.server.frontend_dir is None:
            if rel == "index.html":
                return self._send(200, _FALLBACK_INDEX.encode(), _CONTENT_TYPES[".html"])
            return self._error(404, "no frontend configured")
        base = self.server.frontend_dir
        target = (base / rel).resolve()
        if not str(target).startswith(str(base) + "/") and target != base:
            return self._error(404, "not found")
        if target.is_dir():
            target = target / "index.html"
        if not target.is_file():
            return self._error(404, "not found")
        ctype = _CONTENT_TYPES.get(target.suffix.lower(), "application/octet-stream")
        self._send(200, target.read_bytes(), ctype)

    # -- PUT ----------------------------------------------------------------
    def do_PUT(self):
        kind, arg = self._route()
        if kind == "api/scribble":
            return self._put_scribble(arg)
        if kind == "api/timing":
            return self._put_timing(arg)
        return self._error(404, "unknown endpoint")

    def _put_scribble(self, image_id: str | None):
        if not image_id or not _ID_RE.match(image_id):
            return self._error(400, "bad image id")
        image_path = self.server.image_path(image_id)
        if image_path is None:
            return self._error(404, f"no image '{image_id}'")
        body = self._read_body()
        try:
            with Image.open(io.BytesIO(body)) as im:
                if im.format != "PNG":
                    raise ValueError(f"scribble must be PNG, got {im.format}")
                if im.mode not in ("L", "P"):
                    raise ValueError(f"scribble must be single channel, got mode {im.mode}")
                arr = np.asarray(im, dtype=np.uint8)
            check_scribble(arr)
            with Image.open(image_path) as im:
                expected = (im.height, im.width)
            if arr.shape != expected:
                raise ValueError(f"scribble size {arr.shape} != image size {expected}")
        except (ValueError, OSError, UnidentifiedImageError) as exc:
            return self._error(400, str(exc))
        try:
            self.server.scribbles_dir.mkdir(parents=True, exist_ok=True)
            atomic_write_bytes(self.server.scribbles_dir / f"{image_id}.png", body)
        except OSError as exc:
            return self._error(500, f"could not store scribble: {exc}")
        self._json(200, {"ok": True, "id": image_id})

    def _put_timing(self, image_id: str | None):
        if not image_id or not _ID_RE.match(image_id):
            return self._error(400, "bad image id")
        if self.server.image_path(image_id) is None:
            return self._error(404, f"no image '{image_id}'")
        try:
            payload = json.loads(self._read_body() or b"{}")
            elapsed = payload["elapsed_ms"]
            if not isinstance(elapsed, int) or isinstance(elapsed, bool) or elapsed < 0:
                raise ValueError("elapsed_ms must be a non-negative integer")
        except (json.JSONDecodeError, KeyError, ValueError) as exc:
            return self._error(400, f"bad timing payload: {exc}")
        try:
            self.server.write_timing_entry(image_id, elapsed)
        except OSError as exc:
            return self._error(500, f"could not store timing: {exc}")
        self._json(200, {"ok": True, "id": image_id, "elapsed_ms": elapsed})


def make_server(
    root: str | Path,
    split: str = "train",
    frontend_dir: str | Path | None = None,
    host: str = "127.0.0.1",
    port: int = 8008,
) -> AnnotationServer:
    """Bind the annotation server; a busy port raises OSError immediately."""
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"missing dataset root {root}")
    if frontend_dir is not None and not Path(frontend_dir).is_dir():
        raise FileNotFoundError(f"missing frontend directory {frontend_dir}")
    return AnnotationServer((host, port), root, split, frontend_dir)
