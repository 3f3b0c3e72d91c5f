"""Local review server: read/list/update annotations over HTTP + JSON.

The CSV listing stays the single source of truth: every accepted
annotation update rewrites it in canonical form. Concurrent edits are
resolved last-write-wins, guarded by a per-image optimistic version
counter (a stale writer gets 409 and must reload).

Wire protocol (all JSON unless noted):

    GET  /api/images                    list images + annotation versions
    GET  /api/image/<id>                raw image bytes
    GET  /api/annotations/<id>          {image_id, version, rows}
    PUT  /api/annotations/<id>          {version, rows} -> {version} | 409
    GET  /api/detections/<id>           detections + match summary | 404

Anything outside /api/ is served statically from ui_dir when given, so
the browser UI and the data API share one origin.
"""

from __future__ import annotations

import json
import mimetypes
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from .annotations import parse_csv, write_csv
from .evaluate import match
from .model import Annotation, BoundingBox, CellClass, Dataset, FormatError
from .pipeline import load_detections


class ServeState:
    """Mutable dataset state behind the API, guarded by one lock."""

    def __init__(
        self,
        dataset_dir: str | Path,
        detections_path: str | Path | None = None,
        iou_threshold: float = 0.5,
    ):
        self.dataset_dir = Path(dataset_dir)
        self.csv_path = self.dataset_dir / "annotations.csv"
        if not self.csv_path.exists():
            raise FormatError(f"no annotations.csv in {self.dataset_dir}")
        self.dataset = parse_csv(self.csv_path.read_text(encoding="utf-8"))
        self.versions = {image_id: 1 for image_id in self.dataset.image_ids}
        self.iou_threshold = iou_threshold
        self.detections = {}
        if detections_path is not None:
            _, self.detections = load_detections(Path(detections_path))
        self.lock = threading.Lock()

    def list_images(self) -> dict:
        with self.lock:
            return {
                "images": [
                    {
                        "image_id": rec.image_id,
                        "file_path": rec.file_path,
                        "width": rec.width,
                        "height": rec.height,
                        "colorspace": rec.colorspace,
                        "version": self.versions[rec.image_id],
                    }
                    for rec in sorted(self.dataset.images, key=lambda r: r.image_id)
                ]
            }

    @staticmethod
    def _row(ann: Annotation) -> dict:
        return {
            "class": ann.label.token,
            "xmin": int(ann.box.xmin),
            "ymin": int(ann.box.ymin),
            "xmax": int(ann.box.xmax),
            "ymax": int(ann.box.ymax),
        }

    def get_annotations(self, image_id: str) -> dict:
        with self.lock:
            self.dataset.image(image_id)  # raises KeyError when unknown
            rows = [self._row(a) for a in self.dataset.annotations_for(image_id)]
            return {"image_id": image_id, "version": self.versions[image_id], "rows": rows}

    def put_annotations(self, image_id: str, version: int, rows: list[dict]) -> dict:
        with self.lock:
            record = self.dataset.image(image_id)
            current = self.versions[image_id]
            if version != current:
                raise VersionConflict(current)
            new_annotations = []
            for row in rows:
                label = CellClass.from_token(str(row["class"]))
                box = BoundingBox(
                    float(int(row["xmin"])),
                    float(int(row["ymin"])),
                    float(int(row["xmax"])),
                    float(int(row["ymax"])),
                )
                if not box.within(record.width, record.height):
                    raise FormatError(f"box outside image: {box.as_tuple()}")
                new_annotations.append(Annotation(image_id=image_id, box=box, label=label))

            kept = tuple(a for a in self.dataset.annotations if a.image_id != image_id)
            self.dataset = Dataset(
                images=self.dataset.images, annotations=kept + tuple(new_annotations)
            )
            self.csv_path.write_text(write_csv(self.dataset), encoding="utf-8")
            self.versions[image_id] = current + 1
            return {"image_id": image_id, "version": self.versions[image_id]}

    def get_detections(self, image_id: str) -> dict | None:
        with self.lock:
            self.dataset.image(image_id)
            if image_id not in self.detections:
                return None
            det = self.detections[image_id]
            gt = list(self.dataset.annotations_for(image_id))
            m = match(gt, det, self.iou_threshold)
            pairs = [
                {
                    "gt_index": g,
                    "det_index": d,
                    "iou": iou,
                    "class_match": det[d].label is gt[g].label,
                }
                for g, d, iou in m.pairs
            ]
            return {
                "image_id": image_id,
                "detections": [
                    {
                        "class": sb.label.token if sb.label else None,
                        "score": sb.score,
                        "xmin": sb.box.xmin,
                        "ymin": sb.box.ymin,
                        "xmax": sb.box.xmax,
                        "ymax": sb.box.ymax,
                    }
                    for sb in det
                ],
                "match": {
                    "tp": sum(1 for p in pairs if p["class_match"]),
                    "fp": len(det) - sum(1 for p in pairs if p["class_match"]),
                    "fn": len(gt) - sum(1 for p in pairs if p["class_match"]),
                    "pairs": pairs,
                    "unmatched_gt": list(m.unmatched_gt),
                    "unmatched_det": list(m.unmatched_det),
                },
            }

    def image_bytes(self, image_id: str) -> tuple[bytes, str]:
        with self.lock:
            record = self.dataset.image(image_id)
        path = self.dataset_dir / record.file_path
        ctype = mimetypes.guess_type(record.file_path)[0] or "application/octet-stream"
        return path.read_bytes(), ctype


class VersionConflict(Exception):
    def __init__(self, current_version: int):
        super().__init__(f"version conflict: server is at {current_version}")
        self.current_version = current_version


def make_handler(state: ServeState, ui_dir: Path | None):
    class ReviewHandler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):  # quiet by default
            pass

        def _send_json(self, doc: dict, status: int = 200) -> None:
            body = json.dumps(doc, sort_keys=True).encode()
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.send_header("Access-Control-Allow-Origin", "*")
            self.end_headers()
            self.wfile.write(body)

        def _send_bytes(self, body: bytes, ctype: str) -> None:
            self.send_response(200)
            self.send_header("Content-Type", ctype)
            self.send_header("Content-Length", str(len(body)))
            self.send_header("Access-Control-Allow-Origin", "*")
            self.end_headers()
            self.wfile.write(body)

        def do_OPTIONS(self):
            self.send_response(204)
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Methods", "GET, PUT, OPTIONS")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")
            self.send_header("Content-Length", "0")
            self.end_headers()

        def do_GET(self):
            try:
                if self.path == "/api/images":
                    self._send_json(state.list_images())
                elif self.path.startswith("/api/image/"):
                    image_id = self.path[len("/api/image/") :]
                    body, ctype = state.image_bytes(image_id)
                    self._send_bytes(body, ctype)
                elif self.path.startswith("/api/annotations/"):
                    image_id = self.path[len("/api/annotations/") :]
                    self._send_json(state.get_annotations(image_id))
                elif self.path.startswith("/api/detections/"):
                    image_id = self.path[len("/api/detections/") :]
                    doc = state.get_detections(image_id)
                    if doc is None:
                        self._send_json({"error": "no detections for image"}, status=404)
                    else:
                        self._send_json(doc)
                else:
                    self._serve_static()
            except KeyError as exc:
                self._send_json({"error": str(exc)}, status=404)
            except (FormatError, ValueError) as exc:
                self._send_json({"error": str(exc)}, status=400)

        def do_PUT(self):
            try:
                if not self.path.startswith("/api/annotations/"):
                    self._send_json({"error": "unknown endpoint"}, status=404)
                    return
                image_id = self.path[len("/api/annotations/") :]
                length = int(self.headers.get("Content-Length", "0"))
                payload = json.loads(self.rfile.read(length) or b"{}")
                doc = state.put_annotations(
                    image_id, int(payload["version"]), list(payload["rows"])
                )
                self._send_json(doc)
            except VersionConflict as exc:
                self._send_json(
                    {"error": str(exc), "version": exc.current_version}, status=409
                )
            except KeyError as exc:
                self._send_json({"error": f"missing field or image: {exc}"}, status=404)
            except (FormatError, ValueError, json.JSONDecodeError) as exc:
                self._send_json({"error": str(exc)}, status=400)

        def _serve_static(self):
            if ui_dir is None:
                self._send_json({"error": "not found"}, status=404)
                return
            rel = self.path.lstrip("/") or "index.html"
            target = (ui_dir / rel).resolve()
            if not str(target).startswith(str(ui_dir.resolve())) or not target.is_file():
                self._send_json({"error": "not found"}, status=404)
                return
            ctype = mimetypes.guess_type(target.name)[0] or "application/octet-stream"
            self._send_bytes(target.read_bytes(), ctype)

    return ReviewHandler


def serve(
    dataset_dir: str | Path,
    port: int = 8765,
    detections_path: str | Path | None = None,
    iou_threshold: float = 0.5,
    ui_dir: str | Path | None = None,
) -> ThreadingHTTPServer:
    """Create (but do not start) the review server; caller runs serve_forever()."""
    state = ServeState(dataset_dir, detections_path, iou_threshold)
    handler = make_handler(state, Path(ui_dir) if ui_dir else None)
    return ThreadingHTTPServer(("127.0.0.1", port), handler)
