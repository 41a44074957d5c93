"""Durable storage for stimuli, grid specs, sessions and annotations.

Layout under the data directory:

    index.json                  materialized stimulus index (rebuildable cache)
    sessions.ndjson             append-only session-creation log
    stimuli/<id>/image.png      original stimulus bytes
    stimuli/<id>/stimulus.json  metadata + both grid specs (written atomically)
    stimuli/<id>/annotations.ndjson   append-only submission log

Every annotation append is flushed and fsynced before the caller receives a
receipt, so acknowledged submissions survive an abrupt kill. Submission logs
are folded on load: the latest record per (participant, grid mode) wins, which
implements resubmission-replace without ever rewriting history.
"""
from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from pathlib import Path

import numpy as np

from .errors import (
    ConflictError,
    DataIntegrityError,
    InputError,
    NotEnoughAnnotationsError,
    NotFoundError,
)
from .importance import Annotation, ImportanceMap, aggregate
from .optimizer import DEFAULT_BUDGET_MS, adaptive_grid
from .raster import canny_edges, decode_image, to_grayscale
from .regions import (
    DEFAULT_STATIC_N,
    DEFAULT_TILE_SIZE,
    BoxSource,
    GridMode,
    GridSpec,
    TextBox,
    detect_text_heuristic,
    label_tiles,
    static_grid,
    validate_exact_cover,
)

_MODE_CYCLE = (GridMode.STATIC, GridMode.ADAPTIVE)


def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(data)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


def _append_line(path: Path, doc: dict) -> None:
    line = json.dumps(doc, separators=(",", ":")) + "\n"
    with open(path, "ab") as fh:
        fh.write(line.encode("utf-8"))
        fh.flush()
        os.fsync(fh.fileno())


def _read_ndjson(path: Path) -> list[dict]:
    """Read an append-only log, dropping a torn (never-acknowledged) final line."""
    if not path.exists():
        return []
    out = []
    lines = path.read_bytes().split(b"\n")
    for k, raw in enumerate(lines):
        if not raw.strip():
            continue
        try:
            out.append(json.loads(raw))
        except json.JSONDecodeError:
            if k == len(lines) - 1 or (k == len(lines) - 2 and not lines[-1].strip()):
                break  # partial trailing append; it was never acknowledged
            raise DataIntegrityError(f"corrupt log line {k + 1} in {path}")
    return out


class AnnotationStore:
    """Single-writer store; all mutation goes through one lock, readers get
    immutable snapshots (lists are copied under the lock)."""

    def __init__(self, data_dir: str | Path):
        self.root = Path(data_dir)
        self.root.mkdir(parents=True, exist_ok=True)
        (self.root / "stimuli").mkdir(exist_ok=True)
        self._lock = threading.RLock()
        self._stimuli: dict[str, dict] = {}
        self._specs: dict[tuple[str, str], GridSpec] = {}
        self._annotations: dict[str, list[dict]] = {}  # sid -> log entries
        self._sessions: dict[str, dict] = {}
        self._load()

    # ----- loading / recovery -------------------------------------------

    def _load(self) -> None:
        for stim_dir in sorted((self.root / "stimuli").iterdir()) if (self.root / "stimuli").exists() else []:
            meta_path = stim_dir / "stimulus.json"
            if not meta_path.exists():
                continue  # crash before the stimulus record was committed
            try:
                meta = json.loads(meta_path.read_text())
            except json.JSONDecodeError as exc:
                raise DataIntegrityError(f"corrupt stimulus record {meta_path}: {exc}")
            sid = meta["id"]
            for mode_key in ("static", "adaptive"):
                spec = GridSpec.from_json(meta["grid_specs"][mode_key])
                validate_exact_cover(spec)  # grid specs are revalidated on load
                self._specs[(sid, mode_key)] = spec
            self._stimuli[sid] = meta
            self._annotations[sid] = _read_ndjson(stim_dir / "annotations.ndjson")
        for rec in _read_ndjson(self.root / "sessions.ndjson"):
            self._sessions[rec["session_id"]] = rec
        self._write_index()

    def _write_index(self) -> None:
        index = {
            "stimuli": sorted(self._stimuli),
            "sessions": len(self._sessions),
        }
        _atomic_write(self.root / "index.json", json.dumps(index, indent=1).encode())

    # ----- stimuli -------------------------------------------------------

    def create_stimulus(
        self,
        image_bytes: bytes,
        task_prompt: str,
        question: str = "",
        tile_size: int = DEFAULT_TILE_SIZE,
        static_n: int = DEFAULT_STATIC_N,
        text_boxes: list[dict] | None = None,
        budget_ms: float = DEFAULT_BUDGET_MS,
    ) -> dict:
        """Run the full grid pipeline and persist the stimulus.

        Idempotent: re-uploading identical content returns the existing record.
        """
        if not task_prompt:
            raise InputError("task_prompt must be non-empty")
        digest = hashlib.sha256()
        digest.update(image_bytes)
        digest.update(
            json.dumps(
                [task_prompt, question, tile_size, static_n, text_boxes], sort_keys=True
            ).encode()
        )
        sid = digest.hexdigest()[:12]
        with self._lock:
            if sid in self._stimuli:
                return self._stimuli[sid]

        img = decode_image(image_bytes)
        gray = to_grayscale(img)
        edges = canny_edges(gray)
        if text_boxes is not None:
            boxes = [
                TextBox(int(b["x"]), int(b["y"]), int(b["w"]), int(b["h"]), BoxSource.EXTERNAL)
                for b in text_boxes
            ]
        else:
            boxes = detect_text_heuristic(img, edges)
        tiles = label_tiles(img, edges, boxes, tile_size)
        adaptive = adaptive_grid(tiles, budget_ms=budget_ms, stimulus_id=sid)
        static = static_grid(img, static_n, stimulus_id=sid)
        validate_exact_cover(adaptive)
        validate_exact_cover(static)

        meta = {
            "id": sid,
            "task_prompt": task_prompt,
            "question": question,
            "tile_size": tile_size,
            "static_n": static_n,
            "width": img.width,
            "height": img.height,
            "created_at": time.time(),
            "grid_specs": {"static": static.to_json(), "adaptive": adaptive.to_json()},
        }
        with self._lock:
            if sid in self._stimuli:  # lost a creation race on the same content
                return self._stimuli[sid]
            stim_dir = self.root / "stimuli" / sid
            stim_dir.mkdir(parents=True, exist_ok=True)
            _atomic_write(stim_dir / "image.png", image_bytes)
            _atomic_write(stim_dir / "stimulus.json", json.dumps(meta, indent=1).encode())
            self._stimuli[sid] = meta
            self._specs[(sid, "static")] = static
            self._specs[(sid, "adaptive")] = adaptive
            self._annotations[sid] = []
            self._write_index()
        return meta

    def stimulus_ids(self) -> list[str]:
        with self._lock:
            return sorted(self._stimuli)

    def get_stimulus(self, sid: str) -> dict:
        with self._lock:
            try:
                return self._stimuli[sid]
            except KeyError:
                raise NotFoundError(f"unknown stimulus {sid!r}")

    def image_bytes(self, sid: str) -> bytes:
        self.get_stimulus(sid)
        return (self.root / "stimuli" / sid / "image.png").read_bytes()

    def grid_spec(self, sid: str, mode: GridMode | str) -> GridSpec:
        mode_key = mode.value if isinstance(mode, GridMode) else str(mode)
        if mode_key not in ("static", "adaptive"):
            raise InputError(f"mode must be 'static' or 'adaptive', got {mode_key!r}")
        self.get_stimulus(sid)
        return self._specs[(sid, mode_key)]

    # ----- annotations ---------------------------------------------------

    def submit_annotation(self, ann: Annotation, session_id: str | None = None) -> dict:
        """Validate and durably append a submission; returns the receipt."""
        spec = self.grid_spec(ann.stimulus_id, ann.grid_mode)
        unknown = sorted(ann.selected_block_ids - spec.block_ids)
        if unknown:
            raise InputError(
                f"annotation references block ids not in the {ann.grid_mode.value} grid: "
                + ", ".join(unknown)
            )
        with self._lock:
            if session_id is not None:
                sess = self._sessions.get(session_id)
                if sess is None:
                    raise NotFoundError(f"unknown session {session_id!r}")
                if self._session_completed(sess):
                    raise ConflictError(f"session {session_id} is closed")
                if sess["assigned_mode"] != ann.grid_mode.value:
                    raise InputError(
                        f"session {session_id} is assigned {sess['assigned_mode']} mode, "
                        f"got a {ann.grid_mode.value} annotation"
                    )
            log = self._annotations[ann.stimulus_id]
            resubmitted = any(
                e["annotation"]["participant_id"] == ann.participant_id
                and e["annotation"]["grid_mode"] == ann.grid_mode.value
                for e in log
            )
            entry = {
                "annotation_id": f"{ann.stimulus_id}-a{len(log):06d}",
                "resubmitted": resubmitted,
                "received_at": time.time(),
                "annotation": ann.to_json(),
            }
            _append_line(self.root / "stimuli" / ann.stimulus_id / "annotations.ndjson", entry)
            log.append(entry)
            return {"annotation_id": entry["annotation_id"], "resubmitted": resubmitted}

    def annotations(self, sid: str, mode: GridMode | str) -> list[Annotation]:
        """Latest submission per participant for one stimulus/mode (snapshot)."""
        mode_key = mode.value if isinstance(mode, GridMode) else str(mode)
        self.get_stimulus(sid)
        with self._lock:
            entries = list(self._annotations[sid])
        latest: dict[str, Annotation] = {}
        for e in entries:
            doc = e["annotation"]
            if doc["grid_mode"] == mode_key:
                latest[doc["participant_id"]] = Annotation.from_json(doc)
        return [latest[k] for k in sorted(latest)]

    def importance(self, sid: str, mode: GridMode | str) -> ImportanceMap:
        anns = self.annotations(sid, mode)
        if not anns:
            raise NotEnoughAnnotationsError(needed=1, present=0)
        return aggregate(anns, self.grid_spec(sid, mode))

    # ----- sessions ------------------------------------------------------

    def create_session(self, participant_id: str, mode: GridMode | None = None) -> dict:
        """Round-robin mode assignment unless an explicit mode is forced;
        stimulus order is a seeded uniform permutation, seed stored for replay."""
        if not participant_id:
            raise InputError("participant_id must be non-empty")
        with self._lock:
            seq = len(self._sessions)
            assigned = mode if mode is not None else _MODE_CYCLE[seq % len(_MODE_CYCLE)]
            seed = int.from_bytes(os.urandom(4), "big")
            order = list(np.random.default_rng(seed).permutation(sorted(self._stimuli)))
            rec = {
                "session_id": f"sess-{seq:06d}",
                "participant_id": participant_id,
                "assigned_mode": assigned.value,
                "seed": seed,
                "stimulus_order": [str(s) for s in order],
                "created_at": time.time(),
            }
            _append_line(self.root / "sessions.ndjson", rec)
            self._sessions[rec["session_id"]] = rec
            return rec

    def get_session(self, session_id: str) -> dict:
        with self._lock:
            try:
                return self._sessions[session_id]
            except KeyError:
                raise NotFoundError(f"unknown session {session_id!r}")

    def _annotated_by(self, participant_id: str, mode_key: str) -> set[str]:
        done = set()
        for sid, log in self._annotations.items():
            for e in log:
                doc = e["annotation"]
                if doc["participant_id"] == participant_id and doc["grid_mode"] == mode_key:
                    done.add(sid)
        return done

    def _session_completed(self, sess: dict) -> bool:
        done = self._annotated_by(sess["participant_id"], sess["assigned_mode"])
        return all(sid in done for sid in sess["stimulus_order"])

    def session_progress(self, session_id: str) -> dict:
        """Next unannotated stimulus in the session order, plus progress."""
        sess = self.get_session(session_id)
        with self._lock:
            done = self._annotated_by(sess["participant_id"], sess["assigned_mode"])
            pending = [sid for sid in sess["stimulus_order"] if sid not in done]
            return {
                "session_id": session_id,
                "assigned_mode": sess["assigned_mode"],
                "progress": len(sess["stimulus_order"]) - len(pending),
                "total": len(sess["stimulus_order"]),
                "completed": not pending,
                "next_stimulus_id": pending[0] if pending else None,
            }
