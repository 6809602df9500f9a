"""File-system job store: one directory per job, no database.

A job directory holds the persisted request (request.json + input.png),
a status.json that moves queued -> running -> done|failed, and whatever
artifacts the job kind produces. Latents needed for cheap re-rendering
(gray anchor + color residual) are stored as .npy so rescaling and
ranking never re-run diffusion.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import re
import time
import uuid
from pathlib import Path

import numpy as np

__all__ = ["Job", "JobStore", "config_hash"]

_VALID_KINDS = ("colorize", "enhance", "rank", "eval")
_TRANSITIONS = {
    "queued": {"running"},
    "running": {"done", "failed"},
    "done": set(),
    "failed": set(),
}
_ARTIFACT_NAME = re.compile(r"^[\w][\w.-]*$")


def config_hash(payload: dict) -> str:
    """Stable hash of a request payload; replays share the hash."""
    canon = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


@dataclasses.dataclass
class Job:
    id: str
    kind: str
    status: str
    config_hash: str
    error: str | None = None
    created: float = 0.0
    started: float = 0.0
    finished: float = 0.0


class JobStore:
    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _dir(self, job_id: str) -> Path:
        if not _ARTIFACT_NAME.match(job_id):
            raise KeyError(job_id)
        return self.root / job_id

    def create(self, kind: str, payload: dict) -> Job:
        if kind not in _VALID_KINDS:
            raise ValueError(f"unknown job kind {kind!r}")
        job_id = uuid.uuid4().hex[:12]
        d = self.root / job_id
        d.mkdir(parents=True)
        job = Job(
            id=job_id, kind=kind, status="queued",
            config_hash=config_hash(payload), created=time.time(),
        )
        (d / "request.json").write_text(json.dumps(payload, sort_keys=True, indent=1))
        self._write_status(job)
        return job

    def _write_status(self, job: Job) -> None:
        d = self._dir(job.id)
        tmp = d / "status.json.tmp"
        tmp.write_text(json.dumps(dataclasses.asdict(job), indent=1))
        tmp.rename(d / "status.json")

    def get(self, job_id: str) -> Job:
        d = self._dir(job_id)
        status = d / "status.json"
        if not status.exists():
            raise KeyError(job_id)
        return Job(**json.loads(status.read_text()))

    def request(self, job_id: str) -> dict:
        return json.loads((self._dir(job_id) / "request.json").read_text())

    def transition(self, job_id: str, status: str, error: str | None = None) -> Job:
        job = self.get(job_id)
        if status not in _TRANSITIONS[job.status]:
            raise ValueError(f"illegal transition {job.status} -> {status}")
        job.status = status
        if status == "running":
            job.started = time.time()
        else:
            job.finished = time.time()
        if error is not None:
            job.error = error
        self._write_status(job)
        return job

    # --- artifacts -----------------------------------------------------

    def artifact_path(self, job_id: str, name: str) -> Path:
        if not _ARTIFACT_NAME.match(name):
            raise KeyError(name)
        return self._dir(job_id) / name

    def write_json(self, job_id: str, name: str, payload) -> Path:
        path = self.artifact_path(job_id, name)
        path.write_text(json.dumps(payload, indent=1))
        return path

    def write_array(self, job_id: str, name: str, arr: np.ndarray) -> Path:
        path = self.artifact_path(job_id, name)
        np.save(path, np.asarray(arr))
        return path

    def read_array(self, job_id: str, name: str) -> np.ndarray:
        path = self.artifact_path(job_id, name)
        if not path.exists():
            raise KeyError(name)
        return np.load(path)

    def artifacts(self, job_id: str) -> list[str]:
        skip = {"request.json", "status.json", "status.json.tmp"}
        return sorted(
            p.name for p in self._dir(job_id).iterdir()
            if p.is_file() and p.name not in skip
        )

    def list_jobs(self) -> list[Job]:
        out = []
        for d in sorted(self.root.iterdir()):
            if (d / "status.json").exists():
                out.append(Job(**json.loads((d / "status.json").read_text())))
        return out
