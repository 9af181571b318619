"""Run-directory persistence (manifest, epoch log, summary, sample dumps, snapshots)."""

from __future__ import annotations

import csv
import json
import shutil
from pathlib import Path
from typing import Iterator, Optional

import numpy as np
from pydantic import ValidationError

from core.exceptions import RunDirectoryError
from infrastructure.models.network import NetworkSnapshot
from infrastructure.models.run import EpochRecord, RunManifest, RunSummary

MANIFEST = "manifest.json"
EPOCHS = "epochs.jsonl"
SUMMARY = "summary.json"
SNAPSHOTS = "snapshots"
EVAL_SAMPLES = "eval-samples.csv"


def samples_filename(t: int) -> str:
    return f"samples-epoch-{t}.csv"


def _write_points(path: Path, points: np.ndarray, modes: Optional[np.ndarray] = None) -> None:
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["x", "y"] if modes is None else ["x", "y", "mode"])
        for i, point in enumerate(np.asarray(points, dtype=np.float64)):
            row = [repr(float(point[0])), repr(float(point[1]))]
            if modes is not None:
                row.append(int(modes[i]))
            writer.writerow(row)


class RunDirectory:
    """One run's files. Also serves as the snapshot store of a running loop."""

    def __init__(self, path: Path) -> None:
        self.path = Path(path)

    @property
    def name(self) -> str:
        return self.path.name

    @property
    def snapshot_dir(self) -> Path:
        return self.path / SNAPSHOTS

    def exists(self) -> bool:
        return (self.path / MANIFEST).is_file()

    # Writers
    def create(self, overwrite: bool = False) -> None:
        if self.path.exists():
            if not overwrite:
                raise RunDirectoryError("Run directory already exists.", detail=str(self.path))
            shutil.rmtree(self.path)
        self.snapshot_dir.mkdir(parents=True)
        (self.path / EPOCHS).touch()

    def write_manifest(self, manifest: RunManifest) -> None:
        (self.path / MANIFEST).write_text(manifest.model_dump_json(indent=2))

    def append_epoch(self, record: EpochRecord) -> None:
        with (self.path / EPOCHS).open("a") as handle:
            handle.write(json.dumps(record.to_json_line()) + "\n")

    def write_summary(self, summary: RunSummary) -> None:
        (self.path / SUMMARY).write_text(summary.model_dump_json(indent=2))

    def write_samples(self, t: int, points: np.ndarray, modes: Optional[np.ndarray] = None) -> Path:
        path = self.path / samples_filename(t)
        _write_points(path, points, modes)
        return path

    def write_eval_samples(self, points: np.ndarray, modes: Optional[np.ndarray] = None) -> Path:
        path = self.path / EVAL_SAMPLES
        _write_points(path, points, modes)
        return path

    # Snapshot store
    def _snapshot_path(self, snap: NetworkSnapshot) -> Path:
        return self.snapshot_dir / f"{snap.name}.json"

    def save_snapshot(self, snap: NetworkSnapshot) -> None:
        self._snapshot_path(snap).write_text(json.dumps(snap.to_json()))

    def delete_snapshot(self, snap: NetworkSnapshot) -> None:
        self._snapshot_path(snap).unlink(missing_ok=True)

    def snapshot_count(self) -> int:
        return sum(1 for _ in self.snapshot_dir.glob("*.json"))

    def load_snapshot(self, role: str, snapshot_id: int) -> NetworkSnapshot:
        path = self.snapshot_dir / f"{role}-{snapshot_id}.json"
        if not path.is_file():
            raise RunDirectoryError("Snapshot missing.", detail=str(path))
        try:
            return NetworkSnapshot.from_json(json.loads(path.read_text()))
        except (ValueError, KeyError) as exc:
            raise RunDirectoryError("Snapshot file is corrupt.", detail=f"{path}: {exc}") from exc

    # Readers
    def _require(self, filename: str) -> Path:
        path = self.path / filename
        if not path.is_file():
            raise RunDirectoryError(detail=f"{path} not found")
        return path

    def read_manifest(self) -> RunManifest:
        path = self._require(MANIFEST)
        try:
            return RunManifest.model_validate_json(path.read_text())
        except ValidationError as exc:
            raise RunDirectoryError("Manifest is corrupt.", detail=str(exc)) from exc

    def read_summary(self) -> RunSummary:
        path = self._require(SUMMARY)
        try:
            return RunSummary.model_validate_json(path.read_text())
        except ValidationError as exc:
            raise RunDirectoryError("Summary is corrupt.", detail=str(exc)) from exc

    def read_epochs(self) -> list[EpochRecord]:
        path = self._require(EPOCHS)
        records: list[EpochRecord] = []
        for number, line in enumerate(path.read_text().splitlines(), start=1):
            if not line.strip():
                continue
            try:
                records.append(EpochRecord.model_validate_json(line))
            except ValidationError as exc:
                raise RunDirectoryError("Epoch log is corrupt.", detail=f"line {number}: {exc}") from exc
        return records


class RunRepository:
    """Run directories under one output root."""

    def __init__(self, root: Path) -> None:
        self.root = Path(root)

    def directory(self, name: str) -> RunDirectory:
        if not name or "/" in name or name in {".", ".."}:
            raise RunDirectoryError("Invalid run name.", detail=repr(name))
        return RunDirectory(self.root / name)

    def get(self, name: str) -> RunDirectory:
        run = self.directory(name)
        if not run.exists():
            raise RunDirectoryError(detail=f"no run named {name!r} under {self.root}")
        return run

    def create(self, name: str, overwrite: bool = False) -> RunDirectory:
        run = self.directory(name)
        run.create(overwrite=overwrite)
        return run

    def delete(self, name: str) -> None:
        shutil.rmtree(self.directory(name).path, ignore_errors=True)

    def iter_runs(self) -> Iterator[RunDirectory]:
        if not self.root.is_dir():
            return
        for path in sorted(self.root.iterdir()):
            run = RunDirectory(path)
            if path.is_dir() and run.exists():
                yield run

    def list_runs(self) -> list[str]:
        return [run.name for run in self.iter_runs()]
