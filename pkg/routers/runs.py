"""Read-only inspection and evaluation of finished run directories."""

from __future__ import annotations

from typing import Optional

from fastapi import APIRouter

from dependencies.providers import ExperimentServiceDep, RunRepositoryDep
from infrastructure.models.api import EvalRequest, RunListResponse
from infrastructure.models.run import CoverageReport, EpochRecord, RunSummary

router = APIRouter(prefix="/runs", tags=["runs"])


@router.get("", response_model=RunListResponse, summary="Run directories under the output root")
def list_runs(repository: RunRepositoryDep) -> RunListResponse:
    return RunListResponse(runs=repository.list_runs())


@router.get("/{name}/summary", response_model=RunSummary)
def run_summary(name: str, repository: RunRepositoryDep) -> RunSummary:
    return repository.get(name).read_summary()


@router.get("/{name}/epochs", summary="Per-epoch records (epochs.jsonl)")
def run_epochs(name: str, repository: RunRepositoryDep) -> list[dict]:
    records: list[EpochRecord] = repository.get(name).read_epochs()
    return [record.to_json_line() for record in records]


@router.post("/{name}/eval", response_model=CoverageReport, summary="Mode coverage of the final generator mixture")
def evaluate_run(
    name: str,
    repository: RunRepositoryDep,
    service: ExperimentServiceDep,
    payload: Optional[EvalRequest] = None,
) -> CoverageReport:
    payload = payload or EvalRequest()
    return service.evaluate(repository.get(name), n_samples=payload.samples, seed=payload.seed, write_samples=False)
