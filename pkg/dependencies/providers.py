"""Dependency providers for the HTTP layer (run repository, experiment service)."""

from typing import Annotated

from fastapi import Depends

from core.config import settings
from infrastructure.repositories.run_repository import RunRepository
from services.experiment import ExperimentService


# -----------------------------------------------------------------
# Repository / service providers
# -----------------------------------------------------------------

def get_run_repository() -> RunRepository:
    """Run directories under the configured output root (re-read per request)."""

    return RunRepository(settings.output_root())


def get_experiment_service(
    repository: Annotated[RunRepository, Depends(get_run_repository)],
) -> ExperimentService:
    return ExperimentService(repository)


# -----------------------------------------------------------------
# Type aliases for FastAPI Depends
# -----------------------------------------------------------------

RunRepositoryDep = Annotated[RunRepository, Depends(get_run_repository)]
ExperimentServiceDep = Annotated[ExperimentService, Depends(get_experiment_service)]
