"""Finite matrix games: exact equilibria and the double-oracle harness."""

from __future__ import annotations

import numpy as np
from fastapi import APIRouter

from core.exceptions import DimensionError
from dependencies.providers import ExperimentServiceDep
from infrastructure.models.api import DoubleOracleRequest, MatrixGameRequest, MetaSolutionResponse
from infrastructure.models.game import PayoffMatrix
from services.experiment import FiniteReport
from services.meta_game import exploitability, solve_zero_sum

router = APIRouter(prefix="/games", tags=["games"])


def _matrix(rows: list[list[float]]) -> PayoffMatrix:
    widths = {len(row) for row in rows}
    if len(widths) != 1:
        raise DimensionError(detail=f"rows of lengths {sorted(widths)}")
    return PayoffMatrix(np.array(rows, dtype=np.float64))


@router.post("/solve", response_model=MetaSolutionResponse, summary="Mixed equilibrium of a zero-sum matrix game")
def solve_game(payload: MatrixGameRequest) -> MetaSolutionResponse:
    matrix = _matrix(payload.matrix)
    solution = solve_zero_sum(matrix)
    return MetaSolutionResponse(
        sigma_g=solution.sigma_g.tolist(),
        sigma_d=solution.sigma_d.tolist(),
        value=solution.value,
        row_value=solution.row_value,
        col_value=solution.col_value,
        exploitability=exploitability(matrix, solution.sigma_g, solution.sigma_d),
    )


@router.post("/double-oracle", response_model=FiniteReport, summary="Double oracle with exact best responses")
def double_oracle(payload: DoubleOracleRequest, service: ExperimentServiceDep) -> FiniteReport:
    return service.solve_finite(_matrix(payload.matrix), payload.epsilon, payload.seed)
