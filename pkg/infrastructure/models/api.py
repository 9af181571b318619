"""Request and response bodies of the HTTP API."""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field


class MatrixGameRequest(BaseModel):
    """Generator payoffs, one row per generator strategy."""

    matrix: list[list[float]] = Field(..., min_length=1, description="Row-major payoff grid")


class DoubleOracleRequest(MatrixGameRequest):
    epsilon: float = Field(1e-6, gt=0)
    seed: int = Field(0, ge=0)


class MetaSolutionResponse(BaseModel):
    sigma_g: list[float]
    sigma_d: list[float]
    value: float
    row_value: Optional[float] = None
    col_value: Optional[float] = None
    exploitability: float


class EvalRequest(BaseModel):
    samples: Optional[int] = Field(None, ge=1)
    seed: Optional[int] = Field(None, ge=0)


class RunListResponse(BaseModel):
    runs: list[str]
