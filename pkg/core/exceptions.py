"""
Exception definitions and FastAPI handlers.

Usage:
- Raise subclasses of `DoGanError` from services/routers/cli.
- Register `unified_exception_handler` + `generic_exception_handler` in FastAPI.
- The CLI maps any `DoGanError` to its `exit_code`.
"""
from __future__ import annotations

import traceback
from typing import Optional

from fastapi import Request
from fastapi.responses import JSONResponse


class DoGanError(Exception):
    status_code: int = 500
    code: str = "INTERNAL_ERROR"
    message: str = "Internal error."
    detail: str = ""
    exit_code: int = 1

    def __init__(self, message: Optional[str] = None, detail: Optional[str] = None) -> None:
        if message:
            self.message = message
        if detail:
            self.detail = detail
        super().__init__(self.message)


# Configuration errors
class ConfigError(DoGanError):
    status_code = 400
    code = "CONFIG_ERROR"
    message = "Invalid configuration."


# Numerical / shape errors
class DimensionError(DoGanError):
    status_code = 400
    code = "DIMENSION_ERROR"
    message = "Dimension mismatch."


class InvalidStrategyError(DoGanError):
    status_code = 400
    code = "INVALID_STRATEGY"
    message = "Mixed strategy is not a probability vector."


class NonFiniteError(DoGanError):
    status_code = 422
    code = "NON_FINITE"
    message = "Non-finite value encountered."


class SolverError(DoGanError):
    status_code = 500
    code = "SOLVER_ERROR"
    message = "Linear program failed."


# Support-set errors
class SupportSetError(DoGanError):
    status_code = 400
    code = "SUPPORT_SET_ERROR"
    message = "Support set is empty or out of order."


# Network errors
class EmptyBatchError(DoGanError):
    status_code = 400
    code = "EMPTY_BATCH"
    message = "Batch must not be empty."


class RoleMismatchError(DoGanError):
    status_code = 400
    code = "ROLE_MISMATCH"
    message = "Snapshot role does not match its use."


class ArchitectureMismatchError(DoGanError):
    status_code = 400
    code = "ARCH_MISMATCH"
    message = "Parameters do not match the architecture."


# IO errors
class MatrixParseError(DoGanError):
    status_code = 400
    code = "MATRIX_PARSE_ERROR"
    message = "Matrix CSV could not be parsed."


class RunDirectoryError(DoGanError):
    status_code = 404
    code = "RUN_DIRECTORY_ERROR"
    message = "Run directory missing or corrupt."


# FastAPI handlers
async def unified_exception_handler(request: Request, exc: DoGanError):
    return JSONResponse(
        status_code=exc.status_code,
        content={
            "code": exc.code,
            "message": exc.message,
            "detail": getattr(exc, "detail", None),
        },
    )


async def generic_exception_handler(request: Request, exc: Exception):
    traceback.print_exc()
    return JSONResponse(
        status_code=500,
        content={
            "code": "INTERNAL_SERVER_ERROR",
            "message": "Server error.",
            "detail": str(exc),
        },
    )


__all__ = [
    "DoGanError",
    "ConfigError",
    "DimensionError",
    "InvalidStrategyError",
    "NonFiniteError",
    "SolverError",
    "SupportSetError",
    "EmptyBatchError",
    "RoleMismatchError",
    "ArchitectureMismatchError",
    "MatrixParseError",
    "RunDirectoryError",
    "unified_exception_handler",
    "generic_exception_handler",
]
