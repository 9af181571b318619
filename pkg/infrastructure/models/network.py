"""Network architecture, frozen snapshots (pure strategies) and support sets."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterator, Literal, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from core.exceptions import ArchitectureMismatchError, SupportSetError

Role = Literal["generator", "discriminator"]
Activation = Literal["identity", "tanh", "relu", "sigmoid"]


class Architecture(BaseModel):
    """Layer widths (input -> hidden... -> output) and activations."""

    model_config = ConfigDict(frozen=True)

    layer_dims: tuple[int, ...] = Field(..., min_length=2)
    hidden_activation: Literal["tanh", "relu"] = "tanh"
    output_activation: Activation = "identity"

    @field_validator("layer_dims")
    @classmethod
    def positive_widths(cls, value: tuple[int, ...]) -> tuple[int, ...]:
        if any(width < 1 for width in value):
            raise ValueError("layer widths must be positive")
        return value

    @property
    def parameter_count(self) -> int:
        dims = self.layer_dims
        return sum(dims[l] * dims[l + 1] + dims[l + 1] for l in range(len(dims) - 1))


@dataclass(frozen=True, eq=False)
class NetworkSnapshot:
    """Frozen parameters of a generator or discriminator MLP."""

    role: Role
    arch: Architecture
    params: np.ndarray
    id: int

    def __post_init__(self) -> None:
        params = np.array(self.params, dtype=np.float64, copy=True).reshape(-1)
        if params.size != self.arch.parameter_count:
            raise ArchitectureMismatchError(
                detail=f"{params.size} parameters for an architecture expecting {self.arch.parameter_count}"
            )
        params.setflags(write=False)
        object.__setattr__(self, "params", params)

    @property
    def name(self) -> str:
        return f"{self.role}-{self.id}"

    def to_json(self) -> dict[str, Any]:
        return {
            "role": self.role,
            "arch": self.arch.model_dump(mode="json"),
            "params": [float(p) for p in self.params],
            "id": self.id,
        }

    @classmethod
    def from_json(cls, payload: dict[str, Any]) -> "NetworkSnapshot":
        return cls(
            role=payload["role"],
            arch=Architecture.model_validate(payload["arch"]),
            params=np.asarray(payload["params"], dtype=np.float64),
            id=int(payload["id"]),
        )


@dataclass(frozen=True, eq=False)
class SupportSet:
    """Ordered snapshots of one player (ascending ids) with optional capacity s."""

    members: tuple[NetworkSnapshot, ...] = ()
    capacity: Optional[int] = None

    def __post_init__(self) -> None:
        members = tuple(self.members)
        ids = [snap.id for snap in members]
        if any(a >= b for a, b in zip(ids, ids[1:])):
            raise SupportSetError(detail=f"ids must be unique and ascending, got {ids}")
        if len({snap.role for snap in members}) > 1:
            raise SupportSetError(detail="support set mixes generator and discriminator snapshots")
        object.__setattr__(self, "members", members)

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self) -> Iterator[NetworkSnapshot]:
        return iter(self.members)

    def __getitem__(self, index: int) -> NetworkSnapshot:
        return self.members[index]

    @property
    def ids(self) -> list[int]:
        return [snap.id for snap in self.members]

    @property
    def over_capacity(self) -> bool:
        return self.capacity is not None and len(self.members) > self.capacity

    def append(self, snap: NetworkSnapshot) -> "SupportSet":
        return SupportSet(self.members + (snap,), self.capacity)

    def select(self, indices: Sequence[int]) -> "SupportSet":
        return SupportSet(tuple(self.members[i] for i in indices), self.capacity)
