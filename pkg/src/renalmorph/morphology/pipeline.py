"""Declarative post-processing pipelines.

A pipeline is an ordered list of steps. Its JSON form is an array of
objects, each with an ``op`` key and that op's parameters::

    [{"op": "dilate", "se": "cross6"}, {"op": "clean", "keep": 2, "min_voxels": 64}]

Omitted parameters take the defaults below. Unknown ops and keys are rejected.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from typing import ClassVar, Union

from ..voxel import BinaryVolume, structuring_element
from . import ops

__all__ = [
    "Dilate",
    "Erode",
    "Clean",
    "Majority",
    "Fill",
    "Step",
    "PipelineSpec",
    "PipelineError",
    "DEFAULT_PIPELINE",
    "run_pipeline",
]


class PipelineError(ValueError):
    """Invalid pipeline document or step; ``step`` is the offending index when known."""

    def __init__(self, message: str, step: int | None = None):
        self.step = step
        super().__init__(message if step is None else f"step {step}: {message}")


def _check_connectivity(value):
    if value not in (6, 26):
        raise ValueError(f"connectivity must be 6 or 26, got {value!r}")


def _check_int(name, value, minimum, maximum=None):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValueError(f"{name} must be an integer, got {value!r}")
    if value < minimum or (maximum is not None and value > maximum):
        bound = f">= {minimum}" if maximum is None else f"in {minimum}..{maximum}"
        raise ValueError(f"{name} must be {bound}, got {value}")


@dataclass(frozen=True)
class Dilate:
    op: ClassVar[str] = "dilate"
    se: str = "cross6"

    def validate(self):
        structuring_element(self.se)

    def apply(self, v: BinaryVolume) -> BinaryVolume:
        return ops.dilate(v, structuring_element(self.se))


@dataclass(frozen=True)
class Erode:
    op: ClassVar[str] = "erode"
    se: str = "cross6"

    def validate(self):
        structuring_element(self.se)

    def apply(self, v: BinaryVolume) -> BinaryVolume:
        return ops.erode(v, structuring_element(self.se))


@dataclass(frozen=True)
class Clean:
    op: ClassVar[str] = "clean"
    keep: int = 2
    min_voxels: int = 64
    connectivity: int = 26

    def validate(self):
        _check_int("keep", self.keep, 1)
        _check_int("min_voxels", self.min_voxels, 0)
        _check_connectivity(self.connectivity)

    def apply(self, v: BinaryVolume) -> BinaryVolume:
        return ops.clean(v, self.keep, self.min_voxels, self.connectivity)


@dataclass(frozen=True)
class Majority:
    op: ClassVar[str] = "majority"
    threshold: int = 14

    def validate(self):
        _check_int("threshold", self.threshold, 1, 27)

    def apply(self, v: BinaryVolume) -> BinaryVolume:
        return ops.majority(v, self.threshold)


@dataclass(frozen=True)
class Fill:
    op: ClassVar[str] = "fill"
    connectivity: int = 6

    def validate(self):
        _check_connectivity(self.connectivity)

    def apply(self, v: BinaryVolume) -> BinaryVolume:
        return ops.fill(v, self.connectivity)


Step = Union[Dilate, Erode, Clean, Majority, Fill]
STEP_TYPES = {cls.op: cls for cls in (Dilate, Erode, Clean, Majority, Fill)}


@dataclass(frozen=True)
class PipelineSpec:
    steps: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        for i, step in enumerate(self.steps):
            if type(step) not in STEP_TYPES.values():
                raise PipelineError(f"not a pipeline step: {step!r}", i)
            try:
                step.validate()
            except ValueError as exc:
                raise PipelineError(str(exc), i) from None

    def __len__(self):
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)

    @classmethod
    def from_list(cls, items) -> "PipelineSpec":
        if not isinstance(items, list):
            raise PipelineError("pipeline document must be a JSON array of step objects")
        steps = []
        for i, item in enumerate(items):
            if not isinstance(item, dict):
                raise PipelineError(f"expected an object, got {type(item).__name__}", i)
            op = item.get("op")
            step_type = STEP_TYPES.get(op)
            if step_type is None:
                raise PipelineError(f"unknown op {op!r}", i)
            allowed = {f.name for f in fields(step_type)}
            unknown = sorted(set(item) - allowed - {"op"})
            if unknown:
                raise PipelineError(f"unknown key(s) for {op}: {', '.join(unknown)}", i)
            params = {k: val for k, val in item.items() if k != "op"}
            steps.append(step_type(**params))
        return cls(tuple(steps))

    @classmethod
    def from_json(cls, text: str) -> "PipelineSpec":
        try:
            items = json.loads(text)
        except json.JSONDecodeError as exc:
            raise PipelineError(f"pipeline is not valid JSON: {exc}") from None
        return cls.from_list(items)

    def to_list(self) -> list:
        return [{"op": step.op, **asdict(step)} for step in self.steps]

    def to_json(self) -> str:
        return json.dumps(self.to_list())


# closing bridges slice-to-slice gaps, clean runs before the vote so speckle
# cannot sway it, fill seals what is left
DEFAULT_PIPELINE = PipelineSpec(
    (
        Dilate("cross6"),
        Erode("cross6"),
        Clean(keep=2, min_voxels=64, connectivity=26),
        Majority(14),
        Fill(6),
    )
)


def run_pipeline(v: BinaryVolume, spec: PipelineSpec = DEFAULT_PIPELINE) -> BinaryVolume:
    for step in spec:
        v = step.apply(v)
    return v
