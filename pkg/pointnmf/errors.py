from __future__ import annotations

from typing import Optional

from aenum import IntEnum
from box import BoxError


class ExitCode(IntEnum):
    _init_ = "value display"

    SUCCESS = 0, "success"
    VALIDATION = 1, "validation or config error"
    RUNTIME = 2, "runtime or numeric error"


class OperationError(Exception):
    exit_code = ExitCode.RUNTIME


class ValidationError(OperationError):
    exit_code = ExitCode.VALIDATION


class ParseError(ValidationError):
    def __init__(self, msg: str, line: Optional[int] = None, path=None):
        self.line = line
        self.path = path
        where = []
        if path is not None:
            where.append(f'"{path}"')
        if line is not None:
            where.append(f"line {line}")
        if where:
            msg = f"{msg} ({', '.join(where)})"
        super().__init__(msg)


class SpecError(ValidationError):
    def __init__(self, spec: str, reason: str):
        self.spec = spec
        super().__init__(f'invalid transform spec "{spec}": {reason}')


class ConfigError(ValidationError, BoxError):
    pass


class AudioError(OperationError):
    pass


class NumericError(OperationError):
    pass


class DivergenceError(NumericError):
    def __init__(self, epoch: int, batch: int, loss: float):
        self.epoch = epoch
        self.batch = batch
        self.loss = loss
        super().__init__(
            f"training diverged at epoch {epoch}, batch {batch} (loss = {loss}), try a smaller learning rate"
        )


class ModelFileError(OperationError):
    pass


class MetricError(OperationError):
    pass
