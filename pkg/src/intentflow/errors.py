"""Error taxonomy shared across the pipeline.

Every error carries a machine-readable kind and, where it makes sense, the
path of the offending field, so API and CLI layers can report
``{error_kind, field_path, message}`` uniformly.
"""

from __future__ import annotations


class IntentFlowError(Exception):
    """Base class; ``error_kind`` mirrors the class name unless overridden."""

    error_kind = "IntentFlowError"

    def __init__(self, message: str, *, field_path: str | None = None):
        super().__init__(message)
        self.message = message
        self.field_path = field_path

    def to_dict(self) -> dict:
        return {
            "error_kind": self.error_kind,
            "field_path": self.field_path,
            "message": self.message,
        }


# -- intent gateway -----------------------------------------------------------

class MalformedDocument(IntentFlowError):
    error_kind = "MalformedDocument"


class SchemaViolation(IntentFlowError):
    error_kind = "SchemaViolation"


class ConstraintViolation(IntentFlowError):
    error_kind = "ConstraintViolation"


class UnknownSession(IntentFlowError):
    error_kind = "UnknownSession"


# -- planner ------------------------------------------------------------------

class UnknownTaskType(IntentFlowError):
    error_kind = "UnknownTaskType"

    def __init__(self, message: str, *, task_key: str | None = None,
                 task_type: str | None = None, field_path: str | None = None):
        super().__init__(message, field_path=field_path)
        self.task_key = task_key
        self.task_type = task_type


class PlanningFailed(IntentFlowError):
    error_kind = "PlanningFailed"


class CyclicGraph(IntentFlowError):
    error_kind = "CyclicGraph"


# -- model library ------------------------------------------------------------

class DuplicateModelName(IntentFlowError):
    error_kind = "DuplicateModelName"


class InvalidCard(IntentFlowError):
    error_kind = "InvalidCard"


class NoFeasibleCombination(IntentFlowError):
    error_kind = "NoFeasibleCombination"


# -- data store ---------------------------------------------------------------

class DuplicateDataName(IntentFlowError):
    error_kind = "DuplicateDataName"


class MissingModality(IntentFlowError):
    error_kind = "MissingModality"


class DataNotFound(IntentFlowError):
    error_kind = "DataNotFound"


# -- executor -----------------------------------------------------------------

class ModalityMismatch(IntentFlowError):
    error_kind = "ModalityMismatch"


# -- feedback / service -------------------------------------------------------

class InconsistentRun(IntentFlowError):
    error_kind = "InconsistentRun"


class UnknownRun(IntentFlowError):
    error_kind = "UnknownRun"
