"""Intent-driven task orchestration.

Turns operator JSON intents or end-user utterances into validated task
graphs, selects budget-feasible model combinations from a card registry,
executes the graphs stage-parallel over a data-card store with simulated
model executors, and scores the outcome into feedback for the next plan.
"""

from .datastore import DataCard, DataStore, IOEnvelope
from .errors import (
    ConstraintViolation,
    CyclicGraph,
    DataNotFound,
    DuplicateDataName,
    DuplicateModelName,
    InconsistentRun,
    IntentFlowError,
    InvalidCard,
    MalformedDocument,
    MissingModality,
    ModalityMismatch,
    NoFeasibleCombination,
    PlanningFailed,
    SchemaViolation,
    UnknownRun,
    UnknownSession,
    UnknownTaskType,
)
from .executor import (
    ExecutionRecord,
    SimulatedModelExecutor,
    TaskResult,
    dependency_recheck,
    execute,
    execute_all,
    simulated_run,
)
from .feedback import (
    FeedbackEmitter,
    FeedbackReport,
    FinalReport,
    Reason,
    StageScores,
    build_final_report,
    score_stages,
    summarize,
)
from .gateway import (
    ChatEntry,
    Intent,
    IntentGateway,
    Session,
    TaskRequest,
    parse_intent,
    serialize_intent,
)
from .journal import Journal, read_journal
from .models import (
    AggregateMetrics,
    ModelCard,
    ModelCombination,
    ModelLibrary,
    aggregate_metrics,
    pairwise_compatible,
)
from .planner import (
    HttpPlannerAdapter,
    KeywordPlannerAdapter,
    KeywordTable,
    PlanContext,
    Planner,
    TaskTemplate,
)
from .service import Config, OrchestratorService, RunState, replay_run
from .taskgraph import (
    TaskGraph,
    TaskNode,
    ValidationReport,
    build_graph,
    execution_stages,
    make_node,
    parse_graph,
    serialize_graph,
    validate_graph,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
