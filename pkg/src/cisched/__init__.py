"""cisched: test-execution scheduling engine and CI-cycle simulator."""

from cisched.config import (
    MissingFileError,
    TypeMismatchError,
    UnknownKeyError,
    parse_config,
)
from cisched.domain import (
    DuplicateRecordError,
    ExecutionRecord,
    HistoryStore,
    Outcome,
    TestAgent,
    TestCase,
    ValidationResult,
    ViolationKind,
    append_history,
    filter_eligible,
    load_history,
    load_repository,
    save_repository,
    validate_repository,
)
from cisched.execution import (
    AgentResult,
    OutcomeModel,
    PlanEntry,
    TestPlan,
    collect_results,
    emit_test_plans,
    execute_plan,
    load_plan,
    load_result,
    plan_path,
    result_path,
    save_plan,
    save_result,
)
from cisched.oracle import InstanceTooLargeError, schedule_oracle
from cisched.priority import (
    PrioritizedTest,
    PriorityWeights,
    compute_priority,
    fail_score,
    prioritize_all,
    staleness,
)
from cisched.reporting import (
    CampaignSummary,
    CycleReport,
    EmptyCampaignError,
    campaign_summary,
    export_plot_data,
    load_report,
    make_cycle_report,
    priority_histogram,
    save_report,
    utilization,
)
from cisched.scheduling import (
    InfeasibleError,
    ObjectiveVector,
    Schedule,
    SchedulingInstance,
    build_instance,
    check_schedule,
    pair_staleness,
    schedule_greedy,
)
from cisched.simulator import (
    CycleError,
    SchedulerKind,
    SimulationConfig,
    SimulationState,
    run_cycle,
    run_simulation,
)
from cisched.solver import SolveStats, schedule_optimal, solve_detailed
from cisched.workload import (
    WorkloadSpec,
    generate_workload,
    load_workload,
    save_workload,
)

__version__ = "0.1.0"

__all__ = [
    "AgentResult",
    "CampaignSummary",
    "CycleError",
    "CycleReport",
    "DuplicateRecordError",
    "EmptyCampaignError",
    "ExecutionRecord",
    "HistoryStore",
    "InfeasibleError",
    "InstanceTooLargeError",
    "MissingFileError",
    "ObjectiveVector",
    "Outcome",
    "OutcomeModel",
    "PlanEntry",
    "PrioritizedTest",
    "PriorityWeights",
    "Schedule",
    "SchedulerKind",
    "SchedulingInstance",
    "SimulationConfig",
    "SimulationState",
    "SolveStats",
    "TestAgent",
    "TestCase",
    "TestPlan",
    "TypeMismatchError",
    "UnknownKeyError",
    "ValidationResult",
    "ViolationKind",
    "WorkloadSpec",
    "append_history",
    "build_instance",
    "campaign_summary",
    "check_schedule",
    "collect_results",
    "compute_priority",
    "emit_test_plans",
    "execute_plan",
    "export_plot_data",
    "fail_score",
    "filter_eligible",
    "generate_workload",
    "load_history",
    "load_plan",
    "load_report",
    "load_repository",
    "load_result",
    "load_workload",
    "make_cycle_report",
    "pair_staleness",
    "parse_config",
    "plan_path",
    "prioritize_all",
    "priority_histogram",
    "result_path",
    "run_cycle",
    "run_simulation",
    "save_plan",
    "save_report",
    "save_repository",
    "save_result",
    "save_workload",
    "schedule_greedy",
    "schedule_optimal",
    "schedule_oracle",
    "solve_detailed",
    "staleness",
    "utilization",
    "validate_repository",
    "__version__",
]
