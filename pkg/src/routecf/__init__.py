"""Vehicle-routing engine with edge-intention classification and
counterfactual route explanations."""

from .core import (
    DEPOT,
    HORIZON,
    EdgeIntention,
    GlobalState,
    Node,
    ProblemKind,
    Route,
    Violation,
    VrpError,
    VrpInstance,
    distance,
    evaluate_route,
    instance_from_dict,
    instance_to_dict,
    is_feasible,
    objective,
    step_state,
)
from .solver import (
    FixedPrefix,
    InfeasiblePrefixError,
    InstanceTooLargeError,
    SolverConfig,
    construct_initial,
    local_search,
    solve,
    solve_exact,
)
from .annotator import (
    BUILTIN_PLANS,
    ComparisonPlan,
    annotate_dataset,
    annotate_route,
    make_solver,
    plan_for,
    strip_instance,
)
from .datagen import (
    Dataset,
    GenConfig,
    Sample,
    gen_actual_route_dataset,
    gen_cf_route_dataset,
    gen_instance,
    load_jsonl,
    save_jsonl,
)
from .explainer import (
    ExplanationBundle,
    InfluenceTuple,
    LlmClient,
    QuestionError,
    RepresentativeValues,
    WhyNotQuestion,
    compare,
    explain,
    generate_cf_route,
    influence,
    load_demo_instance,
    parse_question,
    render_text,
    representative_values,
    rule_based_classifier,
)

__version__ = "0.1.0"
