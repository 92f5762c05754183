"""Curriculum-ordered in-context learning harness (C++ core bindings)."""

from iccl._core import (  # noqa: F401
    Demonstration,
    IcclError,
    Label,
    MockGateway,
    Prediction,
    RenderedPrompt,
    TaskKind,
    TaskSpec,
    __version__,
    aggregate_expert_ranks,
    complexity,
    cosine,
    exhaustive_order_search,
    kendalls_w,
    load_pool,
    load_task_spec,
    mock_complexity,
    order_demonstrations,
    parse_label,
    render,
    render_scoring_pair,
    run_experiment,
    score_run,
    serialize_label,
    top_k,
    validate_gold,
)
