"""Bound constraint handling methods for differential evolution."""

from ._boxde import (
    SchemaError,
    adaptive_update,
    classify,
    complete_linkage,
    correct,
    cosine_similarity,
    evaluate,
    exp_confined_component,
    fit_beta_params,
    functions,
    instance,
    methods,
    rank_methods,
    register_problem,
    run,
    vector_alpha,
)

__all__ = [
    "SchemaError",
    "adaptive_update",
    "classify",
    "complete_linkage",
    "correct",
    "cosine_similarity",
    "evaluate",
    "exp_confined_component",
    "fit_beta_params",
    "functions",
    "instance",
    "methods",
    "rank_methods",
    "register_problem",
    "run",
    "vector_alpha",
]
