"""relac: relationship-based access control over labelled system graphs.

Policies name paths, not people: a request (subject, object, action) is
mapped to principals by matching path conditions between subject and object
in the system graph, and the principals' authorization rules decide the
request. Decisions can feed back into the graph as typed history edges,
which is enough to express caching, separation of duty and Chinese Wall.
"""

from .errors import RelacError
from .graph import (
    Caching,
    DecisionAudit,
    InterestAudit,
    Relationship,
    SystemGraph,
    SystemModel,
)
from .pathcond import ALL, NONE, PathTarget, parse, simplify, to_text
from .automata import GraphNfa, Nfa, compile_condition, intersection_nonempty, matches
from .oracle import oracle_satisfies
from .policy import (
    AuthRule,
    Crs,
    Decision,
    DefaultTable,
    ExtendedAuthPolicy,
    PmRule,
    Pmp,
    PmpShape,
    match_principals,
)
from .engine import (
    ChineseWallConfig,
    EvalResult,
    Evaluator,
    HistoryConfig,
    Request,
    SodConfig,
    build_chinese_wall_rules,
    build_sod_policy,
    evaluate,
    warm_cache,
)

__version__ = "0.1.0"

__all__ = [
    "RelacError",
    "SystemModel",
    "SystemGraph",
    "Relationship",
    "Caching",
    "DecisionAudit",
    "InterestAudit",
    "parse",
    "simplify",
    "to_text",
    "ALL",
    "NONE",
    "PathTarget",
    "Nfa",
    "GraphNfa",
    "compile_condition",
    "intersection_nonempty",
    "matches",
    "oracle_satisfies",
    "Decision",
    "Crs",
    "PmpShape",
    "PmRule",
    "Pmp",
    "AuthRule",
    "ExtendedAuthPolicy",
    "DefaultTable",
    "match_principals",
    "Request",
    "EvalResult",
    "Evaluator",
    "HistoryConfig",
    "ChineseWallConfig",
    "SodConfig",
    "evaluate",
    "build_sod_policy",
    "build_chinese_wall_rules",
    "warm_cache",
    "__version__",
]
