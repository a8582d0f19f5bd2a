"""Principal-matching policies, authorization rules and default decisions.

A principal-matching policy maps a (subject, object) pair to a set of
principals via rules of the form (mandated target, precluded target,
principal); it comes in three shapes. Set: every applicable rule
contributes. List: only the first applicable rule contributes. Dag: rules
are nodes of an acyclic graph with a unique root, and a rule contributes
only when every rule on every root path to it is applicable, which encodes
conjunction and principal-activation chains.

Authorization rules (principal, object-or-type-or-*, action-or-*,
allow/deny) then decide matched principals' requests, with a conflict
resolution strategy reducing mixed decision sets, and a four-level default
cascade covering the no-principal / no-authorization gaps.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .automata import Nfa, SearchStats, compile_condition, match_detail, matches
from .errors import MalformedDagError, PolicyError
from .graph import SystemGraph
from .pathcond import AllTarget, NoneTarget, PathTarget, Target, to_text

__all__ = [
    "Decision",
    "Crs",
    "PmpShape",
    "NULL_PRINCIPAL",
    "WILDCARD",
    "PmRule",
    "Pmp",
    "AuthRule",
    "ExtendedAuthPolicy",
    "DefaultStage",
    "DefaultTable",
    "match_principals",
    "compute_authorizations",
    "collect_decisions",
    "resolve_conflicts",
    "apply_defaults",
    "relevant_principals",
]

NULL_PRINCIPAL = "null"
WILDCARD = "*"


class Decision(enum.Enum):
    ALLOW = "allow"
    DENY = "deny"

    @classmethod
    def from_text(cls, text: str) -> "Decision":
        try:
            return cls(text)
        except ValueError:
            raise PolicyError(f"decision must be allow or deny, got {text!r}") from None


class Crs(enum.Enum):
    """Conflict resolution strategy for mixed authorization decision sets."""

    DENY_OVERRIDES = "deny-overrides"
    ALLOW_OVERRIDES = "allow-overrides"
    FIRST_APPLICABLE = "first-applicable"


class PmpShape(enum.Enum):
    SET = "set"
    LIST = "list"
    DAG = "dag"


# --- principal matching ------------------------------------------------------

@dataclass(frozen=True)
class PmRule:
    """(mandated, precluded, principal): applicable to a pair when the
    mandated target matches and the precluded one does not."""

    mandated: Target
    precluded: Target
    principal: str


def _describe(target: Target) -> str:
    if isinstance(target, AllTarget):
        return "all"
    if isinstance(target, NoneTarget):
        return "none"
    return to_text(target.condition)


class Pmp:
    """A principal-matching policy: shape + rules (+ DAG edges).

    Path-condition targets must already be in simple form; their automata
    are compiled once here and reused for every request. DAG edges are
    (parent index, child index) pairs over ``rules``; the DAG must be
    acyclic with exactly one in-degree-0 rule, its root. The ``null``
    principal is reserved for DAG plumbing nodes and may not carry
    authorizations.
    """

    def __init__(
        self,
        shape: PmpShape,
        rules: Sequence[PmRule],
        dag_edges: Sequence[tuple[int, int]] = (),
    ):
        self.shape = shape
        self.rules: tuple[PmRule, ...] = tuple(rules)
        self.dag_edges: tuple[tuple[int, int], ...] = tuple(dag_edges)
        if shape is not PmpShape.DAG:
            if self.dag_edges:
                raise PolicyError("dag edges are only valid for dag-shaped policies")
            for rule in self.rules:
                if rule.principal == NULL_PRINCIPAL:
                    raise PolicyError(
                        "the null principal may only appear in dag-shaped policies"
                    )
        if shape is PmpShape.LIST:
            for i, rule in enumerate(self.rules[:-1]):
                if isinstance(rule.mandated, AllTarget) and isinstance(
                    rule.precluded, NoneTarget
                ):
                    raise PolicyError(
                        f"default rule (all, none, {rule.principal}) must be last "
                        f"in a list policy (found at position {i})"
                    )
        if shape is PmpShape.DAG:
            self._preds, self._topo = self._check_dag()
        self._compiled: list[tuple[Nfa | None, Nfa | None]] = [
            (self._compile(rule.mandated), self._compile(rule.precluded))
            for rule in self.rules
        ]

    @staticmethod
    def _compile(target: Target) -> Nfa | None:
        if isinstance(target, PathTarget):
            return compile_condition(target.condition)
        return None

    def _check_dag(self) -> tuple[list[list[int]], list[int]]:
        n = len(self.rules)
        preds: list[list[int]] = [[] for _ in range(n)]
        succs: list[list[int]] = [[] for _ in range(n)]
        for a, b in self.dag_edges:
            if not (0 <= a < n and 0 <= b < n):
                raise MalformedDagError(f"dag edge ({a},{b}) references a missing rule")
            preds[b].append(a)
            succs[a].append(b)
        roots = [i for i in range(n) if not preds[i]]
        if len(roots) != 1:
            raise MalformedDagError(
                f"dag policy must have exactly one root, found {len(roots)}"
            )
        # Kahn's algorithm; leftovers mean a cycle.
        degree = [len(p) for p in preds]
        order = [roots[0]]
        queue = [roots[0]]
        while queue:
            node = queue.pop()
            for child in succs[node]:
                degree[child] -= 1
                if degree[child] == 0:
                    order.append(child)
                    queue.append(child)
        if len(order) != n:
            raise MalformedDagError("dag policy contains a cycle")
        return preds, order

    @property
    def principals(self) -> frozenset[str]:
        return frozenset(r.principal for r in self.rules) - {NULL_PRINCIPAL}

    def applicable(
        self,
        g: SystemGraph,
        index: int,
        subject: str,
        obj: str,
        *,
        stats: SearchStats | None = None,
        trace: list[str] | None = None,
    ) -> bool:
        rule = self.rules[index]
        m_nfa, p_nfa = self._compiled[index]
        mandated, witness = match_detail(
            g, subject, obj, rule.mandated,
            compiled=m_nfa, stats=stats, want_witness=trace is not None,
        )
        applicable = mandated and not matches(
            g, subject, obj, rule.precluded, compiled=p_nfa, stats=stats
        )
        if trace is not None:
            verdict = "applicable" if applicable else (
                "precluded" if mandated else "not matched"
            )
            via = f" via {' '.join(witness)}" if witness else ""
            trace.append(
                f"rule {rule.principal}: {_describe(rule.mandated)} ! "
                f"{_describe(rule.precluded)} -> {verdict}{via}"
            )
        return applicable


def match_principals(
    g: SystemGraph,
    pmp: Pmp,
    subject: str,
    obj: str,
    *,
    stats: SearchStats | None = None,
    trace: list[str] | None = None,
) -> frozenset[str]:
    """The matched-principal set of a pair under the policy's shape
    semantics (see :class:`Pmp`); the null principal never escapes."""
    g.node_type(subject)
    g.node_type(obj)
    if pmp.shape is PmpShape.LIST:
        for i in range(len(pmp.rules)):
            if pmp.applicable(g, i, subject, obj, stats=stats, trace=trace):
                return frozenset({pmp.rules[i].principal})
        return frozenset()
    if pmp.shape is PmpShape.SET:
        return frozenset(
            pmp.rules[i].principal
            for i in range(len(pmp.rules))
            if pmp.applicable(g, i, subject, obj, stats=stats, trace=trace)
        )
    # DAG: a rule is only evaluated when every predecessor is enabled and
    # applicable, which is equivalent to "applicable on every root path".
    applicable: dict[int, bool] = {}

    def check(i: int) -> bool:
        if i not in applicable:
            applicable[i] = pmp.applicable(g, i, subject, obj, stats=stats, trace=trace)
        return applicable[i]

    enabled: dict[int, bool] = {}
    matched = set()
    for i in pmp._topo:
        preds = pmp._preds[i]
        enabled[i] = all(enabled[p] and check(p) for p in preds)
        if enabled[i] and check(i):
            matched.add(pmp.rules[i].principal)
    return frozenset(matched - {NULL_PRINCIPAL})


# --- authorization -----------------------------------------------------------

@dataclass(frozen=True)
class AuthRule:
    """(principal, object-or-type-or-*, action-or-*, decision)."""

    principal: str
    scope: str
    action: str
    decision: Decision

    def __post_init__(self):
        if self.principal == NULL_PRINCIPAL:
            raise PolicyError("the null principal cannot carry authorizations")

    def applies(self, obj: str, obj_type: str, action: str) -> bool:
        return self.scope in (obj, obj_type, WILDCARD) and self.action in (
            action,
            WILDCARD,
        )


@dataclass(frozen=True)
class ExtendedAuthPolicy:
    rules: tuple[AuthRule, ...]
    crs: Crs = Crs.DENY_OVERRIDES


def collect_decisions(
    obj: str,
    obj_type: str,
    action: str,
    policy: ExtendedAuthPolicy,
    matched: frozenset[str],
) -> tuple[Decision, ...]:
    """Decisions of applicable rules, in rule order (pre-reduction)."""
    return tuple(
        rule.decision
        for rule in policy.rules
        if rule.principal in matched and rule.applies(obj, obj_type, action)
    )


def resolve_conflicts(crs: Crs, ordered: Sequence[Decision]) -> frozenset[Decision]:
    """Reduce a raw decision sequence; the empty sequence stays empty."""
    if not ordered:
        return frozenset()
    if crs is Crs.FIRST_APPLICABLE:
        return frozenset({ordered[0]})
    decisions = frozenset(ordered)
    if crs is Crs.DENY_OVERRIDES and Decision.DENY in decisions:
        return frozenset({Decision.DENY})
    if crs is Crs.ALLOW_OVERRIDES and Decision.ALLOW in decisions:
        return frozenset({Decision.ALLOW})
    return decisions


def compute_authorizations(
    obj: str,
    obj_type: str,
    action: str,
    policy: ExtendedAuthPolicy,
    matched: frozenset[str],
) -> frozenset[Decision]:
    """Applicable-rule decisions after conflict resolution: one of the empty
    set, {allow} or {deny}."""
    return resolve_conflicts(
        policy.crs, collect_decisions(obj, obj_type, action, policy, matched)
    )


def relevant_principals(
    policy: ExtendedAuthPolicy, obj: str, obj_type: str, action: str
) -> frozenset[str]:
    """Principals that could possibly influence this (object, action):
    those appearing in a rule whose scope and action patterns cover it."""
    return frozenset(
        rule.principal for rule in policy.rules if rule.applies(obj, obj_type, action)
    )


# --- defaults ------------------------------------------------------------------

class DefaultStage(enum.Enum):
    NO_MATCHED_PRINCIPALS = "no-matched-principals"
    NO_EXPLICIT_AUTHORIZATIONS = "no-explicit-authorizations"


@dataclass(frozen=True)
class DefaultTable:
    """Optional per-subject / per-object / per-type defaults over a mandatory
    system-wide one. Resolution takes the first defined level in that order;
    the per-subject level only participates when no principal matched at
    all, because once decisions are being looked up the subject has already
    played its part."""

    system_wide: Decision
    per_subject: Mapping[str, Decision] = field(default_factory=dict)
    per_object: Mapping[str, Decision] = field(default_factory=dict)
    per_type: Mapping[str, Decision] = field(default_factory=dict)

    def resolve(
        self,
        stage: DefaultStage,
        subject: str | None,
        obj: str | None,
        obj_type: str | None,
    ) -> tuple[Decision, str]:
        """Decision plus the level that produced it (for traces)."""
        if stage is DefaultStage.NO_MATCHED_PRINCIPALS and subject is not None:
            if subject in self.per_subject:
                return self.per_subject[subject], "subject"
        if obj is not None and obj in self.per_object:
            return self.per_object[obj], "object"
        if obj_type is not None and obj_type in self.per_type:
            return self.per_type[obj_type], "type"
        return self.system_wide, "system"


def apply_defaults(
    table: DefaultTable,
    stage: DefaultStage,
    *,
    subject: str | None = None,
    obj: str | None = None,
    obj_type: str | None = None,
) -> Decision:
    return table.resolve(stage, subject, obj, obj_type)[0]
