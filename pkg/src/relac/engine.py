"""Request evaluation: principal matching, authorization, defaults, history.

Evaluation of a request (subject, object, action) proceeds in two stages:
compute the matched principals for the (subject, object) pair, then look up
the matched principals' authorization rules for the object and action. An
empty matched set or an empty decision set falls through to the default
cascade. Around that core this module layers the history machinery:

* caching edges store a pair's matched principals, stamped with the graph
  epoch, so repeat pairs skip principal matching while fresh;
* decision audit edges record each (subject, object, action) outcome once,
  giving path conditions access to past decisions (separation of duty);
* interest audit edges mark a subject's active interest in a company and
  block its conflict-of-interest partners (Chinese Wall).

Writeback happens after the decision is fixed, inside one graph write lock,
so a request never observes its own history edges and later requests see
them in submission order. A history edge whose label occurs in the loaded
principal-matching policy can change matched sets, so writing a new one
invalidates the cache (by bumping the graph epoch); labels the policy never
mentions cannot affect any product search and leave the cache intact.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

from .automata import (
    Nfa,
    SearchStats,
    compile_condition,
    reachable_accepting,
)
from .errors import (
    NonDenyOverridesError,
    PolicyError,
    UnknownActionError,
)
from .graph import (
    INTEREST_BLOCKED,
    Caching,
    DecisionAudit,
    InterestAudit,
    SystemGraph,
    allow_label,
    reverse_label,
)
from .pathcond import (
    NONE,
    Concat,
    Edge,
    PathCondition,
    PathTarget,
    Reverse,
    base_labels,
    is_simple,
    simplify,
)
from .policy import (
    Crs,
    Decision,
    DefaultStage,
    DefaultTable,
    ExtendedAuthPolicy,
    AuthRule,
    PmRule,
    Pmp,
    PmpShape,
    collect_decisions,
    match_principals,
    relevant_principals,
    resolve_conflicts,
)

__all__ = [
    "Request",
    "DecisionSource",
    "EvalResult",
    "ChineseWallConfig",
    "SodConfig",
    "HistoryConfig",
    "EvalStats",
    "Evaluator",
    "evaluate",
    "build_sod_policy",
    "build_chinese_wall_rules",
    "interest_writeback",
    "warm_cache",
]


@dataclass(frozen=True)
class Request:
    subject: str
    obj: str
    action: str


class DecisionSource:
    AUTHORIZATION = "authorization"
    DEFAULT_NO_PRINCIPALS = "default-no-principals"
    DEFAULT_NO_AUTHORIZATIONS = "default-no-authorizations"


@dataclass(frozen=True)
class EvalResult:
    decision: Decision
    matched: frozenset[str]
    raw_decisions: frozenset[Decision]
    decision_source: str
    cache_assisted: bool = False
    trace: tuple[str, ...] | None = None

    @property
    def source_text(self) -> str:
        prefix = "cache+" if self.cache_assisted else ""
        return prefix + self.decision_source


@dataclass(frozen=True)
class ChineseWallConfig:
    """Conflict-of-interest wiring: companies belong to at most one
    conflict class via ``membership_relation``; ``user_paths`` lead from
    users to companies and ``object_paths`` from documents to companies.
    All paths must be simple."""

    membership_relation: str
    user_paths: tuple[PathCondition, ...]
    object_paths: tuple[PathCondition, ...]
    principal: str = "insider"

    def __post_init__(self):
        for p in self.user_paths + self.object_paths:
            if not is_simple(p):
                raise PolicyError("chinese-wall paths must be simple; run simplify first")


@dataclass(frozen=True)
class SodConfig:
    obj: str
    actions: tuple[str, ...]

    def __post_init__(self):
        if len(set(self.actions)) != len(self.actions):
            raise PolicyError("separation-of-duty actions must be distinct")


@dataclass(frozen=True)
class HistoryConfig:
    caching_enabled: bool = False
    decision_audit_enabled: bool = False
    chinese_wall: ChineseWallConfig | None = None
    sod: SodConfig | None = None


@dataclass
class EvalStats:
    evaluations: int = 0
    principal_computations: int = 0
    cache_hits: int = 0
    cache_writes: int = 0
    product_visits: int = 0
    searches: int = 0


class Evaluator:
    """Binds a graph to a policy pair plus history configuration.

    Policies are immutable after load; swap them with :meth:`replace_policy`,
    which invalidates cached matched-principal sets. ``target_filter``
    switches on relevance-driven scheduling of principal-matching rules for
    set- and list-shaped policies (never for DAGs); it preserves decisions
    but may report a subset of the matched principals, so caching edges are
    not written while it is active.
    """

    def __init__(
        self,
        graph: SystemGraph,
        pmp: Pmp,
        policy: ExtendedAuthPolicy,
        defaults: DefaultTable,
        config: HistoryConfig = HistoryConfig(),
        *,
        target_filter: bool = False,
    ):
        self.graph = graph
        self.pmp = pmp
        self.policy = policy
        self.defaults = defaults
        self.config = config
        self.target_filter = target_filter
        self.stats = EvalStats()
        self._pmp_labels = _pmp_alphabet(pmp)
        self._cw_object_nfas: tuple[Nfa, ...] = ()
        if config.chinese_wall is not None:
            self._cw_object_nfas = tuple(
                compile_condition(p) for p in config.chinese_wall.object_paths
            )
            graph.freeze_relation(config.chinese_wall.membership_relation)

    def replace_policy(self, pmp: Pmp, policy: ExtendedAuthPolicy) -> None:
        """Swap policies. A new principal-matching policy invalidates every
        caching edge; swapping only the authorization side keeps them, since
        caching edges store matched principals, not decisions."""
        pmp_changed = pmp is not self.pmp
        self.pmp = pmp
        self.policy = policy
        self._pmp_labels = _pmp_alphabet(pmp)
        if pmp_changed:
            self.graph.invalidate_caches()

    # -- evaluation

    def evaluate(self, request: Request, *, trace: bool = False) -> EvalResult:
        g = self.graph
        s, o, a = request.subject, request.obj, request.action
        g.node_type(s)
        o_type = g.node_type(o)
        if g.model.actions and a not in g.model.actions:
            raise UnknownActionError(f"unknown action {a!r}")

        lines: list[str] | None = [] if trace else None
        matched, cache_assisted, cacheable = self._matched(s, o, o_type, a, lines)

        if not matched:
            decision, level = self.defaults.resolve(
                DefaultStage.NO_MATCHED_PRINCIPALS, s, o, o_type
            )
            raw: frozenset[Decision] = frozenset()
            source = DecisionSource.DEFAULT_NO_PRINCIPALS
            if lines is not None:
                lines.append("no matched principals")
                lines.append(f"default ({level}) -> {decision.value}")
        else:
            ordered = collect_decisions(o, o_type, a, self.policy, matched)
            raw = frozenset(ordered)
            reduced = resolve_conflicts(self.policy.crs, ordered)
            if lines is not None:
                lines.append(
                    "raw decisions: "
                    + (",".join(sorted(d.value for d in ordered)) or "-")
                )
            if not reduced:
                decision, level = self.defaults.resolve(
                    DefaultStage.NO_EXPLICIT_AUTHORIZATIONS, None, o, o_type
                )
                source = DecisionSource.DEFAULT_NO_AUTHORIZATIONS
                if lines is not None:
                    lines.append(f"default ({level}) -> {decision.value}")
            else:
                (decision,) = reduced
                source = DecisionSource.AUTHORIZATION
                if lines is not None:
                    lines.append(f"crs {self.policy.crs.value} -> {decision.value}")

        self._writeback(s, o, a, decision, matched, cacheable, lines)
        self.stats.evaluations += 1
        return EvalResult(
            decision=decision,
            matched=matched,
            raw_decisions=raw,
            decision_source=source,
            cache_assisted=cache_assisted,
            trace=tuple(lines) if lines is not None else None,
        )

    def _matched(
        self,
        s: str,
        o: str,
        o_type: str,
        action: str,
        lines: list[str] | None,
    ) -> tuple[frozenset[str], bool, bool]:
        """Returns (matched set, came from cache, safe to write back)."""
        g = self.graph
        if self.config.caching_enabled:
            hit = g.lookup_cache(s, o)
            if hit is not None:
                self.stats.cache_hits += 1
                if lines is not None:
                    lines.append(f"cache hit: {{{','.join(sorted(hit)) or ''}}}")
                return hit, True, False
            if lines is not None:
                lines.append("cache miss")
        stats = SearchStats()
        use_filter = self.target_filter and self.pmp.shape in (
            PmpShape.SET,
            PmpShape.LIST,
        )
        if use_filter:
            matched = self._match_filtered(s, o, o_type, action, stats, lines)
        else:
            matched = match_principals(g, self.pmp, s, o, stats=stats, trace=lines)
        self.stats.principal_computations += 1
        self.stats.product_visits += stats.product_visits
        self.stats.searches += stats.searches
        if lines is not None:
            lines.append(f"matched principals: {{{','.join(sorted(matched))}}}")
            lines.append(f"product-state visits: {stats.product_visits}")
        # A pruned run may under-report the matched set; never cache it.
        return matched, False, not use_filter

    def _match_filtered(
        self,
        s: str,
        o: str,
        o_type: str,
        action: str,
        stats: SearchStats,
        lines: list[str] | None,
    ) -> frozenset[str]:
        """Relevance-first scheduling of rule evaluation.

        Only principals named by an authorization rule covering (object,
        action) can turn into decisions, so their rules are tried first.
        When none applies, the remaining rules are scanned just far enough
        to distinguish "no principal matched" from "principals matched but
        produced no decisions", because the two take different default
        cascades. For lists, an earlier applicable irrelevant rule preempts
        a later relevant one (first-applicable semantics are order-exact).
        """
        pmp, g = self.pmp, self.graph
        relevant = relevant_principals(self.policy, o, o_type, action)
        if pmp.shape is PmpShape.SET:
            matched = {
                pmp.rules[i].principal
                for i in range(len(pmp.rules))
                if pmp.rules[i].principal in relevant
                and pmp.applicable(g, i, s, o, stats=stats, trace=lines)
            }
            if matched:
                return frozenset(matched)
            for i in range(len(pmp.rules)):
                if pmp.rules[i].principal not in relevant and pmp.applicable(
                    g, i, s, o, stats=stats, trace=lines
                ):
                    return frozenset({pmp.rules[i].principal})
            return frozenset()
        first_relevant = None
        for i in range(len(pmp.rules)):
            if pmp.rules[i].principal in relevant and pmp.applicable(
                g, i, s, o, stats=stats, trace=lines
            ):
                first_relevant = i
                break
        scan_end = first_relevant if first_relevant is not None else len(pmp.rules)
        for i in range(scan_end):
            if pmp.rules[i].principal not in relevant and pmp.applicable(
                g, i, s, o, stats=stats, trace=lines
            ):
                return frozenset({pmp.rules[i].principal})
        if first_relevant is not None:
            return frozenset({pmp.rules[first_relevant].principal})
        return frozenset()

    # -- history writeback

    def _writeback(
        self,
        s: str,
        o: str,
        action: str,
        decision: Decision,
        matched: frozenset[str],
        cacheable: bool,
        lines: list[str] | None,
    ) -> None:
        cfg = self.config
        g = self.graph
        wrote_cw = False
        with g.write_lock():
            # The cache entry is stamped with the pre-writeback epoch on
            # purpose: if this same writeback adds a policy-relevant edge,
            # the entry must die with it.
            if cfg.caching_enabled and cacheable:
                g.record_typed_edge(s, o, Caching(matched))
                self.stats.cache_writes += 1
                if lines is not None:
                    lines.append("cache write")
            invalidate = False
            if cfg.chinese_wall is not None and decision is Decision.ALLOW:
                added = interest_writeback(
                    g, s, o, action, cfg.chinese_wall, object_nfas=self._cw_object_nfas
                )
                wrote_cw = bool(added)
                invalidate |= any(label in self._pmp_labels for label in added)
            if cfg.decision_audit_enabled or wrote_cw:
                kind = DecisionAudit(action, decision is Decision.ALLOW)
                if g.record_typed_edge(s, o, kind):
                    invalidate |= kind.label in self._pmp_labels
                    if lines is not None:
                        lines.append(f"audit edge {kind.label}")
            if invalidate:
                g.invalidate_caches()
                if lines is not None:
                    lines.append("cache invalidated (history edge affects policy)")

    # -- preemptive caching

    def warm(self, pairs: Iterable[tuple[str, str]]) -> int:
        return warm_cache(self.graph, self.pmp, pairs, stats=self.stats)


def evaluate(
    graph: SystemGraph,
    pmp: Pmp,
    policy: ExtendedAuthPolicy,
    defaults: DefaultTable,
    request: Request,
    config: HistoryConfig = HistoryConfig(),
    *,
    trace: bool = False,
) -> EvalResult:
    """One-shot evaluation; use :class:`Evaluator` for request sequences."""
    return Evaluator(graph, pmp, policy, defaults, config).evaluate(
        request, trace=trace
    )


def _pmp_alphabet(pmp: Pmp) -> frozenset[str]:
    labels: set[str] = set()
    for rule in pmp.rules:
        for target in (rule.mandated, rule.precluded):
            if isinstance(target, PathTarget):
                labels |= base_labels(target.condition)
    return frozenset(labels)


# --- separation of duty ---------------------------------------------------------

def build_sod_policy(
    base_pmp: Pmp,
    base_policy: ExtendedAuthPolicy,
    obj: str,
    actions: Sequence[str],
) -> tuple[Pmp, ExtendedAuthPolicy]:
    """Constrain ``actions`` on ``obj`` to distinct performers.

    For each constrained action a dedicated principal is matched to any
    subject that was already allowed that action on the object (via the
    allow-audit label), and that principal is denied every *other*
    constrained action. Under deny-overrides, a subject therefore gets at
    most one of the actions, while repeats of its own action fall through
    to the base policy. Requires decision auditing to be enabled at
    evaluation time.
    """
    if base_policy.crs is not Crs.DENY_OVERRIDES:
        raise NonDenyOverridesError(
            "separation of duty requires the deny-overrides strategy"
        )
    actions = tuple(actions)
    SodConfig(obj, actions)  # validates distinctness
    guard_rules = tuple(
        PmRule(PathTarget(Edge(allow_label(a))), NONE, _sod_principal(a))
        for a in actions
    )
    if base_pmp.shape is PmpShape.SET:
        pmp = Pmp(PmpShape.SET, base_pmp.rules + guard_rules)
    elif base_pmp.shape is PmpShape.LIST:
        # First-applicable semantics: constraint rules must preempt.
        pmp = Pmp(PmpShape.LIST, guard_rules + base_pmp.rules)
    else:
        raise PolicyError("separation of duty supports set- and list-shaped policies")
    deny_rules = tuple(
        AuthRule(_sod_principal(a_i), obj, a_j, Decision.DENY)
        for a_i, a_j in itertools.permutations(actions, 2)
    )
    return pmp, replace(base_policy, rules=base_policy.rules + deny_rules)


def _sod_principal(action: str) -> str:
    return f"sod:{action}"


# --- chinese wall ----------------------------------------------------------------

def build_chinese_wall_rules(
    user_paths: Sequence[PathCondition],
    object_paths: Sequence[PathCondition],
    principal: str,
) -> tuple[PmRule, ...]:
    """One rule per (user path, object path) pair: mandate the
    user-to-company-to-object route, preclude the same route through a
    blocked-interest edge."""
    rules = []
    for u_path in user_paths:
        for o_path in object_paths:
            back = simplify(Reverse(o_path))
            rules.append(
                PmRule(
                    mandated=PathTarget(simplify(Concat(u_path, back))),
                    precluded=PathTarget(
                        simplify(Concat(Edge(INTEREST_BLOCKED), back))
                    ),
                    principal=principal,
                )
            )
    return tuple(rules)


def interest_writeback(
    g: SystemGraph,
    subject: str,
    obj: str,
    action: str,
    cw: ChineseWallConfig,
    *,
    object_nfas: Sequence[Nfa] | None = None,
) -> list[str]:
    """After an allow on a conflict-governed object, record the subject's
    active interest in the object's companies, block every other company in
    the same conflict class and audit the allow. All writes are idempotent.
    Returns the labels of edges actually added (for cache invalidation)."""
    if object_nfas is None:
        object_nfas = [compile_condition(p) for p in cw.object_paths]
    companies: set[str] = set()
    for nfa in object_nfas:
        companies |= reachable_accepting(nfa, g, obj)
    added: list[str] = []
    with g.write_lock():
        for company in sorted(companies):
            kind = InterestAudit(blocked=False)
            if g.record_typed_edge(subject, company, kind):
                added.append(kind.label)
            for coic in g.neighbors(company, cw.membership_relation):
                for rival in g.neighbors(coic, reverse_label(cw.membership_relation)):
                    if rival == company:
                        continue
                    blocked = InterestAudit(blocked=True)
                    if g.record_typed_edge(subject, rival, blocked):
                        added.append(blocked.label)
        if companies:
            audit = DecisionAudit(action, allowed=True)
            if g.record_typed_edge(subject, obj, audit):
                added.append(audit.label)
    return added


# --- preemptive caching ------------------------------------------------------------

def warm_cache(
    g: SystemGraph,
    pmp: Pmp,
    pairs: Iterable[tuple[str, str]],
    *,
    stats: EvalStats | None = None,
) -> int:
    """Precompute and store caching edges for pairs lacking a fresh one.
    Pure principal matching: no audit writeback, no decision. Returns the
    number of edges written."""
    written = 0
    for subject, obj in pairs:
        if g.lookup_cache(subject, obj) is not None:
            continue
        search = SearchStats()
        matched = match_principals(g, pmp, subject, obj, stats=search)
        if stats is not None:
            stats.principal_computations += 1
            stats.product_visits += search.product_visits
            stats.searches += search.searches
        with g.write_lock():
            g.record_typed_edge(subject, obj, Caching(matched))
        if stats is not None:
            stats.cache_writes += 1
        written += 1
    return written
