"""System model (schema) and system graph (instance).

The model fixes entity types, relationship labels, the symmetric subset and
the permissible-relationship graph; the graph holds typed entities plus four
kinds of edges: ordinary relationship edges and the three history kinds
written back by the evaluation engine (caching, decision audit, interest
audit). Relationship edges are stored once in their canonical direction;
reverse and symmetric traversals are answered by the query layer, so the
"edge in both directions" view holds by construction.
"""

from __future__ import annotations

import re
import threading
from collections import OrderedDict
from dataclasses import dataclass
from typing import Iterator, Union

from .errors import (
    DuplicateEntityError,
    FrozenRelationError,
    ModelError,
    SchemaViolationError,
    UnknownNodeError,
    UnknownRelationError,
    UnknownTypeError,
)

__all__ = [
    "SystemModel",
    "SystemGraph",
    "Relationship",
    "Caching",
    "DecisionAudit",
    "InterestAudit",
    "EdgeKind",
    "reverse_label",
    "allow_label",
    "deny_label",
    "INTEREST_ACTIVE",
    "INTEREST_BLOCKED",
]

_NAME_RE = re.compile(r"[A-Za-z][A-Za-z0-9_:-]*$")

INTEREST_ACTIVE = "@interest:active"
INTEREST_BLOCKED = "@interest:blocked"


def allow_label(action: str) -> str:
    return f"@allow:{action}"


def deny_label(action: str) -> str:
    return f"@deny:{action}"


def reverse_label(label: str) -> str:
    """Flip the traversal direction of a label ("r" <-> "~r")."""
    return label[1:] if label.startswith("~") else "~" + label


def _split(label: str) -> tuple[str, bool]:
    if label.startswith("~"):
        return label[1:], True
    return label, False


# --- schema -------------------------------------------------------------------

@dataclass(frozen=True)
class SystemModel:
    """Schema: types, relationship labels, symmetric subset, permissible
    (from-type, to-type, relation) triples and an optional closed action set
    (empty means any action is admissible)."""

    types: frozenset[str]
    relations: frozenset[str]
    symmetric: frozenset[str] = frozenset()
    permissible: frozenset[tuple[str, str, str]] = frozenset()
    actions: frozenset[str] = frozenset()

    def __post_init__(self):
        for t in self.types:
            if not _NAME_RE.match(t):
                raise ModelError(f"invalid type name {t!r}")
        for r in self.relations:
            if not _NAME_RE.match(r):
                raise ModelError(f"invalid relation name {r!r}")
        bad = self.symmetric - self.relations
        if bad:
            raise ModelError(f"symmetric labels not declared as relations: {sorted(bad)}")
        for tf, tt, r in self.permissible:
            if tf not in self.types or tt not in self.types:
                raise UnknownTypeError(f"permissible triple ({tf},{tt},{r}) references unknown type")
            if r not in self.relations:
                raise UnknownRelationError(f"permissible triple ({tf},{tt},{r}) references unknown relation")

    def permits(self, from_type: str, to_type: str, label: str) -> bool:
        """Schema check for a traversal label; reverse labels are the derived
        view of the canonical triples, symmetric labels permit either order."""
        base, rev = _split(label)
        if rev:
            return self.permits(to_type, from_type, base)
        if (from_type, to_type, base) in self.permissible:
            return True
        return base in self.symmetric and (to_type, from_type, base) in self.permissible


# --- edge kinds -----------------------------------------------------------------

@dataclass(frozen=True)
class Relationship:
    label: str


@dataclass(frozen=True)
class Caching:
    """Matched-principal cache entry; ``epoch`` is stamped at write time when
    left unset."""

    principals: frozenset[str]
    epoch: int | None = None


@dataclass(frozen=True)
class DecisionAudit:
    action: str
    allowed: bool

    @property
    def label(self) -> str:
        return allow_label(self.action) if self.allowed else deny_label(self.action)


@dataclass(frozen=True)
class InterestAudit:
    blocked: bool

    @property
    def label(self) -> str:
        return INTEREST_BLOCKED if self.blocked else INTEREST_ACTIVE


EdgeKind = Union[Relationship, Caching, DecisionAudit, InterestAudit]


def kind_from_label(label: str) -> DecisionAudit | InterestAudit:
    """Inverse of the reserved-namespace labels used in graph files."""
    if label == INTEREST_ACTIVE:
        return InterestAudit(blocked=False)
    if label == INTEREST_BLOCKED:
        return InterestAudit(blocked=True)
    if label.startswith("@allow:"):
        return DecisionAudit(label[len("@allow:"):], allowed=True)
    if label.startswith("@deny:"):
        return DecisionAudit(label[len("@deny:"):], allowed=False)
    raise UnknownRelationError(f"not a reserved system label: {label!r}")


# --- graph ------------------------------------------------------------------------

class SystemGraph:
    """Mutable labelled multigraph of typed entities.

    Concurrency contract: many concurrent readers OR one writer. All
    mutating methods serialize on an internal lock; :meth:`write_lock` lets
    the engine make a decision's writeback atomic. ``epoch`` increases on
    every effective entity/relationship mutation and on explicit cache
    invalidation; history-edge writes leave it untouched.
    """

    def __init__(self, model: SystemModel, cache_capacity: int | None = None):
        if cache_capacity is not None and cache_capacity < 0:
            raise ValueError("cache_capacity must be >= 0")
        self.model = model
        self.cache_capacity = cache_capacity
        self._types: dict[str, str] = {}
        self._out: dict[str, dict[str, set[str]]] = {}
        self._in: dict[str, dict[str, set[str]]] = {}
        self._system_out: dict[str, dict[str, set[str]]] = {}
        self._system_in: dict[str, dict[str, set[str]]] = {}
        self._cache: OrderedDict[tuple[str, str], tuple[frozenset[str], int]] = OrderedDict()
        self._frozen_relations: set[str] = set()
        self._interest_edges = 0
        self._epoch = 0
        self._lock = threading.RLock()

    # -- basic queries

    @property
    def epoch(self) -> int:
        return self._epoch

    def __len__(self) -> int:
        return len(self._types)

    def __contains__(self, node: str) -> bool:
        return node in self._types

    def nodes(self) -> Iterator[str]:
        return iter(self._types)

    def node_type(self, node: str) -> str:
        self._require(node)
        return self._types[node]

    def write_lock(self) -> threading.RLock:
        return self._lock

    def _require(self, node: str) -> None:
        if node not in self._types:
            raise UnknownNodeError(f"unknown entity {node!r}")

    # -- mutation

    def add_entity(self, node: str, type_name: str) -> None:
        with self._lock:
            if type_name not in self.model.types:
                raise UnknownTypeError(f"unknown type {type_name!r}")
            if node in self._types:
                raise DuplicateEntityError(f"entity {node!r} already present")
            if not node or any(ch.isspace() for ch in node) or node.startswith(("@", "#", "~")):
                raise ModelError(f"invalid entity id {node!r}")
            self._types[node] = type_name
            self._out[node] = {}
            self._in[node] = {}
            self._system_out[node] = {}
            self._system_in[node] = {}
            self._epoch += 1

    def add_relationship(self, from_node: str, to_node: str, relation: str) -> bool:
        """Store an edge in canonical direction; returns False for a
        duplicate (including the flipped form of a symmetric edge), which is
        a no-op and does not advance the epoch."""
        with self._lock:
            self._require(from_node)
            self._require(to_node)
            if relation.startswith("@") or relation.startswith("~"):
                raise UnknownRelationError(
                    f"{relation!r} is not a storable relation (system and reverse "
                    "labels are views, not stored edges)"
                )
            if relation not in self.model.relations:
                raise UnknownRelationError(f"unknown relation {relation!r}")
            if relation in self._frozen_relations and self._interest_edges:
                raise FrozenRelationError(
                    f"relation {relation!r} is frozen once interest edges exist"
                )
            if not self.model.permits(self._types[from_node], self._types[to_node], relation):
                raise SchemaViolationError(
                    f"({self._types[from_node]},{self._types[to_node]},{relation}) "
                    "is not a permissible relationship"
                )
            if to_node in self._out[from_node].get(relation, ()):
                return False
            if relation in self.model.symmetric and from_node in self._out[to_node].get(relation, ()):
                return False
            self._out[from_node].setdefault(relation, set()).add(to_node)
            self._in[to_node].setdefault(relation, set()).add(from_node)
            self._epoch += 1
            return True

    def record_typed_edge(self, from_node: str, to_node: str, kind: EdgeKind) -> bool:
        """Add a history edge (writeback path). Audit and interest edges are
        deduplicated, caching edges replace the pair's previous entry. Does
        not advance the epoch. Returns True when the graph changed."""
        with self._lock:
            self._require(from_node)
            self._require(to_node)
            if isinstance(kind, Relationship):
                raise ValueError("use add_relationship for relationship edges")
            if isinstance(kind, Caching):
                epoch = self._epoch if kind.epoch is None else kind.epoch
                self._cache[(from_node, to_node)] = (frozenset(kind.principals), epoch)
                self._cache.move_to_end((from_node, to_node))
                if self.cache_capacity is not None:
                    while len(self._cache) > self.cache_capacity:
                        self._cache.popitem(last=False)
                return True
            label = kind.label
            targets = self._system_out[from_node].setdefault(label, set())
            if to_node in targets:
                return False
            targets.add(to_node)
            self._system_in[to_node].setdefault(label, set()).add(from_node)
            if isinstance(kind, InterestAudit):
                self._interest_edges += 1
            return True

    def invalidate_caches(self) -> None:
        """Advance the epoch so every caching edge becomes stale. Called by
        the engine on policy swaps and on history writes that can change
        matched-principal sets."""
        with self._lock:
            self._epoch += 1

    def freeze_relation(self, relation: str) -> None:
        """Disallow new ``relation`` edges once any interest edge exists
        (conflict-of-interest membership is fixed after the system goes live)."""
        if relation not in self.model.relations:
            raise UnknownRelationError(f"unknown relation {relation!r}")
        self._frozen_relations.add(relation)

    # -- traversal

    def neighbors(self, node: str, label: str) -> set[str]:
        """All nodes reachable over one ``label`` step, answering derived
        reverse ("~r") and symmetric views as well as system labels.
        Labels that exist nowhere simply yield the empty set."""
        self._require(node)
        base, rev = _split(label)
        if base.startswith("@"):
            store_out, store_in = self._system_out, self._system_in
            symmetric = False
        else:
            store_out, store_in = self._out, self._in
            symmetric = base in self.model.symmetric
        if rev and not symmetric:
            result = set(store_in[node].get(base, ()))
        else:
            result = set(store_out[node].get(base, ()))
            if symmetric:
                result.update(store_in[node].get(base, ()))
        return result

    def out_labels(self, node: str) -> Iterator[tuple[str, str]]:
        """Every one-step traversal from ``node`` as (label, neighbor),
        including derived reverse and symmetric views."""
        self._require(node)
        seen_sym: set[str] = set()
        for label, targets in self._out[node].items():
            for w in targets:
                yield label, w
            if label in self.model.symmetric:
                seen_sym.add(label)
        for label, sources in self._in[node].items():
            rev = label if label in self.model.symmetric else "~" + label
            for w in sources:
                yield rev, w
        for label, targets in self._system_out[node].items():
            for w in targets:
                yield label, w
        for label, sources in self._system_in[node].items():
            for w in sources:
                yield "~" + label, w

    # -- caching edges

    def lookup_cache(self, subject: str, obj: str) -> frozenset[str] | None:
        """Cached matched-principal set for the pair, or None when absent or
        stale (written at an earlier epoch)."""
        self._require(subject)
        self._require(obj)
        entry = self._cache.get((subject, obj))
        if entry is None or entry[1] != self._epoch:
            return None
        return entry[0]

    def cache_size(self) -> int:
        return len(self._cache)

    # -- enumeration / validation

    def relationship_edges(self) -> Iterator[tuple[str, str, str]]:
        """Stored canonical relationship edges."""
        for v, by_label in self._out.items():
            for label, targets in by_label.items():
                for w in targets:
                    yield v, w, label

    def typed_edges(self) -> Iterator[tuple[str, str, EdgeKind]]:
        """History edges: audit, interest, then caching."""
        for v, by_label in self._system_out.items():
            for label, targets in by_label.items():
                kind = kind_from_label(label)
                for w in targets:
                    yield v, w, kind
        for (s, o), (principals, epoch) in self._cache.items():
            yield s, o, Caching(principals, epoch)

    def validate(self) -> list[str]:
        """Full re-validation pass; returns problem descriptions (empty for a
        well-formed graph)."""
        problems = []
        for v, t in self._types.items():
            if t not in self.model.types:
                problems.append(f"entity {v!r} has undeclared type {t!r}")
        for v, w, label in self.relationship_edges():
            if label not in self.model.relations:
                problems.append(f"edge ({v},{w},{label}) uses undeclared relation")
            elif not self.model.permits(self._types[v], self._types[w], label):
                problems.append(
                    f"edge ({v},{w},{label}) violates the permissible-relationship graph"
                )
        return problems

    # -- persistence hook (used by the file loader to restore cache freshness)

    def _restore_epoch(self, epoch: int) -> None:
        if epoch < self._epoch:
            raise ValueError("cannot move the epoch backwards")
        self._epoch = epoch
