"""Shared fixtures and random-instance generators for the test suite."""

from __future__ import annotations

import random

from relac.fileformat import parse_graph, parse_model, parse_policy
from relac.graph import SystemGraph, SystemModel
from relac.pathcond import Concat, Edge, Empty, PathCondition, Plus, Reverse

# --- the higher-education course example ------------------------------------
#
# A PhD student u1 enrolled on course c1 and assisting on c2, a professor u2
# responsible for c1, coursework a1/a2 for c1 and a3 for c2, with u1 the
# creator of a2.

COURSE_MODEL = """
type user
type course
type coursework
rel is-enrolled-on
rel is-responsible-for
rel is-ta-for
rel is-coursework-for
rel is-creator-of
perm user course is-enrolled-on
perm user course is-responsible-for
perm user course is-ta-for
perm coursework course is-coursework-for
perm user coursework is-creator-of
action read
action write
action grade
action review
"""

COURSE_GRAPH = """
entity u1 user
entity u2 user
entity c1 course
entity c2 course
entity a1 coursework
entity a2 coursework
entity a3 coursework
edge u1 c1 is-enrolled-on
edge u2 c1 is-responsible-for
edge u1 c2 is-ta-for
edge a1 c1 is-coursework-for
edge a3 c2 is-coursework-for
edge a2 c1 is-coursework-for
edge u1 a2 is-creator-of
"""

COURSE_POLICY = """
pmp set
rule author : is-creator-of ! none
rule course-ta : is-ta-for;~is-coursework-for ! is-enrolled-on;~is-coursework-for
rule course-leader : is-responsible-for;~is-coursework-for ! none
auth author * read allow
auth author * write allow
auth course-ta * read allow
auth course-ta * grade allow
auth course-leader * read allow
auth course-leader * review allow
crs deny-overrides
default system deny
"""

# Expected outcomes for (subject, object, read): decision and matched set.
COURSE_EXPECTED = [
    ("u1", "a1", "deny", frozenset()),
    ("u1", "a2", "allow", frozenset({"author"})),
    ("u1", "a3", "allow", frozenset({"course-ta"})),
    ("u2", "a1", "allow", frozenset({"course-leader"})),
    ("u2", "a2", "allow", frozenset({"course-leader"})),
    ("u2", "a3", "deny", frozenset()),
]


def course_example():
    model = parse_model(COURSE_MODEL)
    graph = parse_graph(COURSE_GRAPH, model)
    parsed = parse_policy(COURSE_POLICY, model)
    return model, graph, parsed


# --- separation of duty -------------------------------------------------------

SOD_MODEL = "type user\ntype doc\nrel r\nperm user doc r\n"


def sod_example(n_actions: int = 3, n_users: int = 3):
    model = parse_model(SOD_MODEL)
    lines = [f"entity u{i} user" for i in range(1, n_users + 1)]
    lines.append("entity o doc")
    lines += [f"edge u{i} o r" for i in range(1, n_users + 1)]
    graph = parse_graph("\n".join(lines), model)
    actions = " ".join(f"a{i}" for i in range(1, n_actions + 1))
    parsed = parse_policy(
        "pmp set\n"
        "rule p : r ! none\n"
        "auth p o * allow\n"
        "crs deny-overrides\n"
        "default system deny\n"
        f"sod o {actions}\n",
        model,
    )
    return model, graph, parsed


# The six-request walkthrough and its expected decisions.
SOD_SEQUENCE = [
    ("u1", "o", "a1"),
    ("u1", "o", "a2"),
    ("u1", "o", "a3"),
    ("u3", "o", "a2"),
    ("u3", "o", "a3"),
    ("u2", "o", "a3"),
]
SOD_DECISIONS = ["allow", "deny", "deny", "allow", "deny", "allow"]
SOD_FINAL_AUDITS = {
    ("u1", "o", "@allow:a1"),
    ("u1", "o", "@deny:a2"),
    ("u1", "o", "@deny:a3"),
    ("u3", "o", "@allow:a2"),
    ("u3", "o", "@deny:a3"),
    ("u2", "o", "@allow:a3"),
}


# --- chinese wall ----------------------------------------------------------------
#
# Consultancy e1 serving companies c1..c3 (c1, c2 share conflict class i1);
# files f1/f4 belong to c1, f2 to c2, f3 to c3.

WALL_MODEL = """
type user
type firm
type company
type file
type coic
rel w
rel s
rel d
rel m
perm user firm w
perm firm company s
perm file company d
perm company coic m
"""

WALL_GRAPH = """
entity u1 user
entity e1 firm
entity c1 company
entity c2 company
entity c3 company
entity f1 file
entity f2 file
entity f3 file
entity f4 file
entity i1 coic
entity i2 coic
edge u1 e1 w
edge e1 c1 s
edge e1 c2 s
edge e1 c3 s
edge f1 c1 d
edge f2 c2 d
edge f3 c3 d
edge f4 c1 d
edge c1 i1 m
edge c2 i1 m
edge c3 i2 m
"""

WALL_POLICY = """
pmp set
cw-member m
cw-userpath w;s
cw-objectpath d
cw-principal p
auth p * read allow
crs deny-overrides
default system deny
"""

WALL_SEQUENCE = [("u1", "f1", "read"), ("u1", "f2", "read"),
                 ("u1", "f3", "read"), ("u1", "f4", "read")]
WALL_DECISIONS = ["allow", "deny", "allow", "allow"]
WALL_FINAL_EDGES = {
    ("u1", "c1", "@interest:active"),
    ("u1", "c3", "@interest:active"),
    ("u1", "c2", "@interest:blocked"),
    ("u1", "f1", "@allow:read"),
    ("u1", "f3", "@allow:read"),
    ("u1", "f4", "@allow:read"),
    ("u1", "f2", "@deny:read"),
}


def wall_example():
    model = parse_model(WALL_MODEL)
    graph = parse_graph(WALL_GRAPH, model)
    parsed = parse_policy(WALL_POLICY, model)
    return model, graph, parsed


# --- random instances ---------------------------------------------------------

def random_graph(
    rng: random.Random,
    max_nodes: int = 12,
    n_relations: int = 4,
    max_edges: int = 30,
    symmetric_count: int = 1,
) -> SystemGraph:
    relations = [f"r{i}" for i in range(n_relations)]
    symmetric = frozenset(rng.sample(relations, symmetric_count)) if symmetric_count else frozenset()
    model = SystemModel(
        types=frozenset({"t"}),
        relations=frozenset(relations),
        symmetric=symmetric,
        permissible=frozenset(("t", "t", r) for r in relations),
    )
    g = SystemGraph(model)
    n = rng.randint(2, max_nodes)
    nodes = [f"v{i}" for i in range(n)]
    for v in nodes:
        g.add_entity(v, "t")
    for _ in range(rng.randint(0, max_edges)):
        g.add_relationship(rng.choice(nodes), rng.choice(nodes), rng.choice(relations))
    return g


def random_simple_condition(
    rng: random.Random,
    labels: list[str],
    max_len: int,
    symmetric: frozenset[str] = frozenset(),
) -> PathCondition:
    """Uniform-ish normalized simple condition with edge count <= max_len."""

    def gen(budget: int, allow_plus: bool) -> PathCondition:
        if budget == 1:
            label = rng.choice(labels)
            node: PathCondition = Edge(label, rng.random() < 0.4 and label not in symmetric)
            if allow_plus and rng.random() < 0.3:
                node = Plus(node)
            return node
        if allow_plus and rng.random() < 0.3:
            return Plus(gen(budget, False))
        split = rng.randint(1, budget - 1)
        return Concat(gen(split, True), gen(budget - split, True))

    return gen(rng.randint(1, max_len), True)


def random_raw_condition(
    rng: random.Random, labels: list[str], depth: int
) -> PathCondition:
    """Arbitrary (possibly non-simple) AST, Reverse and <> included."""
    roll = rng.random()
    if depth <= 0 or roll < 0.35:
        return Edge(rng.choice(labels), rng.random() < 0.3)
    if roll < 0.5:
        return Reverse(random_raw_condition(rng, labels, depth - 1))
    if roll < 0.62:
        return Plus(random_raw_condition(rng, labels, depth - 1))
    if roll < 0.7:
        return Empty()
    return Concat(
        random_raw_condition(rng, labels, depth - 1),
        random_raw_condition(rng, labels, depth - 1),
    )
