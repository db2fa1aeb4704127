"""Synthetic benchmark families: alternating-turn systems with nested choices."""
from __future__ import annotations

import random

from . import gchor as gc
from . import logic
from .model import QosAttributeDecl
from .projection import QGChor, QInteraction, QSlots, strip_annotations
from .terms import App, Num, Var

ATTRIBUTES = ("q1", "q2", "q3", "q4", "q5")
PARTIES = ("Bob", "Alice")


def _leaf_values(rng: random.Random, leaves: int) -> list[tuple[int, ...]]:
    """One vector of attribute values per leaf; values are unique per attribute
    across leaves so a conjunction of equalities pins exactly one leaf."""
    per_attr: list[list[int]] = []
    for _ in ATTRIBUTES:
        vals = rng.sample(range(1, max(1000, 16 * leaves)), leaves)
        per_attr.append(vals)
    return [tuple(per_attr[a][leaf] for a in range(len(ATTRIBUTES))) for leaf in range(leaves)]


def _build_body(depth: int, n: int, leaf_counter: list[int], values) -> gc.GChor:
    sender = PARTIES[depth % 2]
    receiver = PARTIES[(depth + 1) % 2]
    if depth == n:
        leaf = leaf_counter[0]
        leaf_counter[0] += 1
        vec = values[leaf]
        constraints = tuple(
            App("=", (Var(a), Num(str(v)))) for a, v in zip(ATTRIBUTES, vec)
        )
        return QInteraction(
            sender, receiver, f"leaf{leaf + 1}", QSlots(rqos_post=constraints)
        )
    return gc.Choice(
        gc.Seq(
            gc.Interaction(sender, receiver, "m0"),
            _build_body(depth + 1, n, leaf_counter, values),
        ),
        gc.Seq(
            gc.Interaction(sender, receiver, "m1"),
            _build_body(depth + 1, n, leaf_counter, values),
        ),
    )


def gen_nested_choices(n: int, seed: int) -> tuple[QGChor, logic.Formula, int]:
    """Generate the depth-n alternating-choice choreography plus a formula
    satisfied by exactly one of its 2^n maximal runs.

    Returns (annotated choreography, formula, run-length bound covering every
    maximal run).
    """
    if not 1 <= n <= 16:
        raise ValueError("depth must be in 1..16")
    rng = random.Random(seed)
    leaves = 2**n
    values = _leaf_values(rng, leaves)
    body = _build_body(0, n, [0], values)
    attrs = tuple(QosAttributeDecl(a, "+") for a in ATTRIBUTES)
    target = rng.randrange(leaves)
    goal = App(
        "and",
        tuple(App("=", (Var(a), Num(str(v)))) for a, v in zip(ATTRIBUTES, values[target])),
    )
    formula = logic.Possib(strip_annotations(body), logic.Atom(goal))
    k = 2 * (n + 1)
    return QGChor(attrs, body), formula, k
