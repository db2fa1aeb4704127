"""Project a QoS-annotated g-choreography onto one machine per participant."""
from __future__ import annotations

from dataclasses import dataclass, field

from . import gchor as gc
from .model import INPUT, OUTPUT, Action, Machine, QosAttributeDecl, QosSpec, System, Transition
from .terms import Term

SLOT_NAMES = ("sqos", "rqos", "sqos'", "rqos'")


@dataclass(frozen=True)
class QSlots:
    """Constraints for the four local states touched by an interaction:
    sender before/after the output, receiver before/after the input."""

    sqos: tuple[Term, ...] = ()
    rqos: tuple[Term, ...] = ()
    sqos_post: tuple[Term, ...] = ()
    rqos_post: tuple[Term, ...] = ()


@dataclass(frozen=True)
class QInteraction:
    sender: str
    receiver: str
    message: str
    slots: QSlots = field(default_factory=QSlots)


@dataclass(frozen=True)
class QGChor:
    attributes: tuple[QosAttributeDecl, ...]
    body: gc.GChor  # Interaction nodes may be QInteraction


class ProjectionError(ValueError):
    pass


def strip_annotations(g: gc.GChor) -> gc.GChor:
    if isinstance(g, QInteraction):
        return gc.Interaction(g.sender, g.receiver, g.message)
    if isinstance(g, gc.Seq):
        return gc.Seq(strip_annotations(g.left), strip_annotations(g.right))
    if isinstance(g, gc.Choice):
        return gc.Choice(strip_annotations(g.left), strip_annotations(g.right))
    if isinstance(g, gc.Par):
        return gc.Par(strip_annotations(g.left), strip_annotations(g.right))
    if isinstance(g, gc.Star):
        return gc.Star(strip_annotations(g.body))
    return g


def participants_of_body(g: gc.GChor) -> tuple[str, ...]:
    return gc.participants_of(strip_annotations(g))


@dataclass
class _Nfa:
    """Epsilon-NFA for one participant; labeled edges carry the QoS
    constraints of their pre and post local states."""

    n: int = 0
    eps: list[tuple[int, int]] = field(default_factory=list)
    edges: list[tuple[int, Action, int, tuple[Term, ...], tuple[Term, ...]]] = field(
        default_factory=list
    )

    def fresh(self) -> int:
        self.n += 1
        return self.n - 1


def _build(nfa: _Nfa, g: gc.GChor, who: str) -> tuple[int, int]:
    if isinstance(g, (gc.Interaction, QInteraction)):
        start, end = nfa.fresh(), nfa.fresh()
        slots = g.slots if isinstance(g, QInteraction) else QSlots()
        if g.sender == who:
            a = Action(g.sender, g.receiver, OUTPUT, g.message)
            nfa.edges.append((start, a, end, slots.sqos, slots.sqos_post))
        elif g.receiver == who:
            a = Action(g.sender, g.receiver, INPUT, g.message)
            nfa.edges.append((start, a, end, slots.rqos, slots.rqos_post))
        else:
            nfa.eps.append((start, end))
        return start, end
    if isinstance(g, gc.Empty):
        start, end = nfa.fresh(), nfa.fresh()
        nfa.eps.append((start, end))
        return start, end
    if isinstance(g, gc.Seq):
        s1, e1 = _build(nfa, g.left, who)
        s2, e2 = _build(nfa, g.right, who)
        nfa.eps.append((e1, s2))
        return s1, e2
    if isinstance(g, gc.Choice):
        start, end = nfa.fresh(), nfa.fresh()
        s1, e1 = _build(nfa, g.left, who)
        s2, e2 = _build(nfa, g.right, who)
        nfa.eps.extend([(start, s1), (start, s2), (e1, end), (e2, end)])
        return start, end
    if isinstance(g, gc.Star):
        hub = nfa.fresh()
        s, e = _build(nfa, g.body, who)
        nfa.eps.extend([(hub, s), (e, hub)])
        return hub, hub
    if isinstance(g, gc.Par):
        raise ProjectionError("parallel composition is not projectable")
    if isinstance(g, gc.Break):
        raise ProjectionError("break is not projectable")
    raise ProjectionError(f"not a g-choreography: {g!r}")


def _closure(nfa: _Nfa, nodes: frozenset[int]) -> frozenset[int]:
    out = set(nodes)
    changed = True
    while changed:
        changed = False
        for a, b in nfa.eps:
            if a in out and b not in out:
                out.add(b)
                changed = True
    return frozenset(out)


def _project_one(body: gc.GChor, who: str) -> Machine:
    nfa = _Nfa()
    start, end = _build(nfa, body, who)
    initial = _closure(nfa, frozenset([start]))
    index: dict[frozenset[int], int] = {initial: 0}
    order = [initial]
    transitions: list[Transition] = []
    specs: dict[int, tuple[Term, ...]] = {}

    def attach(state: int, terms: tuple[Term, ...], action: Action, side: str) -> None:
        if not terms:
            return
        old = specs.get(state)
        if old is not None and old != terms:
            raise ProjectionError(
                f"spec collision at state {state} of machine {who} "
                f"({side} of {action})"
            )
        specs[state] = terms

    i = 0
    while i < len(order):
        src_set = order[i]
        # group NFA edges by action, deterministically by action text
        by_action: dict[Action, list[tuple[int, tuple[Term, ...], tuple[Term, ...]]]] = {}
        for a, act, b, pre, post in nfa.edges:
            if a in src_set:
                by_action.setdefault(act, []).append((b, pre, post))
        for act in sorted(by_action, key=str):
            targets = by_action[act]
            tgt_set = _closure(nfa, frozenset(b for b, _, _ in targets))
            if tgt_set not in index:
                index[tgt_set] = len(order)
                order.append(tgt_set)
            src_id, tgt_id = index[src_set], index[tgt_set]
            transitions.append(Transition(str(src_id), act, str(tgt_id)))
            for _, pre, post in targets:
                attach(src_id, pre, act, "pre-state")
                attach(tgt_id, post, act, "post-state")
        i += 1

    accepting = tuple(str(index[s]) for s in order if end in s)
    spec_map = {str(s): QosSpec(terms) for s, terms in sorted(specs.items())}
    return Machine(who, "0", tuple(transitions), accepting, spec_map)


def project(qg: QGChor) -> System:
    """One deterministic machine per participant; QoS slots attach to the
    projected pre/post states. Conflicting constraints landing on one merged
    state are an error, never silently merged."""
    participants = participants_of_body(qg.body)
    if len(participants) < 2:
        raise ProjectionError("choreography needs at least 2 participants")
    machines = tuple(_project_one(qg.body, p) for p in participants)
    return System(qg.attributes, machines)
