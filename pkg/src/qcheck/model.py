"""Domain model: machines with per-state QoS specifications, composed systems."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping

from .terms import Term, free_vars, is_boolean, SortError

OUTPUT = "!"
INPUT = "?"


@dataclass(frozen=True)
class Action:
    sender: str
    receiver: str
    kind: str  # OUTPUT or INPUT
    message: str

    def __post_init__(self) -> None:
        if self.sender == self.receiver:
            raise ValueError(f"self-loop channel {self.sender!r}")

    @property
    def subject(self) -> str:
        """The participant performing the action: sender of an output, receiver of an input."""
        return self.sender if self.kind == OUTPUT else self.receiver

    @property
    def channel(self) -> tuple[str, str]:
        return (self.sender, self.receiver)

    def __str__(self) -> str:
        return f"{self.sender}-{self.receiver}{self.kind}{self.message}"


@dataclass(frozen=True)
class Transition:
    src: str
    action: Action
    tgt: str


@dataclass(frozen=True)
class QosSpec:
    constraints: tuple[Term, ...]


@dataclass(frozen=True)
class QosAttributeDecl:
    name: str
    op: str  # binary aggregation operator symbol, e.g. "+", "*", "min", "max"


@dataclass(frozen=True)
class Machine:
    name: str
    initial: str
    transitions: tuple[Transition, ...]
    accepting: tuple[str, ...] = ()
    specs: Mapping[str, QosSpec] = field(default_factory=dict)

    @property
    def states(self) -> tuple[str, ...]:
        """States in first-mention order: initial, then transition endpoints."""
        seen: dict[str, None] = {self.initial: None}
        for t in self.transitions:
            seen.setdefault(t.src, None)
            seen.setdefault(t.tgt, None)
        return tuple(seen)


@dataclass(frozen=True)
class System:
    attributes: tuple[QosAttributeDecl, ...]
    machines: tuple[Machine, ...]

    @cached_property
    def participants(self) -> tuple[str, ...]:
        return tuple(m.name for m in self.machines)

    @cached_property
    def channels(self) -> tuple[tuple[str, str], ...]:
        """Ordered sender/receiver pairs, in machine declaration order."""
        names = self.participants
        return tuple((a, b) for a in names for b in names if a != b)

    @cached_property
    def channel_index(self) -> Mapping[tuple[str, str], int]:
        return {ch: i for i, ch in enumerate(self.channels)}

    def machine(self, name: str) -> Machine:
        for m in self.machines:
            if m.name == name:
                return m
        raise KeyError(name)

    def attribute_names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.attributes)


@dataclass(frozen=True)
class Violation:
    location: str
    message: str

    def __str__(self) -> str:
        return f"{self.location}: {self.message}"


def validate_system(sys: System) -> list[Violation]:
    """Collect every invariant violation; an empty report means the system is valid.

    The report order is deterministic: attribute declarations first, then
    machines in declaration order, transitions in declaration order.
    """
    out: list[Violation] = []
    names = [m.name for m in sys.machines]

    if len(sys.machines) < 2:
        out.append(Violation("system", "needs at least 2 machines"))
    seen_names: set[str] = set()
    for n in names:
        if n in seen_names:
            out.append(Violation(f"machine {n}", "duplicate machine name"))
        seen_names.add(n)

    seen_attrs: set[str] = set()
    for a in sys.attributes:
        if a.name in seen_attrs:
            out.append(Violation(f"attribute {a.name}", "duplicate attribute name"))
        seen_attrs.add(a.name)
        if not a.op:
            out.append(Violation(f"attribute {a.name}", "empty aggregation operator"))

    declared = set(sys.attribute_names())
    for m in sys.machines:
        states = set(m.states)
        for s in m.accepting:
            if s not in states:
                out.append(Violation(f"machine {m.name}", f"accepting state {s} unknown"))
        for i, t in enumerate(m.transitions):
            loc = f"machine {m.name} transition {i}"
            if t.action.subject != m.name:
                out.append(Violation(loc, f"foreign subject {t.action.subject}"))
            for end in (t.action.sender, t.action.receiver):
                if end not in seen_names:
                    out.append(Violation(loc, f"unknown participant {end}"))
        for s, spec in m.specs.items():
            loc = f"machine {m.name} state {s}"
            if s not in states:
                out.append(Violation(loc, "spec on unknown state"))
            for c in spec.constraints:
                try:
                    if not is_boolean(c):
                        out.append(Violation(loc, "constraint is not boolean"))
                except SortError as e:
                    out.append(Violation(loc, f"ill-sorted constraint: {e}"))
                    continue
                for v in sorted(free_vars(c)):
                    if v not in declared:
                        out.append(Violation(loc, f"unknown attribute {v}"))
    return out
