"""Aggregate per-state QoS constraints along a run and decide entailment."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

from .model import QosSpec, System
from .semantics import Run
from .smt import DEFAULT_LOGIC, SmtScript, SolverError, SolverHandle
from .terms import App, Term, Var, free_vars, rename

COMMUTATIVE_OPS = {"+", "*", "min", "max"}


@dataclass(frozen=True)
class StateOccurrence:
    participant: str
    state: str
    index: int  # position among the spec-carrying occurrences of the run
    spec: QosSpec


def occurrences(sys: System, run: Run, upto: int | None = None) -> list[StateOccurrence]:
    """Spec-carrying state occurrences of the first `upto` steps of `run`.

    Every participant contributes its initial state, then the target state of
    each of its moves, in step order. States without a spec are skipped; the
    remaining occurrences are indexed consecutively.
    """
    n = len(run.steps) if upto is None else upto
    collected: list[tuple[str, str]] = []
    for m, s in zip(sys.machines, run.start.locals):
        collected.append((m.name, s))
    part_index = {m.name: i for i, m in enumerate(sys.machines)}
    for i in range(n):
        action, cfg = run.steps[i]
        mover = action.subject
        collected.append((mover, cfg.locals[part_index[mover]]))
    out: list[StateOccurrence] = []
    for name, state in collected:
        spec = sys.machine(name).specs.get(state)
        if spec is not None:
            out.append(StateOccurrence(name, state, len(out), spec))
    return out


def _fold(op: str, names: list[str]) -> Term:
    acc: Term = Var(names[0])
    for n in names[1:]:
        acc = App(op, (acc, Var(n)))
    return acc


def build_entailment_query(
    sys: System, run: Run, psi: Term, upto: int | None = None
) -> SmtScript:
    """Script that is unsatisfiable exactly when the aggregated constraints entail psi.

    Each occurrence's constraints are instantiated over fresh copies named
    `<attr>_<occurrence index>`; each attribute with at least one copy is
    defined as the left-fold of its aggregation operator over its copies, in
    occurrence order. Attributes without occurrences stay unconstrained. The
    negated goal is asserted last.
    """
    declared = sys.attribute_names()
    unknown = sorted(free_vars(psi) - set(declared))
    if unknown:
        raise ValueError(f"unknown attribute in goal: {', '.join(unknown)}")
    occs = occurrences(sys, run, upto)

    decls: list[str] = list(declared)  # aggregate variable per attribute
    assertions: list[Term] = []
    copies: dict[str, list[str]] = {a: [] for a in declared}
    taken = set(decls)
    for occ in occs:
        mapping: dict[str, str] = {}
        for a in sorted(set().union(*(free_vars(c) for c in occ.spec.constraints)) & set(declared)):
            copy = f"{a}_{occ.index}"
            if copy in taken:
                raise ValueError(f"copy variable {copy} collides with a declared name")
            taken.add(copy)
            mapping[a] = copy
            copies[a].append(copy)
            decls.append(copy)
        for c in occ.spec.constraints:
            assertions.append(rename(c, mapping))
    ops = {a.name: a.op for a in sys.attributes}
    for a in declared:
        if copies[a]:
            op = ops[a]
            if op not in COMMUTATIVE_OPS:
                warnings.warn(
                    f"aggregation operator {op!r} for {a} is not known to be "
                    "commutative; the fold follows occurrence order",
                    stacklevel=2,
                )
            assertions.append(App("=", (Var(a), _fold(op, copies[a]))))
    assertions.append(App("not", (psi,)))
    return SmtScript(DEFAULT_LOGIC, tuple(decls), tuple(assertions))


def entails(
    sys: System,
    run: Run,
    psi: Term,
    solver: SolverHandle,
    upto: int | None = None,
) -> bool:
    """agg(run) entails psi in real arithmetic: no counterexample assignment exists."""
    script = build_entailment_query(sys, run, psi, upto)
    verdict = solver.check_sat(script)
    if verdict == "unknown":
        raise SolverError("solver returned unknown for an entailment query")
    return verdict == "unsat"

