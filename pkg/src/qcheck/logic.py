"""QoS logic: formula AST, desugaring, and the bounded checking stack."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

from . import gchor
from .gchor import GChor
from .model import System
from .semantics import Run, enumerate_run_levels, is_accepting, trace_of
from .smt import SolverError, SolverHandle, serialize
from .terms import Term
from .aggregation import build_entailment_query

Formula = Union["TrueF", "Atom", "Not", "Or", "Until", "And", "Implies", "Possib", "Nec"]


@dataclass(frozen=True)
class TrueF:
    pass


@dataclass(frozen=True)
class Atom:
    term: Term


@dataclass(frozen=True)
class Not:
    sub: Formula


@dataclass(frozen=True)
class Or:
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Until:
    left: Formula
    index: GChor
    right: Formula


# Surface forms, removed by desugar().
@dataclass(frozen=True)
class And:
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies:
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Possib:
    index: GChor
    sub: Formula


@dataclass(frozen=True)
class Nec:
    index: GChor
    sub: Formula


def desugar(f: Formula) -> Formula:
    """Rewrite to the five core constructors."""
    if isinstance(f, (TrueF, Atom)):
        return f
    if isinstance(f, Not):
        return Not(desugar(f.sub))
    if isinstance(f, Or):
        return Or(desugar(f.left), desugar(f.right))
    if isinstance(f, Until):
        return Until(desugar(f.left), f.index, desugar(f.right))
    if isinstance(f, And):
        return Not(Or(Not(desugar(f.left)), Not(desugar(f.right))))
    if isinstance(f, Implies):
        return Or(Not(desugar(f.left)), desugar(f.right))
    if isinstance(f, Possib):
        return Until(TrueF(), f.index, desugar(f.sub))
    if isinstance(f, Nec):
        return Not(Until(TrueF(), f.index, Not(desugar(f.sub))))
    raise TypeError(f"not a formula: {f!r}")


def negate(f: Formula) -> Formula:
    return Not(f)


@dataclass
class Stats:
    runs: int = 0
    queries: int = 0
    cache_hits: int = 0


@dataclass
class Verdict:
    outcome: str  # "model" | "no_model" | "counterexample" | "no_counterexample"
    witness: Run | None
    k: int
    u: int
    stats: Stats

    @property
    def found(self) -> bool:
        return self.witness is not None


class Checker:
    """Bounded satisfiability/validity checking over one solver session.

    Memoizes (a) unfolded choreography pomsets, (b) entailment verdicts keyed
    on the serialized query, and (c) word membership per choreography. All
    three can be disabled to cross-check verdict transparency.
    """

    def __init__(
        self,
        sys: System,
        solver: SolverHandle,
        caches: bool = True,
        progress: Callable[[int, int], None] | None = None,
    ):
        self.sys = sys
        self.solver = solver
        self.caches = caches
        self.progress = progress
        self.stats = Stats()
        # keys use node identity: an index occurs as one shared AST node, and
        # identity lookups avoid rehashing deep trees on every membership test
        self._pomsets: dict[tuple[int, int], tuple[gchor.Pomset, ...]] = {}
        self._entail: dict[str, bool] = {}
        self._member: dict[tuple[int, int, tuple, bool], bool] = {}
        self._keepalive: list[GChor] = []

    # -- memoized primitives ------------------------------------------------

    def _pomsets_of(self, g: GChor, u: int) -> tuple[gchor.Pomset, ...]:
        key = (id(g), u)
        if self.caches and key in self._pomsets:
            self.stats.cache_hits += 1
            return self._pomsets[key]
        ps = gchor.pomsets_of(gchor.unfold(g, u))
        if self.caches:
            self._pomsets[key] = ps
            self._keepalive.append(g)
        return ps

    def _member_of(self, g: GChor, u: int, word: tuple, complete: bool) -> bool:
        key = (id(g), u, word, complete)
        if self.caches and key in self._member:
            self.stats.cache_hits += 1
            return self._member[key]
        ps = self._pomsets_of(g, u)
        if complete:
            res = any(
                gchor._match(p, word, complete=True)
                for p in ps
                if len(p.labels) == len(word)
            )
        else:
            res = any(
                gchor._match(p, word, complete=False)
                for p in ps
                if len(p.labels) >= len(word)
            )
        if self.caches:
            self._member[key] = res
        return res

    def _entails(self, run: Run, psi: Term, upto: int) -> bool:
        script = build_entailment_query(self.sys, run, psi, upto)
        key = serialize(script)
        if self.caches and key in self._entail:
            self.stats.cache_hits += 1
            return self._entail[key]
        verdict = self.solver.check_sat(script)
        self.stats.queries += 1
        if verdict == "unknown":
            raise SolverError("solver returned unknown for an entailment query")
        res = verdict == "unsat"
        if self.caches:
            self._entail[key] = res
        return res

    # -- the checking stack ---------------------------------------------------

    def q_models(self, f: Formula, run: Run, at: int, u: int) -> bool:
        """Does <run, run[:at]> satisfy f (core constructors only)."""
        if isinstance(f, TrueF):
            return True
        if isinstance(f, Atom):
            return self._entails(run, f.term, at)
        if isinstance(f, Not):
            return not self.q_models(f.sub, run, at, u)
        if isinstance(f, Or):
            return self.q_models(f.left, run, at, u) or self.q_models(f.right, run, at, u)
        if isinstance(f, Until):
            return self.q_until(f.left, f.index, f.right, run, at, at, u)
        raise TypeError(f"formula not desugared: {f!r}")

    def q_until(
        self, f1: Formula, g: GChor, f2: Formula, run: Run, at: int, ext: int, u: int
    ) -> bool:
        """Search for a witness extension of run[:at] by walking along run.

        `ext` is the end of the current extension (at <= ext <= len(run)).
        The extension's own trace must reach a maximal word of g with f2
        holding there, f1 holding at every strictly shorter extension, and
        every intermediate trace staying inside g's prefix language.
        """
        while True:
            word = trace_of(run)[at:ext]
            if self._member_of(g, u, word, True) and self.q_models(f2, run, ext, u):
                return True
            if not self.q_models(f1, run, ext, u):
                return False
            if ext == len(run.steps):
                return False
            nxt = word + (run.action_at(ext),)
            if not self._member_of(g, u, nxt, False):
                return False
            ext += 1

    def q_sat(self, f: Formula, k: int, u: int | None = None) -> Verdict:
        """First run (canonical order) of length <= k that ends accepting and models f."""
        if k < 0:
            raise ValueError("bound must be >= 0")
        uu = k if u is None else u
        core = desugar(f)
        for level in enumerate_run_levels(self.sys, k):
            if self.progress is not None and level:
                self.progress(len(level[0].steps), len(level))
            for run in level:
                self.stats.runs += 1
                if is_accepting(self.sys, run.last) and self.q_models(core, run, 0, uu):
                    return Verdict("model", run, k, uu, self.stats)
        return Verdict("no_model", None, k, uu, self.stats)

    def q_valid(self, f: Formula, k: int, u: int | None = None) -> Verdict:
        """Counterexample search: satisfiability of the negated formula."""
        v = self.q_sat(negate(f), k, u)
        outcome = "counterexample" if v.outcome == "model" else "no_counterexample"
        return Verdict(outcome, v.witness, v.k, v.u, v.stats)
