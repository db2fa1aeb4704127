import pytest

from qcheck import gchor as gc
from qcheck.generator import gen_nested_choices
from qcheck.model import validate_system
from qcheck.projection import (
    ProjectionError,
    QGChor,
    QInteraction,
    QSlots,
    project,
    strip_annotations,
)
from qcheck.model import QosAttributeDecl
from qcheck.semantics import enumerate_run_levels, is_accepting, trace_of
from qcheck.terms import App, Num, Var

import reference


def attr(name):
    return QosAttributeDecl(name, "+")


def test_single_annotated_interaction():
    eq1 = (App("=", (Var("a"), Num("1"))),)
    eq2 = (App("=", (Var("a"), Num("2"))),)
    qg = QGChor(
        (attr("a"),),
        QInteraction("A", "B", "m", QSlots(sqos=eq1, rqos_post=eq2)),
    )
    sys_ = project(qg)
    assert validate_system(sys_) == []
    a, b = sys_.machines
    assert (a.name, len(a.states), len(b.states)) == ("A", 2, 2)
    assert a.specs[a.initial].constraints == eq1  # sender pre-state
    assert b.specs[b.accepting[0]].constraints == eq2  # receiver post-state
    assert not b.specs.get(b.initial)


def test_seq_same_sender_is_a_chain():
    qg = QGChor(
        (),
        gc.Seq(gc.Interaction("A", "B", "m"), gc.Interaction("A", "B", "n")),
    )
    sys_ = project(qg)
    a = sys_.machine("A")
    assert len(a.states) == 3 and len(a.transitions) == 2
    assert a.transitions[0].action.message == "m"
    assert a.transitions[1].action.message == "n"


def test_nested_choices_has_four_maximal_runs():
    qg, _, k = gen_nested_choices(2, seed=0)
    sys_ = project(qg)
    levels = list(enumerate_run_levels(sys_, k))
    maximal = [r for r in levels[k] if is_accepting(sys_, r.last)]
    assert len(maximal) == 4
    leaves = sorted(trace_of(r)[-1].message for r in maximal)
    assert leaves == ["leaf1", "leaf2", "leaf3", "leaf4"]


def test_projection_is_deterministic():
    qg, _, _ = gen_nested_choices(3, seed=9)
    assert project(qg) == project(qg)


def test_par_and_break_rejected():
    par = QGChor((), gc.Par(gc.Interaction("A", "B", "m"), gc.Interaction("C", "D", "n")))
    with pytest.raises(ProjectionError, match="parallel"):
        project(par)
    brk = QGChor((), gc.Star(gc.Choice(gc.Break(), gc.Interaction("A", "B", "m"))))
    with pytest.raises(ProjectionError, match="break"):
        project(brk)


def test_spec_collision_is_an_error():
    eq1 = (App("=", (Var("a"), Num("1"))),)
    eq2 = (App("=", (Var("a"), Num("2"))),)
    # both branches open with the same message, so determinization merges the
    # sender's post states; the differing constraints must not be merged
    qg = QGChor(
        (attr("a"),),
        gc.Choice(
            gc.Seq(QInteraction("A", "B", "m", QSlots(sqos_post=eq1)),
                   gc.Interaction("A", "B", "k")),
            gc.Seq(QInteraction("A", "B", "m", QSlots(sqos_post=eq2)),
                   gc.Interaction("A", "B", "l")),
        ),
    )
    with pytest.raises(ProjectionError, match="spec collision"):
        project(qg)

    # equal constraints on the merged state are fine
    ok = QGChor(
        (attr("a"),),
        gc.Choice(
            gc.Seq(QInteraction("A", "B", "m", QSlots(sqos_post=eq1)),
                   gc.Interaction("A", "B", "k")),
            gc.Seq(QInteraction("A", "B", "m", QSlots(sqos_post=eq1)),
                   gc.Interaction("A", "B", "l")),
        ),
    )
    assert validate_system(project(ok)) == []


def test_projected_language_matches_choreography():
    # exhaustively: maximal traces of the composition == maximal words of the body
    for n in (1, 2, 3):
        qg, _, k = gen_nested_choices(n, seed=n)
        sys_ = project(qg)
        levels = list(enumerate_run_levels(sys_, k))
        got = set()
        for level in levels:
            for r in level:
                if len(r.steps) and is_accepting(sys_, r.last):
                    got.add(trace_of(r))
        _, maximal = reference.ref_language(strip_annotations(qg.body), 0)
        assert got == maximal
