from qcheck import gchor as gc
from qcheck.frontends import serialize_qosgc, serialize_ql
from qcheck.generator import ATTRIBUTES, gen_nested_choices
from qcheck.projection import QInteraction


def leaf_interactions(g):
    if isinstance(g, QInteraction):
        return [g] if g.message.startswith("leaf") else []
    if isinstance(g, (gc.Seq, gc.Choice, gc.Par)):
        return leaf_interactions(g.left) + leaf_interactions(g.right)
    if isinstance(g, gc.Star):
        return leaf_interactions(g.body)
    return []


def test_leaf_count_and_alternation():
    qg1, _, k1 = gen_nested_choices(1, seed=0)
    assert len(leaf_interactions(qg1.body)) == 2 and k1 == 4
    leaves = leaf_interactions(qg1.body)
    assert all(l.sender == "Alice" for l in leaves)  # second turn answers

    qg2, _, _ = gen_nested_choices(2, seed=0)
    assert len(leaf_interactions(qg2.body)) == 4
    assert all(l.sender == "Bob" for l in leaf_interactions(qg2.body))


def test_values_unique_per_attribute():
    qg, _, _ = gen_nested_choices(4, seed=11)
    leaves = leaf_interactions(qg.body)
    assert len(leaves) == 16
    for pos in range(len(ATTRIBUTES)):
        vals = [l.slots.rqos_post[pos] for l in leaves]
        assert len(set(vals)) == len(vals)


def test_full_depth_range():
    for n in (12, 16):
        qg, _, k = gen_nested_choices(n, seed=2)
        assert len(leaf_interactions(qg.body)) == 2**n and k == 2 * (n + 1)


def test_fixed_seed_reproduces():
    a = gen_nested_choices(3, seed=42)
    b = gen_nested_choices(3, seed=42)
    assert serialize_qosgc(a[0]) == serialize_qosgc(b[0])
    assert serialize_ql(a[1]) == serialize_ql(b[1])
    c = gen_nested_choices(3, seed=43)
    assert serialize_ql(a[1]) != serialize_ql(c[1])
