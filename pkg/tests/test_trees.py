import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparsebgp.datagen import random_case
from sparsebgp.engine import Dataset, run_query
from sparsebgp.oracle import brute_force
from sparsebgp.partition import PartitionSpec
from sparsebgp.planner import plan_degree, plan_direction
from sparsebgp.query import parse_query
from sparsebgp.trees import (
    BindingTree,
    SolutionSet,
    TreeNode,
    enumerate_solutions,
    global_prune,
    group_pools,
    local_prune,
    natural_join,
    omega,
    phi,
    pool_trees,
    postprocess,
    select_postprocessing,
    serialize_tree,
    serialized_size,
)


def N(b, *kids):
    return TreeNode(b, tuple(N(k) if isinstance(k, int) else k for k in kids))


@pytest.fixture(scope="module")
def sample_run(sample_ds, sample_query):
    run = run_query(sample_ds, sample_query, "degree", PartitionSpec(2, 2))
    return run, group_pools(t for n in run.trees for t in n)


# -- decision table --------------------------------------------------------------


def test_mode_running_query(sample_query):
    assert select_postprocessing(sample_query, plan_degree(sample_query)) == "local"
    assert select_postprocessing(sample_query, plan_direction(sample_query)) == "local_then_global"


def test_mode_single_root_acyclic():
    g = parse_query("SELECT * WHERE { ?a <p> ?b . ?a <q> ?c . ?c <r> ?d }")
    assert select_postprocessing(g, plan_degree(g)) == "none"
    g = parse_query("SELECT * WHERE { ?a <p> ?b . ?a <q> <k> }")
    assert select_postprocessing(g, plan_degree(g)) == "none"


def test_mode_multiple_constants():
    g = parse_query("SELECT * WHERE { ?a <p> ?b . ?a <q> <k> . ?b <q> <j> }")
    assert select_postprocessing(g, plan_degree(g)) == "local"


def test_mode_two_roots_acyclic():
    g = parse_query("SELECT * WHERE { ?a <p> ?b . ?c <q> ?b }")
    plan = plan_direction(g)
    assert len(plan.roots) == 2 and phi(plan) == {g.variable("b").id}
    assert select_postprocessing(g, plan) == "global"
    assert select_postprocessing(g, plan_degree(g)) == "none"


def test_mode_gap_without_shared_variables():
    g = parse_query("SELECT * WHERE { ?a <p> ?b . ?c <q> ?d . ?d <r> <k> }")
    plan = plan_degree(g)
    assert len(plan.roots) == 2 and not phi(plan)
    assert select_postprocessing(g, plan) == "none"


# -- local pruning ---------------------------------------------------------------


def test_omega_running_query(sample_query):
    plan = plan_degree(sample_query)
    assert omega(plan, 0) == {sample_query.variable("v1").id, sample_query.variable("v2").id}


def test_local_prune_removes_binding_five(sample_run, sample_query):
    run, pools = sample_run
    trees = pools[0][1]
    k_long = next(k for k, p in enumerate(run.plan.paths[0]) if len(p) == 3)
    assert trees[k_long].to_json() == {"1": [{"2": [0, 5]}]}
    pruned = local_prune(trees, run.plan, 0)
    assert pruned[k_long].to_json() == {"1": [{"2": [0]}]}
    others = [k for k in trees if k != k_long]
    assert all(pruned[k] is trees[k] for k in others)
    assert trees[k_long].count() - pruned[k_long].count() == 1


def test_local_prune_empty_omega_is_identity(sample_run):
    run, pools = sample_run
    trees = pools[0][1]
    assert local_prune(trees, run.plan, 0, set()) == trees


def test_local_prune_kills_group(sample_run, sample_query):
    run, _ = sample_run
    paths = run.plan.paths[0]
    k_long = next(k for k, p in enumerate(paths) if len(p) == 3)
    k_v1 = next(k for k, p in enumerate(paths) if len(p) == 2 and p[1] == sample_query.variable("v1").id)
    k_v3 = next(k for k in range(3) if k not in (k_long, k_v1))
    trees = {k_long: N(1, N(2, 5)), k_v1: N(1, 0), k_v3: N(1, 0)}
    assert local_prune(trees, run.plan, 0) is None
    assert local_prune({k_long: N(1, N(2, 0))}, run.plan, 0) is None


def test_postprocess_on_running_query(sample_run):
    run, pools = sample_run
    out, deleted = postprocess(pools, run.plan, "local")
    assert deleted == 0
    assert [t.node.to_json() for t in pool_trees(out, run.plan)] == [{"1": [{"2": [0]}]}, {"1": [0]}, {"1": [0, 5]}]
    assert postprocess(pools, run.plan, "none") == (pools, 0)


# -- global pruning --------------------------------------------------------------


@pytest.fixture
def two_roots():
    g = parse_query("SELECT * WHERE { ?a <p> ?x . ?c <q> ?x }")
    plan = plan_direction(g)
    assert plan.paths == [[(0, 1)], [(2, 1)]]
    return g, plan


def test_global_prune_intersects_across_roots(two_roots):
    g, plan = two_roots
    pools = {0: {10: {0: N(10, 1, 4)}}, 1: {11: {0: N(11, 4, 5)}}}
    out, _ = global_prune(pools, plan)
    assert out == {0: {10: {0: N(10, 4)}}, 1: {11: {0: N(11, 4)}}}


def test_global_prune_drops_dead_root_binding(two_roots):
    g, plan = two_roots
    pools = {0: {10: {0: N(10, 1)}, 12: {0: N(12, 4)}}, 1: {11: {0: N(11, 4, 5)}}}
    out, deleted = global_prune(pools, plan)
    assert out == {0: {12: {0: N(12, 4)}}, 1: {11: {0: N(11, 4)}}}
    assert deleted == 1


def test_global_prune_empty_root_empties_all(two_roots):
    g, plan = two_roots
    pools = {0: {10: {0: N(10, 1)}}, 1: {}}
    out, deleted = global_prune(pools, plan)
    assert out == {0: {}, 1: {}} and deleted == 1


def test_global_prune_single_root_identity(sample_run):
    run, pools = sample_run
    assert phi(run.plan) == set()
    # nothing is shared across roots, so only the closing local pass has any effect
    local, _ = postprocess(pools, run.plan, "local")
    assert global_prune(pools, run.plan)[0] == local
    assert global_prune(local, run.plan) == (local, 0)


# -- enumeration -----------------------------------------------------------------


def test_natural_join():
    a = ((1, 2), {(0, 1), (0, 2), (3, 1)})
    b = ((2, 5), {(1, 7), (2, 8), (9, 9)})
    assert natural_join(a, b) == ((1, 2, 5), {(0, 1, 7), (0, 2, 8), (3, 1, 7)})
    assert natural_join(((), {()}), b) == b
    assert natural_join(((1,), {(0,)}), ((2,), {(4,), (5,)})) == ((1, 2), {(0, 4), (0, 5)})


def test_enumerate_running_query(sample_run, sample_ds, sample_query):
    run, pools = sample_run
    pruned, _ = postprocess(pools, run.plan, "local")
    for verify in (True, False):
        sols = enumerate_solutions(pruned, sample_query, run.plan, run.light, sample_ds.dictionary, sample_ds.triples, verify)
        assert sols.variables == ("v0", "v1", "v2", "v3")
        assert sols.rows == ((2, 0, 1, 0), (2, 0, 1, 5))
    assert [d["v3"] for d in sols.decoded(sample_ds.dictionary)] == ["User0", "User4"]


def test_enumerate_empty_pools(sample_query):
    assert enumerate_solutions({}, sample_query, plan_degree(sample_query)).rows == ()


def test_single_pattern_one_row_per_triple(sample_ds):
    run = run_query(sample_ds, "SELECT ?s ?o WHERE { ?s <director> ?o }", "degree", PartitionSpec(2, 2), verify=False)
    assert len(run.solutions) == 5


def test_solution_formats(sample_run, sample_ds):
    run, _ = sample_run
    csv_text = run.solutions.to_csv(sample_ds.dictionary)
    assert csv_text.splitlines() == ["v0,v1,v2,v3", "Product0,User0,User1,User0", "Product0,User0,User1,User4"]
    assert json.loads(run.solutions.to_json(sample_ds.dictionary))[1]["v3"] == "User4"
    assert SolutionSet.from_rows(["a"], [(3,), (1,), (3,)]).rows == ((1,), (3,))


def test_serialize_tree_layout():
    t = BindingTree(0, 1, 2, (5, 6, 7), N(1, N(2, 0, 5)))
    words = [int.from_bytes(serialize_tree(t)[i:i + 4], "little", signed=True) for i in range(0, 40, 4)]
    assert words == [0, 1, 2, 3, 1, 1, 2, 2, 0, 0]
    assert len(serialize_tree(t)) == serialized_size(t) == 4 * (4 + 2 * 4)


# -- properties ------------------------------------------------------------------


def _internal_nodes_have_children(node, depth, pos=0):
    if pos == depth - 1:
        return not node.children
    return bool(node.children) and all(_internal_nodes_have_children(c, depth, pos + 1) for c in node.children)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000), st.sampled_from(["degree", "direction"]))
def test_pruning_sound_idempotent_and_tidy(seed, traversal):
    case = random_case(seed, constants=False if traversal == "direction" else None)
    ds = Dataset.from_ntriples(case.data)
    g = parse_query(case.query)
    run = run_query(ds, g, traversal, PartitionSpec(2, 2))
    raw = group_pools(t for n in run.trees for t in n)
    once, _ = postprocess(raw, run.plan, run.mode)
    assert postprocess(once, run.plan, run.mode)[0] == once
    for t in pool_trees(once, run.plan):
        assert _internal_nodes_have_children(t.node, len(t.path))
    # every variable binding of an oracle solution survives pruning
    expected = brute_force(ds.triples, g, ds.dictionary)
    if not run.plan.roots:
        return
    col = {name: i for i, name in enumerate(expected.variables)}
    for r, paths in enumerate(run.plan.paths):
        root_name = g.vertices[run.plan.roots[r]].term
        for row in expected.rows:
            b = row[col[root_name]]
            assert b in once[r]
            for k, path in enumerate(paths):
                branch = tuple(row[col[g.vertices[v].term]] for v in path)
                assert branch in once[r][b][k].branches()
