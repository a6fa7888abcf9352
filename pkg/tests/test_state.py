import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridrep.config import EXAMPLE_DEPENDENCY
from gridrep.fuzzy import ConfigError, FuzzySystemConfig, FuzzyVariableSpec, TriangularMF
from gridrep.state import (CatalogError, DependencyMatrix, FileMeta, GridState, InsufficientSpace,
                           PlaceResult, ReplicaCatalog, UsageStats, dependent_files,
                           normalised_inputs, recompute_ri, update_usage)
from gridrep.topology import build_tree, clusters_from_members


# usage recurrence

def test_usage_scales_by_count_ratio():
    assert update_usage(1.0, 2, 4) == pytest.approx(2.0, abs=1e-12)


def test_usage_adds_when_previous_interval_was_empty():
    assert update_usage(3.0, 0, 5) == pytest.approx(8.0, abs=1e-12)


def test_usage_halves_without_requests():
    assert update_usage(4.0, 7, 0) == pytest.approx(2.0, abs=1e-12)
    # both counts zero: halving wins over the additive case
    assert update_usage(4.0, 0, 0) == 2.0


def test_unrequested_file_decays_geometrically():
    stats = UsageStats([1], 1)
    stats.record(1, 1, 6)
    stats.close_interval()
    assert stats.usage_ratio(1, 1) == 6.0
    for k in range(1, 8):
        stats.close_interval()
        assert stats.usage_ratio(1, 1) == pytest.approx(6.0 / 2 ** k, abs=1e-12)


def test_usage_stats_roll_counts():
    stats = UsageStats([4, 9], 2)
    stats.record(9, 2, 3)
    stats.close_interval()
    assert stats.prev[1, 1] == 3 and stats.curr.sum() == 0
    stats.record(9, 2, 6)
    stats.close_interval()
    assert stats.usage_ratio(9, 2) == pytest.approx(6.0)


@given(st.lists(st.integers(0, 20), min_size=1, max_size=30), st.floats(0, 100))
def test_usage_never_negative(counts, start):
    ratio, prev = start, 0
    for c in counts:
        ratio = update_usage(ratio, prev, c)
        prev = c
        assert ratio >= 0


# dependencies

def test_dependent_files_examples():
    dep = DependencyMatrix(EXAMPLE_DEPENDENCY)
    assert dependent_files(dep, 3) == [1, 2]
    assert dependent_files(dep, 2) == [3]
    assert all(dependent_files(DependencyMatrix.identity(4), f) == [] for f in range(1, 5))


@settings(max_examples=50)
@given(st.integers(2, 8).flatmap(lambda n: st.tuples(
    st.just(n), st.lists(st.floats(0, 1), min_size=n * n, max_size=n * n))), st.floats(0, 0.99))
def test_dependent_files_properties(data, thr):
    n, flat = data
    m = np.array(flat).reshape(n, n)
    np.fill_diagonal(m, 1.0)
    dep = DependencyMatrix(m)
    for f in range(1, n + 1):
        out = dependent_files(dep, f, thr)
        assert f not in out
        assert all(dep[f, g] > thr for g in out)
        assert out == sorted(out)


@pytest.mark.parametrize("bad", [[[1, 0], [0, 1], [0, 0]], [[1, 2], [0, 1]], [[0.5, 0], [0, 1]]])
def test_dependency_matrix_validation(bad):
    with pytest.raises(ConfigError):
        DependencyMatrix(bad)


# catalog

def _catalog(capacity=10.0, sizes=(3.0, 3.0, 5.0)):
    tree = build_tree(edges={1: 0, 2: 1, 3: 0}, capacities=[0, capacity, capacity])
    clusters = clusters_from_members(tree, [[1, 2], [3]])
    files = [FileMeta(i + 1, s) for i, s in enumerate(sizes)]
    return ReplicaCatalog(tree, clusters, files)


def test_cluster_capacity_is_member_sum():
    cat = _catalog(capacity=5.0)
    assert cat.capacity == {1: 10.0, 3: 5.0}
    assert cat.cluster_of(2) == 1 and cat.cluster_of(0) == 0


def test_place_and_remove_examples():
    cat = _catalog(capacity=5.0)
    assert cat.place_replica(1, 2) is PlaceResult.PLACED
    assert cat.free_space[1] == 7.0
    assert cat.holds(1, 1) and cat.holds(2, 1)
    assert cat.holder_set(1) == {0, 1}
    before = cat.signature()
    assert cat.place_replica(1, 1) is PlaceResult.DUPLICATE
    assert cat.signature() == before
    cat.remove_replica(1, 1)
    assert cat.free_space[1] == 10.0


def test_insufficient_space_leaves_state_unchanged():
    cat = _catalog(capacity=1.0)
    before = cat.signature()
    with pytest.raises(InsufficientSpace):
        cat.place_replica(1, 1)
    assert cat.signature() == before


def test_remove_errors():
    cat = _catalog()
    with pytest.raises(CatalogError):
        cat.remove_replica(1, 0)
    with pytest.raises(CatalogError):
        cat.remove_replica(1, 3)


def test_root_holds_everything():
    cat = _catalog()
    assert all(cat.holds(0, f) for f in (1, 2, 3))
    assert cat.place_replica(2, 0) is PlaceResult.DUPLICATE


def test_place_remove_round_trip():
    cat = _catalog()
    cat.place_replica(3, 3)
    before_sig, before_json = cat.signature(), cat.to_json()
    cat.place_replica(1, 3)
    cat.remove_replica(1, 3)
    assert cat.signature() == before_sig
    assert cat.to_json() == before_json


@settings(max_examples=80)
@given(st.lists(st.tuples(st.booleans(), st.integers(1, 3), st.sampled_from([1, 2, 3])), max_size=40))
def test_conservation_under_random_mutations(ops):
    cat = _catalog(capacity=4.0)
    for place, f, node in ops:
        try:
            if place:
                cat.place_replica(f, node)
            else:
                cat.remove_replica(f, node)
        except CatalogError:
            pass
        cat.check_invariants()


# RI matrix

def _chain_state(fuzzy=None, sizes=(1.0, 4.0, 4.0)):
    # two singleton clusters that differ only in tier
    tree = build_tree(edges={1: 0, 2: 1}, capacities=[0, 10, 10])
    clusters = clusters_from_members(tree, [[1], [2]])
    files = [FileMeta(i + 1, s) for i, s in enumerate(sizes)]
    return GridState(tree, clusters, files, DependencyMatrix.identity(len(files)), fuzzy)


def _brute_force_ri(level, fsize, usage, nsize, lam=0.5):
    # default shapes: LOW(x) = 1 - x, HIGH(x) = x on [0, 1]
    hi = [1 - level, 1 - fsize, usage, nsize]
    lo = [level, fsize, 1 - usage, 1 - nsize]
    w1 = lam * max(hi) + (1 - lam) * min(hi)
    w2 = lam * max(lo) + (1 - lam) * min(lo)
    return 5.0 * w1 / (w1 + w2)


def test_deeper_row_not_above_shallower_row():
    state = _chain_state()
    state.usage.set_ratio(1, 2, 3.0)
    state.usage.set_ratio(2, 2, 3.0)
    ri = recompute_ri(state)
    assert np.all(ri.values[1] <= ri.values[0])
    sizes = [1.0, 4.0, 4.0]
    for row, h in enumerate((1, 2)):
        for f in (1, 2, 3):
            expect = _brute_force_ri(h / 2, sizes[f - 1] / 4.0,
                                     state.usage.usage_ratio(h, f) / 10.0, 1.0)
            assert ri[h, f] == pytest.approx(expect, abs=1e-12)


def test_idle_grid_rows_depend_on_tier_and_size_only():
    tree = build_tree(fanouts=[2, 2], capacities=[0, 10, 10])
    clusters = clusters_from_members(tree, [[i] for i in range(1, 7)])
    files = [FileMeta(1, 2.0), FileMeta(2, 5.0), FileMeta(3, 2.0)]
    state = GridState(tree, clusters, files, DependencyMatrix.identity(3))
    ri = recompute_ri(state).values
    np.testing.assert_array_equal(ri[0], ri[1])
    np.testing.assert_array_equal(ri[2], ri[5])
    np.testing.assert_array_equal(ri[:, 0], ri[:, 2])
    assert np.all(ri[2:] <= ri[0])


def test_single_entry_at_rule_one_extremes():
    # normalisation puts the lone header's level and the lone file's size at 1,
    # so those two variables get mirrored shapes to make 1 the LOW extreme
    mirrored = FuzzyVariableSpec(0, 1, TriangularMF(0, 1, 1), TriangularMF(0, 0, 1))
    fuzzy = FuzzySystemConfig(level=mirrored, file_size=mirrored)
    tree = build_tree(edges={1: 0}, capacities=[0, 10])
    state = GridState(tree, clusters_from_members(tree, [[1]]), [FileMeta(1, 3.0)],
                      DependencyMatrix.identity(1), fuzzy)
    state.usage.set_ratio(1, 1, 10.0)
    lv, fs, ur, ns = normalised_inputs(state)
    assert (lv.item(), fs.item(), ur.item(), ns.item()) == (1.0, 1.0, 1.0, 1.0)
    ri = recompute_ri(state)
    assert ri.values.tolist() == [[fuzzy.output_high_center]]


def test_recompute_ri_is_pure():
    state = _chain_state()
    state.usage.set_ratio(2, 1, 1.5)
    state.catalog.place_replica(3, 2)
    a = recompute_ri(state).values
    b = recompute_ri(state).values
    np.testing.assert_array_equal(a, b)
    # free space feeds the node-size input
    state.catalog.remove_replica(3, 2)
    assert recompute_ri(state)[2, 1] >= a[1, 0]


def test_grid_state_validates_files():
    tree = build_tree(edges={1: 0})
    cl = clusters_from_members(tree, [[1]])
    with pytest.raises(ConfigError):
        GridState(tree, cl, [FileMeta(2, 1.0)], DependencyMatrix.identity(1))
    with pytest.raises(ConfigError):
        GridState(tree, cl, [FileMeta(1, 1.0)], DependencyMatrix.identity(2))
    with pytest.raises(ConfigError):
        FileMeta(1, 0.0)
