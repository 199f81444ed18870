import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from mevcore.bundles import BundleMatrix, to_general_game
from mevcore.game_core import (
    Allocation,
    CandidateBlock,
    ExplicitGame,
    GameTooLarge,
    NotSubmodularError,
    check_marginal_sum_bound,
    coalition_value,
    core_membership_bruteforce,
    core_membership_characterization,
    dump_game,
    game_from_dict,
    game_to_dict,
    load_game,
    marginal_contribution,
    searcher_optimal_allocation,
    validate_game,
    validator_optimal_allocation,
)
from mevcore.random_games import candidate_allocations, complementarity_game, with_complementarity
from strategies import matrices_with_capacity


@pytest.fixture
def g31():
    return to_general_game(BundleMatrix([[3, 1], [0, 2]]))


def single_searcher_game(value=7.0):
    return ExplicitGame.from_blocks(1, [CandidateBlock({0}, (value,))])


def empty_game(n=2):
    return ExplicitGame.from_blocks(n, [])


# -- construction --------------------------------------------------------------


def test_requires_empty_block():
    with pytest.raises(ValueError, match="empty block"):
        ExplicitGame(1, [1], [[2.0]], [0.0])


@pytest.mark.parametrize(
    "block",
    [
        CandidateBlock({2}, (0.0, 0.0)),
        CandidateBlock({0}, (0.0,)),
        CandidateBlock({0}, (float("inf"), 0.0)),
    ],
)
def test_rejects_bad_blocks(block):
    with pytest.raises(ValueError):
        ExplicitGame.from_blocks(2, [block])


def test_allocation_rejects_negative():
    with pytest.raises(ValueError):
        Allocation((1.0, -0.5), 0.0)


# -- coalition values -------------------------------------------------------------


@pytest.mark.parametrize("coalition,expected", [({0, 1}, 5.0), (set(), 0.0), ({1}, 3.0), ({0}, 3.0)])
def test_coalition_value_examples(g31, coalition, expected):
    assert coalition_value(g31, coalition) == expected
    assert oracles.coalition_value(g31.blocks, coalition) == expected


def test_coalition_value_rejects_bad_index(g31):
    with pytest.raises(IndexError):
        coalition_value(g31, {2})


def test_value_table_matches_direct(g31):
    table = g31.value_table
    for mask in range(4):
        members = [i for i in range(2) if mask >> i & 1]
        assert table[mask] == oracles.coalition_value(g31.blocks, members)


def test_externalities_count_only_members():
    # block built from searcher 0 also pays searcher 1
    g = ExplicitGame.from_blocks(2, [CandidateBlock({0}, (1.0, 4.0), 0.5)])
    assert coalition_value(g, {0}) == 1.5
    assert coalition_value(g, {0, 1}) == 5.5
    assert coalition_value(g, {1}) == 0.0


@pytest.mark.parametrize("j,expected", [(0, 2.0), (1, 2.0)])
def test_marginal_contribution_examples(g31, j, expected):
    assert marginal_contribution(g31, j) == expected


def test_marginal_contribution_single_searcher():
    assert marginal_contribution(single_searcher_game(), 0) == 7.0


def test_marginal_contribution_out_of_range(g31):
    with pytest.raises(IndexError):
        marginal_contribution(g31, 5)


# -- diagnostics ----------------------------------------------------------------------


def test_bundle_games_are_submodular(g31):
    d = validate_game(g31)
    assert d.is_monotone and d.is_submodular and d.has_decreasing_marginals
    assert d.violations == ()


def test_complementarity_detected():
    d = validate_game(complementarity_game())
    assert d.is_monotone
    assert not d.is_submodular
    assert not d.has_decreasing_marginals
    assert d.equivalence_holds
    sub = [v for v in d.violations if v.kind == "submodular"]
    assert sub[0].a == (0,) and sub[0].b == (1,)
    assert sub[0].gap == pytest.approx(1.0)


def test_empty_game_diagnostics():
    d = validate_game(empty_game(3))
    assert d.is_monotone and d.is_submodular


def test_non_monotone_game_reported():
    # a negative externality: adding searcher 1 makes searcher 0's only block worse
    g = ExplicitGame.from_blocks(2, [CandidateBlock({0}, (3.0, -5.0))])
    d = validate_game(g)
    assert not d.is_monotone
    assert any(v.kind == "monotone" for v in d.violations)


def test_validate_size_guard():
    with pytest.raises(GameTooLarge):
        validate_game(empty_game(13))


def test_violations_capped_at_ten():
    rng = np.random.default_rng(3)
    g = to_general_game(BundleMatrix(rng.integers(0, 3, (3, 5)).astype(float)))
    # make lots of complementarities
    for _ in range(6):
        g = with_complementarity(g, rng)
    assert len(validate_game(g).violations) <= 10


@settings(max_examples=60, deadline=None)
@given(matrices_with_capacity(max_m=3, max_n=4))
def test_submodularity_matches_oracle_definition(case):
    matrix, capacity = case
    g = to_general_game(matrix, capacity)
    n = g.n_searchers
    v = {frozenset(s): oracles.coalition_value(g.blocks, s) for s in oracles.subsets(range(n))}
    submodular = all(
        v[a] + v[b] >= v[a | b] + v[a & b] - 1e-9 for a in v for b in v
    )
    d = validate_game(g)
    assert d.is_submodular == submodular
    assert d.is_submodular and d.is_monotone


@settings(max_examples=40, deadline=None)
@given(matrices_with_capacity(max_m=3, max_n=4), st.integers(0, 2**32 - 1))
def test_dmv_equivalence_with_adversarial_blocks(case, seed):
    matrix, capacity = case
    g = to_general_game(matrix, capacity)
    if g.n_searchers >= 2:
        g = with_complementarity(g, np.random.default_rng(seed))
    d = validate_game(g)
    assert d.equivalence_holds
    if g.n_searchers >= 2:
        assert not d.is_submodular


# -- marginal-sum bound ------------------------------------------------------------------


def test_marginal_sum_bound_examples(g31):
    assert check_marginal_sum_bound(g31, set(), {0, 1})
    assert check_marginal_sum_bound(g31, {1}, {1})


def test_marginal_sum_bound_rejects_non_nested(g31):
    with pytest.raises(ValueError):
        check_marginal_sum_bound(g31, {0}, {1})


@settings(max_examples=100, deadline=None)
@given(matrices_with_capacity(max_m=3, max_n=4), st.data())
def test_marginal_sum_bound_holds_on_submodular_games(case, data):
    g = to_general_game(*case)
    n = g.n_searchers
    b = data.draw(st.sets(st.integers(0, n - 1)))
    a = data.draw(st.sets(st.sampled_from(sorted(b)))) if b else set()
    assert check_marginal_sum_bound(g, a, b)


# -- core membership --------------------------------------------------------------------


@pytest.mark.parametrize(
    "x,expected",
    [((2, 2, 1), True), ((3, 2, 0), False), ((0, 0, 5), True), ((1, 1, 3), True), ((2.5, 2, 0.5), False)],
)
def test_core_examples(g31, x, expected):
    alloc = Allocation(x[:-1], x[-1])
    assert core_membership_bruteforce(g31, alloc) is expected
    assert core_membership_characterization(g31, alloc) is expected
    assert oracles.in_core(g31.blocks, 2, x[:-1], x[-1]) is expected


def test_budget_imbalance_fails(g31):
    assert not core_membership_bruteforce(g31, Allocation((1, 1), 2))


def test_characterization_refuses_non_submodular():
    with pytest.raises(NotSubmodularError):
        core_membership_characterization(complementarity_game(), Allocation((0, 0), 1))


def test_core_size_guard():
    with pytest.raises(GameTooLarge):
        core_membership_bruteforce(empty_game(21), Allocation((0,) * 21, 0))


def test_bruteforce_handles_n20():
    g = empty_game(20)
    assert core_membership_bruteforce(g, Allocation((0,) * 20, 0))


@settings(max_examples=80, deadline=None)
@given(matrices_with_capacity(max_m=3, max_n=4), st.integers(0, 2**32 - 1))
def test_characterization_equals_bruteforce(case, seed):
    g = to_general_game(*case)
    rng = np.random.default_rng(seed)
    for x in candidate_allocations(g, rng, k=20):
        expected = oracles.in_core(g.blocks, g.n_searchers, x.searcher_shares, x.validator_share)
        assert core_membership_bruteforce(g, x) is expected
        assert core_membership_characterization(g, x) is expected


# -- extreme points ------------------------------------------------------------------------


def test_searcher_optimal_examples(g31):
    assert searcher_optimal_allocation(g31).as_tuple() == (2.0, 2.0, 1.0)
    g = to_general_game(BundleMatrix([[2, 2], [1, 0]]))
    assert searcher_optimal_allocation(g).as_tuple() == (1.0, 0.0, 2.0)


def test_no_competition_gives_validator_nothing():
    g = to_general_game(BundleMatrix([[4, 0, 0], [0, 0, 1.5], [0, 2, 0]]))
    x = searcher_optimal_allocation(g)
    assert x.validator_share == 0.0
    assert x.searcher_shares == (4.0, 2.0, 1.5)


def test_validator_optimal_examples(g31):
    assert validator_optimal_allocation(g31).as_tuple() == (0.0, 0.0, 5.0)
    assert validator_optimal_allocation(empty_game(3)).as_tuple() == (0.0, 0.0, 0.0, 0.0)


def test_duplicated_bundles_collapse_core():
    g = to_general_game(BundleMatrix([[2, 2, 1], [0, 3, 3]]))
    assert searcher_optimal_allocation(g) == validator_optimal_allocation(g)


def test_searcher_optimal_refuses_non_submodular():
    with pytest.raises(NotSubmodularError):
        searcher_optimal_allocation(complementarity_game())


@settings(max_examples=60, deadline=None)
@given(matrices_with_capacity(max_m=3, max_n=4), st.floats(0, 1), st.integers(0, 2**32 - 1))
def test_core_interval_structure(case, lam, seed):
    g = to_general_game(*case)
    so = searcher_optimal_allocation(g)
    vo = validator_optimal_allocation(g)
    assert core_membership_bruteforce(g, so)
    assert core_membership_bruteforce(g, vo)
    marg = np.array([marginal_contribution(g, i) for i in range(g.n_searchers)])
    assert np.allclose(so.searcher_shares, marg, atol=1e-12)
    rng = np.random.default_rng(seed)
    shares = lam * np.array(so.searcher_shares) * rng.uniform(0.5, 1.5, g.n_searchers)
    shares = np.clip(shares, 0, marg)
    x = Allocation(tuple(shares), so.total - shares.sum())
    assert core_membership_bruteforce(g, x)


@settings(max_examples=60, deadline=None)
@given(matrices_with_capacity(max_m=3, max_n=4), st.data())
def test_coalition_value_monotone(case, data):
    g = to_general_game(*case)
    n = g.n_searchers
    s = data.draw(st.sets(st.integers(0, n - 1)))
    i = data.draw(st.integers(0, n - 1))
    assert coalition_value(g, s | {i}) >= coalition_value(g, s)


# -- serialization ------------------------------------------------------------------------


def test_game_round_trip(tmp_path, g31):
    path = tmp_path / "g.json"
    dump_game(g31, path)
    back = load_game(path)
    assert game_to_dict(back) == game_to_dict(g31)
    doc = json.loads(path.read_text())
    assert set(doc) == {"n_searchers", "blocks"}
    assert set(doc["blocks"][0]) == {"contributors", "searcher_values", "validator_value"}


def test_game_from_dict_adds_empty_block():
    g = game_from_dict({"n_searchers": 1, "blocks": [{"contributors": [0], "searcher_values": [7]}]})
    assert g.n_blocks == 2
    assert coalition_value(g, {0}) == 7.0


def test_malformed_game_document(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"n_searchers": 2,\n "blocks": [}')
    with pytest.raises(ValueError, match="line 2"):
        load_game(path)
    with pytest.raises(ValueError, match="malformed"):
        game_from_dict({"blocks": []})
