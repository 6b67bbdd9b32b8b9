import numpy as np
import pytest

from mra_lab import (
    AmbiguousStabilizerError,
    NotASubgroupError,
    ZeroDirectionError,
    decompose,
    increases_degree,
    make_group,
    recover_stabilizer,
    stabilizer,
)


def test_sign_flip_generic_theta():
    G = make_group("sign_flip", 2)
    rep = stabilizer(G, np.array([1.0, 0.0]))
    assert rep.members == (0,)
    assert np.array_equal(rep.projector, np.eye(2))
    assert rep.degree == 2
    assert rep.projector_rank == 2


def test_sign_flip_zero_theta():
    G = make_group("sign_flip", 2)
    rep = stabilizer(G, np.zeros(2))
    assert rep.members == (0, 1)
    assert np.array_equal(rep.projector, np.zeros((2, 2)))
    assert rep.degree == 1
    assert rep.projector_rank == 0


def test_diag_signs_partial_symmetry():
    G = make_group("diag_signs", 3)
    rep = stabilizer(G, np.array([2.0, 0.0, 5.0]))
    assert np.array_equal(rep.projector, np.diag([1.0, 0.0, 1.0]))
    assert rep.projector_rank == 2
    assert rep.degree == 4


def test_permutations_block_average():
    G = make_group("permutations", 3)
    rep = stabilizer(G, np.array([1.0, 1.0, 2.0]))
    # stabilizer: identity and the swap of the two equal coordinates
    assert rep.members == (0, 2)
    u = np.array([3.0, 7.0, -1.0])
    expected = np.array([5.0, 5.0, -1.0])
    assert np.allclose(rep.projector @ u, expected, atol=1e-14)
    assert rep.projector_rank == 2


def test_cyclic_period_two():
    G = make_group("cyclic", 4)
    rep = stabilizer(G, np.array([2.0, 0.5, 2.0, 0.5]))
    assert rep.members == (0, 2)
    direct = 0.5 * (G.elements[0] + G.elements[2])
    assert np.array_equal(rep.projector, direct)
    u = np.array([1.0, 2.0, 3.0, 4.0])
    assert np.allclose(rep.projector @ u, np.array([2.0, 3.0, 2.0, 3.0]), atol=1e-14)


def test_members_form_subgroup():
    for kind, d, theta in [
        ("diag_signs", 4, np.array([1.0, 0.0, 0.0, 2.0])),
        ("cyclic", 6, np.array([1.0, 2.0, 1.0, 2.0, 1.0, 2.0])),
        ("permutations", 4, np.array([1.0, 1.0, 2.0, 2.0])),
    ]:
        G = make_group(kind, d)
        rep = stabilizer(G, theta)
        members = set(rep.members)
        assert G.identity_index in members
        for i in members:
            assert G.invert(i) in members
            for j in members:
                assert G.compose(i, j) in members


def test_projector_is_orthogonal_projection():
    for kind, d, theta in [
        ("diag_signs", 3, np.array([2.0, 0.0, 5.0])),
        ("cyclic", 4, np.array([2.0, 0.5, 2.0, 0.5])),
        ("permutations", 3, np.array([1.0, 1.0, 2.0])),
        ("sign_flip", 2, np.zeros(2)),
    ]:
        G = make_group(kind, d)
        P = stabilizer(G, theta).projector
        assert np.abs(P - P.T).max() <= 1e-12
        assert np.abs(P @ P - P).max() <= 1e-10
        assert abs(np.trace(P) - round(np.trace(P))) <= 1e-9


def test_fixed_vector_characterization():
    # P u = u exactly when every member fixes u; members move anything else
    rng = np.random.default_rng(3)
    G = make_group("permutations", 4)
    rep = stabilizer(G, np.array([1.0, 1.0, 2.0, 2.0]))
    u = rng.standard_normal(4)
    proj = rep.projector @ u
    for h in rep.members:
        assert np.linalg.norm(G.apply(h, proj) - proj) <= 1e-10 * np.linalg.norm(u)
    fixed = np.array([3.0, 3.0, -1.0, -1.0])
    assert np.allclose(rep.projector @ fixed, fixed, atol=1e-14)


def test_coset_structure():
    G = make_group("diag_signs", 3)
    rep = stabilizer(G, np.array([2.0, 0.0, 5.0]))
    sizes = [len(block) for block in rep.cosets]
    assert all(s == len(rep.members) for s in sizes)
    flat = sorted(i for block in rep.cosets for i in block)
    assert flat == list(range(G.order))
    assert rep.degree * len(rep.members) == G.order
    # block average equals g times the projector, for any g in the block
    for block in rep.cosets:
        avg = G.elements[list(block)].mean(axis=0)
        for g in block:
            assert np.abs(avg - G.elements[g] @ rep.projector).max() <= 1e-12


def test_coset_action_on_split_vectors():
    G = make_group("cyclic", 4)
    rep = stabilizer(G, np.array([2.0, 0.5, 2.0, 0.5]))
    rng = np.random.default_rng(8)
    u = rng.standard_normal(4)
    v, w = decompose(u, rep)
    for block in rep.cosets:
        avg = G.elements[list(block)].mean(axis=0)
        g = block[0]
        assert np.linalg.norm(avg @ v - G.apply(g, v)) <= 1e-12
        assert np.linalg.norm(avg @ w) <= 1e-10 * max(np.linalg.norm(w), 1.0)


@pytest.mark.parametrize(
    "kind,d,theta,expected_rank",
    [
        # diag_signs: rank = d minus the number of zero coordinates
        ("diag_signs", 3, [2.0, 0.0, 5.0], 2),
        ("diag_signs", 4, [0.0, 0.0, 1.0, 3.0], 2),
        ("diag_signs", 3, [1.0, 2.0, 3.0], 3),
        # cyclic: rank = minimal period of theta
        ("cyclic", 4, [2.0, 0.5, 2.0, 0.5], 2),
        ("cyclic", 6, [1.0, 2.0, 3.0, 1.0, 2.0, 3.0], 3),
        ("cyclic", 4, [5.0, 5.0, 5.0, 5.0], 1),
        ("cyclic", 4, [3.0, 1.0, 0.0, 0.0], 4),
        # permutations: rank = number of distinct coordinate values
        ("permutations", 3, [1.0, 1.0, 2.0], 2),
        ("permutations", 4, [1.0, 1.0, 1.0, 1.0], 1),
        ("permutations", 4, [1.0, 2.0, 3.0, 4.0], 4),
    ],
)
def test_projector_rank_closed_forms(kind, d, theta, expected_rank):
    G = make_group(kind, d)
    rep = stabilizer(G, np.array(theta))
    assert rep.projector_rank == expected_rank


def test_decompose_examples():
    G = make_group("diag_signs", 3)
    rep = stabilizer(G, np.array([2.0, 0.0, 5.0]))
    u = np.array([3.0, 4.0, 5.0])
    v, w = decompose(u, rep)
    assert np.array_equal(v, np.array([3.0, 0.0, 5.0]))
    assert np.array_equal(w, np.array([0.0, 4.0, 0.0]))
    assert np.array_equal(v + w, u)
    assert abs(v @ w) <= 1e-10 * (u @ u)


def test_decompose_full_and_null_projectors():
    G = make_group("sign_flip", 2)
    rng = np.random.default_rng(2)
    u = rng.standard_normal(2)
    rep_full = stabilizer(G, np.array([1.0, 0.5]))
    v, w = decompose(u, rep_full)
    assert np.array_equal(v, u) and np.array_equal(w, np.zeros(2))
    rep_null = stabilizer(G, np.zeros(2))
    v, w = decompose(u, rep_null)
    assert np.array_equal(v, np.zeros(2)) and np.array_equal(w, u)


def test_increases_degree_examples():
    G = make_group("sign_flip", 2)
    rep_full = stabilizer(G, np.array([1.0, 0.5]))
    assert not increases_degree(np.array([0.3, -0.4]), rep_full)
    rep_null = stabilizer(G, np.zeros(2))
    assert increases_degree(np.array([0.3, -0.4]), rep_null)
    with pytest.raises(ZeroDirectionError):
        increases_degree(np.zeros(2), rep_null)


def test_increases_degree_matches_perturbed_degree():
    # cross-check against the degree of theta + t*u for small t
    cases = [
        ("diag_signs", 3, np.array([2.0, 0.0, 5.0])),
        ("cyclic", 4, np.array([2.0, 0.5, 2.0, 0.5])),
        ("permutations", 3, np.array([1.0, 1.0, 2.0])),
    ]
    rng = np.random.default_rng(17)
    for kind, d, theta in cases:
        G = make_group(kind, d)
        rep = stabilizer(G, theta)
        for _ in range(5):
            u = rng.standard_normal(d)
            perturbed = stabilizer(G, theta + 1e-3 * u)
            assert increases_degree(u, rep) == (perturbed.degree > rep.degree)


def test_recover_stabilizer():
    G = make_group("diag_signs", 2)
    theta_star = np.array([1.5, 0.0])
    exact = recover_stabilizer(theta_star, G, separation=1.0)
    assert exact == (0, 1)  # identity and the flip of the zero coordinate
    noisy = recover_stabilizer(np.array([1.49, 0.03]), G, separation=1.0)
    assert noisy == (0, 1)
    everything = recover_stabilizer(np.array([1.49, 0.03]), G, separation=1e9)
    assert everything == tuple(range(G.order))
    with pytest.raises(ValueError):
        recover_stabilizer(theta_star, G, separation=0.0)


def test_recover_stabilizer_guarantee_empirically():
    # estimates within separation/4 of the truth recover the true stabilizer
    G = make_group("diag_signs", 3)
    theta_star = np.array([2.0, 0.0, 5.0])
    truth = stabilizer(G, theta_star).members
    separation = min(
        np.linalg.norm(G.apply(g, theta_star) - theta_star)
        for g in range(G.order)
        if g not in truth
    )
    rng = np.random.default_rng(23)
    for _ in range(20):
        noise = rng.standard_normal(3)
        noise *= (separation / 4) * 0.99 * rng.random() / np.linalg.norm(noise)
        assert recover_stabilizer(theta_star + noise, G, separation) == truth


def test_ambiguous_stabilizer_raises():
    G = make_group("diag_signs", 2)
    with pytest.raises(AmbiguousStabilizerError):
        stabilizer(G, np.array([1.0, 5e-9]))


def test_not_a_subgroup_raises():
    # distances to the shifts of a nearly-constant vector straddle the
    # threshold: R and R^3 fall inside, their product R^2 outside
    G = make_group("cyclic", 4)
    theta = np.ones(4) + 1e-3 * np.array([2.0, 1.0, 0.0, 0.0])
    with pytest.raises(NotASubgroupError):
        stabilizer(G, theta, tol_rel=0.0, tol_abs=2.8e-3)


def test_report_json_round_trip():
    G = make_group("permutations", 3)
    rep = stabilizer(G, np.array([1.0, 1.0, 2.0]))
    doc = rep.to_json_dict()
    assert doc["members"] == [0, 2]
    assert doc["degree"] == 3
    P = np.array(doc["projector"]).reshape(3, 3)
    assert np.array_equal(P, rep.projector)
    assert sorted(i for block in doc["cosets"] for i in block) == list(range(6))
