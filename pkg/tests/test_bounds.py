import math

import numpy as np
import pytest

from entspec import bounds as bnd
from entspec import concentration as conc
from entspec import operators as ops
from entspec import sequences as sq
from entspec.errors import ValidationError

H = -(0.75 * math.log(0.75) + 0.25 * math.log(0.25))
PHI2 = ops.maximally_entangled(2)


def test_coherent_bell_state():
    # I (x) rho_B = I/2, so Pi = Phi+ - I/2 has positive part 1/2
    r = bnd.coherent_fidelity_bound(PHI2.density(), (2, 2), 0.0, 2)
    assert abs(r.term_projection - 0.5) < 1e-12 and abs(r.term_rank - 0.5) < 1e-12
    assert abs(r.total - 1.0) < 1e-12 and r.vacuous


def test_coherent_maximally_mixed():
    for d in (2, 3):
        for m in (1, 2, 5):
            r = bnd.coherent_fidelity_bound(np.eye(d * d) / d**2, (d, d), 0.0, m)
            assert r.term_projection == 0 and abs(r.total - 1 / m) < 1e-12


def test_coherent_large_gamma():
    r = bnd.coherent_fidelity_bound(PHI2.density(), (2, 2), 5.0, 2)
    assert r.term_projection == 0 and r.vacuous and r.term_rank > 50


def test_relent_examples():
    r = bnd.relent_fidelity_bound(PHI2.density(), np.eye(4) / 4, 0.0, 2)
    assert abs(r.term_projection - 0.75) < 1e-12 and abs(r.total - 1.25) < 1e-9
    g = math.log(4)
    r = bnd.relent_fidelity_bound(PHI2.density(), np.eye(4) / 4, g, 16, 1)
    assert r.term_projection < 1e-12 and abs(r.term_rank - 0.25) < 1e-12


def test_relent_separable_equals_one_over_m():
    for seed in range(100):
        rng = np.random.default_rng(seed)
        d = int(rng.integers(2, 4))
        sigma = ops.random_separable(rng, d)
        m = int(rng.integers(1, 9))
        r = bnd.relent_fidelity_bound(sigma, sigma, 0.0, m)
        assert abs(r.total - 1 / m) < 1e-12


def test_terms_nonnegative_and_total():
    rng = np.random.default_rng(3)
    for _ in range(20):
        rho = ops.random_density(rng, 4)
        r = bnd.coherent_fidelity_bound(rho, (2, 2), float(rng.uniform(-1, 1)), 3)
        assert r.term_projection >= -1e-9 and r.term_rank >= 0
        assert abs(r.total - (r.term_projection + r.term_rank)) < 1e-12


def test_monotone_tradeoff():
    rng = np.random.default_rng(5)
    rho, sigma = ops.random_density(rng, 4), ops.random_separable(rng, 2)
    proj, rank = [], []
    for g in np.linspace(-1, 2, 31):
        r = bnd.relent_fidelity_bound(rho, sigma, g, 4, 1)
        proj.append(r.term_projection)
        rank.append(r.term_rank)
    assert np.all(np.diff(proj) <= 1e-12) and np.all(np.diff(rank) > 0)


def test_bound_holds_for_concentration_output():
    seq = sq.iid_sequence([0.75, 0.25])
    pure = sq.purify(seq)
    checked = 0
    for n in range(1, 9):
        for gamma in (0.3, H - 0.05):
            try:
                out = conc.concentrate_state(pure.state(n), gamma, n)
            except conc.ProtocolAborted:
                continue
            if out.M * out.M > 4096 or not out.majorization_ok:
                continue
            realized = ops.maximally_entangled(out.M)
            g = math.log(out.M) / n - 0.05
            r = bnd.coherent_fidelity_bound(realized.density(), realized.dims, g, out.M, n)
            assert r.total >= ops.overlap_fidelity(realized.density(), realized) - 1e-12
            checked += 1
    assert checked > 5


def test_data_processing_on_projection_term():
    rng = np.random.default_rng(17)
    for _ in range(20):
        rho, sigma = ops.random_density(rng, 4), ops.random_separable(rng, 2)
        kraus = ops.random_kraus_map(rng, 4, 2)
        g = float(rng.uniform(-0.5, 1.0))
        before = bnd.relent_fidelity_bound(rho, sigma, g, 2).term_projection
        after = bnd.relent_fidelity_bound(ops.apply_kraus(kraus, rho), ops.apply_kraus(kraus, sigma), g, 2)
        assert after.term_projection <= before + 1e-9


def test_best_and_worst_reducers():
    state = sq.purify(sq.iid_sequence([0.75, 0.25])).state(2)
    cands = bnd.natural_candidates(state)
    best = bnd.best_relent_bound(state.density(), cands, 0.3, 4, 2)
    each = [bnd.relent_fidelity_bound(state.density(), s, 0.3, 4, 2).total for s in cands.values()]
    assert abs(best.total - min(each)) < 1e-15 and best.label in cands
    rng = np.random.default_rng(0)
    maps = {"identity": [np.eye(16)], "random": ops.random_kraus_map(rng, 16, 2)}
    worst = bnd.worst_coherent_bound(state.density(), (4, 4), maps, 0.1, 4, 2)
    each = [bnd.coherent_fidelity_bound(ops.apply_kraus(k, state.density()), (4, 4), 0.1, 4, 2).total
            for k in maps.values()]
    assert abs(worst.total - max(each)) < 1e-15
    with pytest.raises(ValidationError):
        bnd.best_relent_bound(state.density(), [], 0.0, 2)


def test_natural_candidates_track_entropy_and_mutual_information():
    rho0 = [0.75, 0.25]
    pure = sq.purify(sq.iid_sequence(rho0))
    low, high = [], []
    for n in range(1, 5):
        st = pure.state(n)
        c = bnd.natural_candidates(st)
        # below S the dephased reference leaves the projection term growing
        low.append(bnd.relent_fidelity_bound(st.density(), c["schmidt_dephased"], H - 0.3, 2, n).term_projection)
        # far above the mutual information 2S the product reference term shrinks
        high.append(bnd.relent_fidelity_bound(st.density(), c["product_of_marginals"], 2 * H + 0.3, 2, n)
                    .term_projection)
    assert np.all(np.diff(low) > 0) and np.all(np.diff(high[1:]) < 0)
    for s in bnd.natural_candidates(pure.state(2)).values():
        assert abs(np.trace(s) - 1) < 1e-12 and np.linalg.eigvalsh(s).min() > -1e-12


def test_dense_coding_capacity():
    assert abs(bnd.dense_coding_capacity(0.0, 2) - 0.693147) < 1e-6
    assert abs(bnd.dense_coding_capacity(math.log(2), 2) - 1.386294) < 1e-6
    assert abs(bnd.dense_coding_capacity(0.325083, 2) - 1.018230) < 1e-6
    with pytest.raises(ValidationError):
        bnd.dense_coding_capacity(0.1, 1)
    with pytest.raises(ValidationError):
        bnd.dense_coding_capacity(-0.1, 2)


def test_separable_from_json():
    a = ops.matrix_to_json(np.diag([1.0, 0.0]))
    b = ops.matrix_to_json(np.eye(2) / 2)
    sigma = bnd.separable_from_json({"weights": [0.5, 0.5], "factors": [[a, b], [b, a]]})
    expect = 0.5 * np.kron(np.diag([1, 0]), np.eye(2) / 2) + 0.5 * np.kron(np.eye(2) / 2, np.diag([1, 0]))
    assert np.abs(sigma - expect).max() < 1e-15
    with pytest.raises(ValidationError):
        bnd.separable_from_json({"weights": [1.0]})
    with pytest.raises(ValidationError):
        bnd.separable_from_factors([0.7, 0.7], [(np.eye(2) / 2, np.eye(2) / 2)] * 2)
