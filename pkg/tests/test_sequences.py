import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import comb

from entspec import operators as ops
from entspec import sequences as sq
from entspec.errors import ResourceLimitError, ValidationError


def brute_spectrum(lam, n):
    out = np.ones(1)
    for _ in range(n):
        out = np.kron(out, lam)
    return np.sort(out)[::-1]


def test_iid_classes_n2():
    spec = sq.iid_sequence([0.75, 0.25]).spectrum(2)
    assert np.abs(spec.values - [0.5625, 0.1875, 0.0625]).max() < 1e-15
    assert spec.multiplicities == (1, 2, 1)


def test_iid_pure_and_uniform():
    spec = sq.iid_sequence([1.0]).spectrum(37)
    assert spec.size == 1 and spec.values[0] == 1.0 and spec.multiplicities == (1,)
    spec = sq.iid_sequence([0.5, 0.5]).spectrum(10)
    assert spec.size == 1 and spec.multiplicities == (1024,)
    assert abs(spec.values[0] - 2.0**-10) < 1e-18


def test_zero_eigenvalues_are_dropped():
    spec = sq.iid_sequence([0.6, 0.4, 0.0]).spectrum(3)
    assert spec.rank == 8


def test_structured_matches_brute_force():
    for lam in ([0.75, 0.25], [0.5, 0.3, 0.2], [0.4, 0.3, 0.2, 0.1]):
        for n in range(1, 7):
            spec = sq.iid_sequence(lam).spectrum(n)
            assert np.abs(spec.expand() - brute_spectrum(lam, n)).max() < 1e-15


def test_exact_multiplicities_sum_to_dimension():
    spec = sq.iid_sequence([0.5, 0.3, 0.2]).spectrum(120)
    assert sum(spec.multiplicities) == 3**120


def test_type_class_count():
    for d, n in [(2, 200), (3, 40), (4, 25)]:
        lam = np.arange(1, d + 1, dtype=float)
        spec = sq.iid_sequence(lam / lam.sum()).spectrum(n)
        assert spec.size == comb(n + d - 1, d - 1, exact=True)


def test_normalization_up_to_n500():
    for lam in ([0.75, 0.25], [0.9, 0.1], [0.5, 0.3, 0.2], [0.5, 0.25, 0.125, 0.125]):
        for n in (1, 50, 300, 500):
            spec = sq.iid_sequence(lam).spectrum(n)
            assert abs(spec.total_mass() - 1) < 1e-9
    # four distinct values hit the class cap beyond n ~ 300
    spec = sq.iid_sequence([0.4, 0.3, 0.2, 0.1]).spectrum(300)
    assert abs(spec.total_mass() - 1) < 1e-9
    mix = sq.mixture_sequence(sq.MixtureSpec((0.9, 0.1), (0.5, 0.5), 0.5))
    assert abs(mix.spectrum(500).total_mass() - 1) < 1e-9


def test_repeated_eigenvalues_merge_labels():
    spec = sq.iid_sequence([0.25, 0.25, 0.5]).spectrum(30)
    # two distinct values, so n + 1 classes
    assert spec.size == 31
    assert sum(spec.multiplicities) == 3**30


def test_mixture_single_copy_and_limits():
    mix = sq.mixture_sequence(sq.MixtureSpec((0.9, 0.1), (0.5, 0.5), 0.5))
    assert np.abs(mix.spectrum(1).values - [0.7, 0.3]).max() < 1e-15
    same = sq.mixture_sequence(sq.MixtureSpec((0.75, 0.25), (0.75, 0.25), 0.3)).spectrum(20)
    iid = sq.iid_sequence([0.75, 0.25]).spectrum(20)
    assert np.abs(same.values - iid.values).max() < 1e-15
    near = sq.mixture_sequence(sq.MixtureSpec((0.9, 0.1), (0.5, 0.5), 1 - 1e-15)).spectrum(8)
    lim = sq.iid_sequence([0.9, 0.1]).spectrum(8)
    assert np.abs(near.expand() - lim.expand()).max() < 1e-12


def test_mixture_matches_dense():
    sigma, omega, t = np.diag([0.9, 0.1]), np.diag([0.5, 0.5]), 0.5
    mix = sq.mixture_sequence(sq.MixtureSpec((0.9, 0.1), (0.5, 0.5), t))
    for n in range(1, 8):
        dense = t * ops.kron_power(sigma, n) + (1 - t) * ops.kron_power(omega, n)
        w = np.sort(np.linalg.eigvalsh(dense))[::-1]
        assert np.abs(mix.spectrum(n).expand() - w).max() < 1e-12
        assert np.abs(mix.dense(n) - dense).max() < 1e-15


def test_noncommuting_mixture_cap():
    rng = np.random.default_rng(4)
    seq = sq.noncommuting_mixture(ops.random_density(rng, 2), ops.random_density(rng, 2), 0.4, [1, 2, 3])
    assert abs(np.trace(seq.dense(3)) - 1) < 1e-12
    with pytest.raises(ResourceLimitError):
        sq.noncommuting_mixture(np.eye(2) / 2, np.eye(2) / 2, 0.5, [13])


def test_purify_examples():
    phi = sq.purify(sq.iid_sequence([0.5, 0.5])).state(1)
    assert abs(abs(phi.vector.conj() @ ops.maximally_entangled(2).vector) - 1) < 1e-12
    prod = sq.purify(sq.iid_sequence([1.0])).state(3)
    assert np.abs(ops.schmidt_spectrum(prod) - [1.0]).max() < 1e-12
    mix = sq.purify(sq.mixture_sequence(sq.MixtureSpec((0.9, 0.1), (0.5, 0.5), 0.5)))
    assert np.abs(ops.schmidt_spectrum(mix.state(1)) - [0.7, 0.3]).max() < 1e-12


def test_purify_partial_trace_roundtrip():
    rng = np.random.default_rng(9)
    bases = [sq.iid_sequence([0.75, 0.25]), sq.iid_sequence(ops.random_density(rng, 2)),
             sq.mixture_sequence(sq.MixtureSpec((0.9, 0.1), (0.5, 0.5), 0.5))]
    for base in bases:
        pure = sq.purify(base)
        for n in range(1, 7):
            state = pure.state(n)
            w = np.sort(np.linalg.eigvalsh(ops.partial_trace(state, "A")))[::-1]
            w = w[w > 1e-14]
            assert np.abs(w - base.spectrum(n).expand()).max() < 1e-10


def test_tail_sum_examples():
    u = sq.iid_sequence([0.5, 0.5]).spectrum(10)
    t = sq.tail_sum(u, 2.0**-11)
    assert abs(t.mass - 1) < 1e-15 and abs(t.count - 1024) < 1e-9
    assert sq.tail_sum(u, 2.0**-9).mass == 0.0
    t = sq.tail_sum(sq.iid_sequence([0.75, 0.25]).spectrum(2), 0.2)
    assert abs(t.mass - 0.5625) < 1e-15 and abs(t.excess - 0.3625) < 1e-15
    # ties count inside the tail
    t = sq.tail_sum(u, 2.0**-10)
    assert abs(t.mass - 1) < 1e-15 and abs(t.excess) < 1e-15
    with pytest.raises(ValidationError):
        sq.tail_sum(u, 0.0)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0.01, 1.0), min_size=2, max_size=4), st.integers(1, 60),
       st.floats(-4.0, 0.0), st.floats(0.0, 2.0))
def test_tail_sum_monotone_in_threshold(weights, n, log_c, step):
    lam = np.array(weights) / sum(weights)
    spec = sq.iid_sequence(lam).spectrum(n)
    lo = sq.tail_sum(spec, log_threshold=n * log_c)
    hi = sq.tail_sum(spec, log_threshold=n * log_c + step)
    assert hi.mass <= lo.mass + 1e-12
    assert hi.excess <= lo.excess + 1e-12
    assert hi.log_count <= lo.log_count + 1e-12


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.01, 1.0), min_size=2, max_size=3), st.integers(1, 8), st.floats(-3.0, 0.0))
def test_tail_sum_matches_brute_force(weights, n, log_c):
    lam = np.array(weights) / sum(weights)
    spec = sq.iid_sequence(lam).spectrum(n)
    vals = brute_spectrum(lam, n)
    c = math.exp(n * log_c)
    keep = vals >= c * (1 - 1e-12)
    t = sq.tail_sum(spec, log_threshold=n * log_c)
    assert abs(t.mass - vals[keep].sum()) < 1e-12
    assert abs(t.excess - (vals[keep] - c).sum()) < 1e-12
    assert abs(t.count - keep.sum()) < 1e-6


def test_compositions():
    comps = sq.compositions(4, 3)
    assert len(comps) == comb(6, 2, exact=True)
    assert all(c.sum() == 4 for c in comps)
    brute = sorted(c for c in itertools.product(range(5), repeat=3) if sum(c) == 4)
    assert sorted(map(tuple, comps.tolist())) == brute


def test_class_cap():
    lam = np.arange(1, 5, dtype=float)
    with pytest.raises(ResourceLimitError):
        sq.iid_sequence(lam / lam.sum()).spectrum(500)


def test_config_roundtrip():
    for cfg in ({"kind": "iid", "spectrum": [0.75, 0.25]},
                {"kind": "mixture", "sigma": [0.9, 0.1], "omega": [0.5, 0.5], "t": 0.5}):
        seq = sq.sequence_from_config(cfg)
        again = sq.sequence_from_config(seq.to_config())
        assert np.array_equal(seq.spectrum(9).values, again.spectrum(9).values)
    pure = sq.sequence_from_config({"kind": "purified", "of": {"kind": "iid", "spectrum": [0.5, 0.5]}})
    assert pure.state(2).dims == (4, 4)
    dense = sq.sequence_from_config({"kind": "dense_list", "states": {"1": [[1, 0], [0, 0]]}})
    assert dense.dense(1)[0, 0] == 1


def test_config_errors():
    with pytest.raises(ValidationError):
        sq.sequence_from_config({"kind": "iid", "spectrum": [0.5, 0.6]})
    with pytest.raises(ValidationError):
        sq.sequence_from_config({"kind": "iid", "spectrum": [1.2, -0.2]})
    with pytest.raises(ValidationError):
        sq.sequence_from_config({"kind": "ergodic"})
    with pytest.raises(ValidationError):
        sq.MixtureSpec((0.9, 0.1), (0.5, 0.5), 1.5)


def test_structured_from_values_validates_mass():
    with pytest.raises(ValidationError):
        sq.StructuredSpectrum.from_values([0.5, 0.4])
    spec = sq.StructuredSpectrum.from_values([0.25, 0.5, 0.25])
    assert np.array_equal(spec.values, [0.5, 0.25]) and spec.multiplicities == (1, 2)
