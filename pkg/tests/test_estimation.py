"""Probe sampling, empirical laws, and the plug-in estimator."""

from collections import Counter

import pytest

import treetomo.estimation as estimation
from treetomo import (
    INNER,
    OUTER,
    TransitionKernel,
    WalkStream,
    collect_batch,
    consistency_curve,
    default_augmented_kernel,
    empirical_joint,
    estimate_kernel,
    first_hitting_joint,
    recover_all,
    sample_walk,
)
from treetomo.errors import InvalidParameter
from treetomo.estimation import _u01, _u01_vec, _walk_base, _walk_base_vec
from treetomo.tree_model import segment, spherical_augmentation, star

from helpers import known_part, rand_instance

import numpy as np


def star_fixture(p01=0.3):
    aug = spherical_augmentation(star(1, 2), 2)
    base = TransitionKernel({0: {1: p01, 2: 1 - p01}}, {0: "unknown"}, "float")
    return aug, default_augmented_kernel(aug, base)


def segment_fixture():
    aug = spherical_augmentation(segment(0, 1), 2)
    base = TransitionKernel({0: {1: 1.0}}, {0: "unknown"}, "float")
    kernel = default_augmented_kernel(aug, base)
    kernel.entries[1] = {0: 0.3, 2: 0.7}
    kernel.provenance[1] = "unknown"
    return aug, kernel


class TestCounterStream:
    def test_scalar_vector_agree(self):
        walks = np.arange(50, dtype=np.uint64)
        bases = _walk_base_vec(123, walks)
        for step in (0, 1, 7, 63):
            vec = _u01_vec(bases, step)
            for i in range(50):
                assert vec[i] == _u01(_walk_base(123, i), step)

    def test_uniform_range(self):
        vals = [_u01(_walk_base(9, i), t) for i in range(200) for t in range(4)]
        assert all(0 <= v < 1 for v in vals)
        assert 0.45 < sum(vals) / len(vals) < 0.55


class TestSampleWalk:
    def test_unique_boundary_pair(self):
        # the walk may bounce below the inner layer after tau_in, so the gap
        # to tau_out is any positive odd number, not always one
        aug, kernel = segment_fixture()
        for i in range(50):
            s = sample_walk(aug, kernel, WalkStream(5, i))
            assert (s.place_in, s.place_out) == (2, 3)
            assert s.tau_out > s.tau_in
            assert (s.tau_out - s.tau_in) % 2 == 1
            assert s.tau_in >= 2

    def test_parity(self):
        aug, kernel = star_fixture()
        r = aug.hull_radius
        for i in range(80):
            s = sample_walk(aug, kernel, WalkStream(1, i))
            assert s.tau_in < s.tau_out
            assert (s.tau_in - (r + 1)) % 2 == 0
            assert (s.tau_out - (r + 2)) % 2 == 0

    def test_replay(self):
        aug, kernel = star_fixture()
        a = sample_walk(aug, kernel, WalkStream(7, 3))
        b = sample_walk(aug, kernel, WalkStream(7, 3))
        assert a == b


class TestCollectBatch:
    def test_matches_scalar_walks(self):
        aug, kernel = star_fixture()
        batch = collect_batch(aug, kernel, 400, seed=42)
        cin, cout = Counter(), Counter()
        overflow = 0
        for i in range(400):
            s = sample_walk(aug, kernel, WalkStream(42, i))
            if s.tau_out <= batch.t_cap:
                cin[(s.tau_in, s.place_in)] += 1
                cout[(s.tau_out, s.place_out)] += 1
            else:
                overflow += 1
        assert batch.counts_in == dict(cin)
        assert batch.counts_out == dict(cout)
        assert batch.overflow == overflow

    def test_worker_and_chunk_invariance(self, monkeypatch):
        aug, kernel = star_fixture()
        ref = collect_batch(aug, kernel, 2000, seed=7, workers=1)
        par = collect_batch(aug, kernel, 2000, seed=7, workers=8)
        monkeypatch.setattr(estimation, "CHUNK", 257)
        chunked = collect_batch(aug, kernel, 2000, seed=7, workers=3)
        for other in (par, chunked):
            assert other.counts_in == ref.counts_in
            assert other.counts_out == ref.counts_out
            assert other.overflow == ref.overflow

    def test_counts_balance(self):
        aug, kernel = star_fixture()
        batch = collect_batch(aug, kernel, 1500, seed=3)
        assert sum(batch.counts_out.values()) + batch.overflow == 1500
        assert sum(batch.counts_in.values()) >= sum(batch.counts_out.values())

    def test_bad_parameters(self):
        aug, kernel = star_fixture()
        with pytest.raises(InvalidParameter):
            collect_batch(aug, kernel, 0, seed=1)
        with pytest.raises(InvalidParameter):
            collect_batch(aug, kernel, 10, seed=1, workers=0)

    def test_empirical_close_to_exact(self):
        # binomial error at n = 1e5 is about 0.0014; 0.01 is a 7 sigma bound
        aug, kernel = star_fixture(p01=0.5)
        batch = collect_batch(aug, kernel, 100_000, seed=11)
        p_in, _ = empirical_joint(batch, batch.t_cap)
        for v in (3, 4):
            assert abs(p_in.prob(2, v) - 0.25) < 0.01


class TestEmpiricalJoint:
    def test_counts_over_n(self):
        aug, kernel = star_fixture()
        batch = collect_batch(aug, kernel, 1000, seed=2)
        p_in, p_out = empirical_joint(batch, batch.t_cap)
        some_cell = next(iter(batch.counts_in))
        assert p_in.prob(*some_cell) == batch.counts_in[some_cell] / 1000
        assert float(p_out.total()) <= 1.0 + 1e-12

    def test_invariants(self):
        aug, kernel = star_fixture()
        norm = aug.full.norm
        batch = collect_batch(aug, kernel, 5000, seed=9)
        p_in, p_out = empirical_joint(batch, batch.t_cap)
        for dist, layer in ((p_in, aug.inner_layer), (p_out, aug.outer_layer)):
            for (t, v), mass in dist.mass.items():
                assert v in layer
                assert mass > 0
                assert t >= norm[v] and (t - norm[v]) % 2 == 0

    def test_t_max_guard(self):
        aug, kernel = star_fixture()
        batch = collect_batch(aug, kernel, 100, seed=2)
        with pytest.raises(InvalidParameter):
            empirical_joint(batch, batch.t_cap + 1)


class TestEstimateKernel:
    def test_population_limit_is_exact_recovery(self):
        # feeding analytic laws through the clamped path changes nothing
        for seed in range(6):
            aug, kernel = rand_instance(seed, rout=1 + seed % 3)
            t_max = 3 * aug.hull_radius + 4
            p_in = first_hitting_joint(aug, kernel, INNER, t_max)
            p_out = first_hitting_joint(aug, kernel, OUTER, t_max)
            strict = recover_all(aug, known_part(kernel), p_in, p_out)
            clamped = recover_all(aug, known_part(kernel), p_in, p_out, clamp=True)
            assert not clamped.flags
            for u, flag in strict.kernel.provenance.items():
                if flag != "recovered":
                    continue
                for v, p in strict.kernel.entries[u].items():
                    assert abs(p - clamped.kernel.entries[u][v]) < 1e-12

    def test_star_estimate_converges(self):
        aug, kernel = star_fixture()
        batch = collect_batch(aug, kernel, 100_000, seed=1)
        rep = estimate_kernel(aug, known_part(kernel), batch, reference=kernel)
        assert float(rep.max_error) < 0.05

    def test_sparse_batch_flagged_or_insufficient(self):
        from treetomo.errors import InsufficientData

        aug, kernel = star_fixture()
        batch = collect_batch(aug, kernel, 10, seed=4)
        try:
            rep = estimate_kernel(aug, known_part(kernel), batch, reference=kernel)
            assert rep.flags or float(rep.max_error) > 0.05
        except InsufficientData:
            pass

    def test_horizon_precondition(self):
        aug, kernel = star_fixture()
        batch = collect_batch(aug, kernel, 100, seed=4, t_cap=6)
        with pytest.raises(InvalidParameter):
            estimate_kernel(aug, known_part(kernel), batch)


class TestConsistencyCurve:
    def test_reproducible_rows(self):
        aug, kernel = star_fixture()
        a = consistency_curve(aug, kernel, [2000], [1, 2])
        b = consistency_curve(aug, kernel, [2000], [1, 2])
        assert a == b

    def test_error_shrinks(self):
        import statistics

        aug, kernel = star_fixture()
        rows = consistency_curve(aug, kernel, [1000, 30000], [1, 2, 3])
        med_small = statistics.median(e for n, _, e in rows if n == 1000)
        med_big = statistics.median(e for n, _, e in rows if n == 30000)
        assert med_big < med_small
