"""Tests for greedy, beam and ensemble decoding."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from scst_lab.decode.decoders import EnsembleDecoder, average_posteriors, member_features
from scst_lab.decode.ensemble import ensemble_decode
from scst_lab.decode.search import beam_search, greedy_decode, prune_live
from scst_lab.decode.types import BeamConfig, Hypothesis
from scst_lab.exceptions import UsageError
from scst_lab.models.rollout import pad_sequences, rollout
from scst_lab.models.types import Architecture, RolloutMode
from scst_lab.rl.exact import enumerate_sequences

EXHAUSTIVE = BeamConfig(width=1, prune_margin=math.inf)


class TestGreedy:
    def test_uniform_picks_lowest_ids(self, zero_model, make_features):
        hyps = greedy_decode(zero_model, make_features(zero_model, 2))
        for h in hyps:
            assert h.tokens == (0, 0, 0, 0)
            assert h.finished
            assert h.logprob == pytest.approx(-4 * math.log(6))

    @pytest.mark.parametrize("arch", list(Architecture))
    def test_matches_greedy_rollout(self, make_model, make_features, arch):
        model = make_model(arch, init_scale=1.0)
        feats = make_features(model, 5)
        hyps = greedy_decode(model, feats)
        record = rollout(model, feats, RolloutMode.GREEDY)
        assert [list(h.tokens) for h in hyps] == record.sequences()
        assert_allclose([h.logprob for h in hyps], record.sequence_logprob(), atol=1e-12)

    def test_width_one_beam_equals_greedy(self, make_model, make_features):
        model = make_model(Architecture.ATT2ALL, init_scale=1.0)
        feats = make_features(model, 6)
        greedy = greedy_decode(model, feats)
        beams = beam_search(model, feats, EXHAUSTIVE)
        for g, hyps in zip(greedy, beams, strict=True):
            assert hyps[0].tokens == g.tokens
            assert hyps[0].logprob == pytest.approx(g.logprob, abs=1e-12)


class TestBeam:
    def test_uniform_ranking(self, zero_model, make_features):
        """Shortest sentences win under a uniform posterior: EOS first, then 0 EOS."""
        results = beam_search(
            zero_model, make_features(zero_model, 1), BeamConfig(width=2, prune_margin=math.inf)
        )
        assert [h.tokens for h in results[0]] == [(1,), (0, 1)]

    def test_sorted_and_bounded(self, make_model, make_features):
        model = make_model(init_scale=1.0)
        for hyps in beam_search(model, make_features(model, 4), BeamConfig(width=3)):
            assert 1 <= len(hyps) <= 3
            scores = [h.logprob for h in hyps]
            assert scores == sorted(scores, reverse=True)
            assert all(h.finished for h in hyps)

    def test_exhaustive_width_finds_map(self, make_model, make_features):
        """With width V^T and no pruning the best hypothesis is the exact MAP."""
        model = make_model(init_scale=1.5, seed=3, vocab_size=5, max_length=4)
        feats = make_features(model, 1, seed=8)
        seqs = enumerate_sequences(5, 4, model.cfg.eos_id)
        record = rollout(
            model,
            np.repeat(feats, len(seqs), axis=0),
            RolloutMode.TEACHER,
            refs=pad_sequences(seqs, 4, model.cfg.eos_id),
        )
        logp = record.sequence_logprob()
        best = int(np.argmax(logp))

        hyps = beam_search(model, feats, BeamConfig(width=5**4, prune_margin=math.inf))[0]
        assert list(hyps[0].tokens) == seqs[best]
        assert hyps[0].logprob == pytest.approx(logp[best], abs=1e-10)

    @pytest.mark.parametrize("width", [1, 2, 3, 5])
    @pytest.mark.parametrize("seed", range(4))
    @pytest.mark.parametrize("arch", list(Architecture))
    def test_never_below_greedy(self, make_model, make_features, width, seed, arch):
        """With two decoding steps the greedy path always survives into the final ranking."""
        model = make_model(arch, seed=seed, init_scale=1.5, vocab_size=5, max_length=2)
        feats = make_features(model, 8, seed=seed)
        greedy = greedy_decode(model, feats)
        beams = beam_search(model, feats, BeamConfig(width=width))
        for g, hyps in zip(greedy, beams, strict=True):
            assert hyps[0].logprob >= g.logprob - 1e-12

    def test_max_length_override(self, make_model, make_features):
        model = make_model(init_scale=1.0)
        cfg = BeamConfig(width=2, prune_margin=math.inf, max_length=2)
        for hyps in beam_search(model, make_features(model, 3), cfg):
            assert all(len(h.tokens) <= 2 for h in hyps)


class TestPruning:
    def test_margin_boundary(self):
        """A hypothesis exactly the margin below the best is kept."""
        live = [Hypothesis(logprob=0.0), Hypothesis(logprob=-5.0), Hypothesis(logprob=-5.0001)]
        kept = prune_live(live, 5.0)
        assert [h.logprob for h in kept] == [0.0, -5.0]

    def test_empty(self):
        assert prune_live([], 5.0) == []

    def test_config_validation(self):
        with pytest.raises(ValueError):
            BeamConfig(width=0)
        with pytest.raises(ValueError):
            BeamConfig(prune_margin=0.0)


class TestEnsemble:
    def test_average_of_opposite_posteriors(self):
        logp = average_posteriors([np.log([[0.9, 0.1]]), np.log([[0.1, 0.9]])])
        assert_allclose(np.exp(logp), [[0.5, 0.5]])
        assert int(logp.argmax(axis=1)[0]) == 0

    def test_zero_probability_stays_finite(self):
        logp = average_posteriors([np.array([[0.0, -np.inf]])])
        assert np.isfinite(logp).all()

    def test_single_member_equals_model(self, make_model, make_features):
        model = make_model(Architecture.ATT2IN, init_scale=1.0)
        feats = make_features(model, 3)
        cfg = BeamConfig(width=3)
        alone = beam_search(model, feats, cfg)
        ensembled = ensemble_decode([model], [feats], cfg)
        for a, e in zip(alone, ensembled, strict=True):
            assert [h.tokens for h in a] == [h.tokens for h in e]
            assert_allclose([h.logprob for h in a], [h.logprob for h in e], atol=1e-12)

    def test_identical_members_equal_model(self, make_model, make_features):
        model = make_model(init_scale=1.0)
        twin = make_model(init_scale=1.0)
        feats = make_features(model, 3)
        greedy = greedy_decode(model, feats)
        ensembled = ensemble_decode([model, twin], [feats, feats], BeamConfig(width=1))
        assert [h.tokens for h in greedy] == [hyps[0].tokens for hyps in ensembled]

    def test_mixed_architectures(self, make_model):
        fc = make_model(Architecture.FC)
        att = make_model(Architecture.ATT2ALL)
        rng = np.random.default_rng(0)
        global_feats = rng.normal(size=(2, 5))
        spatial = rng.normal(size=(2, 3, 5))
        feats = member_features([fc, att], global_feats, spatial)
        assert feats[0] is global_feats and feats[1] is spatial
        results = ensemble_decode([fc, att], feats, BeamConfig(width=2))
        assert len(results) == 2

    def test_vocab_mismatch(self, make_model):
        with pytest.raises(UsageError, match="vocabulary mismatch"):
            EnsembleDecoder([make_model(), make_model(vocab_size=7)])
        with pytest.raises(UsageError, match="length cap"):
            EnsembleDecoder([make_model(), make_model(max_length=5)])

    def test_empty(self):
        with pytest.raises(UsageError):
            EnsembleDecoder([])
