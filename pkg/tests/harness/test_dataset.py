"""Tests for the toy scenes, the vocabulary and the dataset files."""

import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from scst_lab.config.settings import Settings
from scst_lab.exceptions import DatasetError
from scst_lab.harness.dataset import (
    SPLIT_FILES,
    GenerateDataset,
    gen_dataset,
    load_split,
    read_split,
)
from scst_lab.harness.grammar import (
    SLOTS,
    CaptionGrammar,
    encode_scene,
    feature_dim,
    random_scene,
)
from scst_lab.harness.types import ToyScene
from scst_lab.harness.vocab import EOS, UNK, Vocab

SCENE = ToyScene(object="dog", color="red", size="small", context="grass")


class TestGrammar:
    def test_feature_dim(self):
        assert feature_dim() == 19

    def test_spatial_mean_is_global(self):
        rng = np.random.default_rng(0)
        global_feats, spatial = encode_scene(SCENE, 9, rng)
        assert global_feats.sum() == len(SLOTS)
        assert spatial.shape == (9, 19)
        assert_allclose(spatial.mean(axis=0), global_feats)

    def test_each_slot_has_its_own_location(self):
        _, spatial = encode_scene(SCENE, 4, np.random.default_rng(1))
        assert ((spatial > 0).sum(axis=1) == 1).all()

    def test_too_few_locations(self):
        with pytest.raises(DatasetError, match="at least 4 locations"):
            encode_scene(SCENE, 3, np.random.default_rng(0))

    def test_captions_use_known_words(self):
        grammar = CaptionGrammar(refs_per_scene=3)
        rng = np.random.default_rng(2)
        vocab = grammar.vocabulary()
        for _ in range(20):
            refs = grammar.references(random_scene(rng), rng)
            assert len(refs) == 3
            assert all(set(ref) <= vocab for ref in refs)

    def test_needs_references(self):
        with pytest.raises(DatasetError):
            CaptionGrammar(refs_per_scene=0)


class TestVocab:
    def test_reserved_ids(self):
        vocab = Vocab(["dog"])
        assert vocab.words[:3] == ["<bos>", EOS, UNK]
        assert (vocab.bos_id, vocab.eos_id, vocab.unk_id) == (0, 1, 2)
        assert len(vocab) == 4

    def test_rare_words_map_to_unk(self):
        vocab = Vocab.build([["a", "dog"], ["a", "cat"]], min_count=2)
        assert vocab.words[3:] == ["a"]
        assert vocab.encode(["a", "dog"]) == [3, vocab.unk_id, vocab.eos_id]
        assert vocab.encode(["a"], add_eos=False) == [3]

    def test_decode_stops_at_eos(self):
        vocab = Vocab(["a", "dog"])
        assert vocab.decode([3, 4, 1, 3]) == ["a", "dog"]
        assert vocab.decode([3, 1, 99], strip_eos=False) == ["a", EOS, UNK]

    def test_reserved_words_rejected(self):
        with pytest.raises(DatasetError, match="Reserved"):
            Vocab(["dog", EOS])

    def test_duplicates_rejected(self):
        with pytest.raises(DatasetError, match="Duplicate"):
            Vocab(["dog", "dog"])

    def test_save_and_load(self, tmp_path):
        vocab = Vocab.build([["a", "dog"], ["a"]], min_count=1)
        path = tmp_path / "vocab.json"
        vocab.save(path)
        loaded = Vocab.load(path)
        assert loaded.words == vocab.words
        assert loaded.counts == {"a": 2, "dog": 1}

    def test_load_errors(self, tmp_path):
        with pytest.raises(DatasetError, match="not found"):
            Vocab.load(tmp_path / "missing.json")
        bad = tmp_path / "bad.json"
        bad.write_text('{"counts": {}}')
        with pytest.raises(DatasetError, match="Malformed"):
            Vocab.load(bad)


class TestGeneration:
    def test_same_seed_gives_identical_files(self, tmp_path):
        a = gen_dataset(tmp_path / "a", seed=11, n_train=8, n_val=3, n_test=3, min_count=1)
        b = gen_dataset(tmp_path / "b", seed=11, n_train=8, n_val=3, n_test=3, min_count=1)
        c = gen_dataset(tmp_path / "c", seed=12, n_train=8, n_val=3, n_test=3, min_count=1)
        names = [*SPLIT_FILES.values(), Settings.VOCAB_FILE]
        for name in names:
            assert (a / name).read_bytes() == (b / name).read_bytes()
        assert (a / Settings.TRAIN_FILE).read_bytes() != (c / Settings.TRAIN_FILE).read_bytes()

    def test_ids_are_unique_across_splits(self, tiny_dataset):
        ids = [
            ex.id for name in SPLIT_FILES.values() for ex in read_split(tiny_dataset / name)
        ]
        assert len(ids) == len(set(ids)) == 40 + 12 + 12

    def test_vocab_comes_from_train(self, tiny_dataset):
        vocab = Vocab.load(tiny_dataset / Settings.VOCAB_FILE)
        train_words = {
            w
            for ex in read_split(tiny_dataset / Settings.TRAIN_FILE)
            for ref in ex.references
            for w in ref
        }
        assert set(vocab.words[3:]) == train_words

    def test_empty_split_rejected(self, tmp_path):
        with pytest.raises(DatasetError):
            GenerateDataset(tmp_path, n_val=0, progress_enabled=False)


class TestLoading:
    def test_split_arrays(self, tiny_dataset):
        split = load_split(tiny_dataset, "train")
        assert len(split) == 40
        assert split.global_feats.shape == (40, 19)
        assert split.spatial_feats.shape == (40, Settings.N_LOCATIONS, 19)
        assert split.feature_dim == 19
        assert split.n_locations == Settings.N_LOCATIONS
        for refs in split.references:
            assert len(refs) == Settings.REFS_PER_SCENE
            assert all(ref[-1] == Vocab.eos_id for ref in refs)

    def test_unknown_split(self, tiny_dataset):
        with pytest.raises(DatasetError, match="Unknown split"):
            load_split(tiny_dataset, "dev")

    def test_missing_file(self, tmp_path):
        with pytest.raises(DatasetError, match="not found"):
            read_split(tmp_path / "nope.jsonl")

    def test_invalid_row_reports_line(self, tmp_path, tiny_dataset):
        good = (tiny_dataset / Settings.VAL_FILE).read_text().splitlines()[0]
        bad = json.loads(good)
        bad["references"] = []
        path = tmp_path / "split.jsonl"
        path.write_text(good + "\n" + json.dumps(bad) + "\n")
        with pytest.raises(DatasetError, match=":2"):
            read_split(path)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        path.write_text("\n")
        with pytest.raises(DatasetError, match="empty"):
            read_split(path)
