"""Data-ingest tests: parsing, vocabularies, batching."""

import numpy as np
import pytest

from graphfuse.data import (IGNORE_ID, LabelVocab, Sentence, TokenVocab,
                            build_label_vocab, build_token_vocab,
                            make_batches, parse_conll, serialize_conll)
from graphfuse.errors import ConfigError, ContractError, ParseError
from graphfuse.rng import RngState

FIXTURE = """\
Hà_Nội B-LOC
là O
thủ_đô O

bệnh_nhân B-PATIENT_ID
số I-PATIENT_ID
91 I-PATIENT_ID

tôi O
ho B-SYMPTOM
"""


class TestParse:
    def test_single_token_sentence(self):
        corpus = parse_conll("Hà_Nội B-LOC\n")
        assert len(corpus) == 1
        assert corpus[0].tokens == ["Hà_Nội"]
        assert corpus[0].labels == ["B-LOC"]

    def test_empty_input(self):
        assert parse_conll("") == []
        assert parse_conll("\n\n\n") == []

    def test_fixture_round_trip(self):
        corpus = parse_conll(FIXTURE)
        assert [len(s) for s in corpus] == [3, 3, 2]
        assert serialize_conll(corpus) == FIXTURE

    def test_tab_separated_accepted(self):
        corpus = parse_conll("a\tB-X\nb\tO\n")
        assert corpus[0].labels == ["B-X", "O"]

    def test_ignore_label_accepted(self):
        corpus = parse_conll("sub O\nword -100\n")
        assert corpus[0].labels == ["O", "-100"]

    def test_field_count_error_carries_line_number(self):
        with pytest.raises(ParseError) as e:
            parse_conll("a O\nb\nc O\n")
        assert e.value.line == 2

    def test_bad_label_pattern(self):
        with pytest.raises(ParseError) as e:
            parse_conll("a O\nb X-LOC\n")
        assert e.value.line == 2

    def test_trailing_blank_lines_ignored(self):
        assert len(parse_conll("a O\n\n\n\n")) == 1

    def test_sentence_invariant(self):
        with pytest.raises(ContractError):
            Sentence(["a", "b"], ["O"])


class TestLabelVocab:
    def test_three_labels(self):
        corpus = parse_conll("a O\nb B-LOC\nc I-LOC\n")
        vocab = build_label_vocab(corpus)
        assert len(vocab) == 3
        assert vocab.encode("O") == 0

    def test_phoner_style_schema_size(self):
        # 10 entity types under BIO -> 20 labels plus O = 21
        types = ["PATIENT_ID", "PERSON_NAME", "AGE", "GENDER", "OCCUPATION",
                 "LOCATION", "ORGANIZATION", "SYMPTOM_AND_DISEASE",
                 "TRANSPORTATION", "DATE"]
        sents = [Sentence(["x", "y", "z"], [f"B-{t}", f"I-{t}", "O"])
                 for t in types]
        assert len(build_label_vocab(sents)) == 21

    def test_order_independence(self):
        corpus = parse_conll("a B-X\nb O\n\nc B-Y\nd I-Y\n")
        flipped = list(reversed(corpus))
        v1 = build_label_vocab(corpus)
        v2 = build_label_vocab(flipped)
        assert v1.label_to_id == v2.label_to_id

    def test_empty_corpus(self):
        with pytest.raises(ConfigError):
            build_label_vocab([])

    def test_ignore_label_never_real(self):
        corpus = parse_conll("a O\nb -100\n")
        vocab = build_label_vocab(corpus)
        assert "-100" not in vocab.label_to_id
        assert vocab.encode("-100") == IGNORE_ID
        assert vocab.decode(IGNORE_ID) == "-100"

    def test_unknown_label_rejected(self):
        vocab = build_label_vocab(parse_conll("a O\n"))
        with pytest.raises(ContractError):
            vocab.encode("B-NOPE")

    def test_json_round_trip(self):
        vocab = build_label_vocab(parse_conll("a B-X\nb O\nc I-X\n"))
        again = LabelVocab.from_json(vocab.to_json())
        assert again.label_to_id == vocab.label_to_id
        assert again.id_to_label == vocab.id_to_label


class TestTokenVocab:
    def test_reserved_ids(self):
        vocab = build_token_vocab(parse_conll("b O\na O\n"))
        assert vocab.pad_id == 0 and vocab.unk_id == 1
        assert len(vocab) == 4

    def test_unknown_maps_to_unk(self):
        vocab = build_token_vocab(parse_conll("a O\n"))
        assert vocab.encode("never-seen") == vocab.unk_id

    def test_json_round_trip(self):
        vocab = build_token_vocab(parse_conll("a O\nb O\n"))
        again = TokenVocab.from_json(vocab.to_json())
        assert again.token_to_id == vocab.token_to_id


class TestMakeBatches:
    def _small(self):
        corpus = parse_conll(FIXTURE) + parse_conll("x O\n\ny O\nz B-LOC\n")
        tv = build_token_vocab(corpus)
        lv = build_label_vocab(corpus)
        return corpus, tv, lv

    def test_batch_count_and_sizes(self):
        corpus, tv, lv = self._small()
        batches = make_batches(corpus, 2, 128, tv, lv)
        assert [b.size for b in batches] == [2, 2, 1]

    def test_truncation(self):
        corpus = [Sentence(["t"] * 200, ["O"] * 200)]
        tv = build_token_vocab(corpus)
        lv = build_label_vocab(corpus)
        (batch,) = make_batches(corpus, 16, 128, tv, lv)
        assert batch.lengths == [128]
        assert batch.token_ids.shape == (1, 128)

    def test_padding_carries_ignore_and_false_mask(self):
        corpus, tv, lv = self._small()
        for batch in make_batches(corpus, 3, 128, tv, lv):
            pad = ~batch.attention_mask
            assert np.all(batch.label_ids[pad] == IGNORE_ID)
            assert np.all(batch.token_ids[pad] == tv.pad_id)
            for i, n in enumerate(batch.lengths):
                assert batch.attention_mask[i, :n].all()
                assert np.all(batch.label_ids[i, :n] != IGNORE_ID)

    def test_total_length_preserved(self):
        corpus, tv, lv = self._small()
        batches = make_batches(corpus, 2, 128, tv, lv)
        assert sum(sum(b.lengths) for b in batches) == sum(len(s) for s in corpus)

    def test_shuffle_reproducible(self):
        corpus, tv, lv = self._small()
        a = make_batches(corpus, 2, 128, tv, lv, rng=RngState(3))
        b = make_batches(corpus, 2, 128, tv, lv, rng=RngState(3))
        for x, y in zip(a, b):
            assert x.token_ids.tobytes() == y.token_ids.tobytes()

    def test_invalid_sizes(self):
        corpus, tv, lv = self._small()
        with pytest.raises(ConfigError):
            make_batches(corpus, 0, 128, tv, lv)
        with pytest.raises(ConfigError):
            make_batches(corpus, 2, 0, tv, lv)
