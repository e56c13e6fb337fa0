"""Model assembly tests across the three variants."""

import numpy as np
import pytest

from graphfuse.data import LabelVocab, Sentence, TokenVocab, make_batches
from graphfuse.errors import ConfigError
from graphfuse.model import ModelConfig, TokenClassifier
from graphfuse.rng import RngState


def build_world(variant="full", n_sents=4, seed=0, **cfg_kw):
    rng = RngState(seed)
    tokens = [f"t{i}" for i in range(12)]
    corpus = []
    for _ in range(n_sents):
        n = int(rng.integers(2, 6))
        toks = [tokens[int(i)] for i in rng.integers(0, 12, (n,))]
        labs = ["O" if int(x) == 0 else ("B-A" if int(x) == 1 else "B-B")
                for x in rng.integers(0, 3, (n,))]
        corpus.append(Sentence(toks, labs))
    tv = TokenVocab([t for s in corpus for t in s.tokens])
    lv = LabelVocab([l for s in corpus for l in s.labels] + ["B-A", "B-B"])
    cfg = ModelConfig(vocab_size=len(tv), n_labels=len(lv), d_emb=8, d=8,
                      gat_hidden=8, gat_heads=2, dec_heads=2, dropout=0.1,
                      variant=variant, max_len=16, **cfg_kw)
    model = TokenClassifier(cfg, tv, lv, RngState(seed + 100))
    batches = make_batches(corpus, 2, 16, tv, lv)
    return model, batches


class TestVariants:
    @pytest.mark.parametrize("variant", ["encoder", "gat", "full"])
    def test_forward_shapes(self, variant):
        model, batches = build_world(variant)
        for batch in batches:
            B, n = batch.token_ids.shape
            logits = model.forward(batch)
            assert logits.shape == (B, n, model.config.n_labels)

    def test_encoder_variant_has_no_graph_params(self):
        model, _ = build_world("encoder")
        names = list(model.parameters())
        assert not any(n.startswith(("gat.", "decoder.")) for n in names)

    def test_gat_variant_has_no_decoder(self):
        model, _ = build_world("gat")
        names = list(model.parameters())
        assert any(n.startswith("gat.") for n in names)
        assert not any(n.startswith("decoder.") for n in names)

    def test_full_has_all_stages(self):
        model, _ = build_world("full")
        names = list(model.parameters())
        for stem in ("encoder.", "gat.", "decoder.", "head."):
            assert any(n.startswith(stem) for n in names)

    def test_invalid_variant(self):
        with pytest.raises(ConfigError):
            ModelConfig(vocab_size=5, n_labels=3, variant="gatsby").validate()


class TestForwardBackward:
    @pytest.mark.parametrize("variant", ["encoder", "gat", "full"])
    def test_loss_finite_and_grads_populated(self, variant):
        model, batches = build_world(variant, seed=1)
        loss = model.loss(batches[0], RngState(7), training=True)
        assert np.isfinite(loss.item())
        loss.backward()
        for name, p in model.parameters().items():
            assert p.grad is not None, name
            assert np.all(np.isfinite(p.grad)), name

    def test_same_seed_same_loss(self):
        a, batches = build_world("full", seed=2)
        b, _ = build_world("full", seed=2)
        la = a.loss(batches[0], RngState(9), training=True).item()
        lb = b.loss(batches[0], RngState(9), training=True).item()
        assert la == lb

    def test_zero_grad_clears(self):
        model, batches = build_world("full", seed=3)
        model.loss(batches[0], RngState(1)).backward()
        model.zero_grad()
        assert all(p.grad is None for p in model.parameters().values())

    def test_predict_lengths_and_range(self):
        model, batches = build_world("full", seed=4)
        for batch in batches:
            preds = model.predict_batch(batch)
            assert [len(p) for p in preds] == batch.lengths
            flat = [i for row in preds for i in row]
            assert all(0 <= i < model.config.n_labels for i in flat)

    def test_gat_residual_flag_changes_output(self):
        model, batches = build_world("gat", seed=5)
        base = model.forward(batches[0]).data.copy()
        model.config.gat_residual = True
        bumped = model.forward(batches[0]).data
        assert not np.array_equal(base, bumped)

    def test_vocab_size_consistency_enforced(self):
        model, _ = build_world("full", seed=6)
        cfg = ModelConfig(vocab_size=999, n_labels=model.config.n_labels,
                          variant="full")
        with pytest.raises(ConfigError):
            TokenClassifier(cfg, model.token_vocab, model.label_vocab, RngState(0))
