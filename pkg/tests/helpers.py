"""Small builders shared by the test modules."""

import numpy as np

from graphfuse.data import IGNORE_ID, Batch
from graphfuse.rng import RngState


def toy_batch(lengths, vocab_size, n_labels=3, seed=0, n_max=None,
              reserve_low_ids=2):
    """Random padded batch with the given true lengths."""
    rng = RngState(seed)
    n_max = n_max or max(lengths)
    B = len(lengths)
    token_ids = np.zeros((B, n_max), dtype=np.int64)
    mask = np.zeros((B, n_max), dtype=bool)
    label_ids = np.full((B, n_max), IGNORE_ID, dtype=np.int64)
    for b, n in enumerate(lengths):
        token_ids[b, :n] = rng.integers(reserve_low_ids, vocab_size, (n,))
        mask[b, :n] = True
        label_ids[b, :n] = rng.integers(0, n_labels, (n,))
    return Batch(token_ids, mask, label_ids, list(lengths))
