"""CoNLL ingest, vocabularies, and padded/masked batch construction.

File format: two whitespace-delimited columns (token, BIO label), blank line
between sentences, UTF-8. The literal label ``-100`` is accepted on input and
carries the ignore convention through to the loss.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ContractError, ParseError
from .rng import RngState

IGNORE_LABEL = "-100"
IGNORE_ID = -100
PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"

_LABEL_RE = re.compile(r"^(O|-100|[BI]-\S+)$")


@dataclass
class Sentence:
    tokens: list[str]
    labels: list[str]

    def __post_init__(self):
        if len(self.tokens) != len(self.labels):
            raise ContractError(
                f"{len(self.tokens)} tokens vs {len(self.labels)} labels")

    def __len__(self) -> int:
        return len(self.tokens)


Corpus = list[Sentence]


def parse_conll(text: str) -> Corpus:
    """Parse two-column CoNLL text into sentences.

    Raises ParseError (with the 1-based line number) on a line that does not
    split into exactly two fields or whose label is not O / B-T / I-T / -100.
    """
    sentences: Corpus = []
    tokens: list[str] = []
    labels: list[str] = []
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line:
            if tokens:
                sentences.append(Sentence(tokens, labels))
                tokens, labels = [], []
            continue
        fields = line.split()
        if len(fields) != 2:
            raise ParseError(f"expected 'token label', got {len(fields)} "
                             f"fields in {raw!r}", line=lineno)
        token, label = fields
        if not _LABEL_RE.match(label):
            raise ParseError(f"label {label!r} is not O, B-TYPE, I-TYPE or "
                             f"{IGNORE_LABEL}", line=lineno)
        tokens.append(token)
        labels.append(label)
    if tokens:
        sentences.append(Sentence(tokens, labels))
    return sentences


def serialize_conll(corpus: Corpus) -> str:
    """Inverse of parse_conll on normalized files (single-space, one blank)."""
    blocks = ["\n".join(f"{t} {l}" for t, l in zip(s.tokens, s.labels))
              for s in corpus]
    return "\n\n".join(blocks) + "\n" if blocks else ""


class LabelVocab:
    """Bijective label <-> id map. O is always id 0; -100 stays -100.

    Ids are assigned in sorted order after O so the mapping depends only on
    the label *set*, never on sentence order.
    """

    def __init__(self, labels: list[str]):
        ordered = ["O"] + sorted(l for l in set(labels) if l not in ("O", IGNORE_LABEL))
        self.id_to_label: list[str] = ordered
        self.label_to_id: dict[str, int] = {l: i for i, l in enumerate(ordered)}
        self.ignore_id = IGNORE_ID

    def __len__(self) -> int:
        return len(self.id_to_label)

    def encode(self, label: str) -> int:
        if label == IGNORE_LABEL:
            return IGNORE_ID
        try:
            return self.label_to_id[label]
        except KeyError:
            raise ContractError(f"unknown label {label!r}") from None

    def decode(self, idx: int) -> str:
        if idx == IGNORE_ID:
            return IGNORE_LABEL
        return self.id_to_label[idx]

    def to_json(self) -> str:
        return json.dumps(self.label_to_id, ensure_ascii=False)

    @classmethod
    def from_json(cls, payload: str) -> "LabelVocab":
        mapping = json.loads(payload)
        vocab = cls.__new__(cls)
        vocab.id_to_label = [None] * len(mapping)
        for label, idx in mapping.items():
            vocab.id_to_label[idx] = label
        vocab.label_to_id = dict(mapping)
        vocab.ignore_id = IGNORE_ID
        return vocab


def build_label_vocab(corpus: Corpus) -> LabelVocab:
    """Collect the label set of a corpus. Empty corpus is a config error."""
    if not corpus:
        raise ConfigError("cannot build a label vocabulary from an empty corpus")
    seen: list[str] = []
    for sent in corpus:
        seen.extend(sent.labels)
    return LabelVocab(seen)


class TokenVocab:
    """Token <-> id map built from the training split only.

    Id 0 is the padding token, id 1 the unknown token; everything else is
    assigned in sorted order for order independence. Unseen tokens encode
    to UNK rather than erroring.
    """

    def __init__(self, tokens: list[str]):
        uniq = sorted(set(tokens) - {PAD_TOKEN, UNK_TOKEN})
        self.id_to_token = [PAD_TOKEN, UNK_TOKEN] + uniq
        self.token_to_id = {t: i for i, t in enumerate(self.id_to_token)}

    def __len__(self) -> int:
        return len(self.id_to_token)

    @property
    def pad_id(self) -> int:
        return 0

    @property
    def unk_id(self) -> int:
        return 1

    def encode(self, token: str) -> int:
        return self.token_to_id.get(token, self.unk_id)

    def to_json(self) -> str:
        return json.dumps(self.token_to_id, ensure_ascii=False)

    @classmethod
    def from_json(cls, payload: str) -> "TokenVocab":
        mapping = json.loads(payload)
        vocab = cls.__new__(cls)
        vocab.id_to_token = [None] * len(mapping)
        for token, idx in mapping.items():
            vocab.id_to_token[idx] = token
        vocab.token_to_id = dict(mapping)
        return vocab


def build_token_vocab(corpus: Corpus) -> TokenVocab:
    if not corpus:
        raise ConfigError("cannot build a token vocabulary from an empty corpus")
    tokens: list[str] = []
    for sent in corpus:
        tokens.extend(sent.tokens)
    return TokenVocab(tokens)


@dataclass
class Batch:
    """Padded batch. label_ids is -100 wherever attention_mask is False."""

    token_ids: np.ndarray       # (B, n_max) int64
    attention_mask: np.ndarray  # (B, n_max) bool
    label_ids: np.ndarray       # (B, n_max) int64, -100 at pads
    lengths: list[int] = field(default_factory=list)

    def __post_init__(self):
        B, n = self.token_ids.shape
        if self.attention_mask.shape != (B, n) or self.label_ids.shape != (B, n):
            raise ContractError(
                f"batch field shapes disagree: ids {self.token_ids.shape}, "
                f"mask {self.attention_mask.shape}, labels {self.label_ids.shape}")
        if len(self.lengths) != B:
            raise ContractError(f"{len(self.lengths)} lengths for {B} rows")

    @property
    def size(self) -> int:
        return self.token_ids.shape[0]


def make_batches(corpus: Corpus, batch_size: int, max_len: int,
                 token_vocab: TokenVocab, label_vocab: LabelVocab,
                 rng: RngState | None = None,
                 encode_labels: bool = True) -> list[Batch]:
    """Cut a corpus into padded batches.

    Sentences longer than max_len are truncated. When ``rng`` is given the
    sentence order is shuffled first; otherwise corpus order is kept. Each
    batch is padded to its own longest sentence. ``encode_labels=False``
    leaves every label id at -100 (prediction over unlabeled input).
    """
    if batch_size < 1:
        raise ConfigError(f"batch_size must be >= 1, got {batch_size}")
    if max_len < 1:
        raise ConfigError(f"max_len must be >= 1, got {max_len}")
    order = list(range(len(corpus)))
    if rng is not None:
        order = [int(i) for i in rng.permutation(len(corpus))]
    batches = []
    for start in range(0, len(order), batch_size):
        chunk = [corpus[i] for i in order[start:start + batch_size]]
        lengths = [min(len(s), max_len) for s in chunk]
        n_max = max(lengths)
        B = len(chunk)
        token_ids = np.zeros((B, n_max), dtype=np.int64)  # 0 == pad id
        mask = np.zeros((B, n_max), dtype=bool)
        label_ids = np.full((B, n_max), IGNORE_ID, dtype=np.int64)
        for b, (sent, n) in enumerate(zip(chunk, lengths)):
            token_ids[b, :n] = [token_vocab.encode(t) for t in sent.tokens[:n]]
            mask[b, :n] = True
            if encode_labels:
                label_ids[b, :n] = [label_vocab.encode(l) for l in sent.labels[:n]]
        batches.append(Batch(token_ids, mask, label_ids, lengths))
    return batches


def parse_predict_input(text: str) -> Corpus:
    """Lenient parse for prediction: one token per line, label optional.

    A present label column is ignored (it is usually O or a placeholder);
    blank lines separate sentences as usual.
    """
    sentences: Corpus = []
    tokens: list[str] = []
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line:
            if tokens:
                sentences.append(Sentence(tokens, ["O"] * len(tokens)))
                tokens = []
            continue
        fields = line.split()
        if len(fields) > 2:
            raise ParseError(f"expected 'token' or 'token label', got "
                             f"{len(fields)} fields in {raw!r}", line=lineno)
        tokens.append(fields[0])
    if tokens:
        sentences.append(Sentence(tokens, ["O"] * len(tokens)))
    return sentences
