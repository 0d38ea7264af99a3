"""Shared fixtures.

The heavyweight item is rule_model: a small sequence model trained once
per session on two rewrite rules plus an identity form over forty
identifier names.  Training takes under ten seconds and gives the
generation tests a model whose outputs are known exactly.
"""

import os
from collections import Counter
from dataclasses import dataclass

import pytest

from patchloom.model import ModelParameters
from patchloom.training import TrainingConfig, train
from patchloom.vocab import Vocabulary

HERE = os.path.dirname(os.path.abspath(__file__))
DATA_DIR = os.path.join(HERE, "data")
FIXTURES_DIR = os.path.join(os.path.dirname(HERE), "fixtures")

NAMES = (
    "height width depth length offset index cursor counter total limit "
    "buffer stream reader writer handler parser cache client session "
    "token payload record bundle config status result target source "
    "holder factory mapping channel router monitor metric ticket broker "
    "queue worker anchor segment window"
).split()


def load_tagged(path: str) -> list[tuple[str, str]]:
    """(tag, payload) rows from a tab-separated file; # starts a comment."""
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            tag, payload = line.split("\t", 1)
            rows.append((tag, payload))
    return rows


# one line per acceptance check, echoed after the run so the verdicts
# survive pytest's output capture
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance checks")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def data_dir() -> str:
    return DATA_DIR


@pytest.fixture(scope="session")
def fixtures_dir() -> str:
    return FIXTURES_DIR


def rule_corpus() -> list[tuple[str, str]]:
    """Parallel lines, rule-major so the dev tail reuses known names."""
    pairs = []
    for n in NAMES:
        pairs.append((f"return this . {n} ;", f"return {n} ;"))
    for n in NAMES:
        pairs.append((f"{n} . log ( arg ) ;", f"{n} . debug ( arg ) ;"))
    for n in NAMES:
        pairs.append((f"int {n} = 0 ;", f"int {n} = 0 ;"))
    return pairs


@dataclass
class TrainedFixture:
    params: ModelParameters
    src_vocab: Vocabulary
    tgt_vocab: Vocabulary
    pre_lines: list[list[str]]
    post_lines: list[list[str]]


@pytest.fixture(scope="session")
def rule_model() -> TrainedFixture:
    pairs = rule_corpus()
    src_counts = Counter(t for pre, _ in pairs for t in pre.split())
    tgt_counts = Counter(t for _, post in pairs for t in post.split())
    src_vocab = Vocabulary.from_counts(src_counts, unk_threshold=0)
    tgt_vocab = Vocabulary.from_counts(tgt_counts, unk_threshold=0)
    encoded = [
        (src_vocab.encode(pre.split()), tgt_vocab.encode(post.split(), eos=True))
        for pre, post in pairs
    ]
    config = TrainingConfig(
        hidden_size=96, embed_size=48, max_epochs=60, minibatch_words=16,
        learning_rate=0.003, dropout=0.0, seed=3, decay_factor=0.9,
        dev_fraction=0.1, lex_weight=0.0,
    )
    params, logbook = train(encoded, len(src_vocab), len(tgt_vocab), config)
    assert not logbook.aborted
    return TrainedFixture(
        params=params,
        src_vocab=src_vocab,
        tgt_vocab=tgt_vocab,
        pre_lines=[pre.split() for pre, _ in pairs],
        post_lines=[post.split() for _, post in pairs],
    )
