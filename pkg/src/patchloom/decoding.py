"""Beam-search decoding over a trained model.

Hypotheses carry raw (unnormalized) accumulated log probabilities;
thresholding downstream assumes exactly that.  Finished hypotheses are
retired into a pool and search stops once no live hypothesis can beat
the best finished one, which preserves top-1 optimality over the
explored space.  If nothing finishes within max_len, the best
unfinished hypothesis is returned and flagged via finished=False.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from .model import (
    ModelParameters,
    attend,
    attentional_vector,
    encode,
    lstm_step,
    predict_distribution,
)
from .vocab import BOS_ID, EOS_ID


@dataclass
class Hypothesis:
    tokens: tuple[int, ...]
    log_prob: float
    state: tuple[np.ndarray, np.ndarray, np.ndarray] | None  # (h, c, htilde)
    finished: bool

    @property
    def output_ids(self) -> tuple[int, ...]:
        """Generated ids without the closing </s>."""
        if self.finished and self.tokens and self.tokens[-1] == EOS_ID:
            return self.tokens[:-1]
        return self.tokens


def beam_search(
    params: ModelParameters,
    src_ids: list[int],
    beam_size: int = 10,
    max_len: int = 100,
) -> list[Hypothesis]:
    if beam_size < 1:
        raise ValueError("beam_size must be at least 1")
    states, h, c = encode(params, src_ids)
    htilde = np.zeros(params.hidden_size, dtype=params.W_enc.dtype)
    beam = [Hypothesis(tokens=(), log_prob=0.0, state=(h, c, htilde), finished=False)]
    pool: list[Hypothesis] = []

    for _ in range(max_len):
        candidates: list[tuple[float, int, int]] = []  # (logp, beam_idx, token)
        stepped: list[tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]] = []
        for bi, hyp in enumerate(beam):
            prev = hyp.tokens[-1] if hyp.tokens else BOS_ID
            h_prev, c_prev, htil_prev = hyp.state
            x = np.concatenate([params.E_tgt[prev], htil_prev])
            h_new, c_new = lstm_step(params.W_dec, params.b_dec, x, h_prev, c_prev)
            weights, context = attend(params, states, h_new)
            probs = predict_distribution(params, h_new, context, weights, src_ids)
            htil_new = attentional_vector(params, h_new, context)
            stepped.append((h_new, c_new, htil_new, probs))
            logp = np.log(np.maximum(probs, 1e-300))
            # the global top beam_size can take at most beam_size tokens
            # from any single hypothesis
            k = min(beam_size, len(probs))
            best_toks = np.argpartition(-logp, k - 1)[:k] if k < len(probs) \
                else np.arange(len(probs))
            for tok in best_toks:
                candidates.append((hyp.log_prob + float(logp[tok]), bi, int(tok)))
        top = heapq.nlargest(beam_size, candidates, key=lambda item: (item[0], -item[2]))
        next_beam: list[Hypothesis] = []
        for logp, bi, tok in top:
            parent = beam[bi]
            h_new, c_new, htil_new, _ = stepped[bi]
            if tok == EOS_ID:
                pool.append(Hypothesis(
                    tokens=parent.tokens + (tok,), log_prob=logp,
                    state=None, finished=True))
            else:
                next_beam.append(Hypothesis(
                    tokens=parent.tokens + (tok,), log_prob=logp,
                    state=(h_new, c_new, htil_new), finished=False))
        beam = next_beam[:beam_size]
        if not beam:
            break
        if pool:
            best_finished = max(p.log_prob for p in pool)
            if all(hyp.log_prob <= best_finished for hyp in beam):
                break

    pool.sort(key=lambda hyp: -hyp.log_prob)
    if pool:
        return pool[:beam_size]
    beam.sort(key=lambda hyp: -hyp.log_prob)
    return beam[:1]


def greedy_decode(
    params: ModelParameters, src_ids: list[int], max_len: int = 100
) -> Hypothesis:
    return beam_search(params, src_ids, beam_size=1, max_len=max_len)[0]
