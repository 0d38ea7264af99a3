"""Attention encoder-decoder model: parameters and inference math.

Single-layer LSTM encoder and decoder with MLP attention, input
feeding, and an optional lexicon bias.  The decoder consumes the
previous target embedding concatenated with the previous attentional
vector; prediction happens from the attentional vector
h~ = tanh(W_comb [h; ctx] + b_comb).

With a lexicon present, the output distribution is the mixture

    P = (1 - lam) * softmax(g) + lam * sum_i alpha_i * lexrow(src_i)

where lexrow is the renormalized translation row of source token i.
Source tokens without a lexicon row back off to the softmax itself,
which keeps the mixture a proper distribution.

Parameters are float32; distributions accumulate in float64 so the
sum-to-one contract holds tightly.  Gate order in all LSTM weight
matrices is [input, forget, cell, output].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax(x: np.ndarray) -> np.ndarray:
    shifted = x - np.max(x)
    ex = np.exp(shifted)
    return ex / ex.sum()


@dataclass
class ModelParameters:
    E_src: np.ndarray        # (V_src, d)
    E_tgt: np.ndarray        # (V_tgt, d)
    W_enc: np.ndarray        # (4H, d + H)
    b_enc: np.ndarray        # (4H,)
    W_dec: np.ndarray        # (4H, d + 2H)  input feeding: [embed; htilde]
    b_dec: np.ndarray        # (4H,)
    W_att_x: np.ndarray      # (H, H) encoder side of the attention MLP
    W_att_h: np.ndarray      # (H, H) decoder side
    b_att: np.ndarray        # (H,)
    v_att: np.ndarray        # (H,)
    W_comb: np.ndarray       # (H, 2H)
    b_comb: np.ndarray       # (H,)
    W_pred: np.ndarray       # (V_tgt, H)
    b_pred: np.ndarray       # (V_tgt,)
    lexicon: dict[int, dict[int, float]] = field(default_factory=dict)
    lex_weight: float = 0.1

    @property
    def hidden_size(self) -> int:
        return self.W_pred.shape[1]

    @property
    def embed_size(self) -> int:
        return self.E_src.shape[1]

    @property
    def src_vocab_size(self) -> int:
        return self.E_src.shape[0]

    @property
    def tgt_vocab_size(self) -> int:
        return self.E_tgt.shape[0]

    _TENSOR_NAMES = (
        "E_src", "E_tgt", "W_enc", "b_enc", "W_dec", "b_dec",
        "W_att_x", "W_att_h", "b_att", "v_att",
        "W_comb", "b_comb", "W_pred", "b_pred",
    )

    def tensors(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in self._TENSOR_NAMES}

    def astype(self, dtype) -> "ModelParameters":
        kwargs = {n: getattr(self, n).astype(dtype) for n in self._TENSOR_NAMES}
        return ModelParameters(**kwargs, lexicon=self.lexicon,
                               lex_weight=self.lex_weight)

    def copy(self) -> "ModelParameters":
        kwargs = {n: getattr(self, n).copy() for n in self._TENSOR_NAMES}
        return ModelParameters(**kwargs, lexicon=self.lexicon,
                               lex_weight=self.lex_weight)

    def all_finite(self) -> bool:
        return all(np.isfinite(t).all() for t in self.tensors().values())

    @classmethod
    def initialize(
        cls,
        rng: np.random.Generator,
        src_vocab_size: int,
        tgt_vocab_size: int,
        hidden_size: int = 512,
        embed_size: int = 256,
        lex_weight: float = 0.1,
        scale: float | None = None,
        dtype=np.float32,
    ) -> "ModelParameters":
        """Fresh parameters.  With scale=None each weight matrix gets a
        fan-scaled uniform limit (sqrt(6/(fan_in+fan_out))) so signals
        and gradients stay O(1) at depth; a flat init starves the
        attention pathway of gradient and the copy mechanism never
        bootstraps.  Passing an explicit scale applies that flat limit
        everywhere (handy for gradient-check probes).  Forget-gate
        biases start at 1 to keep the cell path open early on.
        """
        H, d = hidden_size, embed_size

        def u(rows, cols=None):
            if scale is not None:
                limit = scale
            elif cols is None:
                limit = np.sqrt(3.0 / rows)
            else:
                limit = np.sqrt(6.0 / (rows + cols))
            shape = (rows,) if cols is None else (rows, cols)
            return rng.uniform(-limit, limit, size=shape).astype(dtype)

        def emb(rows, cols):
            limit = scale if scale is not None else np.sqrt(3.0 / cols)
            return rng.uniform(-limit, limit, size=(rows, cols)).astype(dtype)

        b_enc = np.zeros(4 * H, dtype=dtype)
        b_dec = np.zeros(4 * H, dtype=dtype)
        b_enc[H:2 * H] = 1.0
        b_dec[H:2 * H] = 1.0
        return cls(
            E_src=emb(src_vocab_size, d),
            E_tgt=emb(tgt_vocab_size, d),
            W_enc=u(4 * H, d + H),
            b_enc=b_enc,
            W_dec=u(4 * H, d + 2 * H),
            b_dec=b_dec,
            W_att_x=u(H, H),
            W_att_h=u(H, H),
            b_att=np.zeros(H, dtype=dtype),
            v_att=u(H),
            W_comb=u(H, 2 * H),
            b_comb=np.zeros(H, dtype=dtype),
            W_pred=u(tgt_vocab_size, H),
            b_pred=np.zeros(tgt_vocab_size, dtype=dtype),
            lex_weight=lex_weight,
        )


def lstm_step(
    W: np.ndarray, b: np.ndarray, x: np.ndarray,
    h_prev: np.ndarray, c_prev: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    H = h_prev.shape[0]
    assert W.shape == (4 * H, x.shape[0] + H), (W.shape, x.shape, H)
    z = W @ np.concatenate([x, h_prev]) + b
    i = sigmoid(z[0:H])
    f = sigmoid(z[H : 2 * H])
    g = np.tanh(z[2 * H : 3 * H])
    o = sigmoid(z[3 * H : 4 * H])
    c = f * c_prev + i * g
    h = o * np.tanh(c)
    return h, c


def encode(params: ModelParameters, src_ids: list[int]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """All encoder hidden states (|x|, H) plus the final (h, c)."""
    if not src_ids:
        raise ValueError("cannot encode an empty source")
    H = params.hidden_size
    dtype = params.W_enc.dtype
    h = np.zeros(H, dtype=dtype)
    c = np.zeros(H, dtype=dtype)
    states = np.empty((len(src_ids), H), dtype=dtype)
    for i, sid in enumerate(src_ids):
        h, c = lstm_step(params.W_enc, params.b_enc, params.E_src[sid], h, c)
        states[i] = h
    return states, h, c


def attend(
    params: ModelParameters, encoder_states: np.ndarray, decoder_hidden: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """(weights over source positions, context vector)."""
    pre = encoder_states @ params.W_att_x.T          # (S, H)
    act = np.tanh(pre + params.W_att_h @ decoder_hidden + params.b_att)
    scores = act @ params.v_att                      # (S,)
    weights = softmax(scores.astype(np.float64))
    context = weights @ encoder_states.astype(np.float64)
    return weights, context.astype(encoder_states.dtype)


def attentional_vector(
    params: ModelParameters, decoder_hidden: np.ndarray, context: np.ndarray
) -> np.ndarray:
    return np.tanh(params.W_comb @ np.concatenate([decoder_hidden, context]) + params.b_comb)


def predict_distribution(
    params: ModelParameters,
    decoder_hidden: np.ndarray,
    context: np.ndarray,
    weights: np.ndarray,
    src_ids: list[int],
) -> np.ndarray:
    """Probability vector over the target vocabulary (float64)."""
    htilde = attentional_vector(params, decoder_hidden, context)
    logits = (params.W_pred @ htilde + params.b_pred).astype(np.float64)
    base = softmax(logits)
    lam = params.lex_weight
    if not params.lexicon or lam <= 0.0:
        return base
    lex_part = np.zeros_like(base)
    backoff_mass = 0.0
    for alpha, sid in zip(weights, src_ids):
        row = params.lexicon.get(sid)
        if row is None:
            backoff_mass += alpha
        else:
            for tid, prob in row.items():
                lex_part[tid] += alpha * prob
    return (1.0 - lam + lam * backoff_mass) * base + lam * lex_part


def sequence_log_prob(
    params: ModelParameters, src_ids: list[int], tgt_ids: list[int], bos_id: int = 1
) -> float:
    """Teacher-forced log P(tgt | src); tgt_ids must end with </s>."""
    states, h, c = encode(params, src_ids)
    htilde = np.zeros(params.hidden_size, dtype=params.W_enc.dtype)
    total = 0.0
    prev = bos_id
    for tid in tgt_ids:
        x = np.concatenate([params.E_tgt[prev], htilde])
        h, c = lstm_step(params.W_dec, params.b_dec, x, h, c)
        weights, context = attend(params, states, h)
        probs = predict_distribution(params, h, context, weights, src_ids)
        total += float(np.log(probs[tid]))
        htilde = attentional_vector(params, h, context)
        prev = tid
    return total
