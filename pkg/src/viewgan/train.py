"""Losses and the sequential three-player training loop.

Each iteration samples one minibatch with m_b examples from every subset,
then Adam-updates the discriminator, generator 1, and generator 2 strictly
in that order, every player seeing the same batch. The discriminator loss
treats generated views as constants; each generator loss backpropagates
through the frozen discriminator into the slot its view occupies.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .data import PartitionedDataset
from .errors import ConfigError, DimensionError, NumericError
from .model import TripartiteModel, decide_batch, discriminate, save_checkpoint
from .nn import AdamState, MlpGrads, adam_step, backward, forward

LOG_CLAMP = 1e-12

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class Minibatch:
    """m_b examples from each subset plus fresh uniform noise.

    full_* come from the both-views subset, miss1_* from the subset whose
    first view is absent (so only view 2 is carried), miss2_* symmetric.
    Noise entries live in [-1, 1].
    """

    full_x1: np.ndarray
    full_x2: np.ndarray
    full_y: np.ndarray
    miss1_x2: np.ndarray
    miss1_y: np.ndarray
    miss2_x1: np.ndarray
    miss2_y: np.ndarray
    noise_v1: np.ndarray
    noise_v2: np.ndarray

    def __post_init__(self):
        m = self.full_x1.shape[0]
        sized = (self.full_x2, self.full_y, self.miss1_x2, self.miss1_y,
                 self.miss2_x1, self.miss2_y, self.noise_v1, self.noise_v2)
        if m < 1 or any(a.shape[0] != m for a in sized):
            raise DimensionError("all minibatch blocks must share one size m_b")
        if np.abs(self.noise_v1).max() > 1.0 or np.abs(self.noise_v2).max() > 1.0:
            raise ValueError("noise entries must lie in [-1, 1]")
        for y in (self.full_y, self.miss1_y, self.miss2_y):
            onehot = np.all((y == 0.0) | (y == 1.0)) and np.all(y.sum(axis=1) == 1.0)
            if not onehot:
                raise ValueError("labels must be one-hot rows")

    @property
    def size(self) -> int:
        return self.full_x1.shape[0]


@dataclass
class TrainConfig:
    iterations: int
    minibatch_size: int
    alpha: float = 1e-4
    beta1: float = 0.5
    beta2: float = 0.999
    epsilon: float = 1e-8
    seed: int = 0
    fm_weight: float = 1.0
    eval_every: int = 0       # 0 disables held-out evaluation
    checkpoint_every: int = 0  # 0 disables periodic checkpoints

    def __post_init__(self):
        if self.iterations < 0:
            raise ConfigError("iterations must be nonnegative")
        if self.minibatch_size < 1:
            raise ConfigError("minibatch_size must be positive")
        if not self.alpha > 0:
            raise ConfigError("alpha must be positive")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ConfigError("beta1 and beta2 must lie in [0, 1)")
        if not self.epsilon > 0:
            raise ConfigError("epsilon must be positive")
        if self.fm_weight < 0:
            raise ConfigError("fm_weight must be nonnegative")
        if self.eval_every < 0 or self.checkpoint_every < 0:
            raise ConfigError("eval_every and checkpoint_every must be nonnegative")


def _clamped_class_grad(probs: np.ndarray, targets: np.ndarray, coeff: float):
    """Loss sum(-coeff*log p[target]) with the floor, and its logit gradient.

    Rows where the clamp is active contribute the constant -log(LOG_CLAMP)
    and a zero gradient (the clamped value does not respond to the logits).
    """
    rows = np.arange(probs.shape[0])
    picked = probs[rows, targets]
    loss = -coeff * float(np.sum(np.log(np.maximum(picked, LOG_CLAMP))))
    live = picked > LOG_CLAMP
    n_clamped = int(np.count_nonzero(~live))
    if n_clamped:
        logger.debug("log clamp active on %d of %d samples", n_clamped, probs.shape[0])
    dlogits = probs.copy()
    dlogits[rows, targets] -= 1.0
    dlogits *= coeff
    dlogits[~live] = 0.0
    return loss, dlogits


def loss_discriminator(model: TripartiteModel, batch: Minibatch):
    """Empirical discriminator loss and its parameter gradients.

    Three terms: the class assignment of real complete pairs (weight
    1/(m_b*(K+1)) per sample) and the fake-class assignment of pairs
    completed by either generator (weight 1/(2*m_b) per sample each).
    Generator outputs are data here; nothing flows back into the generators.
    """
    m_b = batch.size
    k = model.num_classes
    fake_idx = k

    gen1_out = forward(model.gen1, np.concatenate([batch.noise_v1, batch.miss1_x2], axis=1)).output
    gen2_out = forward(model.gen2, np.concatenate([batch.noise_v2, batch.miss2_x1], axis=1)).output

    groups = [
        (np.concatenate([batch.full_x1, batch.full_x2], axis=1),
         np.argmax(batch.full_y, axis=1), 1.0 / (m_b * (k + 1))),
        (np.concatenate([gen1_out, batch.miss1_x2], axis=1),
         np.full(m_b, fake_idx), 1.0 / (2.0 * m_b)),
        (np.concatenate([batch.miss2_x1, gen2_out], axis=1),
         np.full(m_b, fake_idx), 1.0 / (2.0 * m_b)),
    ]

    total = 0.0
    grads: MlpGrads | None = None
    for pairs, targets, coeff in groups:
        trace = forward(model.disc, pairs)
        part, dlogits = _clamped_class_grad(trace.output, targets, coeff)
        total += part
        g = backward(model.disc, trace, dlogits)
        if grads is None:
            grads = g
        else:
            for acc, extra in zip(grads.params(), g.params()):
                acc += extra
    return total, grads


def feature_matching_penalty(model: TripartiteModel, which_view: int,
                             real_pairs, gen_trace):
    """l2 distance between mean discriminator features on real and completed pairs.

    real_pairs is an (x1, x2) tuple of complete-pair batches. gen_trace is
    the generator forward trace whose output is the completed view; the
    observed other view is recovered from the trace input, so the penalty
    can send exact gradients back into the generator. The discriminator is
    frozen: only its first layer carries the chain.
    """
    x1_real, x2_real = real_pairs
    if x1_real.shape[0] < 1 or gen_trace.output.shape[0] < 1:
        raise ConfigError("feature matching needs non-empty real and generated batches")
    gen = model.gen1 if which_view == 1 else model.gen2
    d_gen = model.d1 if which_view == 1 else model.d2
    observed = gen_trace.input[:, d_gen:]
    if which_view == 1:
        gen_pairs = np.concatenate([gen_trace.output, observed], axis=1)
    elif which_view == 2:
        gen_pairs = np.concatenate([observed, gen_trace.output], axis=1)
    else:
        raise ValueError(f"which_view must be 1 or 2, got {which_view}")

    feats_real = forward(model.disc, np.concatenate([x1_real, x2_real], axis=1)).hidden_act
    trace_d = forward(model.disc, gen_pairs)
    feats_gen = trace_d.hidden_act
    delta = feats_real.mean(axis=0) - feats_gen.mean(axis=0)
    norm = float(np.linalg.norm(delta))
    if norm == 0.0:
        zero = [np.zeros_like(p) for p in gen.params()]
        return 0.0, MlpGrads(*zero)

    n_gen = feats_gen.shape[0]
    # d penalty / d feats_gen[i] = (-delta/norm) / n_gen, then through the
    # sigmoid and the discriminator's first layer into the generated slot.
    d_feats = (-delta / norm) / n_gen
    d_hidden_pre = d_feats * feats_gen * (1.0 - feats_gen)
    d_pairs = d_hidden_pre @ model.disc.weights_in
    d_gen_view = d_pairs[:, :model.d1] if which_view == 1 else d_pairs[:, model.d1:]
    return norm, backward(gen, gen_trace, d_gen_view)


def loss_generator(model: TripartiteModel, which_view: int, batch: Minibatch,
                   fm_weight: float = 1.0):
    """Generator loss: class assignment of completed pairs plus feature matching.

    Gradients reach the generator by backpropagating through the frozen
    discriminator into the input slot the generated view occupies.
    """
    m_b = batch.size
    k = model.num_classes
    coeff = 1.0 / (m_b * (k + 1))
    if which_view == 1:
        gen, noise, observed, labels = model.gen1, batch.noise_v1, batch.miss1_x2, batch.miss1_y
    elif which_view == 2:
        gen, noise, observed, labels = model.gen2, batch.noise_v2, batch.miss2_x1, batch.miss2_y
    else:
        raise ValueError(f"which_view must be 1 or 2, got {which_view}")

    gen_trace = forward(gen, np.concatenate([noise, observed], axis=1))
    if which_view == 1:
        pairs = np.concatenate([gen_trace.output, observed], axis=1)
    else:
        pairs = np.concatenate([observed, gen_trace.output], axis=1)

    trace_d = forward(model.disc, pairs)
    class_loss, dlogits = _clamped_class_grad(trace_d.output, np.argmax(labels, axis=1), coeff)
    d_input = backward(model.disc, trace_d, dlogits).input_grad
    d_gen_view = d_input[:, :model.d1] if which_view == 1 else d_input[:, model.d1:]
    grads = backward(gen, gen_trace, d_gen_view)

    penalty, fm_grads = feature_matching_penalty(
        model, which_view, (batch.full_x1, batch.full_x2), gen_trace)
    for acc, extra in zip(grads.params(), fm_grads.params()):
        acc += fm_weight * extra
    return class_loss + fm_weight * penalty, grads


def sample_minibatch(dataset: PartitionedDataset, m_b: int, rng: np.random.Generator) -> Minibatch:
    """Uniform with-replacement draw of m_b examples per subset, plus fresh noise.

    Draw order is fixed (full, missing1, missing2 indices, then the two
    noise blocks) so a seeded generator reproduces the batch sequence.
    """
    for name, subset in (("s_full", dataset.s_full), ("s_missing1", dataset.s_missing1),
                         ("s_missing2", dataset.s_missing2)):
        if not subset:
            raise ConfigError(f"{name} is empty")
    idx_full = rng.integers(0, len(dataset.s_full), size=m_b)
    idx_m1 = rng.integers(0, len(dataset.s_missing1), size=m_b)
    idx_m2 = rng.integers(0, len(dataset.s_missing2), size=m_b)
    noise_v1 = rng.uniform(-1.0, 1.0, size=(m_b, dataset.d1))
    noise_v2 = rng.uniform(-1.0, 1.0, size=(m_b, dataset.d2))
    return Minibatch(
        full_x1=np.stack([dataset.s_full[i].view1 for i in idx_full]),
        full_x2=np.stack([dataset.s_full[i].view2 for i in idx_full]),
        full_y=np.stack([dataset.s_full[i].label for i in idx_full]),
        miss1_x2=np.stack([dataset.s_missing1[i].view2 for i in idx_m1]),
        miss1_y=np.stack([dataset.s_missing1[i].label for i in idx_m1]),
        miss2_x1=np.stack([dataset.s_missing2[i].view1 for i in idx_m2]),
        miss2_y=np.stack([dataset.s_missing2[i].label for i in idx_m2]),
        noise_v1=noise_v1,
        noise_v2=noise_v2,
    )


def _heldout_accuracy(model: TripartiteModel, heldout) -> float:
    x1 = np.stack([ex.view1 for ex in heldout])
    x2 = np.stack([ex.view2 for ex in heldout])
    y = np.array([int(np.argmax(ex.label)) for ex in heldout])
    fake, cls = decide_batch(discriminate(model, x1, x2))
    return float(np.mean(~fake & (cls == y)))


def train(model: TripartiteModel, dataset: PartitionedDataset, config: TrainConfig,
          heldout=None, metrics_path=None, checkpoint_path=None):
    """Run the minibatch game for config.iterations steps.

    Per step: sample one batch, then update the discriminator, generator 1,
    and generator 2 sequentially, each by one Adam step on its own loss with
    the other players held fixed. Returns (model, rows) where each row is
    (iteration, loss_d, loss_g1, loss_g2, heldout accuracy or None). When
    metrics_path is given the rows are streamed to a CSV with header
    ``iter,loss_d,loss_g1,loss_g2,heldout_acc``.
    """
    rng = np.random.default_rng(config.seed)
    adam_d = AdamState.for_params(model.disc.params(), config.alpha, config.beta1,
                                  config.beta2, config.epsilon)
    adam_g1 = AdamState.for_params(model.gen1.params(), config.alpha, config.beta1,
                                   config.beta2, config.epsilon)
    adam_g2 = AdamState.for_params(model.gen2.params(), config.alpha, config.beta1,
                                   config.beta2, config.epsilon)

    rows = []
    out = open(metrics_path, "w", encoding="ascii") if metrics_path else None
    try:
        if out:
            out.write("iter,loss_d,loss_g1,loss_g2,heldout_acc\n")
        for i in range(config.iterations):
            try:
                batch = sample_minibatch(dataset, config.minibatch_size, rng)
                loss_d, grads_d = loss_discriminator(model, batch)
                adam_step(model.disc.params(), grads_d.params(), adam_d)
                loss_g1, grads_g1 = loss_generator(model, 1, batch, config.fm_weight)
                adam_step(model.gen1.params(), grads_g1.params(), adam_g1)
                loss_g2, grads_g2 = loss_generator(model, 2, batch, config.fm_weight)
                adam_step(model.gen2.params(), grads_g2.params(), adam_g2)
            except NumericError as e:
                raise NumericError(f"iteration {i}: {e}") from e

            acc = None
            if heldout is not None and config.eval_every and (i + 1) % config.eval_every == 0:
                acc = _heldout_accuracy(model, heldout)
            rows.append((i, loss_d, loss_g1, loss_g2, acc))
            if out:
                acc_s = "" if acc is None else repr(float(acc))
                out.write(f"{i},{repr(float(loss_d))},{repr(float(loss_g1))},"
                          f"{repr(float(loss_g2))},{acc_s}\n")
            if (checkpoint_path and config.checkpoint_every
                    and (i + 1) % config.checkpoint_every == 0):
                save_checkpoint(checkpoint_path, model, config.seed, i + 1)
    finally:
        if out:
            out.close()
    return model, rows
