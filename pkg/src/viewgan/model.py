"""The three players: two conditional view generators and a discriminator.

Generator 1 completes a missing first view from noise plus the observed
second view; generator 2 does the mirror image. The discriminator scores a
concatenated pair over K class outputs plus one extra "fake" output that
flags pairs containing a generated view.

Canonical layouts (also recorded in checkpoint headers):
  * generator input  = [noise, observed view]
  * discriminator input = [view 1, view 2]
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataFormatError, DimensionError
from .nn import (DEFAULT_HIDDEN_DIM, LINEAR, SOFTMAX, ForwardTrace, Mlp,
                 forward, init_mlp)

CHECKPOINT_MAGIC = "VIEWGAN-CKPT-1"
_LAYOUT_LINE = "layout generator-input=noise,condition discriminator-input=view1,view2"


@dataclass(eq=False)
class TripartiteModel:
    """Generators ``gen1``/``gen2`` and discriminator ``disc`` with dimensions.

    ``disc`` has ``num_classes + 1`` outputs; the last index is the fake class.
    """

    d1: int
    d2: int
    num_classes: int
    gen1: Mlp  # [z1 | x2] -> view-1 completion, linear output
    gen2: Mlp  # [z2 | x1] -> view-2 completion, linear output
    disc: Mlp  # [x1 | x2] -> K+1 softmax

    def __post_init__(self):
        if min(self.d1, self.d2) < 1 or self.num_classes < 1:
            raise DimensionError("d1, d2 and num_classes must be positive")
        both = self.d1 + self.d2
        if self.gen1.input_dim != both or self.gen1.output_dim != self.d1:
            raise DimensionError("gen1 must map d1+d2 inputs to d1 outputs")
        if self.gen2.input_dim != both or self.gen2.output_dim != self.d2:
            raise DimensionError("gen2 must map d1+d2 inputs to d2 outputs")
        if self.disc.input_dim != both or self.disc.output_dim != self.num_classes + 1:
            raise DimensionError("disc must map d1+d2 inputs to num_classes+1 outputs")
        if self.gen1.output_kind != LINEAR or self.gen2.output_kind != LINEAR:
            raise ValueError("generators must have linear outputs")
        if self.disc.output_kind != SOFTMAX:
            raise ValueError("discriminator must have a softmax output")

    def copy(self) -> "TripartiteModel":
        return TripartiteModel(self.d1, self.d2, self.num_classes,
                               self.gen1.copy(), self.gen2.copy(), self.disc.copy())


def new_model(d1: int, d2: int, num_classes: int,
              rng: np.random.Generator,
              hidden_dim: int = DEFAULT_HIDDEN_DIM) -> TripartiteModel:
    """Fresh Xavier-initialized model. Draw order: gen1, gen2, disc."""
    both = d1 + d2
    gen1 = init_mlp(both, hidden_dim, d1, LINEAR, rng)
    gen2 = init_mlp(both, hidden_dim, d2, LINEAR, rng)
    disc = init_mlp(both, hidden_dim, num_classes + 1, SOFTMAX, rng)
    return TripartiteModel(d1, d2, num_classes, gen1, gen2, disc)


def generator_input(model: TripartiteModel, which_view: int, observed, noise) -> np.ndarray:
    """Assemble [noise | observed] for the generator completing ``which_view``."""
    observed = np.atleast_2d(np.asarray(observed, dtype=np.float64))
    noise = np.atleast_2d(np.asarray(noise, dtype=np.float64))
    if which_view == 1:
        d_gen, d_obs = model.d1, model.d2
    elif which_view == 2:
        d_gen, d_obs = model.d2, model.d1
    else:
        raise ValueError(f"which_view must be 1 or 2, got {which_view}")
    if noise.shape[-1] != d_gen:
        raise DimensionError(f"noise dim {noise.shape[-1]} != generated view dim {d_gen}")
    if observed.shape[-1] != d_obs:
        raise DimensionError(f"observed dim {observed.shape[-1]} != other view dim {d_obs}")
    if noise.shape[0] != observed.shape[0]:
        raise DimensionError("noise and observed batch sizes differ")
    return np.concatenate([noise, observed], axis=1)


def generate(model: TripartiteModel, which_view: int, observed, noise) -> np.ndarray:
    """Complete ``which_view`` conditionally on the observed other view.

    Output is the raw linear layer; no squashing is applied so generated
    values can match any real-valued view. Accepts single vectors or batches.
    """
    single = np.asarray(noise).ndim == 1
    gen = model.gen1 if which_view == 1 else model.gen2
    out = forward(gen, generator_input(model, which_view, observed, noise)).output
    return out[0] if single else out


def pair_input(model: TripartiteModel, x1, x2) -> np.ndarray:
    """Concatenate a (batch of) view pair(s) in canonical [view1 | view2] order."""
    x1 = np.atleast_2d(np.asarray(x1, dtype=np.float64))
    x2 = np.atleast_2d(np.asarray(x2, dtype=np.float64))
    if x1.shape[-1] != model.d1 or x2.shape[-1] != model.d2:
        raise DimensionError(
            f"pair dims ({x1.shape[-1]}, {x2.shape[-1]}) != ({model.d1}, {model.d2})")
    if x1.shape[0] != x2.shape[0]:
        raise DimensionError("view batch sizes differ")
    return np.concatenate([x1, x2], axis=1)


def disc_trace(model: TripartiteModel, x1, x2) -> ForwardTrace:
    """Discriminator forward pass on a pair; ``hidden_act`` is the feature map."""
    return forward(model.disc, pair_input(model, x1, x2))


def discriminate(model: TripartiteModel, x1, x2) -> np.ndarray:
    """Class-posterior estimates of shape (..., K+1); index K is the fake class."""
    single = np.asarray(x1).ndim == 1
    probs = disc_trace(model, x1, x2).output
    return probs[0] if single else probs


def feature_map(model: TripartiteModel, x1, x2) -> np.ndarray:
    """Hidden sigmoid activations of the discriminator on a pair."""
    single = np.asarray(x1).ndim == 1
    feats = disc_trace(model, x1, x2).hidden_act
    return feats[0] if single else feats


def class_mass(probabilities) -> float:
    """Total probability on the real classes: 1 minus the fake-class entry."""
    p = np.asarray(probabilities, dtype=np.float64)
    if p.ndim != 1 or p.size < 2:
        raise DimensionError("expected a probability vector over K+1 >= 2 outcomes")
    if np.any(p < 0) or not np.isclose(p.sum(), 1.0, atol=1e-9):
        raise ValueError("not a probability vector")
    return float(1.0 - p[-1])


@dataclass(frozen=True, eq=False)
class Decision:
    """Outcome of the fake-vs-class rule, with the probabilities that produced it."""

    is_fake: bool
    class_index: int | None
    probabilities: np.ndarray


def decide_batch(probabilities) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized decision rule on (n, K+1) probabilities.

    An item is fake iff the fake entry strictly exceeds the summed class
    entries; the boundary case classifies. Returns (fake mask, argmax class
    per item with ties broken toward the lowest index).
    """
    p = np.atleast_2d(np.asarray(probabilities, dtype=np.float64))
    fake = p[:, -1] > p[:, :-1].sum(axis=1)
    cls = np.argmax(p[:, :-1], axis=1)
    return fake, cls


def decide(model: TripartiteModel, x1, x2) -> Decision:
    """Apply the decision rule to one observation with both views present."""
    probs = discriminate(model, x1, x2)
    fake, cls = decide_batch(probs)
    is_fake = bool(fake[0])
    return Decision(is_fake, None if is_fake else int(cls[0]), probs)


# ---------------------------------------------------------------------------
# Checkpoints: a plain-text container with a versioned magic header. Floats
# are written with repr() so a save/load round trip is exact.

def _write_vector(f, vec):
    f.write(" ".join(repr(float(v)) for v in vec) + "\n")


def _write_net(f, name: str, net: Mlp):
    f.write(f"net {name} {net.output_kind} {net.input_dim} {net.hidden_dim} {net.output_dim}\n")
    for row in net.weights_in:
        _write_vector(f, row)
    _write_vector(f, net.bias_in)
    for row in net.weights_out:
        _write_vector(f, row)
    _write_vector(f, net.bias_out)


def save_checkpoint(path, model: TripartiteModel, seed: int, step: int) -> None:
    """Write the model, RNG seed, and step count to ``path``."""
    with open(path, "w", encoding="ascii") as f:
        f.write(CHECKPOINT_MAGIC + "\n")
        f.write(_LAYOUT_LINE + "\n")
        f.write(f"dims {model.d1} {model.d2} {model.num_classes}\n")
        f.write(f"seed {seed}\n")
        f.write(f"step {step}\n")
        _write_net(f, "gen1", model.gen1)
        _write_net(f, "gen2", model.gen2)
        _write_net(f, "disc", model.disc)


class _LineReader:
    def __init__(self, lines):
        self.lines = lines
        self.pos = 0

    def next(self) -> str:
        if self.pos >= len(self.lines):
            raise DataFormatError("unexpected end of checkpoint", line=self.pos + 1)
        self.pos += 1
        return self.lines[self.pos - 1]


def _read_vector(reader: _LineReader, size: int) -> np.ndarray:
    parts = reader.next().split()
    if len(parts) != size:
        raise DataFormatError(f"expected {size} values, got {len(parts)}", line=reader.pos)
    return np.array([float(p) for p in parts], dtype=np.float64)


def _read_net(reader: _LineReader, expected_name: str) -> Mlp:
    parts = reader.next().split()
    if len(parts) != 6 or parts[0] != "net" or parts[1] != expected_name:
        raise DataFormatError(f"expected 'net {expected_name} ...' header", line=reader.pos)
    kind = parts[2]
    if kind not in (LINEAR, SOFTMAX):
        raise DataFormatError(f"unknown output kind {kind!r}", line=reader.pos)
    input_dim, hidden_dim, output_dim = (int(p) for p in parts[3:6])
    w_in = np.stack([_read_vector(reader, input_dim) for _ in range(hidden_dim)])
    b_in = _read_vector(reader, hidden_dim)
    w_out = np.stack([_read_vector(reader, hidden_dim) for _ in range(output_dim)])
    b_out = _read_vector(reader, output_dim)
    return Mlp(w_in, b_in, w_out, b_out, kind)


def load_checkpoint(path) -> tuple[TripartiteModel, int, int]:
    """Read a checkpoint written by :func:`save_checkpoint`.

    Returns (model, seed, step).
    """
    with open(path, "r", encoding="ascii") as f:
        reader = _LineReader(f.read().splitlines())
    if reader.next() != CHECKPOINT_MAGIC:
        raise DataFormatError(f"missing magic header {CHECKPOINT_MAGIC!r}", line=1)
    if not reader.next().startswith("layout "):
        raise DataFormatError("missing layout line", line=2)
    dims = reader.next().split()
    if len(dims) != 4 or dims[0] != "dims":
        raise DataFormatError("missing dims line", line=3)
    d1, d2, num_classes = (int(p) for p in dims[1:])
    seed_parts = reader.next().split()
    step_parts = reader.next().split()
    if seed_parts[:1] != ["seed"] or step_parts[:1] != ["step"]:
        raise DataFormatError("missing seed/step lines", line=reader.pos)
    seed, step = int(seed_parts[1]), int(step_parts[1])
    gen1 = _read_net(reader, "gen1")
    gen2 = _read_net(reader, "gen2")
    disc = _read_net(reader, "disc")
    model = TripartiteModel(d1, d2, num_classes, gen1, gen2, disc)
    return model, seed, step
