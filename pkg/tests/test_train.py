"""Tests for minibatch assembly, the three losses and the training loop."""

import math

import numpy as np
import pytest

import viewgan as vg
from viewgan.data import one_hot
from viewgan.errors import ConfigError
from viewgan.model import discriminate, generate, new_model
from viewgan.train import (LOG_CLAMP, Minibatch, TrainConfig,
                           feature_matching_penalty, loss_discriminator,
                           loss_generator, sample_minibatch, train)


def zero_model(d1=2, d2=2, k=3, hidden=4):
    m = new_model(d1, d2, k, np.random.default_rng(0), hidden_dim=hidden)
    for net in (m.gen1, m.gen2, m.disc):
        for block in net.params():
            block[...] = 0.0
    return m


def make_batch(m_b=1, d1=2, d2=2, k=3, seed=0):
    rng = np.random.default_rng(seed)
    labels = np.stack([one_hot(int(i % k), k) for i in range(m_b)])
    return Minibatch(
        full_x1=rng.normal(size=(m_b, d1)),
        full_x2=rng.normal(size=(m_b, d2)),
        full_y=labels,
        miss1_x2=rng.normal(size=(m_b, d2)),
        miss1_y=labels.copy(),
        miss2_x1=rng.normal(size=(m_b, d1)),
        miss2_y=labels.copy(),
        noise_v1=rng.uniform(-1, 1, size=(m_b, d1)),
        noise_v2=rng.uniform(-1, 1, size=(m_b, d2)),
    )


def small_task(seed=0, k=2, d1=3, d2=3):
    spec = vg.SyntheticSpec(
        num_classes=k, d1=d1, d2=d2,
        means_view1=vg.block_class_means(k, d1, 2.0),
        means_view2=vg.block_class_means(k, d2, 2.0),
        noise_sigma=0.5, view_correlation=0.0,
        m_full=6, m_missing1=6, m_missing2=6, m_test=8, seed=seed)
    return vg.generate_synthetic(spec)


# ---------------------------------------------------------------- losses

def test_discriminator_loss_at_uniform_output():
    # with all-zero parameters the discriminator emits the uniform
    # distribution over K+1 outputs, which fixes the loss exactly
    k, m_b = 6, 1
    model = zero_model(k=k)
    batch = make_batch(m_b=m_b, k=k)
    loss, grads = loss_discriminator(model, batch)
    expect = (k + 2) / (k + 1) * math.log(k + 1)
    assert abs(loss - expect) < 1e-12
    assert grads.params()[0].shape == model.disc.weights_in.shape


def test_generator_class_term_at_uniform_output():
    k, m_b = 6, 1
    model = zero_model(k=k)
    batch = make_batch(m_b=m_b, k=k)
    loss, _ = loss_generator(model, 1, batch, fm_weight=0.0)
    expect = math.log(k + 1) / (k + 1)
    assert abs(loss - expect) < 1e-12


def test_discriminator_loss_uniform_any_k():
    for k in (2, 3, 4):
        model = zero_model(k=k)
        batch = make_batch(m_b=2, k=k)
        loss, _ = loss_discriminator(model, batch)
        expect = (k + 2) / (k + 1) * math.log(k + 1)
        assert abs(loss - expect) < 1e-10


def test_losses_do_not_mutate_the_model():
    model = new_model(2, 2, 3, np.random.default_rng(3), hidden_dim=4)
    batch = make_batch(m_b=2, seed=4)
    before = [b.copy() for n in (model.gen1, model.gen2, model.disc) for b in n.params()]
    loss_discriminator(model, batch)
    loss_generator(model, 1, batch)
    loss_generator(model, 2, batch)
    after = [b for n in (model.gen1, model.gen2, model.disc) for b in n.params()]
    for a, b in zip(before, after):
        assert np.array_equal(a, b)


def test_clamped_log_saturates_and_freezes_gradient():
    model = zero_model(k=2)
    # force a confident wrong prediction: huge logit on class 1
    model.disc.weights_out[1, :] = 0.0
    model.disc.bias_out[:] = np.array([-60.0, 60.0, -60.0])
    batch = make_batch(m_b=1, k=2, seed=5)
    batch.full_y[0] = one_hot(0, 2)
    loss, grads = loss_discriminator(model, batch)
    # the true-class probability underflows past the clamp; the loss is
    # finite and the class term contributes exactly -log(clamp)/3
    class_term = -math.log(LOG_CLAMP) / 3.0
    assert loss > class_term - 1e-9
    assert np.all(np.isfinite(grads.params()[0]))


def test_feature_matching_zero_when_distributions_match():
    model = new_model(2, 2, 2, np.random.default_rng(6), hidden_dim=4)
    batch = make_batch(m_b=3, k=2, seed=7)
    noise = batch.noise_v1
    fake1 = generate(model, 1, batch.miss1_x2, noise)
    from viewgan.nn import forward
    from viewgan.model import generator_input
    trace = forward(model.gen1, generator_input(model, 1, batch.miss1_x2, noise))
    # feed the generator's own output back as the "real" pairs: means match
    penalty, grads = feature_matching_penalty(
        model, 1, (fake1, batch.miss1_x2), trace)
    assert penalty == 0.0
    for g in grads.params():
        assert np.all(g == 0)


def test_feature_matching_positive_otherwise():
    model = new_model(2, 2, 2, np.random.default_rng(8), hidden_dim=4)
    batch = make_batch(m_b=3, k=2, seed=9)
    from viewgan.nn import forward
    from viewgan.model import generator_input
    trace = forward(model.gen1, generator_input(model, 1, batch.miss1_x2, batch.noise_v1))
    penalty, grads = feature_matching_penalty(
        model, 1, (batch.full_x1, batch.full_x2), trace)
    assert penalty > 0
    assert any(np.any(g != 0) for g in grads.params())


def test_generator_loss_includes_weighted_penalty():
    model = new_model(2, 2, 2, np.random.default_rng(10), hidden_dim=4)
    batch = make_batch(m_b=2, k=2, seed=11)
    plain, _ = loss_generator(model, 1, batch, fm_weight=0.0)
    heavy, _ = loss_generator(model, 1, batch, fm_weight=5.0)
    light, _ = loss_generator(model, 1, batch, fm_weight=1.0)
    fm = light - plain
    assert fm > 0
    assert abs((heavy - plain) - 5.0 * fm) < 1e-9


# ---------------------------------------------------------------- batches

def test_minibatch_validation():
    with pytest.raises(Exception):
        b = make_batch(m_b=2)
        Minibatch(full_x1=b.full_x1[:1], full_x2=b.full_x2, full_y=b.full_y,
                  miss1_x2=b.miss1_x2, miss1_y=b.miss1_y,
                  miss2_x1=b.miss2_x1, miss2_y=b.miss2_y,
                  noise_v1=b.noise_v1, noise_v2=b.noise_v2)


def test_minibatch_rejects_out_of_range_noise():
    b = make_batch(m_b=2)
    bad = b.noise_v1.copy()
    bad[0, 0] = 1.5
    with pytest.raises(Exception):
        Minibatch(full_x1=b.full_x1, full_x2=b.full_x2, full_y=b.full_y,
                  miss1_x2=b.miss1_x2, miss1_y=b.miss1_y,
                  miss2_x1=b.miss2_x1, miss2_y=b.miss2_y,
                  noise_v1=bad, noise_v2=b.noise_v2)


def test_sample_minibatch_draws_from_each_subset():
    ds, _, _ = small_task()
    rng = np.random.default_rng(1)
    batch = sample_minibatch(ds, 4, rng)
    assert batch.size == 4
    assert batch.full_x1.shape == (4, 3)
    assert np.all(np.abs(batch.noise_v1) <= 1.0)
    # drawn rows come from the right subsets
    full_rows = {tuple(e.view1) for e in ds.s_full}
    for row in batch.full_x1:
        assert tuple(row) in full_rows


def test_sample_minibatch_is_with_replacement():
    ds, _, _ = small_task()
    rng = np.random.default_rng(2)
    batch = sample_minibatch(ds, 50, rng)  # more than any subset holds
    assert batch.size == 50


def test_sample_minibatch_names_empty_subset():
    ds, _, _ = small_task()
    empty = vg.PartitionedDataset(s_full=ds.s_full, s_missing1=[],
                                  s_missing2=ds.s_missing2,
                                  d1=ds.d1, d2=ds.d2, num_classes=ds.num_classes)
    with pytest.raises(ConfigError, match="missing1"):
        sample_minibatch(empty, 2, np.random.default_rng(0))


# ---------------------------------------------------------------- training

def test_train_zero_iterations_is_a_no_op():
    ds, _, _ = small_task()
    model = new_model(3, 3, 2, np.random.default_rng(0), hidden_dim=4)
    before = [b.copy() for n in (model.gen1, model.gen2, model.disc) for b in n.params()]
    out, rows = train(model, ds, TrainConfig(iterations=0, minibatch_size=2))
    assert rows == []
    after = [b for n in (out.gen1, out.gen2, out.disc) for b in n.params()]
    for a, b in zip(before, after):
        assert np.array_equal(a, b)


def test_train_is_deterministic():
    ds, test, _ = small_task()
    cfg = TrainConfig(iterations=12, minibatch_size=3, seed=42, eval_every=6)
    m1 = new_model(3, 3, 2, np.random.default_rng(1), hidden_dim=4)
    m2 = new_model(3, 3, 2, np.random.default_rng(1), hidden_dim=4)
    out1, rows1 = train(m1, ds, cfg, heldout=test)
    out2, rows2 = train(m2, ds, cfg, heldout=test)
    assert rows1 == rows2
    for a, b in zip(out1.disc.params(), out2.disc.params()):
        assert np.array_equal(a, b)
    for a, b in zip(out1.gen1.params(), out2.gen1.params()):
        assert np.array_equal(a, b)


def test_train_rows_and_metrics_file(tmp_path):
    ds, test, _ = small_task()
    cfg = TrainConfig(iterations=9, minibatch_size=2, seed=7, eval_every=3)
    model = new_model(3, 3, 2, np.random.default_rng(2), hidden_dim=4)
    path = tmp_path / "metrics.csv"
    _, rows = train(model, ds, cfg, heldout=test, metrics_path=path)
    assert len(rows) == 9
    evaluated = [r for r in rows if r[4] is not None]
    # iteration indices are zero based; evaluation lands at the end of
    # every eval_every block
    assert [r[0] for r in evaluated] == [2, 5, 8]
    lines = path.read_text().splitlines()
    assert lines[0] == "iter,loss_d,loss_g1,loss_g2,heldout_acc"
    assert len(lines) == 10
    # unevaluated iterations leave the accuracy column empty
    assert lines[1].endswith(",")
    float(lines[1].split(",")[1])  # losses parse back


def test_train_checkpoints(tmp_path):
    ds, _, _ = small_task()
    path = tmp_path / "model.ckpt"
    cfg = TrainConfig(iterations=4, minibatch_size=2, seed=3, checkpoint_every=2)
    model = new_model(3, 3, 2, np.random.default_rng(4), hidden_dim=4)
    out, _ = train(model, ds, cfg, checkpoint_path=path)
    loaded, seed, step = load = vg.load_checkpoint(path)
    assert step == 4 and seed == 3
    for a, b in zip(loaded.disc.params(), out.disc.params()):
        assert np.array_equal(a, b)


def test_training_moves_losses():
    ds, _, _ = small_task(seed=5)
    cfg = TrainConfig(iterations=40, minibatch_size=4, alpha=1e-3, seed=1)
    model = new_model(3, 3, 2, np.random.default_rng(5), hidden_dim=8)
    _, rows = train(model, ds, cfg)
    assert all(np.isfinite(r[1]) and np.isfinite(r[2]) and np.isfinite(r[3])
               for r in rows)
    assert rows[-1][1] != rows[0][1]


def test_train_config_validation():
    with pytest.raises(ConfigError):
        TrainConfig(iterations=-1, minibatch_size=2)
    with pytest.raises(ConfigError):
        TrainConfig(iterations=1, minibatch_size=0)
    with pytest.raises(ConfigError):
        TrainConfig(iterations=1, minibatch_size=2, alpha=-1.0)
