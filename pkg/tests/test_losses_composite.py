import math

import numpy as np
import pytest
import torch

from scribblecod.data import BACKGROUND, FOREGROUND
from scribblecod.losses import (
    LossBreakdown,
    LossConfig,
    aux_loss,
    context_affinity_loss,
    cv_loss,
    iv_loss,
    pce_loss,
    rcv_loss,
    semantic_significance_loss,
    total_loss,
)

from tests.conftest import assert_grad_matches_fd, rand_pred


def make_scribble(b, h, w):
    s = torch.zeros(b, h, w, dtype=torch.int64)
    s[:, 0, :] = FOREGROUND
    s[:, -1, :] = BACKGROUND
    return s


def test_pce_uniform_half_is_log_two(rng):
    p = torch.full((2, 1, 6, 6), 0.5, dtype=torch.float64)
    s = make_scribble(2, 6, 6)
    assert pce_loss(p, s).item() == pytest.approx(math.log(2), abs=1e-12)


def test_pce_only_labeled_pixels_contribute(rng):
    p = rand_pred(rng, b=1, h=6, w=6)
    s = make_scribble(1, 6, 6)
    got = pce_loss(p, s).item()
    pv = p[0, 0]
    manual = []
    for i in range(6):
        for j in range(6):
            if s[0, i, j] == FOREGROUND:
                manual.append(-math.log(pv[i, j].item()))
            elif s[0, i, j] == BACKGROUND:
                manual.append(-math.log(1 - pv[i, j].item()))
    assert got == pytest.approx(np.mean(manual), abs=1e-12)

    # unlabeled pixels carry no gradient
    p = p.clone().requires_grad_(True)
    pce_loss(p, s).backward()
    assert p.grad[0, 0, 1:-1, :].abs().sum().item() == 0.0


def test_pce_mean_runs_over_labeled_pixels_not_images():
    # one image contributes three labeled pixels, the other one; a per-image
    # mean would weight them 1/2 each, the pixel mean 3/4 vs 1/4
    p = torch.full((2, 1, 4, 4), 0.3, dtype=torch.float64)
    s = torch.zeros(2, 4, 4, dtype=torch.int64)
    s[0, 0, 0:3] = FOREGROUND
    s[1, 0, 0] = BACKGROUND
    want = (3 * -math.log(0.3) + 1 * -math.log(0.7)) / 4
    assert pce_loss(p, s).item() == pytest.approx(want, abs=1e-12)


def test_pce_no_labels_raises(rng):
    with pytest.raises(ValueError):
        pce_loss(rand_pred(rng), torch.zeros(1, 8, 8, dtype=torch.int64))


def test_pce_saturated_predictions_stay_finite():
    p = torch.zeros(1, 1, 4, 4, dtype=torch.float64)
    s = make_scribble(1, 4, 4)
    out = pce_loss(p, s)
    assert torch.isfinite(out)
    # probabilities clamp to [1e-6, 1 - 1e-6]: the fg row contributes
    # -ln(1e-6), the bg row -ln(1 - 1e-6)
    want = (-math.log(1e-6) - math.log(1 - 1e-6)) / 2
    assert out.item() == pytest.approx(want, abs=1e-9)


def test_pce_gradient_matches_finite_differences(rng):
    s = make_scribble(1, 8, 8)
    assert_grad_matches_fd(lambda x: pce_loss(x, s), rand_pred(rng))


def test_aux_sums_its_three_terms(rng):
    cfg = LossConfig()
    p = rand_pred(rng, h=8, w=8)
    image = torch.tensor(rng.random((1, 3, 8, 8)))
    s = make_scribble(1, 8, 8)
    epoch = cfg.iv_start_epoch
    got = aux_loss(p, s, image, cfg, epoch).item()
    want = (
        pce_loss(p, s) + context_affinity_loss(p, image, cfg) + iv_loss(p, cfg, epoch)
    ).item()
    assert got == pytest.approx(want, abs=1e-12)


def total_inputs(rng, b=1, h=8, w=8):
    outputs = [rand_pred(rng, b, h, w) for _ in range(5)]
    feature = torch.tensor(rng.standard_normal((b, 4, h, w)))
    scribble = make_scribble(b, h, w)
    image = torch.tensor(rng.random((b, 3, h, w)))
    aligned = rand_pred(rng, b, h, w)
    transformed = rand_pred(rng, b, h, w)
    valid = torch.ones(b, 1, h, w, dtype=torch.float64)
    return outputs, feature, scribble, image, (aligned, transformed, valid)


def test_total_loss_assembles_terms(rng):
    cfg = LossConfig(top_channels=4)
    outputs, feature, scribble, image, pair = total_inputs(rng)
    epoch = 120
    out = total_loss(outputs, feature, scribble, image, pair, cfg, epoch)
    assert isinstance(out, LossBreakdown)

    want = pce_loss(outputs[0], scribble)
    want = want + rcv_loss(pair[0], pair[1], pair[2], cfg.gamma, cfg.alpha)
    want = want + iv_loss(outputs[0], cfg, epoch)
    want = want + context_affinity_loss(outputs[0], image, cfg)
    want = want + semantic_significance_loss(outputs[0], feature, scribble, cfg, epoch)
    for beta, o in zip(cfg.betas, outputs[1:]):
        want = want + beta * aux_loss(o, scribble, image, cfg, epoch)
    assert out.total.item() == pytest.approx(want.item(), abs=1e-10)


def test_total_loss_report_fields(rng):
    cfg = LossConfig()
    outputs, feature, scribble, image, pair = total_inputs(rng)
    out = total_loss(outputs, feature, scribble, image, pair, cfg, epoch=0)
    d = out.as_dict()
    for key in ("total", "pce", "cv", "rcv", "iv", "ca", "ss", "w_ss", "aux1", "aux2", "aux3", "aux4"):
        assert key in d
    # the symmetric pair value is definitionally half the asymmetric one
    assert d["rcv"] == pytest.approx(2 * d["cv"], rel=1e-9)
    assert d["w_ss"] == 0.0 and d["ss"] == 0.0
    assert d["iv"] == 0.0  # epoch 0 is before the start epoch


def test_total_loss_toggles_remove_terms(rng):
    outputs, feature, scribble, image, pair = total_inputs(rng)
    cfg = LossConfig(use_cv=False, use_iv=False, use_ca=False, use_ss=False, betas=(0, 0, 0, 0))
    out = total_loss(outputs, feature, scribble, image, None, cfg, epoch=200)
    assert out.total.item() == pytest.approx(pce_loss(outputs[0], scribble).item(), abs=1e-12)
    assert out.rcv == 0.0 and out.ca == 0.0


def test_total_loss_requires_view_pair_when_cv_active(rng):
    outputs, feature, scribble, image, _ = total_inputs(rng)
    with pytest.raises(ValueError):
        total_loss(outputs, feature, scribble, image, None, LossConfig(), epoch=0)


def test_total_loss_wrong_output_count(rng):
    outputs, feature, scribble, image, pair = total_inputs(rng)
    with pytest.raises(ValueError):
        total_loss(outputs[:3], feature, scribble, image, pair, LossConfig(), epoch=0)


def test_total_loss_backprops_into_all_outputs(rng):
    cfg = LossConfig(top_channels=4)
    outputs, feature, scribble, image, pair = total_inputs(rng)
    outputs = [o.requires_grad_(True) for o in outputs]
    total_loss(outputs, feature, scribble, image, pair, cfg, epoch=120).total.backward()
    for o in outputs:
        assert o.grad is not None and torch.isfinite(o.grad).all()


def test_loss_config_validation():
    with pytest.raises(ValueError):
        LossConfig(alpha=1.5)
    with pytest.raises(ValueError):
        LossConfig(gamma=-0.1)
    with pytest.raises(ValueError):
        LossConfig(betas=(0.3,))
    with pytest.raises(ValueError):
        LossConfig(block_size=0)
