"""Release gate: one test per guarantee the package makes.

Run with `pytest -v tests/test_acceptance.py` to get a pass/fail line per
guarantee. The heavier checks carry their runtime budgets as assertions, so
a machine an order of magnitude slower than a laptop core fails loudly
instead of silently degrading the gate.
"""

import itertools
import json
import time

import numpy as np
import pytest
import torch

from scribblecod.data import (
    BACKGROUND,
    FOREGROUND,
    load_manifest,
    load_sample,
    save_synthetic,
    synth_generate,
)
from scribblecod.losses import (
    LossConfig,
    boundary_regions,
    channel_significance,
    context_affinity_loss,
    cv_loss,
    iv_loss,
    pce_loss,
    rcv_loss,
    semantic_significance_loss,
    total_loss,
)
from scribblecod.metrics import e_measure, mae, s_measure, weighted_fbeta
from scribblecod.net import AxisGate, CRNet, CRNetConfig, build_crnet
from scribblecod.pipeline import (
    load_checkpoint,
    parse_config,
    save_checkpoint,
    train,
)
from scribblecod.views import (
    ViewConfig,
    ViewTransform,
    apply_to_image,
    apply_to_map,
    sample_view,
)

from tests.conftest import fd_gradient, rand_pred, assert_grad_matches_fd
from tests.test_losses_feature import (
    confident_pred,
    oracle_context_affinity,
    oracle_semantic_significance,
    oracle_significance,
)
from tests.test_metrics import (
    FIXTURES,
    oracle_e_measure,
    oracle_mae,
    oracle_s_measure,
    oracle_weighted_fbeta,
)
from tests.test_views import oracle_apply


def test_objective_gradients_match_finite_differences():
    """Every term of the objective backpropagates its true gradient: central
    finite differences on 8x8 double-precision inputs agree within 1e-4."""
    start = time.monotonic()
    cfg = LossConfig()
    g = np.random.default_rng(7)

    scr = torch.zeros(1, 8, 8, dtype=torch.long)
    scr[0, :2] = FOREGROUND
    scr[0, -2:] = BACKGROUND
    assert_grad_matches_fd(lambda x: pce_loss(x, scr), rand_pred(g))

    other = rand_pred(g)
    valid = torch.ones(1, 1, 8, 8, dtype=torch.float64)
    valid[0, 0, 0, :3] = 0.0
    assert_grad_matches_fd(lambda x: cv_loss(x, other, valid), rand_pred(g))
    assert_grad_matches_fd(lambda x: cv_loss(other, x, valid), rand_pred(g))

    # The reliability-weighted pair term detaches the opposite argument in
    # each branch, so its backward is (1 +/- gamma) times the gradient of the
    # plain pair value. The finite-difference estimate gets the same factor.
    for into_first, scale in ((True, 1.0 + cfg.gamma), (False, 1.0 - cfg.gamma)):
        base = rand_pred(g)
        x = base.clone().requires_grad_(True)
        if into_first:
            rcv_loss(x, other, valid, cfg.gamma, cfg.alpha).backward()
            fn = lambda t: cv_loss(t, other, valid, cfg.alpha)  # noqa: E731
        else:
            rcv_loss(other, x, valid, cfg.gamma, cfg.alpha).backward()
            fn = lambda t: cv_loss(other, t, valid, cfg.alpha)  # noqa: E731
        numeric = fd_gradient(fn, base.clone()) * scale
        rel = (x.grad - numeric).abs().max() / x.grad.abs().max().clamp_min(1e-8)
        assert rel.item() <= 1e-4

    # entropies stay clear of the confidence threshold so the pixel set the
    # term averages over cannot change under the probe step
    conf = torch.tensor(g.uniform(0.85, 0.95, size=(1, 1, 8, 8)))
    assert_grad_matches_fd(lambda x: iv_loss(x, cfg, cfg.iv_start_epoch), conf)

    img = torch.tensor(g.uniform(0.0, 1.0, size=(1, 3, 8, 8)))
    assert_grad_matches_fd(lambda x: context_affinity_loss(x, img, cfg), rand_pred(g))

    feat = torch.tensor(g.normal(size=(1, 6, 8, 8)))
    halves = torch.tensor(confident_pred(g, 1, 8, 8))
    unlabeled = torch.zeros(1, 8, 8, dtype=torch.long)
    assert_grad_matches_fd(
        lambda x: semantic_significance_loss(x, feat, unlabeled, cfg, epoch=50),
        halves,
    )
    assert time.monotonic() - start < 60.0


def test_cross_view_reliability_weighting():
    """Gamma reweights gradients between the two views without moving the
    loss value: value == 2 * pair loss for any gamma, and on mirrored inputs
    the gradient-norm ratio is (1 + gamma) / (1 - gamma)."""
    g = np.random.default_rng(11)
    p = rand_pred(g, h=12, w=12)
    q = rand_pred(g, h=12, w=12)
    base = 2.0 * cv_loss(p, q).item()
    for gamma in (0.0, 0.3, 0.9):
        got = rcv_loss(p, q, gamma=gamma).item()
        # exact up to one rounding step in the two-branch sum
        assert got == pytest.approx(base, rel=1e-13, abs=0.0)

    for gamma in (0.3, 0.9):
        a = p.clone().requires_grad_(True)
        b = p.flip(-1).clone().requires_grad_(True)
        rcv_loss(a, b, gamma=gamma).backward()
        ratio = a.grad.norm().item() / b.grad.norm().item()
        assert ratio == pytest.approx((1.0 + gamma) / (1.0 - gamma), abs=1e-3)


def test_losses_and_metrics_match_bruteforce_oracles():
    """Vectorized implementations equal plain-loop reference code on small
    inputs within 1e-6: context affinity, channel significance, the
    feature-kernel boundary term, and all four evaluation metrics."""
    start = time.monotonic()
    g = np.random.default_rng(3)

    cfg = LossConfig()
    pred = g.uniform(0.0, 1.0, size=(2, 1, 24, 32))
    img = g.uniform(0.0, 1.0, size=(2, 3, 24, 32))
    got = context_affinity_loss(torch.tensor(pred), torch.tensor(img), cfg).item()
    assert abs(got - oracle_context_affinity(pred, img, cfg)) <= 1e-6

    feat = g.normal(size=(2, 8, 24, 32))
    sig = channel_significance(torch.tensor(feat), torch.tensor(pred))
    assert np.abs(sig.numpy() - oracle_significance(feat, pred)).max() <= 1e-6

    cfg_ss = LossConfig(top_channels=6)
    halves = confident_pred(g, 2, 24, 24)
    feat_s = g.normal(size=(2, 8, 24, 24))
    scr = np.zeros((2, 24, 24), dtype=np.int64)
    scr[0, 3, 20:24] = FOREGROUND
    scr[1, 21, 0:4] = BACKGROUND
    got = semantic_significance_loss(
        torch.tensor(halves),
        torch.tensor(feat_s),
        torch.tensor(scr),
        cfg_ss,
        epoch=30,
    ).item()
    want = oracle_semantic_significance(halves, feat_s, scr, cfg_ss, epoch=30)
    assert abs(got - want) <= 1e-6

    pairs = [
        (mae, oracle_mae),
        (s_measure, oracle_s_measure),
        (e_measure, oracle_e_measure),
        (weighted_fbeta, oracle_weighted_fbeta),
    ]
    for _, _, gt in FIXTURES:
        rough = np.clip(
            gt.astype(np.float64) * 0.72 + g.uniform(0.0, 0.3, size=gt.shape), 0.0, 1.0
        )
        for p in (g.uniform(0.0, 1.0, size=gt.shape), rough):
            for fast, slow in pairs:
                assert abs(fast(p, gt) - slow(p, gt)) <= 1e-6
    assert time.monotonic() - start < 120.0


def test_boundary_region_rules_are_exact():
    """Block qualification on handcrafted 40x40 maps: the 30% coverage rule
    counts pixels exactly, the 0.8 / 0.2 confidence cuts are strict, scribble
    labels classify on their own, and no qualifying pixels means no blocks."""
    cfg = LossConfig()
    unlabeled = np.zeros((40, 40), dtype=np.int64)

    # exactly 120 of 400 pixels per class meets the 30% bar
    pred = np.full((40, 40), 0.5)
    pred[0:6, 0:20] = 0.9
    pred[14:20, 0:20] = 0.1
    assert boundary_regions(pred, unlabeled, cfg) == [(0, 0, 20, 20)]

    # one pixel short on the foreground side and the block is out
    short = pred.copy()
    short[5, 19] = 0.5
    assert boundary_regions(short, unlabeled, cfg) == []

    # sitting exactly on the confidence thresholds classifies nothing
    edge = np.full((40, 40), 0.5)
    edge[0:6, 0:20] = cfg.fg_confidence
    edge[14:20, 0:20] = cfg.bg_confidence
    assert boundary_regions(edge, unlabeled, cfg) == []
    edge[0:6, 0:20] = cfg.fg_confidence + 1e-6
    edge[14:20, 0:20] = cfg.bg_confidence - 1e-6
    assert boundary_regions(edge, unlabeled, cfg) == [(0, 0, 20, 20)]

    # scribbles qualify a block even where the prediction is agnostic
    scr = np.zeros((40, 40), dtype=np.int64)
    scr[0:6, 20:40] = FOREGROUND
    scr[14:20, 20:40] = BACKGROUND
    assert boundary_regions(np.full((40, 40), 0.5), scr, cfg) == [(0, 20, 20, 20)]

    # fully agnostic map: no blocks, and the boundary term is exactly zero
    flat = torch.full((1, 1, 40, 40), 0.5, dtype=torch.float64)
    feat = torch.randn(1, 4, 40, 40, dtype=torch.float64)
    scr_t = torch.zeros(1, 40, 40, dtype=torch.long)
    assert boundary_regions(flat[0, 0], scr_t[0], cfg) == []
    assert semantic_significance_loss(flat, feat, scr_t, cfg, epoch=60).item() == 0.0


def test_network_forward_contracts():
    """Forward passes produce five in-range, finite, input-sized maps plus a
    feature stack across sizes and batch sizes; the axis-attention gate never
    amplifies; every module on/off wiring builds and runs."""
    start = time.monotonic()
    model = build_crnet(seed=0)
    model.eval()
    for size in (64, 96, 320):
        for b in (1, 2, 4):
            gen = torch.Generator().manual_seed(b * size)
            x = torch.rand(b, 3, size, size, generator=gen)
            with torch.no_grad():
                out = model(x)
            for m in out.maps():
                assert m.shape == (b, 1, size, size)
                assert torch.isfinite(m).all()
                assert 0.0 <= m.min().item() and m.max().item() <= 1.0
            assert out.feature.shape[0] == b
            assert out.feature.shape[-2:] == (size, size)
            assert torch.isfinite(out.feature).all()

    for channels, h, w, seed in ((8, 6, 6, 0), (16, 9, 5, 1), (32, 12, 12, 2)):
        torch.manual_seed(seed)
        gate = AxisGate(channels)
        x = torch.randn(2, channels, h, w)
        with torch.no_grad():
            y = gate(x)
            assert (y.abs() <= x.abs() + 1e-7).all()
            assert gate(torch.zeros(1, channels, h, w)).abs().max().item() == 0.0

    for use_age, use_lcc, use_lsr in itertools.product((False, True), repeat=3):
        wiring = CRNetConfig(use_age=use_age, use_lcc=use_lcc, use_lsr=use_lsr)
        net = build_crnet(wiring, seed=1)
        net.eval()
        with torch.no_grad():
            out = net(torch.rand(1, 3, 64, 64, generator=torch.Generator().manual_seed(9)))
        assert all(o.shape == (1, 1, 64, 64) for o in out.maps())
    assert time.monotonic() - start < 120.0


def test_view_alignment_matches_coordinate_oracle():
    """Map warping equals a per-pixel coordinate walk within 1e-6 over 100
    transforms covering every on/off combination of resize, flip, translate
    and crop, with bit-exact validity masks."""
    rng = np.random.default_rng(21)
    checked = 0

    def check(t, side):
        arr = rng.random((1, side, side))
        got, mask = apply_to_map(t, torch.tensor(arr)[None])
        want, want_valid = oracle_apply(t, arr)
        assert np.abs(got[0, 0].numpy() - want[0]).max() <= 1e-6
        assert np.array_equal(mask[0, 0].numpy(), want_valid)

    for rez, flip, tra, crop in itertools.product((False, True), repeat=4):
        cfg = ViewConfig(
            base_size=16,
            enable_resize=rez,
            enable_flip=flip,
            enable_translate=tra,
            enable_crop=crop,
        )
        for _ in range(6):
            check(sample_view(cfg, rng), 16)
            checked += 1

    full = ViewConfig(
        base_size=24,
        enable_resize=True,
        enable_flip=True,
        enable_translate=True,
        enable_crop=True,
    )
    for _ in range(4):
        check(sample_view(full, rng), 24)
        checked += 1
    assert checked == 100


@pytest.fixture(scope="module")
def smoke(tmp_path_factory):
    """Two identical 200-step training runs on ten synthetic samples."""
    base = tmp_path_factory.mktemp("smoke")
    root = base / "data"
    save_synthetic(root, "train", synth_generate(10, 96, seed=4))
    template = f"""
dataset_root = {root}
input_size = 96
batch_size = 4
epochs = 100
max_lr = 1e-3
seed = 0
checkpoint_every = 1000
"""
    runs = []
    for name in ("run_a", "run_b"):
        cfg = parse_config(template + f"out_dir = {base / name}\n")
        begin = time.monotonic()
        summary = train(cfg)
        elapsed = time.monotonic() - begin
        with open(summary["log"]) as fh:
            records = [json.loads(line) for line in fh]
        runs.append({"cfg": cfg, "summary": summary, "records": records, "elapsed": elapsed})
    return {"root": root, "runs": runs}


def test_smoke_training_learns_scribbles_deterministically(smoke):
    """200 iterations on ten 96px samples, batch 4: the labeled-pixel loss
    drops by half or more, the trained net agrees with at least 90% of the
    scribbled pixels, the run stays under ten minutes, and a rerun reproduces
    every step's loss within 1e-6."""
    run_a, run_b = smoke["runs"]
    assert run_a["summary"]["steps"] == 200
    assert run_a["elapsed"] < 600.0

    pce = [r["pce"] for r in run_a["records"]]
    early = sum(pce[:10]) / 10.0
    late = sum(pce[-10:]) / 10.0
    assert late <= 0.5 * early, f"pce only went {early:.4f} -> {late:.4f}"

    for ra, rb in zip(run_a["records"], run_b["records"], strict=True):
        assert abs(ra["total"] - rb["total"]) <= 1e-6

    payload = load_checkpoint(run_a["summary"]["checkpoint"])
    net = CRNet(run_a["cfg"].net)
    net.load_state_dict(payload["model"])
    net.eval()
    manifest = load_manifest(smoke["root"], "train")
    agree = labeled = 0
    with torch.no_grad():
        for sid in manifest.ids:
            sample = load_sample(manifest, sid)
            x = torch.from_numpy(sample.image).permute(2, 0, 1)[None]
            pred = net(x).out0[0, 0].numpy()
            fg = sample.scribble == FOREGROUND
            bg = sample.scribble == BACKGROUND
            agree += int((pred[fg] >= 0.5).sum() + (pred[bg] < 0.5).sum())
            labeled += int(fg.sum() + bg.sum())
    assert agree / labeled >= 0.9, f"scribble agreement {agree}/{labeled}"


def test_logged_schedules_follow_the_ramps(smoke):
    """The per-step log shows the confident-entropy term pinned to zero for
    every epoch before its start epoch and the boundary-term weight tracking
    its linear ramp bit for bit."""
    run = smoke["runs"][0]
    loss_cfg = run["cfg"].loss
    records = run["records"]
    epochs = {r["epoch"] for r in records}
    assert epochs == set(range(100))
    assert max(epochs) < loss_cfg.iv_start_epoch
    for rec in records:
        if rec["epoch"] < loss_cfg.iv_start_epoch:
            assert rec["iv"] == 0.0
        ramp = loss_cfg.w_ss_max * min(1.0, rec["epoch"] / loss_cfg.w_ss_ramp_epochs)
        assert rec["w_ss"] == ramp


def test_checkpoint_roundtrip_reproduces_losses_exactly(tiny_dataset, tmp_path):
    """Saving and reloading a model reproduces a fixed batch's full loss
    report with bitwise equality on every term."""
    manifest = load_manifest(tiny_dataset, "train")
    samples = [load_sample(manifest, sid) for sid in manifest.ids[:2]]
    images = torch.stack(
        [torch.from_numpy(s.image).permute(2, 0, 1) for s in samples]
    )
    scribbles = torch.stack(
        [torch.from_numpy(s.scribble.astype(np.int64)) for s in samples]
    )
    view = ViewTransform((64, 64), (0, 0, 64, 64), (3, 2), 1.0, True, (64, 64))
    cfg = LossConfig()

    def breakdown(net):
        net.eval()
        with torch.no_grad():
            out = net(images)
            out_t = net(apply_to_image(view, images))
            aligned, valid = apply_to_map(view, out.out0)
            return total_loss(
                out.maps(),
                out.feature,
                scribbles,
                images,
                (aligned, out_t.out0, valid),
                cfg,
                epoch=120,
            )

    first = build_crnet(seed=3)
    before = breakdown(first)
    path = tmp_path / "ckpt.pt"
    save_checkpoint(
        path,
        model=first,
        optimizer=torch.optim.SGD(first.parameters(), lr=0.1),
        epoch=0,
        global_step=0,
        config_text="",
        config_hash="unused",
    )

    second = build_crnet(seed=99)
    second.load_state_dict(load_checkpoint(path)["model"])
    after = breakdown(second)

    assert before.total.item() == after.total.item()
    assert before.as_dict() == after.as_dict()
