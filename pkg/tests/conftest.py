import numpy as np
import pytest
import torch

from scribblecod.data import save_synthetic, synth_generate


@pytest.fixture(autouse=True)
def _single_thread():
    torch.set_num_threads(1)


@pytest.fixture()
def rng():
    return np.random.default_rng(0)


@pytest.fixture(scope="session")
def tiny_dataset(tmp_path_factory):
    """Six 64px synthetic samples written in the on-disk layout."""
    root = tmp_path_factory.mktemp("tiny_ds")
    samples = synth_generate(6, 64, seed=11)
    save_synthetic(root, "train", samples)
    return root


def rand_pred(rng, b=1, h=8, w=8, dtype=torch.float64):
    """Prediction map strictly inside (0, 1) so log/ratio terms stay smooth."""
    arr = rng.uniform(0.02, 0.98, size=(b, 1, h, w))
    return torch.tensor(arr, dtype=dtype)


def fd_gradient(fn, x: torch.Tensor, h: float = 1e-6) -> torch.Tensor:
    """Central finite differences, element by element, in double precision."""
    g = torch.zeros_like(x)
    flat = x.reshape(-1)
    gflat = g.reshape(-1)
    for i in range(flat.numel()):
        orig = flat[i].item()
        flat[i] = orig + h
        fp = fn(x).item()
        flat[i] = orig - h
        fm = fn(x).item()
        flat[i] = orig
        gflat[i] = (fp - fm) / (2 * h)
    return g


def assert_grad_matches_fd(fn, x: torch.Tensor, rel_tol: float = 1e-4):
    """Backprop through fn and compare against central differences.

    The error is measured relative to the largest analytic component so a
    loss with tiny gradients doesn't pass (or fail) by accident.
    """
    x = x.clone().requires_grad_(True)
    fn(x).backward()
    analytic = x.grad.clone()
    numeric = fd_gradient(fn, x.detach().clone())
    denom = analytic.abs().max().clamp_min(1e-8)
    rel = (analytic - numeric).abs().max() / denom
    assert rel.item() <= rel_tol, f"max rel grad error {rel.item():.3e}"
