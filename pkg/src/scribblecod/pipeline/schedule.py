"""Learning-rate schedule."""

from __future__ import annotations


def triangle_lr(step: int, total_steps: int, max_lr: float) -> float:
    """Linear ramp to max_lr at the midpoint, back to zero at the end.

    lr(step) = max_lr * (1 - |2 * step / total_steps - 1|), clipped at 0.
    """
    if total_steps < 1:
        raise ValueError(f"total_steps must be positive, got {total_steps}")
    if step < 0:
        raise ValueError(f"step must be non-negative, got {step}")
    frac = step / total_steps
    return max_lr * max(0.0, 1.0 - abs(2.0 * frac - 1.0))
