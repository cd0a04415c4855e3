"""Scribble-supervised camouflaged object detection.

Subpackages:
    data      dataset layout, raster IO, synthetic fixtures
    views     invertible view transforms for cross-view consistency
    losses    partial supervision, consistency and feature-guided objectives
    net       contrast/relation segmentation network
    metrics   saliency/COD evaluation measures
    pipeline  training, inference, evaluation, annotation service
"""

__version__ = "0.1.0"
