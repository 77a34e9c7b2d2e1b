"""Shared test helpers: seeded smooth contours used across the suite."""
from __future__ import annotations

import numpy as np

from qgpatch.contour import Contour


def make_wobbly_contour(seed: int, node_count: int = 96,
                        base_radius: float = 1.0,
                        wobble: float = 0.12) -> Contour:
    """Smooth star-shaped closed contour: a circle whose radius carries a
    seeded low-order Fourier perturbation.

    The perturbation amplitudes decay with the harmonic order and stay well
    below the base radius, so the result is always simple, counterclockwise,
    and resolvable by modest node counts.
    """
    rng = np.random.default_rng(seed)
    alphas = 2.0 * np.pi * np.arange(node_count) / node_count
    radius = np.full(node_count, float(base_radius))
    for order in range(1, 5):
        amp_cos, amp_sin = wobble * rng.uniform(-1.0, 1.0, size=2) / order
        radius += amp_cos * np.cos(order * alphas) + amp_sin * np.sin(order * alphas)
    nodes = np.stack([radius * np.cos(alphas), radius * np.sin(alphas)], axis=1)
    return Contour(nodes)
