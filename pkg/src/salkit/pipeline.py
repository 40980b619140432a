"""Four-stage saliency map generation over the superpixel graph.

Stage 1 pools a pixel-wise objectness map (the "deep map") onto superpixels.
Stage 2 propagates a background prior from the image-border superpixels
(seeded at -1) through the regularized regression, yielding a boundary map.
Stage 3 fuses the two coarse maps as deep^(1-beta) * boundary^beta.
Stage 4 rescales the fused map to [-1, 1], feeds it back through the
regression with every superpixel labeled, and renders the smoothed scores
back to pixels.

All normalizations are min-max affine rescales; a constant input maps to the
midpoint of the target range.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .config import Config
from .graph import graph_for_segmentation
from .image import srgb_to_lab
from .regression import solve_with_labels
from .slic import oversegment


@dataclass(frozen=True)
class SaliencyMap:
    """A per-pixel saliency grid with values in [0, 1]."""

    values: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise ValueError(f"saliency map must be 2-D, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("saliency values must be finite")
        if v.min() < 0.0 or v.max() > 1.0:
            raise ValueError("saliency values must lie in [0, 1]")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def height(self):
        return self.values.shape[0]

    @property
    def width(self):
        return self.values.shape[1]


@dataclass(frozen=True)
class SuperpixelScores:
    """A score per superpixel, aligned with a SuperpixelSegmentation."""

    scores: np.ndarray

    def __post_init__(self):
        s = np.ascontiguousarray(self.scores, dtype=np.float64)
        if s.ndim != 1:
            raise ValueError(f"scores must be 1-D, got shape {s.shape}")
        if not np.all(np.isfinite(s)):
            raise ValueError("scores must be finite")
        s.setflags(write=False)
        object.__setattr__(self, "scores", s)

    def __len__(self):
        return self.scores.shape[0]


def _minmax_unit(values, constant_value=0.5):
    lo, hi = values.min(), values.max()
    if hi - lo == 0.0:
        return np.full_like(values, constant_value)
    return (values - lo) / (hi - lo)


def _minmax_signed(values):
    lo, hi = values.min(), values.max()
    if hi - lo == 0.0:
        return np.zeros_like(values)
    return 2.0 * (values - lo) / (hi - lo) - 1.0


def pool_deepmap(pixel_map, seg):
    """Average the pixel map over each superpixel."""
    values = pixel_map.values
    if values.shape != seg.labels.shape:
        raise ValueError("deep map dimensions differ from the segmentation")
    flat = seg.labels.ravel()
    sums = np.bincount(flat, weights=values.ravel(), minlength=seg.n)
    return SuperpixelScores(sums / seg.sizes)


def boundary_map(graph, seg, gamma_a=1e-6, gamma_i=1.0):
    """Background propagation from border superpixels seeded at -1.

    The propagated scores are min-max rescaled to [0, 1], so regions that
    behave like the border seeds land low and interior regions land high.
    A constant result maps to 0.5.
    """
    seeds = np.nonzero(seg.boundary_flags)[0]
    if seeds.size == 0:
        raise AssertionError("segmentation has no border superpixels")
    _, g = solve_with_labels(graph, seeds, np.full(seeds.size, -1.0), gamma_a, gamma_i)
    return SuperpixelScores(_minmax_unit(g))


def fuse(deep, boundary, beta):
    """Elementwise geometric blend deep^(1-beta) * boundary^beta.

    0^0 is taken as 1, which is only reachable at beta in {0, 1}; beta = 0
    returns the deep scores unchanged.
    """
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must lie in [0, 1], got {beta}")
    d = deep.scores
    b = boundary.scores
    if d.min() < 0 or d.max() > 1 or b.min() < 0 or b.max() > 1:
        raise ValueError("fuse expects scores in [0, 1]")
    return SuperpixelScores(d ** (1.0 - beta) * b**beta)


def refine(graph, cg, gamma_a=1e-6, gamma_i=1.0):
    """Smooth the fused map by regression with every superpixel labeled.

    The input is rescaled to [-1, 1] (a constant map becomes all zeros),
    solved with l = n, and the fitted scores are rescaled back to [0, 1]
    (constant output becomes all 0.5).
    """
    scores = cg.scores
    if scores.min() < 0 or scores.max() > 1:
        raise ValueError("refine expects scores in [0, 1]")
    y = _minmax_signed(scores)
    _, g = solve_with_labels(graph, np.arange(len(scores)), y, gamma_a, gamma_i)
    return SuperpixelScores(_minmax_unit(g))


def render(scores, seg):
    """Paint superpixel scores back to a piecewise-constant pixel map."""
    s = scores.scores
    if s.shape[0] != seg.n:
        raise ValueError("score count differs from superpixel count")
    if s.min() < 0 or s.max() > 1:
        raise ValueError("render expects scores in [0, 1]")
    return SaliencyMap(s[seg.labels])


@dataclass
class PipelineRun:
    """Final map plus every intermediate artifact and per-stage timings."""

    final: SaliencyMap
    segmentation: object
    graph: object
    deep_scores: SuperpixelScores
    boundary_scores: SuperpixelScores
    fused_scores: SuperpixelScores
    refined_scores: SuperpixelScores
    timings_ms: dict = field(default_factory=dict)


def run_pipeline_detailed(image, deepmap, config=None):
    """Run all stages and keep the intermediates (used by the CLI)."""
    config = config or Config()
    if (deepmap.height, deepmap.width) != (image.height, image.width):
        raise ValueError(
            f"deep map is {deepmap.width}x{deepmap.height}, image is {image.width}x{image.height}"
        )
    timings = {}

    def timed(name, fn, *args, **kwargs):
        start = time.perf_counter()
        result = fn(*args, **kwargs)
        timings[name] = (time.perf_counter() - start) * 1e3
        return result

    lab = timed("lab", srgb_to_lab, image)
    seg = timed("segment", oversegment, lab, config.n_superpixels, config.slic_compactness, config.seed)
    g = timed("graph", graph_for_segmentation, seg, config.rho)
    deep = timed("pool", pool_deepmap, deepmap, seg)
    boundary = timed("boundary", boundary_map, g, seg, config.gamma_a, config.gamma_i)
    fused = timed("fuse", fuse, deep, boundary, config.beta)
    refined = timed("refine", refine, g, fused, config.gamma_a, config.gamma_i)
    final = timed("render", render, refined, seg)
    return PipelineRun(
        final=final,
        segmentation=seg,
        graph=g,
        deep_scores=deep,
        boundary_scores=boundary,
        fused_scores=fused,
        refined_scores=refined,
        timings_ms=timings,
    )


def run_pipeline(image, deepmap, config=None):
    """Compose the four stages into the final fine-grained saliency map."""
    return run_pipeline_detailed(image, deepmap, config).final
