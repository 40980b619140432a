"""SLIC superpixel oversegmentation.

Localized k-means in (L, a, b, x, y) space over the normalized Lab channels:
grid-seeded centers nudged to the lowest-gradient pixel of their 3x3
neighborhood, ten assignment/update sweeps restricted to 2Sx2S windows, then
a connectivity pass that folds stray fragments into their largest neighbor.
The whole procedure is deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

N_ITERATIONS = 10

_CROSS = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


@dataclass(frozen=True)
class SuperpixelSegmentation:
    """A pixel->region label map plus per-region summaries.

    labels : (h, w) int array with values in [0, n)
    features : (n, 3) mean normalized Lab vector per region
    sizes : (n,) pixel count per region
    boundary_flags : (n,) True when the region touches the image border
    """

    labels: np.ndarray
    features: np.ndarray
    sizes: np.ndarray
    boundary_flags: np.ndarray

    def __post_init__(self):
        labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        if labels.ndim != 2:
            raise ValueError(f"labels must be 2-D, got shape {labels.shape}")
        if labels.min() < 0:
            raise ValueError("labels must be non-negative")
        n = int(labels.max()) + 1
        counts = np.bincount(labels.ravel(), minlength=n)
        if np.any(counts == 0):
            raise ValueError("every label in [0, n) must be non-empty")
        if self.features.shape != (n, 3):
            raise ValueError(f"features must have shape ({n}, 3)")
        if not np.array_equal(np.asarray(self.sizes, dtype=np.int64), counts):
            raise ValueError("sizes must match per-label pixel counts")
        if self.boundary_flags.shape != (n,):
            raise ValueError(f"boundary_flags must have shape ({n},)")
        for name, arr in (
            ("labels", labels),
            ("features", np.ascontiguousarray(self.features, dtype=np.float64)),
            ("sizes", counts),
            ("boundary_flags", np.ascontiguousarray(self.boundary_flags, dtype=bool)),
        ):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self):
        return self.features.shape[0]

    @property
    def height(self):
        return self.labels.shape[0]

    @property
    def width(self):
        return self.labels.shape[1]


def superpixel_means(labels, image):
    """Per-region arithmetic mean of the normalized Lab channels.

    ``labels`` must cover [0, max] with no empty region.
    """
    lab = image.values
    if labels.shape != lab.shape[:2]:
        raise ValueError("label map and image dimensions differ")
    flat = labels.ravel()
    n = int(flat.max()) + 1
    counts = np.bincount(flat, minlength=n)
    if np.any(counts == 0):
        raise ValueError("labels must have no empty region")
    means = np.empty((n, 3))
    for c in range(3):
        means[:, c] = np.bincount(flat, weights=lab[:, :, c].ravel(), minlength=n) / counts
    return means


def _grid_shape(width, height, n_target):
    # Pick a (nx, ny) seed grid with roughly square cells whose product is
    # as close to n_target as possible; ties prefer more seeds, then a
    # wider-than-tall grid.
    base_x = math.sqrt(n_target * width / height)
    base_y = math.sqrt(n_target * height / width)
    best = None
    for nx in {max(1, math.floor(base_x)), min(width, max(1, math.ceil(base_x)))}:
        for ny in {max(1, math.floor(base_y)), min(height, max(1, math.ceil(base_y)))}:
            key = (abs(nx * ny - n_target), -nx * ny, -(nx - ny))
            if best is None or key < best[0]:
                best = (key, nx, ny)
    return best[1], best[2]


def _gradient_magnitude(lab):
    # Squared color difference of horizontal plus vertical neighbors,
    # edge-clamped.
    padded = np.pad(lab, ((1, 1), (1, 1), (0, 0)), mode="edge")
    dx = padded[1:-1, 2:] - padded[1:-1, :-2]
    dy = padded[2:, 1:-1] - padded[:-2, 1:-1]
    return (dx**2).sum(axis=2) + (dy**2).sum(axis=2)


def _seed_centers(lab, nx, ny):
    h, w = lab.shape[:2]
    grad = _gradient_magnitude(lab)
    centers = np.empty((nx * ny, 5))  # (L, a, b, y, x)
    k = 0
    for ky in range(ny):
        for kx in range(nx):
            cx = (kx + 0.5) * w / nx - 0.5
            cy = (ky + 0.5) * h / ny - 0.5
            px = min(max(int(math.floor(cx + 0.5)), 0), w - 1)
            py = min(max(int(math.floor(cy + 0.5)), 0), h - 1)
            y0, y1 = max(py - 1, 0), min(py + 2, h)
            x0, x1 = max(px - 1, 0), min(px + 2, w)
            window = grad[y0:y1, x0:x1]
            dy, dx = np.unravel_index(np.argmin(window), window.shape)
            sy, sx = y0 + dy, x0 + dx
            centers[k, :3] = lab[sy, sx]
            centers[k, 3] = sy
            centers[k, 4] = sx
            k += 1
    return centers


def _initial_labels(h, w, nx, ny):
    col = np.minimum((np.arange(w) * nx) // w, nx - 1)
    row = np.minimum((np.arange(h) * ny) // h, ny - 1)
    return row[:, None] * nx + col[None, :]


def _assign(lab, centers, labels_prev, spatial_weight, radius):
    h, w = lab.shape[:2]
    best_dist = np.full((h, w), np.inf)
    labels = labels_prev.copy()
    ys = np.arange(h, dtype=np.float64)
    xs = np.arange(w, dtype=np.float64)
    for k in range(centers.shape[0]):
        cy, cx = centers[k, 3], centers[k, 4]
        y0, y1 = max(int(cy) - radius, 0), min(int(cy) + radius + 1, h)
        x0, x1 = max(int(cx) - radius, 0), min(int(cx) + radius + 1, w)
        if y0 >= y1 or x0 >= x1:
            continue
        patch = lab[y0:y1, x0:x1]
        d_color = ((patch - centers[k, :3]) ** 2).sum(axis=2)
        d_space = (ys[y0:y1, None] - cy) ** 2 + (xs[None, x0:x1] - cx) ** 2
        dist = d_color + spatial_weight * d_space
        window = best_dist[y0:y1, x0:x1]
        better = dist < window
        window[better] = dist[better]
        labels[y0:y1, x0:x1][better] = k
    return labels


def _update_centers(lab, labels, centers):
    h, w = lab.shape[:2]
    flat = labels.ravel()
    n = centers.shape[0]
    counts = np.bincount(flat, minlength=n)
    updated = centers.copy()
    nonzero = counts > 0
    for c in range(3):
        sums = np.bincount(flat, weights=lab[:, :, c].ravel(), minlength=n)
        updated[nonzero, c] = sums[nonzero] / counts[nonzero]
    yy, xx = np.mgrid[0:h, 0:w]
    updated[nonzero, 3] = np.bincount(flat, weights=yy.ravel(), minlength=n)[nonzero] / counts[nonzero]
    updated[nonzero, 4] = np.bincount(flat, weights=xx.ravel(), minlength=n)[nonzero] / counts[nonzero]
    return updated


def _components(labels, n):
    """All 4-connected components per label, in (label, discovery) order."""
    comps = []
    objects = ndimage.find_objects(labels + 1)
    for lab_val in range(n):
        sl = objects[lab_val]
        if sl is None:
            continue
        mask = labels[sl] == lab_val
        sub, ncomp = ndimage.label(mask, structure=_CROSS)
        y_off, x_off = sl[0].start, sl[1].start
        for c in range(1, ncomp + 1):
            ys, xs = np.nonzero(sub == c)
            comps.append((lab_val, ys + y_off, xs + x_off))
    return comps


def _enforce_connectivity(labels, n):
    """Keep each label's largest fragment; merge the rest into neighbors.

    Every orphan fragment joins the largest currently-assigned adjacent
    region (tie: smallest label index). Orphans touching only other orphans
    wait for a later sweep; the grid is connected so this terminates.
    """
    h, w = labels.shape
    comps = _components(labels, n)
    keeper = {}
    for idx, (lab_val, ys, xs) in enumerate(comps):
        if lab_val not in keeper or len(ys) > len(comps[keeper[lab_val]][1]):
            keeper[lab_val] = idx

    out = np.full((h, w), -1, dtype=np.int64)
    region_size = {}
    orphans = []
    for idx, (lab_val, ys, xs) in enumerate(comps):
        if keeper[lab_val] == idx:
            out[ys, xs] = lab_val
            region_size[lab_val] = region_size.get(lab_val, 0) + len(ys)
        else:
            orphans.append((lab_val, ys, xs))

    while orphans:
        remaining = []
        progressed = False
        for lab_val, ys, xs in orphans:
            neighbors = set()
            for dy, dx in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                ny, nx = ys + dy, xs + dx
                ok = (ny >= 0) & (ny < h) & (nx >= 0) & (nx < w)
                vals = out[ny[ok], nx[ok]]
                neighbors.update(int(v) for v in vals[vals >= 0])
            if not neighbors:
                remaining.append((lab_val, ys, xs))
                continue
            target = max(neighbors, key=lambda v: (region_size[v], -v))
            out[ys, xs] = target
            region_size[target] += len(ys)
            progressed = True
        if remaining and not progressed:
            raise AssertionError("orphan fragments disconnected from all regions")
        orphans = remaining
    return out


def _compact_labels(labels):
    present = np.unique(labels)
    remap = np.full(int(present.max()) + 1, -1, dtype=np.int64)
    remap[present] = np.arange(len(present))
    return remap[labels], len(present)


def boundary_touch_flags(labels, n):
    flags = np.zeros(n, dtype=bool)
    for edge in (labels[0, :], labels[-1, :], labels[:, 0], labels[:, -1]):
        flags[np.unique(edge)] = True
    return flags


def oversegment(image, n_target, compactness=10.0, seed=0):
    """Oversegment a LabImage into roughly n_target superpixels.

    ``compactness`` trades color fidelity against spatial regularity; the
    spatial term is weighted by (compactness / S)^2 with S the expected
    superpixel spacing. ``seed`` is accepted for interface stability; the
    procedure itself has no random choices.
    """
    del seed
    h, w = image.height, image.width
    n_pixels = h * w
    if not 1 <= n_target <= n_pixels:
        raise ValueError(f"n_target must be in [1, {n_pixels}], got {n_target}")
    if compactness <= 0:
        raise ValueError(f"compactness must be positive, got {compactness}")

    lab = image.values
    spacing = math.sqrt(n_pixels / n_target)
    nx, ny = _grid_shape(w, h, n_target)
    centers = _seed_centers(lab, nx, ny)
    labels = _initial_labels(h, w, nx, ny)
    spatial_weight = (compactness / spacing) ** 2
    radius = int(math.ceil(spacing))

    for _ in range(N_ITERATIONS):
        labels = _assign(lab, centers, labels, spatial_weight, radius)
        centers = _update_centers(lab, labels, centers)

    labels = _enforce_connectivity(labels, centers.shape[0])
    labels, n = _compact_labels(labels)

    features = superpixel_means(labels, image)
    sizes = np.bincount(labels.ravel(), minlength=n)
    flags = boundary_touch_flags(labels, n)
    return SuperpixelSegmentation(labels, features, sizes, flags)


def write_label_map(labels, path):
    """Serialize a label map as 16-bit binary PGM, label value = gray level."""
    labels = np.asarray(labels)
    if labels.max() > 65535:
        raise ValueError("label values exceed 16-bit range")
    h, w = labels.shape
    header = f"P5\n{w} {h}\n65535\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(labels.astype(">u2").tobytes())


def read_label_map(path):
    """Read a label map written by :func:`write_label_map`."""
    from .image import read_pnm

    img = read_pnm(path)
    return np.rint(img.pixels[:, :, 0] * 65535).astype(np.int64)
