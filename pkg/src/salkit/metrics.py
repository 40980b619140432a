"""Saliency benchmark metrics: PR/ROC curves, F-measure, MAE, AUC.

Binary masks are plain 2-D boolean arrays. Maps are binarized by comparing
their 0..255 quantized gray level strictly against an integer threshold, the
same quantization the PGM writer uses, so on-disk and in-memory maps score
identically. Ground truth is binarized at gray level > 127.

Per image: aveF uses the adaptive threshold (twice the map mean), MAE is the
mean absolute error, AUC is the trapezoidal area under the threshold-swept
ROC curve. Dataset level: aveF/MAE/AUC are arithmetic means of the per-image
values, curves are averaged pointwise per threshold, and the summary maxF is
the maximum F-measure along the threshold-averaged PR curve.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .image import quantize_levels, read_pnm

GT_LEVEL = 127
N_THRESHOLDS = 256

_trapezoid = getattr(np, "trapezoid", None) or np.trapz


def binarize(saliency, threshold):
    """Boolean mask of pixels whose 0..255 level strictly exceeds threshold."""
    return quantize_levels(saliency.values, 255) > threshold


def precision_recall(mask, gt):
    """(precision, recall); an empty mask has precision 1.0 by convention."""
    if mask.shape != gt.shape:
        raise ValueError("mask and ground truth dimensions differ")
    g = int(gt.sum())
    if g == 0:
        raise ValueError("recall is undefined for an empty ground truth")
    m = int(mask.sum())
    tp = int(np.logical_and(mask, gt).sum())
    precision = 1.0 if m == 0 else tp / m
    return precision, tp / g


def roc_point(mask, gt):
    """(false positive rate, true positive rate) for one threshold."""
    if mask.shape != gt.shape:
        raise ValueError("mask and ground truth dimensions differ")
    g = int(gt.sum())
    neg = gt.size - g
    if g == 0 or neg == 0:
        raise ValueError("ROC needs a ground truth that is neither empty nor full")
    tp = int(np.logical_and(mask, gt).sum())
    fp = int(mask.sum()) - tp
    return fp / neg, tp / g


def f_measure(precision, recall, eta2=0.3):
    """Weighted harmonic mean (1+eta2)*p*r / (eta2*p + r); 0 when p = r = 0."""
    if precision == 0.0 and recall == 0.0:
        return 0.0
    return (1.0 + eta2) * precision * recall / (eta2 * precision + recall)


def adaptive_threshold(saliency):
    """Gray level for twice the map mean, clamped to 1.0 before quantizing."""
    return int(quantize_levels(min(2.0 * float(saliency.values.mean()), 1.0), 255))


def mae(saliency, gt):
    """Mean absolute pixel-wise error against a boolean ground truth."""
    if saliency.values.shape != gt.shape:
        raise ValueError("map and ground truth dimensions differ")
    return float(np.abs(saliency.values - gt.astype(np.float64)).mean())


@dataclass(frozen=True)
class Curves:
    """Threshold sweeps: pr/roc are (256, 3) arrays of
    (threshold, precision, recall) and (threshold, fpr, tpr); auc is the
    trapezoidal area under the ROC staircase."""

    pr: np.ndarray
    roc: np.ndarray
    auc: float


def _threshold_counts(saliency, gt):
    # tp/fp at every threshold via suffix-summed level histograms.
    levels = quantize_levels(saliency.values, 255).ravel()
    flat_gt = gt.ravel()
    hist_pos = np.bincount(levels[flat_gt], minlength=N_THRESHOLDS)
    hist_neg = np.bincount(levels[~flat_gt], minlength=N_THRESHOLDS)
    # mask at threshold t keeps levels > t
    tp = np.cumsum(hist_pos[::-1])[::-1]
    fp = np.cumsum(hist_neg[::-1])[::-1]
    return np.append(tp[1:], 0), np.append(fp[1:], 0)


def auc_from_roc(fpr, tpr):
    """Trapezoidal area with (0,0) and (1,1) appended, sorted by (fpr, tpr)."""
    f = np.append(fpr, [0.0, 1.0])
    t = np.append(tpr, [0.0, 1.0])
    order = np.lexsort((t, f))
    return float(_trapezoid(t[order], f[order]))


def curves(saliency, gt):
    """Sweep all 256 thresholds and compute the PR curve, ROC curve, and AUC."""
    g = int(gt.sum())
    neg = gt.size - g
    if g == 0 or neg == 0:
        raise ValueError("ROC needs a ground truth that is neither empty nor full")
    tp, fp = _threshold_counts(saliency, gt)
    selected = tp + fp
    thresholds = np.arange(N_THRESHOLDS, dtype=np.float64)
    precision = np.where(selected > 0, tp / np.maximum(selected, 1), 1.0)
    recall = tp / g
    fpr = fp / neg
    pr = np.column_stack([thresholds, precision, recall])
    roc = np.column_stack([thresholds, fpr, recall])
    return Curves(pr=pr, roc=roc, auc=auc_from_roc(fpr, recall))


def max_f_from_pr(precision, recall, eta2=0.3):
    return max(f_measure(p, r, eta2) for p, r in zip(precision, recall))


@dataclass
class ImageEval:
    name: str
    ave_f: float
    max_f: float
    auc: float
    mae: float


@dataclass
class EvalReport:
    """Per-image rows plus dataset summary and mean curves.

    The summary maxF comes from the mean PR curve, not from averaging the
    per-image maxima.
    """

    per_image: list
    mean_ave_f: float
    max_f: float
    mean_auc: float
    mean_mae: float
    mean_pr: np.ndarray
    mean_roc: np.ndarray
    unmatched: list = field(default_factory=list)


def binarize_gt(image):
    """Ground-truth PGM to boolean mask: gray level strictly above 127."""
    if image.channels != 1:
        raise ValueError("ground-truth maps must be single-channel")
    return quantize_levels(image.pixels[:, :, 0], 255) > GT_LEVEL


def evaluate_pair(saliency, gt, eta2=0.3):
    """All per-image metrics for one saliency map / ground truth pair."""
    t = adaptive_threshold(saliency)
    p, r = precision_recall(binarize(saliency, t), gt)
    c = curves(saliency, gt)
    return {
        "ave_f": f_measure(p, r, eta2),
        "max_f": max_f_from_pr(c.pr[:, 1], c.pr[:, 2], eta2),
        "auc": c.auc,
        "mae": mae(saliency, gt),
        "curves": c,
    }


def _find_pairs(pred_dir, gt_dir):
    exts = (".pgm", ".pnm", ".ppm")
    preds = sorted(f for f in os.listdir(pred_dir) if f.lower().endswith(exts))
    pairs, unmatched = [], []
    for fname in preds:
        stem = os.path.splitext(fname)[0]
        for ext in exts:
            gt_path = os.path.join(gt_dir, stem + ext)
            if os.path.exists(gt_path):
                pairs.append((stem, os.path.join(pred_dir, fname), gt_path))
                break
        else:
            unmatched.append(fname)
    return pairs, unmatched


def evaluate_dataset(pred_dir, gt_dir, eta2=0.3):
    """Evaluate every matched prediction/ground-truth stem pair.

    Unmatched prediction files are recorded on the report and skipped.
    Raises ValueError when nothing matches.
    """
    pairs, unmatched = _find_pairs(pred_dir, gt_dir)
    if not pairs:
        raise ValueError(f"no prediction/ground-truth pairs matched between {pred_dir} and {gt_dir}")

    from .pipeline import SaliencyMap

    rows = []
    pr_sum = np.zeros((N_THRESHOLDS, 2))
    roc_sum = np.zeros((N_THRESHOLDS, 2))
    for stem, pred_path, gt_path in pairs:
        pred = read_pnm(pred_path)
        if pred.channels != 1:
            raise ValueError(f"{pred_path}: saliency maps must be single-channel")
        saliency = SaliencyMap(pred.pixels[:, :, 0])
        gt = binarize_gt(read_pnm(gt_path))
        if gt.shape != saliency.values.shape:
            raise ValueError(f"{pred_path}: size differs from its ground truth")
        result = evaluate_pair(saliency, gt, eta2)
        rows.append(
            ImageEval(
                name=stem,
                ave_f=result["ave_f"],
                max_f=result["max_f"],
                auc=result["auc"],
                mae=result["mae"],
            )
        )
        pr_sum += result["curves"].pr[:, 1:]
        roc_sum += result["curves"].roc[:, 1:]

    count = len(rows)
    thresholds = np.arange(N_THRESHOLDS, dtype=np.float64)
    mean_pr = np.column_stack([thresholds, pr_sum / count])
    mean_roc = np.column_stack([thresholds, roc_sum / count])
    return EvalReport(
        per_image=rows,
        mean_ave_f=float(np.mean([r.ave_f for r in rows])),
        max_f=max_f_from_pr(mean_pr[:, 1], mean_pr[:, 2], eta2),
        mean_auc=float(np.mean([r.auc for r in rows])),
        mean_mae=float(np.mean([r.mae for r in rows])),
        mean_pr=mean_pr,
        mean_roc=mean_roc,
        unmatched=unmatched,
    )
