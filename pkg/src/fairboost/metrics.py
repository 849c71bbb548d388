"""Accuracy and group fairness measurement, plus permutation importance.

All fairness metrics operate on hard 0/1 classifications (threshold 0.5
upstream), matching how results are usually tabulated. Rates are plain
conditional frequencies; a metric whose conditioning cell is empty
raises MetricError rather than guessing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MetricError


def _check_binary(name, v):
    v = np.asarray(v)
    if v.ndim != 1 or v.size == 0:
        raise MetricError(f"{name} must be a nonempty 1-D array")
    if not np.isin(v, (0, 1)).all():
        raise MetricError(f"{name} must contain only 0/1")
    return v.astype(np.int64)


def _group_rates(preds, s):
    """Positive rate per sensitive group, (rate0, rate1)."""
    rates = []
    for g in (0, 1):
        mask = s == g
        if not mask.any():
            raise MetricError(f"sensitive group s={g} is empty")
        rates.append(preds[mask].mean())
    return rates[0], rates[1]


def accuracy(preds, labels) -> float:
    preds = _check_binary("preds", preds)
    labels = _check_binary("labels", labels)
    if preds.shape != labels.shape:
        raise MetricError("preds and labels lengths differ")
    return float((preds == labels).mean())


def p_rule(preds, s) -> float:
    """min(rate1/rate0, rate0/rate1) of group positive rates, in [0, 1].

    Conventions at the boundary: both rates zero counts as fair (1.0),
    exactly one rate zero as maximally unfair (0.0).
    """
    preds = _check_binary("preds", preds)
    s = _check_binary("s", s)
    if preds.shape != s.shape:
        raise MetricError("preds and s lengths differ")
    r0, r1 = _group_rates(preds, s)
    if r0 == 0.0 and r1 == 0.0:
        return 1.0
    if r0 == 0.0 or r1 == 0.0:
        return 0.0
    return float(min(r1 / r0, r0 / r1))


def disparate_impact(preds, s) -> float:
    """Absolute difference of the two group positive rates."""
    preds = _check_binary("preds", preds)
    s = _check_binary("s", s)
    if preds.shape != s.shape:
        raise MetricError("preds and s lengths differ")
    r0, r1 = _group_rates(preds, s)
    return float(abs(r1 - r0))


def disparate_mistreatment(preds, labels, s) -> tuple[float, float]:
    """(d_fpr, d_fnr): gaps of false positive and false negative rates.

    d_fpr = |P(pred=1 | y=0, s=1) - P(pred=1 | y=0, s=0)| and d_fnr the
    analogue on false negatives. Every conditioning cell (s, y) must be
    nonempty.
    """
    preds = _check_binary("preds", preds)
    labels = _check_binary("labels", labels)
    s = _check_binary("s", s)
    if not (preds.shape == labels.shape == s.shape):
        raise MetricError("input lengths differ")

    def cell_rate(g, y, positive):
        mask = (s == g) & (labels == y)
        if not mask.any():
            raise MetricError(f"empty cell s={g}, y={y}")
        return (preds[mask] == positive).mean()

    d_fpr = abs(cell_rate(1, 0, 1) - cell_rate(0, 0, 1))
    d_fnr = abs(cell_rate(1, 1, 0) - cell_rate(0, 1, 0))
    return float(d_fpr), float(d_fnr)


@dataclass
class FairnessReport:
    """All headline metrics for one (preds, labels, s) evaluation."""

    accuracy: float
    p_rule: float
    disparate_impact: float
    d_fpr: float
    d_fnr: float
    group_positive_rates: tuple[float, float]
    group_sizes: tuple[int, int]

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "p_rule": self.p_rule,
            "disparate_impact": self.disparate_impact,
            "d_fpr": self.d_fpr,
            "d_fnr": self.d_fnr,
            "group_positive_rates": list(self.group_positive_rates),
            "group_sizes": list(self.group_sizes),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FairnessReport":
        required = {
            "accuracy",
            "p_rule",
            "disparate_impact",
            "d_fpr",
            "d_fnr",
            "group_positive_rates",
            "group_sizes",
        }
        missing = required - set(d)
        if missing:
            raise MetricError(f"report is missing fields {sorted(missing)}")
        rep = cls(
            accuracy=float(d["accuracy"]),
            p_rule=float(d["p_rule"]),
            disparate_impact=float(d["disparate_impact"]),
            d_fpr=float(d["d_fpr"]),
            d_fnr=float(d["d_fnr"]),
            group_positive_rates=tuple(float(x) for x in d["group_positive_rates"]),
            group_sizes=tuple(int(x) for x in d["group_sizes"]),
        )
        for name in ("accuracy", "p_rule"):
            x = getattr(rep, name)
            if not 0.0 <= x <= 1.0:
                raise MetricError(f"{name} out of [0, 1]: {x}")
        for name in ("disparate_impact", "d_fpr", "d_fnr"):
            if getattr(rep, name) < 0.0:
                raise MetricError(f"{name} must be >= 0")
        return rep


def fairness_report(preds, labels, s) -> FairnessReport:
    """Compute every metric at once for one prediction set."""
    preds = _check_binary("preds", preds)
    labels = _check_binary("labels", labels)
    s = _check_binary("s", s)
    r0, r1 = _group_rates(preds, s)
    d_fpr, d_fnr = disparate_mistreatment(preds, labels, s)
    return FairnessReport(
        accuracy=accuracy(preds, labels),
        p_rule=p_rule(preds, s),
        disparate_impact=disparate_impact(preds, s),
        d_fpr=d_fpr,
        d_fnr=d_fnr,
        group_positive_rates=(float(r0), float(r1)),
        group_sizes=(int((s == 0).sum()), int((s == 1).sum())),
    )


def permutation_importance(model, dataset, feature_index: int, n_repeats: int = 10, seed: int = 0) -> float:
    """Accuracy drop when one feature column is shuffled.

    Mean over n_repeats of (baseline accuracy - accuracy after a seeded
    shuffle of column feature_index). Zero when the model never looks at
    the feature; can be negative by chance.
    """
    from .training import classify

    if not 0 <= feature_index < dataset.p:
        raise ValueError(f"feature_index {feature_index} out of range for p={dataset.p}")
    if n_repeats < 1:
        raise ValueError("n_repeats must be >= 1")
    X = dataset.features
    base = accuracy(classify(model, X), dataset.labels)
    rng = np.random.default_rng(seed)
    drops = []
    for _ in range(n_repeats):
        shuffled = X.copy()
        shuffled[:, feature_index] = X[rng.permutation(dataset.n), feature_index]
        drops.append(base - accuracy(classify(model, shuffled), dataset.labels))
    return float(np.mean(drops))


def group_score_histograms(model, dataset, n_bins: int):
    """Normalized histograms of predicted probabilities per group.

    Returns (bin_edges, mass_s0, mass_s1) where the edges split [0, 1]
    into n_bins equal bins and each mass vector sums to 1.
    """
    from .training import predict_proba

    if n_bins < 2:
        raise ValueError("n_bins must be >= 2")
    s = dataset.sensitive
    probs = predict_proba(model, dataset.features)
    edges = np.linspace(0.0, 1.0, n_bins + 1)
    masses = []
    for g in (0, 1):
        mask = s == g
        if not mask.any():
            raise MetricError(f"sensitive group s={g} is empty")
        counts, _ = np.histogram(probs[mask], bins=edges)
        masses.append(counts / mask.sum())
    return edges, masses[0], masses[1]
