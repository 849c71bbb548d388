"""Toy car-insurance data: who drives a flashy color, who files a claim.

Two latent traits drive everything. Aggressiveness A raises both the
chance of picking a flashy car color and the chance of a claim;
inattention I raises claims and correlates with age. Gender s shifts the
color choice but has no effect on claims, so color ends up correlated
with both the label and the sensitive attribute while carrying no causal
signal, which is exactly the trap a fair model must avoid.
"""

from __future__ import annotations

import numpy as np

from .data import Column, ColumnSchema, Dataset

# Covariance of (inattention, age); age is centered at 40.
_COV_IA = np.array([[1.0, 4.0], [4.0, 20.0]])
_CHOL_IA = np.linalg.cholesky(_COV_IA)

#: Schema matching the CSV layout written by the CLI synth command.
SCHEMA = ColumnSchema(
    columns=(
        Column("color", role="feature", kind="numeric"),
        Column("age", role="feature", kind="numeric"),
        Column("gender", role="sensitive", kind="numeric"),
        Column("claim", role="label", kind="numeric"),
    )
)


def generate(
    n: int,
    seed: int,
    noise_variance: float = 0.1,
    color_gender_weight: float = 1.0,
    return_latents: bool = False,
):
    """Draw n samples of the scenario.

    Draw order is fixed (gender, then (inattention, age), then
    aggressiveness, then noise), so a given (n, seed) always yields the
    same dataset. Variables:

        s ~ uniform {0, 1}
        (I, a) ~ bivariate normal, mean (0, 40), covariance [[1,4],[4,20]]
        A ~ N(0, 1)
        eps ~ N(0, noise_variance)
        color c = 1[color_gender_weight * s + A > 1]
        claim y = 1[A + I + eps > 0]

    The default color_gender_weight of 1.0 reproduces the reference
    correlation structure corr(c, s) = 0.36 and corr(c, A) = 0.68.

    Returns the Dataset with features (color, age), or a
    (Dataset, latents) pair when return_latents is set; latents is a
    dict with keys "aggressiveness", "inattention", "noise".
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if noise_variance < 0:
        raise ValueError("noise_variance must be >= 0")
    rng = np.random.default_rng(seed)
    s = rng.integers(0, 2, size=n)
    ia = rng.standard_normal((n, 2)) @ _CHOL_IA.T + np.array([0.0, 40.0])
    inattention = ia[:, 0]
    age = ia[:, 1]
    aggressiveness = rng.standard_normal(n)
    noise = rng.standard_normal(n) * np.sqrt(noise_variance)

    color = (color_gender_weight * s + aggressiveness > 1.0).astype(float)
    claim = (aggressiveness + inattention + noise > 0.0).astype(np.int64)

    ds = Dataset(
        features=np.column_stack([color, age]),
        sensitive=s,
        labels=claim,
        feature_names=["color", "age"],
    )
    if return_latents:
        return ds, {
            "aggressiveness": aggressiveness,
            "inattention": inattention,
            "noise": noise,
        }
    return ds
