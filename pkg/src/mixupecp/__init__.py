"""Regime-transition detection from mixup Euler characteristic profiles.

Adjacent windows of a delay-embedded series are compared through the Euler
characteristic of the intersection of their ball unions, computed exactly
from Alpha filtrations. Variance, fractal-dimension and rolling-mean
signals complement it, and a permutation test calibrates it.
"""

__version__ = "0.1.0"

from .ecc import MixupProfile, StepFunction, detection_stat, ecc, mixup_ecp, variance_stats
from .embedding import EmbeddingParams, TimeSeries, select_delay_mi, select_dim_fnn, takens_embed
from .geometry import Filtration, PointCloud, alpha_filtration, meb
from .inference import MultiDelayParams, multi_delay_stat, perm_test
from .signals import combined_onset, cusum_baseline, signal_F, signal_G, signal_RM, signal_S

__all__ = [
    "EmbeddingParams", "Filtration", "MixupProfile", "MultiDelayParams", "PointCloud",
    "StepFunction", "TimeSeries", "alpha_filtration", "combined_onset", "cusum_baseline",
    "detection_stat", "ecc", "meb", "mixup_ecp", "multi_delay_stat", "perm_test",
    "select_delay_mi", "select_dim_fnn", "signal_F", "signal_G", "signal_RM", "signal_S",
    "takens_embed", "variance_stats",
]
