from ._cfgan import (
    cfd_mc,
    ecf,
    ecfd,
    ecfd_smoothed,
    mmd2,
    mmd2_rbf_dual,
    sample_frequencies,
    synthetic_sample,
    train_gan,
    two_sample_test,
    TwoSampleResult,
)

__all__ = [
    "cfd_mc",
    "ecf",
    "ecfd",
    "ecfd_smoothed",
    "mmd2",
    "mmd2_rbf_dual",
    "sample_frequencies",
    "synthetic_sample",
    "train_gan",
    "two_sample_test",
    "TwoSampleResult",
]
