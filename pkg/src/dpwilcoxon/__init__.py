"""Differentially private Wilcoxon signed-rank testing (Pratt variant)."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    DPWilcoxonError,
    EmptyInputError,
    ParameterError,
    ResourceError,
    ValidationError,
)
from .ranks import (  # noqa: E402
    PairedDataset,
    RankedTable,
    assign_midranks,
    compute_signed_differences,
    count_nonzero,
    pratt_statistic,
    wilcoxon_statistic,
)
from .privacy import (  # noqa: E402
    LaplaceNoise,
    PrivacyParams,
    PrivateStatistic,
    laplace_sample,
    laplace_upper_tail_quantile,
    pratt_sensitivity,
    private_pratt_releases,
    private_pratt_statistic,
)
from .inference import (  # noqa: E402
    CriticalValue,
    PrivateTestResult,
    ReferenceDistribution,
    complete_test,
    critical_value,
    normal_quantile,
    null_sigma,
    p_value,
    simulate_reference,
)
