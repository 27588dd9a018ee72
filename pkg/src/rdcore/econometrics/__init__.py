"""Zero-inflated negative binomial estimation, clustered inference and Vuong tests."""

from .report import (
    format_comparison, format_fit_report, format_vuong, stars, write_coefficients, write_vuong,
)
from .specs import (
    PRESETS, VUONG_PAIRS, Design, ModelSpec, build_design, reference_levels, resolve_spec, zinb_fit,
)
from .vuong import IndistinguishableModels, VuongResult, vuong_from_contributions, vuong_test
from .zinb import (
    IdentificationError,
    NonFiniteLikelihood,
    ZinbFit,
    fit_zinb_arrays,
    simulate_zinb,
    zinb_gradient,
    zinb_loglik,
    zinb_loglik_obs,
    zinb_score_obs,
)
