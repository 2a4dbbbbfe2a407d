"""Density-guided placement of periodic backup windows."""
from backupsched.density import (
    DensityEstimate,
    periodic_kde,
    scott_bandwidth,
    silverman_bandwidth,
)
from backupsched.intent import IntentError, parse_intent, render_intent
from backupsched.kernels import BACKEND
from backupsched.sampler import (
    IllPosedRequest,
    SamplingDistribution,
    SamplingOutcome,
    SupportExhausted,
    apply_exclusion,
    build_sampling_distribution,
    greedy_sample,
    mask_concurrency,
    mask_day_cap,
)
from backupsched.schedule import (
    IntentParams,
    JobWindow,
    PeriodConfig,
    Schedule,
    count_active,
    max_concurrency,
    parse_schedule,
    serialize_schedule,
    validate_request,
    validate_spacing,
)

__version__ = "0.1.0"
