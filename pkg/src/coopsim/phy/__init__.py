from .mutual_info import (
    MODE_PRIORITY,
    LinkBudget,
    Mode,
    PowerAllocation,
    Scheme,
    amplified_mi,
    amplified_snr,
    combined_mi,
    decode_set,
    decodes,
    direct_mi,
    kappa,
    meets_rate,
    mutual_information,
    outcome,
    parallel_mi,
)

__all__ = [
    "MODE_PRIORITY",
    "LinkBudget",
    "Mode",
    "PowerAllocation",
    "Scheme",
    "amplified_mi",
    "amplified_snr",
    "combined_mi",
    "decode_set",
    "decodes",
    "direct_mi",
    "kappa",
    "meets_rate",
    "mutual_information",
    "outcome",
    "parallel_mi",
]
