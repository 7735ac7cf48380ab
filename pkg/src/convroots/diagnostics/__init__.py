"""Ratio series, class verdicts, hypothesis checks and inequality sweeps."""
from .ratios import (EmptyRangeError, RatioSeries, local_ratio_conv2, local_ratio_shift,
                     ratio_conv2, ratio_shift, tail_ratio)
from .verdict import (INCONCLUSIVE, MEMBER, NONMEMBER, ClassSpec, DiagConfig, Verdict,
                      classify)
from .conditions import (check_condition_liminf, dstar, find_minimal_n0, lemma21_bridge_check,
                         weak_equivalence)
from .kesten import KestenCertificate, KestenConstraintError, kesten_verify
from .windows import WindowIdentityReport, esscher_window_check
from .example61 import CheckResult, repro_example61

__all__ = [
    "RatioSeries", "EmptyRangeError", "ratio_shift", "ratio_conv2", "local_ratio_shift",
    "local_ratio_conv2", "tail_ratio", "Verdict", "ClassSpec", "DiagConfig", "classify",
    "MEMBER", "NONMEMBER", "INCONCLUSIVE", "check_condition_liminf", "find_minimal_n0",
    "dstar", "lemma21_bridge_check", "weak_equivalence", "KestenCertificate",
    "KestenConstraintError", "kesten_verify", "WindowIdentityReport", "esscher_window_check",
    "CheckResult", "repro_example61",
]
