"""Monte Carlo experiments on ``A + X``."""

from .edge import (EdgeStatError, EdgeStatResult, EdgeStatSample, collect_edge_counts, edge_statistics,
                   matched_z1, real_edge_comparison, rescale, two_sample_chi2)
from .girko import (AnnulusBump, Bump, GirkoObservables, GirkoResult, SumF, TailResult, girko_identity_test,
                    girko_observables, l0_direct, l0_integral, n0_from_svals, n0_resolvent, shifted_point,
                    smallest_singular_tail)
from .harness import TrialReport, mean_se, run_trials, wilson_interval
from .kernel import KernelEval, ginibre_kernel, kernel_eval, p1, p1_bin_profile, p2_bin_profile, p_gin_k
from .local_law import LocalLawResult, default_B, default_pairs, local_law_trial
from .outliers import ClusterCountResult, NoOutlierResult, cluster_count_trial, no_outlier_trial
