"""Randomized voting rules with provable metric distortion guarantees."""

__version__ = "0.1.0"

from .elections import (  # noqa: F401
    Election,
    Lottery,
    MarginMatrix,
    Multiset,
    Voter,
    candidate_beats_power,
    election_from_file,
    election_from_json,
    election_to_file,
    election_to_json,
    make_election,
    margin_lottery_vs_lottery,
    margin_matrix,
    margin_set_vs_candidate,
    multiset_beats,
)
from .linprog import (  # noqa: F401
    GameSolution,
    LinearProgram,
    LPSolution,
    solve_lp,
    solve_zero_sum,
)
from .lotteries import (  # noqa: F401
    StableLotteryError,
    StableLotteryPair,
    as_exact_lottery,
    maximal_lottery,
    stable_k_lottery,
    verify_stability,
)
from .sampling import (  # noqa: F401
    RepApxCertificate,
    RepApxSamplingError,
    check_repapx,
    empirical_sampling,
    sample_size_ml,
    sample_size_sl,
    sample_until_repapx,
)
from .pruning import (  # noqa: F401
    QuasiKernel,
    ThresholdDigraph,
    build_threshold_digraph,
    dump_digraph,
    is_theta_regular,
    lambda_bound,
    quasi_kernel,
    repapx_pruned_lottery,
    restrict_election,
    verify_quasi_kernel,
)
from .distortion import (  # noqa: F401
    BiasedMetricSpec,
    DistortionReport,
    StepFunction,
    biased_distortion,
    biased_metric_distances,
    biased_metric_search,
    biased_report,
    check_sufficient_condition,
    check_two_hop_general,
    ell_function,
    lp_distortion,
    r_function,
    ratio_certificates,
    strong_consistency,
)
from .mixing import (  # noqa: F401
    MixParams,
    SampleScaleError,
    UniformMultiset,
    appendix_b_checks,
    flatten_to_uniform,
    mix_params,
    mixing_requirements,
    mixing_rule,
    multiset_search,
)
from .generators import (  # noqa: F401
    FAMILIES,
    candidate_names,
    generate_election,
    line_ranking,
    load_corpus,
)
from .sweep import (  # noqa: F401
    RULES,
    SweepConfig,
    run_sweep,
)
