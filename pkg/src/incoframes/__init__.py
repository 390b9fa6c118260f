"""Incoherent unit-norm frame design and applications.

The package builds frames whose worst pairwise correlation is pushed toward
the Welch bound by solving one small convex trust-region subproblem per
vector per sweep, certifies the solutions through their optimality
conditions, and applies the frames to sparse recovery and to
coherence-preserving dictionary adaptation.
"""
from ._version import __version__
from .design import (
    DesignConfig,
    SweepReport,
    SweepStats,
    choose_radius,
    initialize,
    random_unit_frame,
    reduce_neighbors,
    run,
    sweep,
)
from .errors import (
    DegenerateVector,
    FrameFormatError,
    InvalidInput,
    NumericsFailure,
    RankDeficient,
    SolverStall,
)
from .frameio import (
    environment_fingerprint,
    extract_patches,
    load_patch_matrix,
    read_frame,
    read_image,
    read_pgm,
    write_correlation_profile,
    write_cs_table,
    write_error_trace,
    write_frame,
    write_line_chart,
    write_manifest,
)
from .frames import (
    EtfCertificate,
    Frame,
    FrameMetrics,
    average_coherence,
    canonicalize_signs,
    certify_etf,
    frame_metrics,
    frame_potential,
    make_simplex_etf,
    mutual_coherence,
    unit_columns,
    welch_bound,
)
from .linalg import SvdResult, least_squares, svd, unit_polar
from .minimax import (
    KktResiduals,
    SubproblemSolution,
    TrustSubproblem,
    kkt_residuals,
    solve_subproblem,
    stall_detect,
)
from .sparse import (
    AdaptationRun,
    CsExperiment,
    CsResult,
    adapt_dictionary,
    make_planted_dataset,
    omp,
    random_sensing_frame,
    run_cs_experiment,
)

__all__ = [
    "__version__",
    "AdaptationRun",
    "CsExperiment",
    "CsResult",
    "DegenerateVector",
    "DesignConfig",
    "EtfCertificate",
    "Frame",
    "FrameFormatError",
    "FrameMetrics",
    "InvalidInput",
    "KktResiduals",
    "NumericsFailure",
    "RankDeficient",
    "SolverStall",
    "SubproblemSolution",
    "SvdResult",
    "SweepReport",
    "SweepStats",
    "TrustSubproblem",
    "adapt_dictionary",
    "average_coherence",
    "canonicalize_signs",
    "certify_etf",
    "choose_radius",
    "environment_fingerprint",
    "extract_patches",
    "frame_metrics",
    "frame_potential",
    "initialize",
    "kkt_residuals",
    "least_squares",
    "load_patch_matrix",
    "make_planted_dataset",
    "make_simplex_etf",
    "mutual_coherence",
    "omp",
    "random_sensing_frame",
    "random_unit_frame",
    "read_frame",
    "read_image",
    "read_pgm",
    "reduce_neighbors",
    "run",
    "run_cs_experiment",
    "solve_subproblem",
    "stall_detect",
    "svd",
    "sweep",
    "unit_columns",
    "unit_polar",
    "welch_bound",
    "write_correlation_profile",
    "write_cs_table",
    "write_error_trace",
    "write_frame",
    "write_line_chart",
    "write_manifest",
]
