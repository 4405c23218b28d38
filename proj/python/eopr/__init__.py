"""Panel-data counterfactual estimation.

Ellipsoidal optimal-recovery synthetic control with exact pre-intervention
interpolation and per-period worst-case bands, plus classical synthetic
control (SC), demeaned SC and robust SC baselines, a seeded low-rank panel
simulator, and placebo / ablation / sweep evaluation utilities.

The heavy lifting lives in the compiled extension ``eopr._core``; this
package re-exports its public surface.
"""

from ._core import (  # noqa: F401
    AblationRow,
    AlignedUnit,
    AlignmentSpec,
    EllipsoidModel,
    EoprError,
    EoprEstimate,
    EoprFit,
    NormalizationRecord,
    PanelData,
    PlaceboEntry,
    PlaceboReport,
    RepresentorSystem,
    RscConfig,
    ScoreReport,
    SimOutput,
    SimulationConfig,
    SweepRow,
    WeightedEstimate,
    __version__,
    align_by_intervention,
    default_lambda_grid,
    denormalize,
    denormalize_series,
    dsc_fit,
    effect_series,
    extrapolate,
    fit_eopr,
    format_iso_date,
    generate_panel,
    inject_effect,
    lambda_ablation,
    latent_value,
    learn_ellipsoid,
    load_alignment_spec,
    load_panel,
    moving_average,
    normalize,
    parse_iso_date,
    placebo_run,
    representors,
    rmse,
    score,
    sc_fit,
    rsc_fit,
    select_lambda,
    smooth_panel,
    solve_simplex_qp,
    split,
    sweep,
    treated_from_controls,
    worst_case_band,
    write_long_panel,
    write_wide_panel,
)

__all__ = [name for name in dir() if not name.startswith("_")]
