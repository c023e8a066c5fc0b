"""Kinematic surface fitting: stationary velocity fields for oriented point clouds."""

from ._core import (  # noqa: F401
    CloudFormat,
    CoreLineConfig,
    CoreLineMode,
    FieldOrder,
    FieldParams,
    FitConfig,
    FitReport,
    HaltReason,
    KinfitError,
    NormalizationTransform,
    PointCloud,
    Polyline,
    PolylineKind,
    ShapeKind,
    ShapeSpec,
    StreamlineOptions,
    StreamlineResult,
    classify_critical_point,
    convergence_point_first_order,
    convergence_point_second_order,
    distance,
    eval_velocity,
    export_polylines,
    extract_core_lines,
    fit,
    generate,
    import_polylines,
    jerk,
    load_cloud,
    merge_with_outlier,
    projection_metric,
    read_report,
    recenter_first_order,
    report_to_json,
    save_cloud_xyzn,
    select_seed,
    streamline_closed_form,
    streamline_integrate,
    swirl_strength,
    symmetry_axis_first_order,
    velocity_jacobian,
    write_report,
)

__all__ = [name for name in dir() if not name.startswith("_")]
