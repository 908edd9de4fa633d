"""poselab: landmark-to-pose geometry, binned angle losses, synthetic studies."""

from .camera import BehindCameraError, CameraIntrinsics, Pose, default_intrinsics, project
from .facemodel import (
    FaceModel,
    KeypointSubset,
    SyntheticScene,
    builtin_mean_face,
    deform_subject,
    jitter_landmarks,
    load_face_model,
    make_scene,
    named_subsets,
    save_face_model,
    stretch_model,
    subset_by_name,
)
from .harness import (
    StudyConfig,
    StudyResult,
    StudyRow,
    emit_csv,
    emit_svg,
    read_study_csv,
    run_alpha_ablation,
    run_jitter_study,
    run_lowres_study,
    run_stretch_study,
    run_subset_study,
)
from .multiloss import (
    AngleHeadOutput,
    BinSpec,
    MultiLossConfig,
    ToyNet,
    bin_angle,
    cross_entropy,
    expected_angle,
    load_toynet,
    multi_loss,
    multi_loss_gradient,
    predict_angles,
    save_toynet,
    softmax,
    train_toy,
)
from .pnp import LMConfig, PnPProblem, PnPSolution, jacobian, reprojection_residuals, solve_pnp
from .raster import Raster, augment_factor, degrade, rasterize, write_pgm
from .rotmath import (
    EulerAngles,
    angle_error,
    axis_angle_to_rotation,
    euler_to_rotation,
    rotation_to_axis_angle,
    rotation_to_euler,
    wrap_degrees,
)

__version__ = "0.1.0"

__all__ = [
    "AngleHeadOutput",
    "BehindCameraError",
    "BinSpec",
    "CameraIntrinsics",
    "EulerAngles",
    "FaceModel",
    "KeypointSubset",
    "LMConfig",
    "MultiLossConfig",
    "PnPProblem",
    "PnPSolution",
    "Pose",
    "Raster",
    "StudyConfig",
    "StudyResult",
    "StudyRow",
    "SyntheticScene",
    "ToyNet",
    "angle_error",
    "augment_factor",
    "axis_angle_to_rotation",
    "bin_angle",
    "builtin_mean_face",
    "cross_entropy",
    "default_intrinsics",
    "deform_subject",
    "degrade",
    "emit_csv",
    "emit_svg",
    "euler_to_rotation",
    "expected_angle",
    "jacobian",
    "jitter_landmarks",
    "load_face_model",
    "load_toynet",
    "make_scene",
    "multi_loss",
    "multi_loss_gradient",
    "named_subsets",
    "predict_angles",
    "project",
    "rasterize",
    "read_study_csv",
    "reprojection_residuals",
    "rotation_to_axis_angle",
    "rotation_to_euler",
    "run_alpha_ablation",
    "run_jitter_study",
    "run_lowres_study",
    "run_stretch_study",
    "run_subset_study",
    "save_face_model",
    "save_toynet",
    "softmax",
    "solve_pnp",
    "stretch_model",
    "subset_by_name",
    "train_toy",
    "wrap_degrees",
    "write_pgm",
]
