"""Monte-Carlo sensitivity studies over synthetic face scenes.

Each study samples random head poses, builds ground-truth landmark
projections, perturbs one ingredient (keypoint subset, landmark jitter,
model stretch, raster resolution, loss weight), and reports wrap-aware
per-angle MAE plus their mean.  Trial i always uses seed master_seed+i,
so every study is bitwise reproducible and embarrassingly parallel in
principle while results stay order-deterministic.
"""

import math
from dataclasses import dataclass
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .camera import BehindCameraError, Pose, default_intrinsics, project
from .facemodel import (
    DuplicateIdError,
    ParseError,
    builtin_mean_face,
    deform_subject,
    jitter_landmarks,
    stretch_model,
    subset_by_name,
)
from .multiloss import (
    BinSpec,
    MultiLossConfig,
    TrainingDivergedError,
    predict_angles,
    train_toy,
)
from .pnp import DegenerateProblemError, PnPProblem, solve_pnp
from .raster import augment_factor, degrade_values, rasterize
from .rotmath import EulerAngles, angle_error

__all__ = [
    "CSV_HEADER",
    "StudyConfig",
    "StudyResult",
    "StudyRow",
    "emit_csv",
    "emit_svg",
    "landmark_dataset",
    "load_landmarks",
    "read_study_csv",
    "run_alpha_ablation",
    "run_jitter_study",
    "run_lowres_study",
    "run_stretch_study",
    "run_subset_study",
]

CSV_HEADER = "sweep,yaw_mae,pitch_mae,roll_mae,mae,trials"


@dataclass(frozen=True)
class StudyConfig:
    """Shared knobs for every study; unused fields are ignored per study."""

    trials: int = 500
    master_seed: int = 0
    yaw_range: float = 75.0
    pitch_range: float = 60.0
    roll_range: float = 50.0
    image_width: int = 450
    image_height: int = 450
    subsets: tuple = ("rigid-6", "core-12", "no-mouth-48", "all-68")
    rigid_sigma: float = 0.0
    nonrigid_sigma: float = 0.3
    jitter_sweep: tuple = (0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0)
    stretch_sweep: tuple = (0.6, 0.8, 1.0, 1.2, 1.4)
    scenes: int = 2500
    epochs: int = 30
    hidden_size: int = 128
    batch_size: int = 32
    learning_rate: float = 1e-3
    val_fraction: float = 0.2
    raster_size: int = 32
    lowres_schemes: tuple = ("none", "fixed10", "uniform1to10", "set5")
    lowres_factors: tuple = (1, 5, 10, 15)
    alpha_sweep: tuple = (0.0, 0.01, 0.1, 1.0, 2.0, 4.0)

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.scenes < 2:
            raise ValueError("scenes must be >= 2")
        spec = BinSpec()
        for name, value in (("yaw_range", self.yaw_range),
                            ("pitch_range", self.pitch_range),
                            ("roll_range", self.roll_range)):
            if not 0.0 < value < spec.max_angle:
                raise ValueError(f"{name} must be in (0, {spec.max_angle}), got {value}")
        if self.rigid_sigma < 0 or self.nonrigid_sigma < 0:
            raise ValueError("deformation sigmas must be >= 0")
        for name in ("subsets", "jitter_sweep", "stretch_sweep", "lowres_schemes",
                     "lowres_factors", "alpha_sweep"):
            if len(getattr(self, name)) == 0:
                raise ValueError(f"{name} must be nonempty")
        if any(m < 0 for m in self.jitter_sweep):
            raise ValueError("jitter magnitudes must be >= 0")
        if self.epochs < 0 or self.hidden_size < 1 or self.batch_size < 1:
            raise ValueError("bad training dimensions")
        if not 0.0 < self.val_fraction < 1.0:
            raise ValueError("val_fraction must be in (0, 1)")
        if self.raster_size < 1:
            raise ValueError("raster_size must be >= 1")


@dataclass(frozen=True)
class StudyRow:
    """One sweep point: per-angle MAE in degrees, their mean, trial counts.

    trials counts the trials that produced a solution; excluded counts
    trials dropped because the solver raised (kept out of the CSV, which
    has a pinned column set, but reported by the CLI).
    """

    sweep: str
    yaw_mae: float
    pitch_mae: float
    roll_mae: float
    mae: float
    trials: int
    excluded: int = 0


@dataclass(frozen=True)
class StudyResult:
    study: str
    rows: tuple


def _viewing_distance(model) -> float:
    return 2.0 * model.bounding_radius() / math.tan(math.radians(25.0))


def _sample_pose(rng, config: StudyConfig, tz_base: float) -> Pose:
    """Uniform pose draw; fixed draw order keeps streams reproducible."""
    yaw = rng.uniform(-config.yaw_range, config.yaw_range)
    pitch = rng.uniform(-config.pitch_range, config.pitch_range)
    roll = rng.uniform(-config.roll_range, config.roll_range)
    tx = rng.uniform(-0.3, 0.3)
    ty = rng.uniform(-0.3, 0.3)
    tz = tz_base * rng.uniform(0.8, 1.3)
    return Pose(EulerAngles(yaw, pitch, roll), np.array([tx, ty, tz]))


def _pose_errors(estimated: EulerAngles, truth: EulerAngles) -> np.ndarray:
    return np.array([
        angle_error(estimated.yaw, truth.yaw),
        angle_error(estimated.pitch, truth.pitch),
        angle_error(estimated.roll, truth.roll),
    ])


def _sweep_label(value) -> str:
    if isinstance(value, str):
        return value
    return repr(float(value))


def _finish_row(label, error_sum: np.ndarray, count: int, excluded: int) -> StudyRow:
    if count > 0:
        per_angle = error_sum / count
        return StudyRow(_sweep_label(label), float(per_angle[0]), float(per_angle[1]),
                        float(per_angle[2]), float(per_angle.mean()), count, excluded)
    return StudyRow(_sweep_label(label), math.nan, math.nan, math.nan, math.nan, 0, excluded)


def run_subset_study(config: StudyConfig | None = None) -> StudyResult:
    """Solve deformed-subject scenes against the undeformed mean face,
    once per named keypoint subset."""
    config = config or StudyConfig()
    model = builtin_mean_face()
    intrinsics = default_intrinsics(config.image_width, config.image_height)
    tz_base = _viewing_distance(model)
    subsets = [subset_by_name(name) for name in config.subsets]
    sums = {s.name: np.zeros(3) for s in subsets}
    counts = {s.name: 0 for s in subsets}
    excluded = {s.name: 0 for s in subsets}

    for i in range(config.trials):
        rng = np.random.default_rng(config.master_seed + i)
        pose = _sample_pose(rng, config, tz_base)
        deform_seed = int(rng.integers(2 ** 63))
        subject = deform_subject(model, config.rigid_sigma, config.nonrigid_sigma, deform_seed)
        try:
            image = project(subject.points, pose, intrinsics)
        except BehindCameraError:
            for s in subsets:
                excluded[s.name] += 1
            continue
        for s in subsets:
            rows = s.rows()
            try:
                solution = solve_pnp(PnPProblem(model.points[rows], image[rows], intrinsics))
            except (BehindCameraError, DegenerateProblemError):
                excluded[s.name] += 1
                continue
            sums[s.name] += _pose_errors(solution.pose.rotation, pose.rotation)
            counts[s.name] += 1

    rows_out = tuple(_finish_row(s.name, sums[s.name], counts[s.name], excluded[s.name])
                     for s in subsets)
    return StudyResult("subset", rows_out)


def run_jitter_study(config: StudyConfig | None = None, subset_name: str = "all-68") -> StudyResult:
    """MAE versus uniform landmark jitter magnitude for one subset.

    Each trial reuses one jitter seed across all magnitudes, so the
    noise direction is shared and only its amplitude grows along the
    sweep (common random numbers).
    """
    config = config or StudyConfig()
    model = builtin_mean_face()
    intrinsics = default_intrinsics(config.image_width, config.image_height)
    tz_base = _viewing_distance(model)
    subset = subset_by_name(subset_name)
    rows = subset.rows()
    magnitudes = [float(m) for m in config.jitter_sweep]
    sums = {m: np.zeros(3) for m in magnitudes}
    counts = {m: 0 for m in magnitudes}
    excluded = {m: 0 for m in magnitudes}

    for i in range(config.trials):
        rng = np.random.default_rng(config.master_seed + i)
        pose = _sample_pose(rng, config, tz_base)
        jitter_seed = int(rng.integers(2 ** 63))
        try:
            clean = project(model.points, pose, intrinsics)[rows]
        except BehindCameraError:
            for m in magnitudes:
                excluded[m] += 1
            continue
        for m in magnitudes:
            noisy = jitter_landmarks(clean, m, jitter_seed)
            try:
                solution = solve_pnp(PnPProblem(model.points[rows], noisy, intrinsics))
            except (BehindCameraError, DegenerateProblemError):
                excluded[m] += 1
                continue
            sums[m] += _pose_errors(solution.pose.rotation, pose.rotation)
            counts[m] += 1

    rows_out = tuple(_finish_row(m, sums[m], counts[m], excluded[m]) for m in magnitudes)
    return StudyResult(f"jitter-{subset.name}", rows_out)


def run_stretch_study(config: StudyConfig | None = None, axis: str = "width") -> StudyResult:
    """MAE when the solver's model is stretched along one axis while the
    image landmarks come from the unstretched face."""
    config = config or StudyConfig()
    if axis not in ("width", "height"):
        raise ValueError(f"axis must be 'width' or 'height', got {axis!r}")
    model = builtin_mean_face()
    intrinsics = default_intrinsics(config.image_width, config.image_height)
    tz_base = _viewing_distance(model)
    scales = [float(s) for s in config.stretch_sweep]
    stretched = {
        s: stretch_model(model, s, 1.0) if axis == "width" else stretch_model(model, 1.0, s)
        for s in scales
    }
    sums = {s: np.zeros(3) for s in scales}
    counts = {s: 0 for s in scales}
    excluded = {s: 0 for s in scales}

    for i in range(config.trials):
        rng = np.random.default_rng(config.master_seed + i)
        pose = _sample_pose(rng, config, tz_base)
        try:
            image = project(model.points, pose, intrinsics)
        except BehindCameraError:
            for s in scales:
                excluded[s] += 1
            continue
        for s in scales:
            try:
                solution = solve_pnp(PnPProblem(stretched[s].points, image, intrinsics))
            except (BehindCameraError, DegenerateProblemError):
                excluded[s] += 1
                continue
            sums[s] += _pose_errors(solution.pose.rotation, pose.rotation)
            counts[s] += 1

    rows_out = tuple(_finish_row(s, sums[s], counts[s], excluded[s]) for s in scales)
    return StudyResult(f"stretch-{axis}", rows_out)


def _scene_pose_and_landmarks(config: StudyConfig, model, intrinsics, tz_base, index):
    rng = np.random.default_rng(config.master_seed + index)
    pose = _sample_pose(rng, config, tz_base)
    return pose, project(model.points, pose, intrinsics)


def _train_val_split(config: StudyConfig, n: int):
    # seed master_seed + n is the first one no scene consumed
    perm = np.random.default_rng(config.master_seed + n).permutation(n)
    n_val = min(max(int(round(n * config.val_fraction)), 1), n - 1)
    return perm[n_val:], perm[:n_val]


def _landmark_features(image_points: np.ndarray) -> np.ndarray:
    """Translation- and scale-normalized flat landmark vector."""
    centered = image_points - image_points.mean(axis=0)
    rms = math.sqrt(float(np.mean(np.sum(centered ** 2, axis=1))))
    return (centered / rms).ravel()


def _make_raster_augment(scheme: str, size: int):
    def augment(batch, rng):
        out = np.empty_like(batch)
        for j, flat in enumerate(batch):
            factor = augment_factor(scheme, rng)
            out[j] = degrade_values(flat.reshape(size, size), factor).ravel()
        return out
    return augment


def run_lowres_study(config: StudyConfig | None = None) -> StudyResult:
    """Train a net per augmentation scheme on landmark rasters, then
    evaluate every net on block-degraded held-out rasters.

    Row labels are "scheme@xFACTOR".  A scheme whose training diverges
    yields NaN rows with trials=0 for all its factors.
    """
    config = config or StudyConfig()
    model = builtin_mean_face()
    intrinsics = default_intrinsics(config.image_width, config.image_height)
    tz_base = _viewing_distance(model)
    size = config.raster_size
    scale = np.array([size / config.image_width, size / config.image_height])

    n = config.scenes
    inputs = np.empty((n, size * size))
    targets = np.empty((n, 3))
    for i in range(n):
        pose, landmarks = _scene_pose_and_landmarks(config, model, intrinsics, tz_base, i)
        inputs[i] = rasterize(landmarks * scale, size, size).values.ravel()
        targets[i] = pose.rotation.as_array()

    train_idx, val_idx = _train_val_split(config, n)
    train_pairs = [(inputs[j], EulerAngles(*targets[j])) for j in train_idx]
    factors = [int(f) for f in config.lowres_factors]

    rows_out = []
    for scheme in config.lowres_schemes:
        augment = None if scheme == "none" else _make_raster_augment(scheme, size)
        try:
            net, _ = train_toy(
                train_pairs, config=MultiLossConfig(), spec=BinSpec(),
                epochs=config.epochs, seed=config.master_seed,
                hidden_size=config.hidden_size, batch_size=config.batch_size,
                lr=config.learning_rate, val_fraction=0.0, augment=augment,
            )
        except TrainingDivergedError:
            rows_out.extend(
                StudyRow(f"{scheme}@x{f}", math.nan, math.nan, math.nan, math.nan, 0, len(val_idx))
                for f in factors
            )
            continue
        for f in factors:
            degraded = np.stack([
                degrade_values(inputs[j].reshape(size, size), f).ravel() for j in val_idx
            ])
            errors = angle_error(predict_angles(net, degraded), targets[val_idx])
            per_angle = errors.mean(axis=0)
            rows_out.append(StudyRow(
                f"{scheme}@x{f}", float(per_angle[0]), float(per_angle[1]),
                float(per_angle[2]), float(per_angle.mean()), len(val_idx), 0,
            ))
    return StudyResult("lowres", tuple(rows_out))


def landmark_dataset(config: StudyConfig | None = None):
    """(inputs, targets) for config.scenes synthetic scenes: normalized
    flat landmark vectors (N, 136) and true angle rows (N, 3)."""
    config = config or StudyConfig()
    model = builtin_mean_face()
    intrinsics = default_intrinsics(config.image_width, config.image_height)
    tz_base = _viewing_distance(model)
    n = config.scenes
    inputs = np.empty((n, 136))
    targets = np.empty((n, 3))
    for i in range(n):
        pose, landmarks = _scene_pose_and_landmarks(config, model, intrinsics, tz_base, i)
        inputs[i] = _landmark_features(landmarks)
        targets[i] = pose.rotation.as_array()
    return inputs, targets


def run_alpha_ablation(config: StudyConfig | None = None) -> StudyResult:
    """Sweep the regression weight on clean normalized-landmark inputs.

    All runs share the seed, split, and initialization, so the weight is
    the only difference between rows.
    """
    config = config or StudyConfig()
    inputs, targets = landmark_dataset(config)
    n = config.scenes
    train_idx, val_idx = _train_val_split(config, n)
    train_pairs = [(inputs[j], EulerAngles(*targets[j])) for j in train_idx]

    rows_out = []
    for alpha in config.alpha_sweep:
        alpha = float(alpha)
        try:
            net, _ = train_toy(
                train_pairs, config=MultiLossConfig(alpha=alpha), spec=BinSpec(),
                epochs=config.epochs, seed=config.master_seed,
                hidden_size=config.hidden_size, batch_size=config.batch_size,
                lr=config.learning_rate, val_fraction=0.0,
            )
        except TrainingDivergedError:
            rows_out.append(StudyRow(_sweep_label(alpha), math.nan, math.nan, math.nan,
                                     math.nan, 0, len(val_idx)))
            continue
        errors = angle_error(predict_angles(net, inputs[val_idx]), targets[val_idx])
        per_angle = errors.mean(axis=0)
        rows_out.append(StudyRow(
            _sweep_label(alpha), float(per_angle[0]), float(per_angle[1]),
            float(per_angle[2]), float(per_angle.mean()), len(val_idx), 0,
        ))
    return StudyResult("alpha", tuple(rows_out))


def emit_csv(result: StudyResult, path) -> None:
    """Pinned layout: sweep,yaw_mae,pitch_mae,roll_mae,mae,trials."""
    lines = [CSV_HEADER]
    for r in result.rows:
        lines.append(f"{r.sweep},{r.yaw_mae!r},{r.pitch_mae!r},{r.roll_mae!r},{r.mae!r},{r.trials}")
    try:
        Path(path).write_text("\n".join(lines) + "\n")
    except OSError as err:
        raise OSError(f"cannot write CSV to {path}: {err}") from err


def read_study_csv(path) -> StudyResult:
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as err:
        raise OSError(f"cannot read CSV from {path}: {err}") from err
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError(f"{path}: first line must be {CSV_HEADER!r}")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 6:
            raise ValueError(f"{path}:{lineno}: expected 6 comma-separated fields")
        try:
            rows.append(StudyRow(parts[0], float(parts[1]), float(parts[2]),
                                 float(parts[3]), float(parts[4]), int(parts[5])))
        except ValueError:
            raise ValueError(f"{path}:{lineno}: malformed numeric field") from None
    return StudyResult(Path(path).stem, tuple(rows))


def emit_svg(result: StudyResult, path) -> None:
    """Line chart of per-angle MAE over the sweep, one polyline per angle."""
    width, height = 640, 400
    left, right, top, bottom = 60, 130, 40, 50
    plot_w, plot_h = width - left - right, height - top - bottom
    rows = result.rows
    series = (
        ("yaw", "#d62728", [r.yaw_mae for r in rows]),
        ("pitch", "#2ca02c", [r.pitch_mae for r in rows]),
        ("roll", "#1f77b4", [r.roll_mae for r in rows]),
    )
    finite = [v for _, _, vals in series for v in vals if math.isfinite(v)]
    vmax = max(finite) if finite else 1.0
    if vmax <= 0.0:
        vmax = 1.0

    def x_at(i: int) -> float:
        if len(rows) <= 1:
            return left + plot_w / 2.0
        return left + plot_w * i / (len(rows) - 1)

    def y_at(v: float) -> float:
        return top + plot_h * (1.0 - v / vmax)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{left}" y="{top - 16}" font-size="14">{escape(result.study)} MAE (deg)</text>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + plot_h}" stroke="black"/>',
        f'<line x1="{left}" y1="{top + plot_h}" x2="{left + plot_w}" y2="{top + plot_h}" stroke="black"/>',
        f'<text x="{left - 8}" y="{top + 4}" font-size="10" text-anchor="end">{vmax:.3g}</text>',
        f'<text x="{left - 8}" y="{top + plot_h + 4}" font-size="10" text-anchor="end">0</text>',
    ]
    for i, r in enumerate(rows):
        parts.append(f'<text x="{x_at(i):.2f}" y="{top + plot_h + 16}" font-size="10" '
                     f'text-anchor="middle">{escape(r.sweep)}</text>')
    for rank, (name, color, vals) in enumerate(series):
        points = " ".join(f"{x_at(i):.2f},{y_at(v):.2f}" for i, v in enumerate(vals)
                          if math.isfinite(v))
        if points:
            parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
                         f'points="{points}"/>')
        legend_y = top + 14 * rank
        parts.append(f'<rect x="{width - right + 14}" y="{legend_y - 8}" width="10" height="10" '
                     f'fill="{color}"/>')
        parts.append(f'<text x="{width - right + 30}" y="{legend_y}" font-size="11">{name}</text>')
    parts.append("</svg>")
    try:
        Path(path).write_text("\n".join(parts) + "\n")
    except OSError as err:
        raise OSError(f"cannot write SVG to {path}: {err}") from err


def load_landmarks(path):
    """Parse a 2D landmark file: one 'id u v' per line, '#' comments.

    Returns (ids, points) where ids is an int array of landmark ids in
    file order and points the matching (N, 2) pixel coordinates.
    """
    text = Path(path).read_text()
    ids, points = [], []
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ParseError(path, lineno, f"expected 3 fields 'id u v', got {len(parts)}")
        try:
            landmark_id = int(parts[0])
        except ValueError:
            raise ParseError(path, lineno, f"landmark id {parts[0]!r} is not an integer") from None
        if not 1 <= landmark_id <= 68:
            raise ParseError(path, lineno, f"landmark id {landmark_id} outside 1..68")
        try:
            uv = [float(parts[1]), float(parts[2])]
        except ValueError:
            raise ParseError(path, lineno, "coordinates must be decimal numbers") from None
        if not all(math.isfinite(c) for c in uv):
            raise ParseError(path, lineno, "coordinates must be finite")
        if landmark_id in seen:
            raise DuplicateIdError(f"{path}:{lineno}: duplicate landmark id {landmark_id}")
        seen.add(landmark_id)
        ids.append(landmark_id)
        points.append(uv)
    return np.array(ids, dtype=int), np.array(points, dtype=float).reshape(-1, 2)
