"""Seeded synthetic scenarios with known ground truth.

Serves as the end-to-end oracle for the whole pipeline: the generator
simulates bird trajectories, derives a detection stream (optionally with
detector noise), and labels the noiseless trajectories with the same
huddling and inactivity rules the analyzers implement, via an independent
linear-scan / direct-summation route.

Randomness comes from ``numpy.random.Generator`` seeded with PCG64, so a
given spec always produces byte-identical output within this implementation.
"""

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .activity import ActivityConfig
from .geometry import BoundingBox, Detection, FrameDetections
from .huddling import HuddleConfig
from .pipeline import HUDDLING, INACTIVITY, AnomalyEvent


@dataclass(frozen=True, slots=True)
class Stationary:
    pass


@dataclass(frozen=True, slots=True)
class RandomWalk:
    step_sigma: float
    step_clip: Optional[float] = None  # per-axis cap on a single step

    def __post_init__(self):
        if not (math.isfinite(self.step_sigma) and self.step_sigma >= 0):
            raise ValueError(f"step_sigma must be >= 0, got {self.step_sigma!r}")
        if self.step_clip is not None and self.step_clip <= 0:
            raise ValueError(f"step_clip must be > 0, got {self.step_clip!r}")


@dataclass(frozen=True, slots=True)
class ConvergeTo:
    """Hold position, move linearly toward a gather point during the frame
    range, then hold. Birds land on a small ring (``spread`` px) around the
    point so they stay distinct."""

    x: float
    y: float
    start_frame: int
    end_frame: int
    spread: float = 25.0

    def __post_init__(self):
        if self.start_frame < 0 or self.end_frame <= self.start_frame:
            raise ValueError(
                f"need 0 <= start_frame < end_frame, got "
                f"[{self.start_frame}, {self.end_frame}]"
            )
        if not (math.isfinite(self.spread) and self.spread >= 0):
            raise ValueError(f"spread must be >= 0, got {self.spread!r}")


MotionModel = Union[Stationary, RandomWalk, ConvergeTo]


@dataclass(frozen=True, slots=True)
class DetectorNoise:
    jitter_sigma: float = 0.0
    miss_prob: float = 0.0
    false_positive_rate: float = 0.0  # expected spurious boxes per frame

    def __post_init__(self):
        if not (math.isfinite(self.jitter_sigma) and self.jitter_sigma >= 0):
            raise ValueError(f"jitter_sigma must be >= 0, got {self.jitter_sigma!r}")
        if not 0.0 <= self.miss_prob < 1.0:
            raise ValueError(f"miss_prob must be in [0, 1), got {self.miss_prob!r}")
        if not (math.isfinite(self.false_positive_rate) and self.false_positive_rate >= 0):
            raise ValueError(
                f"false_positive_rate must be >= 0, got {self.false_positive_rate!r}"
            )

    @property
    def is_noiseless(self) -> bool:
        return (self.jitter_sigma == 0 and self.miss_prob == 0
                and self.false_positive_rate == 0)


@dataclass(frozen=True, slots=True)
class ScenarioSpec:
    """Everything needed to reproduce one scenario bit-for-bit.

    ``motion`` is a single model applied to every bird or one model per
    bird. ``placement='grid'`` confines each bird to its own cell
    (``cell_margin`` px of guaranteed clearance on every side), which keeps
    birds separated for identity-preservation experiments; ``'uniform'``
    scatters birds anywhere in the arena.
    """

    seed: int
    n_birds: int
    frames: int
    arena_width: float = 1920.0
    arena_height: float = 1080.0
    motion: Union[MotionModel, tuple] = field(default_factory=Stationary)
    noise: DetectorNoise = field(default_factory=DetectorNoise)
    box_width: float = 40.0
    box_height: float = 40.0
    placement: str = "uniform"
    cell_margin: float = 20.0

    def __post_init__(self):
        if self.n_birds < 1:
            raise ValueError(f"n_birds must be >= 1, got {self.n_birds}")
        if self.frames < 1:
            raise ValueError(f"frames must be >= 1, got {self.frames}")
        if self.arena_width <= 0 or self.arena_height <= 0:
            raise ValueError(
                f"arena must have positive extent, got "
                f"{self.arena_width} x {self.arena_height}"
            )
        if self.box_width <= 0 or self.box_height <= 0:
            raise ValueError(
                f"box extent must be positive, got {self.box_width} x {self.box_height}"
            )
        if self.placement not in ("uniform", "grid"):
            raise ValueError(f"placement must be 'uniform' or 'grid', "
                             f"got {self.placement!r}")
        if self.cell_margin < 0:
            raise ValueError(f"cell_margin must be >= 0, got {self.cell_margin}")
        if isinstance(self.motion, (list, tuple)):
            object.__setattr__(self, "motion", tuple(self.motion))
            if len(self.motion) != self.n_birds:
                raise ValueError(
                    f"per-bird motion needs {self.n_birds} models, "
                    f"got {len(self.motion)}"
                )

    def motion_for(self, bird: int) -> MotionModel:
        if isinstance(self.motion, tuple):
            return self.motion[bird]
        return self.motion


class ScenarioTruth:
    """Ground truth for one scenario: the noiseless trajectories, with
    behavior labels recomputed on demand from the labeling rules (never
    stored independently of the trajectories)."""

    def __init__(self, trajectories: np.ndarray):
        # (frames, birds, 2) noiseless centroid positions
        self.trajectories = trajectories

    @property
    def n_frames(self) -> int:
        return self.trajectories.shape[0]

    @property
    def n_birds(self) -> int:
        return self.trajectories.shape[1]

    def huddling_frames(self, config: HuddleConfig | None = None) -> list[int]:
        """Frames where some bird has more than the threshold count of birds
        within the radius (itself included), by direct all-pairs counting."""
        if config is None:
            config = HuddleConfig()
        r2 = config.radius * config.radius
        flagged = []
        for f in range(self.n_frames):
            pos = self.trajectories[f]
            dx = pos[:, 0, None] - pos[None, :, 0]
            dy = pos[:, 1, None] - pos[None, :, 1]
            counts = (dx * dx + dy * dy <= r2).sum(axis=1)
            if counts.max(initial=0) > config.count_threshold:
                flagged.append(f)
        return flagged

    def inactive_birds(self, config: ActivityConfig | None = None) -> set[int]:
        """Birds with some full window of summed displacement strictly below
        the threshold, by direct window summation."""
        if config is None:
            config = ActivityConfig()
        return {
            b for b in range(self.n_birds)
            if self._window_activity(b, config) is not None
        }

    def truth_events(
        self,
        huddle_config: HuddleConfig | None = None,
        activity_config: ActivityConfig | None = None,
    ) -> list[AnomalyEvent]:
        """Truth labels in the event wire form: one huddling event per
        maximal run of huddling frames (no track ids) and one inactivity
        event per inactive bird, keyed by bird index."""
        if huddle_config is None:
            huddle_config = HuddleConfig()
        if activity_config is None:
            activity_config = ActivityConfig()
        events = []
        run_start = None
        prev = None
        for f in self.huddling_frames(huddle_config) + [None]:
            if f is not None and prev is not None and f == prev + 1:
                prev = f
                continue
            if prev is not None:
                events.append(AnomalyEvent(
                    HUDDLING, run_start, prev, frozenset(),
                    float(self._peak_count(run_start, prev, huddle_config)),
                ))
            run_start = prev = f
        for b in sorted(self.inactive_birds(activity_config)):
            start, end, level = self._inactive_span(b, activity_config)
            events.append(AnomalyEvent(INACTIVITY, start, end, frozenset((b,)), level))
        events.sort(key=lambda e: (e.frame_start, e.kind, sorted(e.track_ids)))
        return events

    def _peak_count(self, start, end, config):
        r2 = config.radius * config.radius
        peak = 0
        for f in range(start, end + 1):
            pos = self.trajectories[f]
            dx = pos[:, 0, None] - pos[None, :, 0]
            dy = pos[:, 1, None] - pos[None, :, 1]
            peak = max(peak, int((dx * dx + dy * dy <= r2).sum(axis=1).max()))
        return peak

    def _window_activity(self, bird, config):
        """Per-window summed displacement for one bird, or None when no
        full window exists. All label queries share this single routine."""
        T = config.window_frames
        if self.n_frames < T + 1:
            return None
        traj = self.trajectories[:, bird]
        steps = np.sqrt(((traj[1:] - traj[:-1]) ** 2).sum(axis=1))
        sums = np.lib.stride_tricks.sliding_window_view(steps, T).sum(axis=1)
        flagged = np.flatnonzero(sums < config.activity_threshold)
        if flagged.size == 0:
            return None
        return sums, flagged

    def _inactive_span(self, bird, config):
        result = self._window_activity(bird, config)
        sums, flagged = result
        first = int(flagged[0])
        last = int(flagged[-1])
        level = float(sums[flagged].min())
        return first, last + config.window_frames, level


def generate(spec: ScenarioSpec) -> tuple[list[FrameDetections], ScenarioTruth]:
    """Simulate the scenario and derive its detection stream.

    Trajectories are simulated first (reflective arena or cell walls), then
    detector noise is applied frame by frame, so truth never depends on the
    noise draws. Identical specs produce identical output.
    """
    rng = np.random.default_rng(spec.seed)
    trajectories = _simulate(spec, rng)
    truth = ScenarioTruth(trajectories)
    noise = spec.noise
    half_w = spec.box_width / 2.0
    half_h = spec.box_height / 2.0

    frames = []
    for f in range(spec.frames):
        dets = []
        pos = trajectories[f]
        if noise.is_noiseless:
            for b in range(spec.n_birds):
                dets.append(Detection(
                    frame_index=f,
                    bbox=BoundingBox(pos[b, 0] - half_w, pos[b, 1] - half_h,
                                     spec.box_width, spec.box_height),
                    confidence=1.0,
                ))
        else:
            missed = rng.random(spec.n_birds) < noise.miss_prob
            jitter = (rng.normal(0.0, noise.jitter_sigma, (spec.n_birds, 2))
                      if noise.jitter_sigma > 0 else np.zeros((spec.n_birds, 2)))
            scores = rng.uniform(0.6, 1.0, spec.n_birds)
            for b in range(spec.n_birds):
                if missed[b]:
                    continue
                cx = pos[b, 0] + jitter[b, 0]
                cy = pos[b, 1] + jitter[b, 1]
                dets.append(Detection(
                    frame_index=f,
                    bbox=BoundingBox(cx - half_w, cy - half_h,
                                     spec.box_width, spec.box_height),
                    confidence=float(scores[b]),
                ))
            for _ in range(rng.poisson(noise.false_positive_rate)):
                cx = rng.uniform(0.0, spec.arena_width)
                cy = rng.uniform(0.0, spec.arena_height)
                dets.append(Detection(
                    frame_index=f,
                    bbox=BoundingBox(cx - half_w, cy - half_h,
                                     spec.box_width, spec.box_height),
                    confidence=float(rng.uniform(0.05, 0.6)),
                ))
        frames.append(FrameDetections(f, tuple(dets)))
    return frames, truth


def _simulate(spec: ScenarioSpec, rng: np.random.Generator) -> np.ndarray:
    n = spec.n_birds
    if spec.placement == "grid":
        lo, hi = _grid_bounds(spec)
    else:
        lo = np.zeros((n, 2))
        hi = np.tile([spec.arena_width, spec.arena_height], (n, 1))
    start = rng.uniform(lo, hi)

    traj = np.empty((spec.frames, n, 2), dtype=np.float64)
    traj[0] = start
    # simulate per bird, drawing random steps in bird order so a bird's
    # trajectory does not depend on the other birds' models
    for b in range(n):
        model = spec.motion_for(b)
        if isinstance(model, Stationary) or spec.frames == 1:
            traj[:, b] = start[b]
        elif isinstance(model, RandomWalk):
            if model.step_sigma == 0:
                traj[:, b] = start[b]
                continue
            steps = rng.normal(0.0, model.step_sigma, (spec.frames - 1, 2))
            if model.step_clip is not None:
                np.clip(steps, -model.step_clip, model.step_clip, out=steps)
            free = start[b] + np.cumsum(steps, axis=0)
            # reflective walls via the folded free walk; folding is
            # 1-Lipschitz, so one frame's displacement never exceeds the
            # raw step size
            traj[1:, b, 0] = _reflect(free[:, 0], lo[b, 0], hi[b, 0])
            traj[1:, b, 1] = _reflect(free[:, 1], lo[b, 1], hi[b, 1])
        else:
            tx, ty = _converge_target(model, b)
            f_arr = np.arange(spec.frames, dtype=np.float64)
            alpha = np.clip(
                (f_arr - model.start_frame) / (model.end_frame - model.start_frame),
                0.0, 1.0,
            )
            traj[:, b, 0] = start[b, 0] + alpha * (tx - start[b, 0])
            traj[:, b, 1] = start[b, 1] + alpha * (ty - start[b, 1])
    return traj


def _converge_target(model: ConvergeTo, bird: int):
    angle = 2.0 * math.pi * bird * 0.6180339887498949  # golden-angle spacing
    return (model.x + model.spread * math.cos(angle),
            model.y + model.spread * math.sin(angle))


def _grid_bounds(spec: ScenarioSpec):
    n = spec.n_birds
    cols = math.ceil(math.sqrt(n * spec.arena_width / spec.arena_height))
    cols = max(1, min(cols, n))
    rows = math.ceil(n / cols)
    cell_w = spec.arena_width / cols
    cell_h = spec.arena_height / rows
    margin = spec.cell_margin
    if 2 * margin >= cell_w or 2 * margin >= cell_h:
        raise ValueError(
            f"cell_margin {margin} leaves no room in {cell_w:.1f} x {cell_h:.1f} "
            f"cells; shrink the margin or the flock"
        )
    lo = np.empty((n, 2))
    hi = np.empty((n, 2))
    for b in range(n):
        r, c = divmod(b, cols)
        lo[b] = (c * cell_w + margin, r * cell_h + margin)
        hi[b] = ((c + 1) * cell_w - margin, (r + 1) * cell_h - margin)
    return lo, hi


def _reflect(x, lo: float, hi: float):
    """Fold coordinates back into [lo, hi] (reflective walls)."""
    if lo == hi:
        return np.full_like(np.asarray(x, dtype=np.float64), lo)
    span = hi - lo
    y = np.mod(np.asarray(x, dtype=np.float64) - lo, 2.0 * span)
    return np.where(y > span, 2.0 * span - y, y) + lo


_MOTION_KEYS = {
    "seed": int, "n_birds": int, "frames": int,
    "arena_width": float, "arena_height": float,
    "motion": str, "step_sigma": float, "step_clip": float,
    "converge_x": float, "converge_y": float,
    "converge_start": int, "converge_end": int, "converge_spread": float,
    "jitter_sigma": float, "miss_prob": float, "false_positive_rate": float,
    "box_width": float, "box_height": float,
    "placement": str, "cell_margin": float,
}

_REQUIRED_SPEC_KEYS = ("seed", "n_birds", "frames")


def parse_scenario_spec(text: str) -> ScenarioSpec:
    """Build a scenario spec from the flat config format. The single
    ``motion`` key applies one model to every bird; per-bird models are a
    library-only feature."""
    from .io import ConfigError, parse_flat_config

    raw = parse_flat_config(text)
    parsed = {}
    for key, value in raw.items():
        if key not in _MOTION_KEYS:
            raise ConfigError(f"unknown scenario key '{key}'")
        try:
            parsed[key] = _MOTION_KEYS[key](value)
        except ValueError as exc:
            raise ConfigError(f"scenario key '{key}': not a valid "
                              f"{_MOTION_KEYS[key].__name__}: {value!r}") from exc
    for key in _REQUIRED_SPEC_KEYS:
        if key not in parsed:
            raise ConfigError(f"missing required scenario key '{key}'")

    motion_name = parsed.get("motion", "stationary")
    try:
        if motion_name == "stationary":
            motion = Stationary()
        elif motion_name == "random_walk":
            motion = RandomWalk(
                step_sigma=parsed.get("step_sigma", 2.0),
                step_clip=parsed.get("step_clip"),
            )
        elif motion_name == "converge_to":
            for key in ("converge_x", "converge_y", "converge_start", "converge_end"):
                if key not in parsed:
                    raise ConfigError(f"missing required scenario key '{key}' "
                                      f"for motion=converge_to")
            motion = ConvergeTo(
                x=parsed["converge_x"], y=parsed["converge_y"],
                start_frame=parsed["converge_start"],
                end_frame=parsed["converge_end"],
                spread=parsed.get("converge_spread", 25.0),
            )
        else:
            raise ConfigError(
                f"scenario key 'motion': expected stationary, random_walk or "
                f"converge_to, got {motion_name!r}"
            )
        noise = DetectorNoise(
            jitter_sigma=parsed.get("jitter_sigma", 0.0),
            miss_prob=parsed.get("miss_prob", 0.0),
            false_positive_rate=parsed.get("false_positive_rate", 0.0),
        )
        kwargs = {}
        for key in ("arena_width", "arena_height", "box_width", "box_height",
                    "placement", "cell_margin"):
            if key in parsed:
                kwargs[key] = parsed[key]
        return ScenarioSpec(
            seed=parsed["seed"], n_birds=parsed["n_birds"], frames=parsed["frames"],
            motion=motion, noise=noise, **kwargs,
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
