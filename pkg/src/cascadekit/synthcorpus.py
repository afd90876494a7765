"""Deterministic synthetic scenes for training and pipeline verification.

Four archetypes on a shared dark textured background that always may contain
bright smooth achromatic patches (so brightness alone separates nothing):

- explosion: warm saturated irregular blob with speckle texture (positive)
- light_source_confuser: warm saturated smooth disc whose grayscale rendering
  sits inside the normal patch distribution - colour models tend to fire on
  it, grayscale models do not
- structure_confuser: the explosion geometry and speckle with a desaturated
  palette matched to the explosion's luminance ramp - grayscale models tend
  to fire on it, colour models do not
- plain_negative: background and patches only

Identical recipes render identical bytes; every random draw comes from the
recipe seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .evalkit import GroundTruthInterval
from .preprocess import (LUMA_WEIGHTS, ChannelProjection, Frame, clip_to_u8,
                         project, to_tensor)

EXPLOSION = "explosion"
LIGHT_CONFUSER = "light_source_confuser"
STRUCTURE_CONFUSER = "structure_confuser"
PLAIN = "plain_negative"
ARCHETYPES = (EXPLOSION, LIGHT_CONFUSER, STRUCTURE_CONFUSER, PLAIN)

# radial ramp stops (core, mid, edge); the structure palette reproduces the
# explosion ramp's BT.601 luminance (235 / 173 / 90) without its saturation
BLOB_PALETTES = {
    EXPLOSION: ((255.0, 238.0, 186.0), (250.0, 158.0, 42.0), (178.0, 58.0, 12.0)),
    STRUCTURE_CONFUSER: ((236.0, 235.0, 230.0), (181.0, 173.0, 160.0), (94.0, 91.0, 80.0)),
}
WARM_DISC_RAMP = ((255.0, 235.0, 170.0), (252.0, 172.0, 52.0), (210.0, 110.0, 28.0))
_LUMA = np.asarray(LUMA_WEIGHTS)


@dataclass(frozen=True)
class SceneRecipe:
    archetype: str
    seed: int
    size: int = 64
    patch_count_range: tuple[int, int] = (1, 3)
    blob_radius_range: tuple[float, float] = (0.10, 0.32)

    def __post_init__(self):
        if self.archetype not in ARCHETYPES:
            raise InputError(f"unknown archetype {self.archetype!r}")
        if self.size < 16:
            raise InputError(f"degenerate size {self.size} (minimum 16)")


def _noise(rng: np.random.Generator, size: int, cells: int) -> np.ndarray:
    """Smooth value noise in [0, 1]: a random grid, bilinearly interpolated
    with smoothstep easing."""
    grid = rng.random((cells + 1, cells + 1))
    u = np.linspace(0.0, cells * (1.0 - 1e-12), size)
    i = np.floor(u).astype(int)
    f = u - i
    f = f * f * (3.0 - 2.0 * f)
    iy, ix = i[:, None], i[None, :]
    fy, fx = f[:, None], f[None, :]
    return (grid[iy, ix] * (1 - fy) * (1 - fx)
            + grid[iy + 1, ix] * fy * (1 - fx)
            + grid[iy, ix + 1] * (1 - fy) * fx
            + grid[iy + 1, ix + 1] * fy * fx)


def _background(rng: np.random.Generator, size: int) -> np.ndarray:
    """Dark brownish texture, float64 canvas in [0, 255]."""
    base_r = rng.uniform(28.0, 52.0)
    base = np.array([base_r,
                     base_r * rng.uniform(0.85, 1.05),
                     base_r * rng.uniform(0.55, 0.85)])
    coarse = _noise(rng, size, max(3, size // 16))
    fine = _noise(rng, size, max(6, size // 8))
    tex = 0.65 + 0.55 * coarse + 0.25 * (fine - 0.5)
    img = base[None, None, :] * tex[:, :, None]
    for c in range(3):
        img[:, :, c] *= 0.95 + 0.10 * _noise(rng, size, 4)
    return img


def _ramp(d: np.ndarray, stops) -> np.ndarray:
    """Per-channel linear interpolation over stops at d = 0, 0.5, 1."""
    pos = (0.0, 0.5, 1.0)
    out = np.empty(d.shape + (3,))
    for c in range(3):
        out[:, :, c] = np.interp(d, pos, [stops[0][c], stops[1][c], stops[2][c]])
    return out


def _draw_patch(rng: np.random.Generator, size: int, warm: bool) -> dict:
    # warm radii sit inside the achromatic envelope and every other scalar
    # shares one distribution, so size and brightness separate nothing
    radius = (0.12, 0.20) if warm else (0.07, 0.22)
    # placement ranges are identical for patches, warm discs and blobs, so
    # position never separates the classes
    return {
        "cy": rng.uniform(0.15, 0.85) * size,
        "cx": rng.uniform(0.15, 0.85) * size,
        "ry": rng.uniform(*radius) * size,
        "rx": rng.uniform(*radius) * size,
        "angle": rng.uniform(0.0, np.pi),
        "peak": rng.uniform(190.0, 242.0),
        "tint": rng.uniform(-4.0, 4.0, size=3),
        "decline": rng.uniform(0.20, 0.50),
        "mix": rng.uniform(0.55, 1.0) if warm else 0.0,
        "warm": warm,
    }


def _render_patch(img: np.ndarray, p: dict) -> None:
    size = img.shape[0]
    y = np.arange(size)[:, None] - p["cy"]
    x = np.arange(size)[None, :] - p["cx"]
    ca, sa = np.cos(p["angle"]), np.sin(p["angle"])
    xr = x * ca + y * sa
    yr = -x * sa + y * ca
    d = np.sqrt((xr / p["rx"]) ** 2 + (yr / p["ry"]) ** 2)
    alpha = np.clip(1.0 - d, 0.0, 1.0) ** 1.3
    dc = np.clip(d, 0.0, 1.0)
    flat = np.clip(p["peak"] + p["tint"], 0.0, 255.0)
    profile = 1.0 - p["decline"] * dc
    if p["warm"]:
        # colourize the achromatic value profile at constant luminance: the
        # grayscale rendering of a warm disc equals an achromatic patch by
        # construction, while its chroma blends toward the explosion ramp
        value = float(flat @ _LUMA) * profile
        stops = ((1.0 - p["mix"]) * np.asarray(WARM_DISC_RAMP)
                 + p["mix"] * np.asarray(BLOB_PALETTES[EXPLOSION]))
        raw = _ramp(dc, stops)
        color = value[:, :, None] * (raw / (raw @ _LUMA)[:, :, None])
        peak_ch = color.max(axis=2)
        # where a channel would clip, desaturate toward equal-luminance gray
        # instead of darkening, keeping the luminance match exact
        scale = np.where(peak_ch > 255.0,
                         (255.0 - value) / np.maximum(peak_ch - value, 1e-9),
                         1.0)
        color = value[:, :, None] + (color - value[:, :, None]) * scale[:, :, None]
        color = np.clip(color, 0.0, 255.0)
    else:
        color = flat[None, None, :] * profile[:, :, None]
    img *= 1.0 - alpha[:, :, None]
    img += color * alpha[:, :, None]


def _draw_blob(rng: np.random.Generator, size: int,
               radius_range: tuple[float, float]) -> dict:
    # geometry spans smooth discs through ragged textured blobs, so shape
    # and texture are unreliable class cues and chroma carries the signal;
    # the squared draws put extra mass on the smooth end, keeping smooth
    # warm shapes well inside the positive class
    amps = rng.uniform(0.2, 1.0, size=5)
    amps *= 0.42 * rng.uniform(0.0, 1.0) ** 2 / amps.sum()
    return {
        "cy": rng.uniform(0.15, 0.85) * size,
        "cx": rng.uniform(0.15, 0.85) * size,
        "r": rng.uniform(*radius_range) * size,
        "amps": amps,
        "phases": rng.uniform(0.0, 2 * np.pi, size=5),
        "omegas": rng.uniform(0.5, 2.0, size=5),
        "speckle_amp": 0.5 * rng.uniform(0.0, 1.0) ** 2,
        "speckle_seed": int(rng.integers(0, 2**31)),
        "edge_sharpness": rng.uniform(1.0, 3.2),
        "edge_exponent": rng.uniform(1.0, 1.6),
        "palette_jitter": rng.uniform(-8.0, 8.0, size=(3, 3)),
        "drift": rng.uniform(-0.02, 0.02, size=2) * size,
        "flick_freq": rng.uniform(2.0, 4.0),
        "flick_phase": rng.uniform(0.0, 2 * np.pi),
    }


def _render_blob(img: np.ndarray, p: dict, palette, t_s: float = 0.0) -> None:
    size = img.shape[0]
    cy = p["cy"] + p["drift"][0] * t_s + 0.01 * size * np.sin(2.2 * t_s)
    cx = p["cx"] + p["drift"][1] * t_s + 0.01 * size * np.cos(1.7 * t_s)
    y = np.arange(size)[:, None] - cy
    x = np.arange(size)[None, :] - cx
    theta = np.arctan2(y, x)
    pert = np.ones_like(theta)
    for k in range(5):
        pert += p["amps"][k] * np.cos((k + 2) * theta + p["phases"][k] + p["omegas"][k] * t_s)
    r = p["r"] * (1.0 + 0.06 * np.sin(p["flick_freq"] * t_s + p["flick_phase"]))
    d = np.sqrt(x * x + y * y) / (r * np.clip(pert, 0.45, None))
    speckle_rng = np.random.default_rng(p["speckle_seed"])
    speckle = 1.0 + p["speckle_amp"] * (_noise(speckle_rng, size, max(4, size // 4)) - 0.5)
    stops = np.clip(np.asarray(palette) + p["palette_jitter"], 0.0, 255.0)
    color = _ramp(np.clip(d, 0.0, 1.0), stops) * speckle[:, :, None]
    alpha = np.clip((1.05 - d) * p["edge_sharpness"], 0.0, 1.0) ** p["edge_exponent"]
    img *= 1.0 - alpha[:, :, None]
    img += np.clip(color, 0.0, 255.0) * alpha[:, :, None]


def _scene_params(recipe: SceneRecipe) -> dict:
    """All random draws for a scene, in a fixed order."""
    rng = np.random.default_rng(recipe.seed)
    params = {"patches": [], "blob": None, "warm": None}
    params["background"] = _background(rng, recipe.size)
    lo, hi = recipe.patch_count_range
    count = int(rng.integers(lo, hi + 1))
    if recipe.archetype == LIGHT_CONFUSER:
        # the warm disc replaces one achromatic patch, keeping the total
        # bright-dome count distribution identical to plain scenes
        count -= 1
    for _ in range(count):
        params["patches"].append(_draw_patch(rng, recipe.size, warm=False))
    if recipe.archetype in (EXPLOSION, STRUCTURE_CONFUSER):
        params["blob"] = _draw_blob(rng, recipe.size, recipe.blob_radius_range)
    elif recipe.archetype == LIGHT_CONFUSER:
        params["warm"] = _draw_patch(rng, recipe.size, warm=True)
    return params


def _compose(recipe: SceneRecipe, params: dict, t_s: float = 0.0,
             timestamp_index: int = 0) -> Frame:
    img = params["background"].copy()
    if t_s:
        img *= 1.0 + 0.02 * np.sin(5.0 * t_s)
    for patch in params["patches"]:
        _render_patch(img, patch)
    if params["warm"] is not None:
        _render_patch(img, params["warm"])
    if params["blob"] is not None:
        palette = BLOB_PALETTES[recipe.archetype]
        _render_blob(img, params["blob"], palette, t_s)
    return Frame(clip_to_u8(img), timestamp_index)


def gen_image(recipe: SceneRecipe, timestamp_index: int = 0) -> Frame:
    return _compose(recipe, _scene_params(recipe), timestamp_index=timestamp_index)


def _recipe_seed(seed: int, class_idx: int, i: int) -> int:
    return int(np.random.SeedSequence([seed, class_idx, i]).generate_state(1)[0])


def gen_class_frames(archetype: str, n: int, seed: int = 0, size: int = 64,
                     start_index: int = 0) -> list[Frame]:
    """n frames of one archetype under a disjoint per-index seed scheme."""
    cls = ARCHETYPES.index(archetype)
    return [gen_image(SceneRecipe(archetype, _recipe_seed(seed, cls, start_index + i), size),
                      timestamp_index=start_index + i)
            for i in range(n)]


def frames_to_tensor(frames: list[Frame],
                     projection: ChannelProjection | None = None) -> np.ndarray:
    if projection is None:
        return np.stack([to_tensor(f) for f in frames])
    return np.stack([to_tensor(project(f, projection)) for f in frames])


@dataclass
class DatasetSplit:
    train_frames: list[Frame]
    y_train: np.ndarray
    val_frames: list[Frame]
    y_val: np.ndarray
    train_recipes: list[SceneRecipe]
    val_recipes: list[SceneRecipe]

    def tensors(self, projection: ChannelProjection | None = None):
        return (frames_to_tensor(self.train_frames, projection), self.y_train,
                frames_to_tensor(self.val_frames, projection), self.y_val)


def gen_dataset(n_per_class: int, val_fraction: float = 0.2, seed: int = 0,
                size: int = 64, archetypes: tuple[str, ...] = ARCHETYPES) -> DatasetSplit:
    """Stratified split over the requested archetypes; explosions are the
    positive class. Recipe seeds are unique per (archetype, index) so the
    splits cannot share an image."""
    if n_per_class < 10:
        raise InputError("need at least 10 samples per class")
    if not 0.0 < val_fraction < 1.0:
        raise InputError("val_fraction must lie in (0, 1)")
    split_rng = np.random.default_rng(np.random.SeedSequence([seed, 0xA5]))
    train_r, val_r = [], []
    train_y, val_y = [], []
    for archetype in archetypes:
        cls = ARCHETYPES.index(archetype)
        label = 1.0 if archetype == EXPLOSION else 0.0
        recipes = [SceneRecipe(archetype, _recipe_seed(seed, cls, i), size)
                   for i in range(n_per_class)]
        k = int(round(val_fraction * n_per_class))
        k = min(max(k, 1), n_per_class - 1)
        chosen = np.zeros(n_per_class, dtype=bool)
        chosen[split_rng.permutation(n_per_class)[:k]] = True
        for r, v in zip(recipes, chosen):
            (val_r if v else train_r).append(r)
            (val_y if v else train_y).append(label)
    return DatasetSplit(
        train_frames=[gen_image(r) for r in train_r],
        y_train=np.array(train_y),
        val_frames=[gen_image(r) for r in val_r],
        y_val=np.array(val_y),
        train_recipes=train_r,
        val_recipes=val_r,
    )


def parse_timeline(text: str) -> list[tuple[str, float]]:
    """Parse 'plain_negative:2,explosion:1' into (archetype, seconds) pairs."""
    segments = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ":" not in part:
            raise InputError(f"timeline segment {part!r} is not name:seconds")
        name, dur = part.rsplit(":", 1)
        try:
            seconds = float(dur)
        except ValueError as exc:
            raise InputError(f"timeline segment {part!r}: bad duration") from exc
        segments.append((name.strip(), seconds))
    if not segments:
        raise InputError("empty timeline")
    return segments


def gen_sequence(timeline: str | list[tuple[str, float]], fps: float,
                 seed: int = 0, size: int = 64,
                 ) -> tuple[list[Frame], list[GroundTruthInterval]]:
    """Render a segment timeline to frames plus exact truth intervals for the
    explosion segments. Segment boundaries land on frame counts, so interval
    times are frame-exact; back-to-back explosion segments merge into one
    interval."""
    if isinstance(timeline, str):
        timeline = parse_timeline(timeline)
    if not timeline:
        raise InputError("empty timeline")
    if fps <= 0:
        raise InputError("fps must be positive")
    frames: list[Frame] = []
    truth: list[GroundTruthInterval] = []
    for seg_idx, (archetype, duration) in enumerate(timeline):
        if archetype not in ARCHETYPES:
            raise InputError(f"unknown archetype {archetype!r}")
        if duration <= 0:
            raise InputError("segment duration must be positive")
        n = int(round(duration * fps))
        if n < 1:
            raise InputError(f"segment {seg_idx} shorter than one frame at {fps} fps")
        recipe = SceneRecipe(archetype, _recipe_seed(seed, 997, seg_idx), size)
        params = _scene_params(recipe)
        start = len(frames)
        for j in range(n):
            frames.append(_compose(recipe, params, t_s=j / fps,
                                   timestamp_index=start + j))
        if archetype == EXPLOSION:
            start_s, end_s = start / fps, (start + n) / fps
            if truth and truth[-1].end_s == start_s:
                truth[-1] = GroundTruthInterval(truth[-1].start_s, end_s)
            else:
                truth.append(GroundTruthInterval(start_s, end_s))
    return frames, truth
