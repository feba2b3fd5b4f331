"""Color image/video handling: quaternion encoding, corruption protocol, metrics.

Pixels are encoded as pure quaternions (R, G, B on the three imaginary
planes).  The corruption protocol follows the benchmark convention: impulse
noise replaces channel values at random locations first, then a random
subset of pixels is kept as the observation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .qmat import QMatrix
from .rng import MASK_STREAM, NOISE_STREAM, stream_rng
from .solver import ObservationMask

__all__ = [
    "ColorImage",
    "ColorVideo",
    "CorruptionSpec",
    "image_to_qmatrix",
    "qmatrix_to_image",
    "gen_mask",
    "add_impulse_noise",
    "corrupt",
    "psnr",
    "ssim",
    "metrics",
    "read_image",
    "write_image",
    "read_video",
    "write_video",
]

PSNR_CAP = 100.0


@dataclass(frozen=True)
class ColorImage:
    """RGB image as three real channel planes, nominally in [0, 1]."""

    r: np.ndarray
    g: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        planes = []
        for name, p in (("r", self.r), ("g", self.g), ("b", self.b)):
            a = np.array(p, dtype=np.float64)
            if a.ndim != 2:
                raise ValueError("channel planes must be 2-D")
            a.setflags(write=False)
            object.__setattr__(self, name, a)
            planes.append(a)
        if planes[0].shape != planes[1].shape or planes[0].shape != planes[2].shape:
            raise ValueError("channel planes must share one shape")

    @property
    def shape(self) -> tuple[int, int]:
        return self.r.shape

    @property
    def height(self) -> int:
        return self.r.shape[0]

    @property
    def width(self) -> int:
        return self.r.shape[1]

    @property
    def channels(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (self.r, self.g, self.b)

    def clipped(self) -> "ColorImage":
        return ColorImage(np.clip(self.r, 0.0, 1.0), np.clip(self.g, 0.0, 1.0),
                          np.clip(self.b, 0.0, 1.0))

    def crop(self, x: int, y: int, w: int, h: int) -> "ColorImage":
        return ColorImage(self.r[y:y + h, x:x + w], self.g[y:y + h, x:x + w],
                          self.b[y:y + h, x:x + w])

    @classmethod
    def gray(cls, plane: np.ndarray) -> "ColorImage":
        return cls(plane, plane.copy(), plane.copy())


@dataclass(frozen=True)
class ColorVideo:
    """Ordered frames of identical shape."""

    frames: tuple[ColorImage, ...]

    def __post_init__(self):
        frames = tuple(self.frames)
        if not frames:
            raise ValueError("a video needs at least one frame")
        shape = frames[0].shape
        if any(f.shape != shape for f in frames):
            raise ValueError("video frames must share one shape")
        object.__setattr__(self, "frames", frames)

    @property
    def n3(self) -> int:
        return len(self.frames)

    @property
    def shape(self) -> tuple[int, int]:
        return self.frames[0].shape


@dataclass(frozen=True)
class CorruptionSpec:
    """Sampling ratio, impulse-noise sparsity and the master seed."""

    sr: float = 1.0
    gamma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.sr <= 1.0):
            raise ValueError("sr must lie in (0, 1]")
        if not (0.0 <= self.gamma <= 1.0):
            raise ValueError("gamma must lie in [0, 1]")


def image_to_qmatrix(img: ColorImage) -> QMatrix:
    """Pure quaternion encoding: R, G, B on the i, j, k planes."""
    return QMatrix.pure(img.r, img.g, img.b)


def qmatrix_to_image(X: QMatrix) -> ColorImage:
    """Drop the real plane (recovered data need not stay pure) and clamp."""
    return ColorImage(np.clip(X.x, 0.0, 1.0), np.clip(X.y, 0.0, 1.0),
                      np.clip(X.z, 0.0, 1.0))


def gen_mask(n1: int, n2: int, spec: CorruptionSpec, frame: int = 0) -> ObservationMask:
    """round(sr * n1 * n2) observed indices, uniform without replacement."""
    k = int(round(spec.sr * n1 * n2))
    rng = stream_rng(spec.seed, MASK_STREAM, frame)
    flat = np.zeros(n1 * n2, dtype=bool)
    if k > 0:
        flat[rng.choice(n1 * n2, size=k, replace=False)] = True
    return ObservationMask(flat.reshape(n1, n2))


def add_impulse_noise(img: ColorImage, spec: CorruptionSpec,
                      frame: int = 0) -> ColorImage:
    """Replace round(gamma * n1 * n2) values per channel with uniform draws.

    Channel supports are drawn independently; identical seeds reproduce the
    noise bit for bit.
    """
    n1, n2 = img.shape
    count = int(round(spec.gamma * n1 * n2))
    out = []
    for ch, plane in enumerate(img.channels):
        rng = stream_rng(spec.seed, NOISE_STREAM, frame, ch)
        flat = plane.copy().ravel()
        if count > 0:
            locs = rng.choice(n1 * n2, size=count, replace=False)
            flat[locs] = rng.uniform(size=count)
        out.append(flat.reshape(n1, n2))
    return ColorImage(*out)


def corrupt(img: ColorImage, spec: CorruptionSpec,
            frame: int = 0) -> tuple[ColorImage, ObservationMask]:
    """Benchmark corruption: impulse noise first, then random sampling."""
    noisy = add_impulse_noise(img, spec, frame=frame)
    mask = gen_mask(img.height, img.width, spec, frame=frame)
    return noisy, mask


# ---------------------------------------------------------------------------
# quality metrics
# ---------------------------------------------------------------------------


def psnr(recovered: ColorImage, reference: ColorImage) -> float:
    """Peak signal-to-noise ratio over all channel samples, capped at 100 dB."""
    if recovered.shape != reference.shape:
        raise ValueError("image shapes must match")
    se = sum(float(np.sum((a - b)**2))
             for a, b in zip(recovered.channels, reference.channels))
    mse = se / (3 * recovered.height * recovered.width)
    if mse == 0.0:
        return PSNR_CAP
    return min(PSNR_CAP, 10.0 * math.log10(1.0 / mse))


def _box_means(a: np.ndarray, win: int) -> np.ndarray:
    """Means of all win x win windows (valid positions) via an integral image."""
    S = np.zeros((a.shape[0] + 1, a.shape[1] + 1))
    np.cumsum(np.cumsum(a, axis=0), axis=1, out=S[1:, 1:])
    total = (S[win:, win:] - S[:-win, win:] - S[win:, :-win] + S[:-win, :-win])
    return total / (win * win)


def _ssim_channel(x: np.ndarray, y: np.ndarray, win: int = 8) -> float:
    c1 = 0.01**2
    c2 = 0.03**2
    mx = _box_means(x, win)
    my = _box_means(y, win)
    vx = _box_means(x * x, win) - mx * mx
    vy = _box_means(y * y, win) - my * my
    cxy = _box_means(x * y, win) - mx * my
    num = (2.0 * mx * my + c1) * (2.0 * cxy + c2)
    den = (mx * mx + my * my + c1) * (vx + vy + c2)
    return float(np.mean(num / den))


def ssim(recovered: ColorImage, reference: ColorImage) -> float:
    """Mean single-scale SSIM over channels, 8x8 uniform window, stride 1."""
    if recovered.shape != reference.shape:
        raise ValueError("image shapes must match")
    if min(recovered.shape) < 8:
        raise ValueError("SSIM needs images of at least 8x8")
    return float(np.mean([_ssim_channel(a, b) for a, b
                          in zip(recovered.channels, reference.channels)]))


def metrics(recovered, reference) -> dict:
    """PSNR/SSIM record; videos get frame means plus a per-frame list."""
    if isinstance(recovered, ColorVideo) or isinstance(reference, ColorVideo):
        if recovered.n3 != reference.n3:
            raise ValueError("frame counts must match")
        per_frame = [{"psnr": psnr(a, b), "ssim": ssim(a, b)}
                     for a, b in zip(recovered.frames, reference.frames)]
        return {"psnr": float(np.mean([m["psnr"] for m in per_frame])),
                "ssim": float(np.mean([m["ssim"] for m in per_frame])),
                "per_frame": per_frame}
    return {"psnr": psnr(recovered, reference), "ssim": ssim(recovered, reference)}


# ---------------------------------------------------------------------------
# file IO
# ---------------------------------------------------------------------------


def read_image(path) -> ColorImage:
    """Load a PNG/PPM image as float channels in [0, 1]."""
    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0
    return ColorImage(arr[:, :, 0], arr[:, :, 1], arr[:, :, 2])


def write_image(path, img: ColorImage) -> None:
    """Write as 8-bit RGB (format from the extension), clamping to [0, 1]."""
    c = img.clipped()
    arr = np.stack([c.r, c.g, c.b], axis=2)
    data = np.rint(arr * 255.0).astype(np.uint8)
    Image.fromarray(data, mode="RGB").save(path)


def read_video(directory) -> ColorVideo:
    """Load a directory of numbered PNG frames in sorted order."""
    paths = sorted(Path(directory).glob("*.png"))
    if not paths:
        raise ValueError(f"no PNG frames found in {directory}")
    return ColorVideo(tuple(read_image(p) for p in paths))


def write_video(directory, video: ColorVideo) -> None:
    """Write frames as frame_0001.png, frame_0002.png, ..."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    for i, frame in enumerate(video.frames, start=1):
        write_image(d / f"frame_{i:04d}.png", frame)
