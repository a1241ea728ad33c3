from pathlib import Path

import numpy as np
from loguru import logger
from PIL import Image, ImageDraw
from scipy import ndimage

from common.exceptions.custom_exceptions import CustomException
from msnet.data.enums import ClassLabel
from msnet.data.exceptions import DataExceptionEnum
from msnet.data.models import ManifestEntry, SynthLesion, SynthSummary
from msnet.data.serializers import ManifestSerializer
from msnet.imageproc.models import ImageBuffer
from msnet.imageproc.serializers import PpmSerializer

# colour ranges per RGB channel, 8-bit units
SKIN_RANGE = ((200, 230), (160, 190), (130, 160))
BROWN_RANGE = ((120, 160), (80, 110), (50, 80))
DARK_RANGE = ((40, 70), (25, 45), (20, 40))

NOISE_SIGMA = 4.0
TEXTURE_AMPLITUDE = 24.0
TEXTURE_SQUARE = 2  # checker period is twice this
EDGE_SOFTNESS = 2.0

MIN_NATIVE_SIZE = 128
POLYGON_VERTICES = 720


class SynthService:
    """
    Desk-scale stand-in for dermoscopy data.

    Each class carries one visual cue: melanoma is asymmetric, irregular
    and two-coloured; nevus is a symmetric single-coloured blob;
    seborrheic keratosis is a nevus-like blob with a fine checker texture
    that only the fine (centre crop, 2x detail) view can resolve.
    """

    @classmethod
    def render(
        cls, label: ClassLabel, rng: np.random.Generator, native_size: int = 256
    ) -> SynthLesion:
        if native_size < MIN_NATIVE_SIZE:
            raise CustomException(DataExceptionEnum.BAD_NATIVE_SIZE, native_size=native_size)

        n = native_size
        radius = n * rng.uniform(0.22, 0.30)
        skin = cls._colour(rng, SKIN_RANGE)
        lesion = cls._colour(rng, BROWN_RANGE)
        canvas = np.empty((n, n, 3))
        canvas[:] = skin

        if label is ClassLabel.MELANOMA:
            mask = cls._irregular_mask(rng, n, radius)
            core = cls._core_mask(rng, n, radius) & mask
            dark = cls._colour(rng, DARK_RANGE)
            canvas = cls._blend(canvas, lesion, mask.astype(np.float64))
            canvas = cls._blend(canvas, dark, core.astype(np.float64))
        else:
            alpha = cls._ellipse_alpha(rng, n, radius)
            mask = alpha >= 0.5
            canvas = cls._blend(canvas, lesion, alpha)
            if label is ClassLabel.SEBORRHEIC_KERATOSIS:
                canvas += (TEXTURE_AMPLITUDE * cls.checker(n) * alpha)[..., None]

        canvas += rng.normal(0.0, NOISE_SIGMA, size=canvas.shape)
        pixels = np.clip(np.rint(canvas), 0, 255).astype(np.uint8)
        return SynthLesion(label=label, image=ImageBuffer(pixels), mask=mask)

    @classmethod
    def synth_generate(
        cls, label: ClassLabel, rng: np.random.Generator, native_size: int = 256
    ) -> ImageBuffer:
        return cls.render(label, rng, native_size).image

    @classmethod
    def synth_dataset(
        cls, out_dir: str | Path, n_train_per_class: int, n_test_per_class: int, seed: int
    ) -> SynthSummary:
        """Write PPM files plus ``train.csv`` / ``test.csv`` under ``out_dir``."""
        out_dir = Path(out_dir)
        rng = np.random.default_rng(seed)
        manifests = {}
        counts = {}

        for split, per_class in (("train", n_train_per_class), ("test", n_test_per_class)):
            split_dir = out_dir / split
            cls._guard(split_dir, lambda: split_dir.mkdir(parents=True, exist_ok=True))
            entries = []
            for index in range(per_class):
                for label in ClassLabel:
                    image_id = f"{split}_{len(entries):05d}"
                    file = split_dir / f"{image_id}.ppm"
                    image = cls.synth_generate(label, rng)
                    cls._guard(file, lambda: PpmSerializer.write(file, image))
                    entries.append(ManifestEntry(image_id=image_id, path=file, label=label))

            manifest = out_dir / f"{split}.csv"
            cls._guard(manifest, lambda: ManifestSerializer.write(entries, manifest))
            manifests[split] = manifest
            counts[split] = len(entries)
            logger.info(f"synth {split}: {len(entries)} images -> {manifest}")

        return SynthSummary(
            out_dir=out_dir,
            train_manifest=manifests["train"],
            test_manifest=manifests["test"],
            train_count=counts["train"],
            test_count=counts["test"],
        )

    @classmethod
    def measure_mirror_asymmetry(cls, mask: np.ndarray) -> float:
        """Pixels that differ from the left-right mirror, as a fraction of the blob."""
        area = int(mask.sum())
        if area == 0:
            return 0.0
        return float(np.logical_xor(mask, mask[:, ::-1]).sum()) / area

    @classmethod
    def measure_texture_energy(cls, image: ImageBuffer, mask: np.ndarray) -> float:
        """Mean absolute Laplacian of the grey image over the blob interior."""
        grey = image.array.astype(np.float64).mean(axis=2) / 255.0
        laplacian = ndimage.laplace(grey)
        interior = ndimage.binary_erosion(mask, iterations=int(EDGE_SOFTNESS) + 1)
        if not interior.any():
            return 0.0
        return float(np.abs(laplacian[interior]).mean())

    @staticmethod
    def checker(n: int) -> np.ndarray:
        """+-1 checkerboard of ``TEXTURE_SQUARE``-pixel squares on absolute pixel indices."""
        squares = np.arange(n) // TEXTURE_SQUARE
        return np.where((squares[:, None] + squares[None, :]) % 2 == 0, 1.0, -1.0)

    @staticmethod
    def _grid(n: int) -> tuple[np.ndarray, np.ndarray]:
        # pixel centres relative to the image centre; symmetric under x -> n-1-x
        coords = np.arange(n) + 0.5 - n / 2
        return np.meshgrid(coords, coords, indexing="ij")

    @classmethod
    def _ellipse_alpha(cls, rng: np.random.Generator, n: int, radius: float) -> np.ndarray:
        semi_x = radius * rng.uniform(0.9, 1.1)
        semi_y = radius * rng.uniform(0.9, 1.1)
        yy, xx = cls._grid(n)
        rho = np.sqrt((xx / semi_x) ** 2 + (yy / semi_y) ** 2)
        return np.clip(0.5 + (1.0 - rho) * radius / EDGE_SOFTNESS, 0.0, 1.0)

    @classmethod
    def _irregular_mask(cls, rng: np.random.Generator, n: int, radius: float) -> np.ndarray:
        angles = np.linspace(0.0, 2 * np.pi, POLYGON_VERTICES, endpoint=False)
        radii = cls._irregular_radius(rng, angles, radius)
        centre = (n - 1) / 2
        xs = centre + radii * np.cos(angles)
        ys = centre + radii * np.sin(angles)

        canvas = Image.new("L", (n, n), 0)
        ImageDraw.Draw(canvas).polygon(list(zip(xs.tolist(), ys.tolist())), fill=255)
        return np.asarray(canvas) > 0

    @staticmethod
    def _irregular_radius(
        rng: np.random.Generator, angles: np.ndarray, radius: float
    ) -> np.ndarray:
        """
        Boundary radius per angle.

        One side is stretched by ``s`` and the other shrunk by ``1/s``; each
        quadrant gets its own jitter, quadrant radii are cosine-blended and
        low harmonics roughen the border.
        """
        stretch = rng.uniform(1.15, 1.3)
        if rng.random() < 0.5:
            stretch = 1.0 / stretch
        # quadrant centres at 45, 135, 225, 315 degrees; 0 and 3 lie on the right
        side = np.array([stretch, 1.0 / stretch, 1.0 / stretch, stretch])
        quadrant = radius * side * rng.uniform(0.95, 1.05, size=4)

        position = (angles - np.pi / 4) / (np.pi / 2)
        base = np.floor(position)
        t = position - base
        lo = base.astype(np.int64) % 4
        hi = (lo + 1) % 4
        weight = (1.0 - np.cos(np.pi * t)) / 2
        blended = quadrant[lo] * (1.0 - weight) + quadrant[hi] * weight

        orders = np.arange(3, 8)
        amplitudes = radius * rng.uniform(0.01, 0.03, size=orders.size)
        phases = rng.uniform(0.0, 2 * np.pi, size=orders.size)
        ripple = (amplitudes[:, None] * np.cos(orders[:, None] * angles + phases[:, None])).sum(0)
        return blended + ripple

    @classmethod
    def _core_mask(cls, rng: np.random.Generator, n: int, radius: float) -> np.ndarray:
        direction = rng.uniform(0.0, 2 * np.pi)
        offset = radius * rng.uniform(0.1, 0.3)
        core_radius = radius * rng.uniform(0.35, 0.5)
        yy, xx = cls._grid(n)
        dx = xx - offset * np.cos(direction)
        dy = yy - offset * np.sin(direction)
        return dx * dx + dy * dy <= core_radius * core_radius

    @staticmethod
    def _colour(rng: np.random.Generator, ranges) -> np.ndarray:
        return np.array([rng.uniform(lo, hi) for lo, hi in ranges])

    @staticmethod
    def _blend(canvas: np.ndarray, colour: np.ndarray, alpha: np.ndarray) -> np.ndarray:
        a = alpha[..., None]
        return canvas * (1.0 - a) + colour * a

    @staticmethod
    def _guard(path: Path, action) -> None:
        try:
            action()
        except OSError as exc:
            raise CustomException(
                DataExceptionEnum.WRITE_FAILED, path=path, reason=exc.strerror or exc
            ) from exc
