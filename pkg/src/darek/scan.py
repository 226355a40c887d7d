"""2-D laser scans: file loading, synthetic ray casting and SDF training labels.

Scan files are UTF-8 CSV with the header ``theta,range`` (radians, meters),
one return per row, ``theta`` strictly increasing and ``range > 0``.  Lines
starting with ``#`` are ignored.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import DarekValidationError, ScanFormatError


@dataclass(frozen=True)
class Pose:
    x: float = 0.0
    y: float = 0.0
    heading: float = 0.0


@dataclass(frozen=True)
class LaserScan:
    theta: np.ndarray
    range: np.ndarray
    pose: Pose = Pose()

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float)
        rng = np.asarray(self.range, dtype=float)
        if theta.shape != rng.shape or theta.ndim != 1:
            raise DarekValidationError("theta and range must be 1-D arrays of equal length")
        if theta.size == 0:
            raise DarekValidationError("scan is empty")
        if not np.all(np.isfinite(rng)) or np.any(rng <= 0):
            raise DarekValidationError("ranges must be finite and positive")
        if np.any(np.diff(theta) <= 0):
            raise DarekValidationError("theta must be strictly increasing")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "range", rng)

    def __len__(self):
        return self.theta.size

    def directions(self, theta=None) -> np.ndarray:
        theta = self.theta if theta is None else np.asarray(theta, dtype=float)
        a = theta + self.pose.heading
        return np.stack([np.cos(a), np.sin(a)], axis=-1)

    @property
    def origin(self) -> np.ndarray:
        return np.array([self.pose.x, self.pose.y])

    def hit_points(self) -> np.ndarray:
        return self.origin + self.range[:, None] * self.directions()


def load_scan(path, pose: Pose = Pose()) -> LaserScan:
    thetas, ranges = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        lines = [(i, line) for i, line in enumerate(fh, start=1) if line.strip() and not line.lstrip().startswith("#")]
    if not lines:
        raise ScanFormatError("file has no header")
    header_line, header = lines[0]
    cols = [c.strip() for c in next(csv.reader([header]))]
    if cols != ["theta", "range"]:
        raise ScanFormatError(f"expected header 'theta,range', got {header.strip()!r}", header_line)
    for lineno, line in lines[1:]:
        row = next(csv.reader([line]))
        if len(row) != 2:
            raise ScanFormatError(f"expected 2 fields, got {len(row)}", lineno)
        try:
            t, r = float(row[0]), float(row[1])
        except ValueError:
            raise ScanFormatError(f"non-numeric field in {line.strip()!r}", lineno) from None
        if not (math.isfinite(t) and math.isfinite(r)) or r <= 0:
            raise ScanFormatError(f"range must be finite and positive, got {row[1].strip()}", lineno)
        if thetas and t <= thetas[-1]:
            raise ScanFormatError(f"theta {t} does not increase (previous {thetas[-1]})", lineno)
        thetas.append(t)
        ranges.append(r)
    if not thetas:
        raise ScanFormatError("scan is empty")
    return LaserScan(np.array(thetas), np.array(ranges), pose)


def save_scan(scan: LaserScan, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["theta", "range"])
        for t, r in zip(scan.theta, scan.range):
            w.writerow([repr(float(t)), repr(float(r))])


@dataclass(frozen=True)
class Circle:
    cx: float
    cy: float
    radius: float

    def ray_cast(self, origin, direction) -> np.ndarray:
        """Distance to the first hit along each unit direction (inf on a miss)."""
        d = np.atleast_2d(direction)
        oc = np.asarray(origin, dtype=float) - np.array([self.cx, self.cy])
        b = d @ oc
        c = oc @ oc - self.radius**2
        disc = b * b - c
        out = np.full(d.shape[0], np.inf)
        ok = disc >= 0
        root = np.sqrt(np.where(ok, disc, 0.0))
        near, far = -b - root, -b + root
        r = np.where(near > 0, near, far)
        out[ok & (r > 0)] = r[ok & (r > 0)]
        return out

    def angular_half_extent(self, dist: float) -> float:
        return math.asin(min(1.0, self.radius / dist))


@dataclass(frozen=True)
class Box:
    """Axis-aligned square of side ``2 * half``."""

    cx: float
    cy: float
    half: float

    def ray_cast(self, origin, direction) -> np.ndarray:
        d = np.atleast_2d(direction)
        o = np.asarray(origin, dtype=float)
        lo = np.array([self.cx - self.half, self.cy - self.half])
        hi = np.array([self.cx + self.half, self.cy + self.half])
        with np.errstate(divide="ignore", invalid="ignore"):
            t1 = (lo - o) / d
            t2 = (hi - o) / d
        tmin = np.nanmax(np.minimum(t1, t2), axis=1)
        tmax = np.nanmin(np.maximum(t1, t2), axis=1)
        hit = (tmax >= tmin) & (tmax > 0)
        r = np.where(tmin > 0, tmin, tmax)
        return np.where(hit, r, np.inf)

    def angular_half_extent(self, dist: float) -> float:
        # inscribed circle: valid whatever the viewing direction
        return math.asin(min(1.0, self.half / dist))


def make_obstacle(shape: str, pose: Pose, dist: float, radius: float):
    """Obstacle centred ``dist`` ahead of the sensor along its heading."""
    cx = pose.x + dist * math.cos(pose.heading)
    cy = pose.y + dist * math.sin(pose.heading)
    if shape == "circle":
        return Circle(cx, cy, radius)
    if shape == "box":
        return Box(cx, cy, radius)
    raise DarekValidationError(f"unknown obstacle shape {shape!r}")


def default_fov(obstacle, dist: float) -> tuple:
    # stay inside the silhouette so every ray returns
    a = 0.9 * obstacle.angular_half_extent(dist)
    return (-a, a)


def synth_scan(shape: str = "circle", pose: Pose = Pose(), n_rays: int = 40, seed: int = 0,
               radius: float = 1.0, dist: float = 3.0, fov=None, noise: float = 0.0):
    """Exact ray-cast scan of a circle or box obstacle.

    Returns ``(scan, obstacle)``.  Rays that miss are dropped.  ``noise`` is
    the standard deviation of additive Gaussian range noise.
    """
    if n_rays < 1:
        raise DarekValidationError("n_rays must be >= 1")
    obstacle = make_obstacle(shape, pose, dist, radius)
    lo, hi = fov if fov is not None else default_fov(obstacle, dist)
    theta = np.array([0.5 * (lo + hi)]) if n_rays == 1 else np.linspace(lo, hi, n_rays)
    probe = LaserScan(theta, np.ones_like(theta), pose)
    r = obstacle.ray_cast(probe.origin, probe.directions())
    keep = np.isfinite(r)
    if not np.any(keep):
        raise DarekValidationError("no ray hits the obstacle")
    r = r[keep]
    if noise > 0:
        r = r + np.random.default_rng(seed).normal(0.0, noise, size=r.shape)
    return LaserScan(theta[keep], r, pose), obstacle


def sdf_samples(scan: LaserScan, spacing: float = 0.1, truncation: float = 0.5):
    """Truncated signed-distance labels along every ray.

    Points are placed every ``spacing`` meters within ``truncation`` of each
    hit; the label is ``range - r`` (positive in front of the surface,
    negative behind it, zero at the hit).  Returns ``(points, labels, ray)``.
    """
    n = int(round(truncation / spacing))
    offsets = spacing * np.arange(-n, n + 1)
    r = scan.range[:, None] + offsets[None, :]
    valid = r > 0
    pts = scan.origin + r[..., None] * scan.directions()[:, None, :]
    labels = np.broadcast_to(-offsets, r.shape)
    ray = np.broadcast_to(np.arange(len(scan))[:, None], r.shape)
    return pts[valid], labels[valid].copy(), ray[valid].copy()
