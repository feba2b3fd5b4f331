"""Nonlocal-self-similarity pipeline: patch clustering + per-group solves.

Overlapping s x s patches are extracted from an initial estimate, clustered
with K-means++ on their quaternion content, and each cluster's patches are
stacked as columns of a small completion problem solved independently.
Recovered patches are scattered back and overlaps averaged.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .qmat import NumericalError, QMatrix
from .solver import ObservationMask, RecoveryReport, SolverConfig, nrqmc_solve

__all__ = [
    "PatchPlan",
    "ClusterModel",
    "GroupProblem",
    "extract_patches",
    "kmeanspp_cluster",
    "build_group_problems",
    "solve_and_aggregate",
    "nrqmc_nss",
    "assignments_to_csv",
    "default_cluster_count",
]


def _axis_origins(n: int, s: int, l: int) -> list[int]:
    step = s - l
    count = math.ceil((n - l) / step)
    return [min(t * step, n - s) for t in range(count)]


@dataclass(frozen=True)
class PatchPlan:
    """Patch geometry: side s, overlap l, and clamped raster-order origins.

    Per-slice patch count is ceil((n1-l)/(s-l)) * ceil((n2-l)/(s-l)); the
    last origin per axis is clamped to n-s so patches stay in bounds while
    covering every pixel.
    """

    n1: int
    n2: int
    n3: int
    s: int
    l: int
    origins: tuple[tuple[int, int, int], ...]

    @classmethod
    def for_shape(cls, n1: int, n2: int, n3: int = 1, s: int = 5,
                  l: int = 1) -> "PatchPlan":
        if not (1 <= l < s <= min(n1, n2)):
            raise ValueError(f"need 1 <= l < s <= min(n1, n2); got s={s}, l={l}")
        if n3 < 1:
            raise ValueError("n3 must be at least 1")
        rows = _axis_origins(n1, s, l)
        cols = _axis_origins(n2, s, l)
        origins = tuple((j, r, c) for j in range(n3) for r in rows for c in cols)
        return cls(n1=n1, n2=n2, n3=n3, s=s, l=l, origins=origins)

    @property
    def per_slice(self) -> int:
        return len(self.origins) // self.n3

    @property
    def total(self) -> int:
        return len(self.origins)


def _as_frames(data) -> list[QMatrix]:
    if isinstance(data, QMatrix):
        return [data]
    frames = list(data)
    if not frames:
        raise ValueError("need at least one frame")
    shape = frames[0].shape
    if any(f.shape != shape for f in frames):
        raise ValueError("all frames must share one shape")
    return frames


def extract_patches(data, plan: PatchPlan) -> np.ndarray:
    """Vectorized patches as an array (count, 4, s*s).

    Patches are read at the plan origins, column-major within each patch,
    one row of four component planes per patch.
    """
    frames = _as_frames(data)
    if len(frames) != plan.n3 or frames[0].shape != (plan.n1, plan.n2):
        raise ValueError("patch plan does not match the data shape")
    s = plan.s
    out = np.empty((plan.total, 4, s * s))
    for t, (j, r, c) in enumerate(plan.origins):
        f = frames[j]
        for ci, plane in enumerate(f.components):
            out[t, ci] = plane[r:r + s, c:c + s].ravel(order="F")
    return out


@dataclass(frozen=True)
class ClusterModel:
    """K-means result: centroids (N, 4, s*s) and a patch -> group assignment."""

    centroids: np.ndarray
    assignment: np.ndarray

    @property
    def n_groups(self) -> int:
        return self.centroids.shape[0]

    @property
    def group_sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.n_groups)


def default_cluster_count(total_patches: int, target_per_group: int = 50) -> int:
    """About target_per_group patches per cluster, at least one cluster."""
    return max(1, math.ceil(total_patches / target_per_group))


def kmeanspp_cluster(patches: np.ndarray, n_groups: int, seed: int = 0,
                     max_rounds: int = 100) -> ClusterModel:
    """K-means++ seeding followed by Lloyd rounds, deterministic per seed.

    Distances are Euclidean over the stacked component planes (the
    Frobenius distance of quaternion patch vectors).  A cluster emptied
    during a round is re-seeded with the patch farthest from its assigned
    centroid (lowest index on ties).
    """
    count = patches.shape[0]
    if not (1 <= n_groups <= count):
        raise ValueError(f"cluster count must lie in [1, {count}]")
    feats = patches.reshape(count, -1)
    rng = np.random.default_rng(seed)

    centroids = np.empty((n_groups, feats.shape[1]))
    first = int(rng.integers(count))
    centroids[0] = feats[first]
    d2 = np.sum((feats - centroids[0])**2, axis=1)
    for g in range(1, n_groups):
        total = d2.sum()
        if total > 0.0:
            nxt = int(rng.choice(count, p=d2 / total))
        else:
            nxt = int(rng.integers(count))
        centroids[g] = feats[nxt]
        d2 = np.minimum(d2, np.sum((feats - centroids[g])**2, axis=1))

    labels = np.full(count, -1)
    for _ in range(max_rounds):
        dists = (np.sum(feats**2, axis=1)[:, None]
                 - 2.0 * feats @ centroids.T
                 + np.sum(centroids**2, axis=1)[None, :])
        new_labels = np.argmin(dists, axis=1)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for g in range(n_groups):
            members = labels == g
            if np.any(members):
                centroids[g] = feats[members].mean(axis=0)
        own = np.take_along_axis(dists, labels[:, None], axis=1)[:, 0]
        for g in range(n_groups):
            if not np.any(labels == g):
                far = int(np.argmax(own))
                centroids[g] = feats[far]
                labels[far] = g
                own[far] = 0.0
    s2 = patches.shape[2]
    return ClusterModel(centroids=centroids.reshape(n_groups, 4, s2),
                        assignment=np.asarray(labels, dtype=int))


@dataclass(frozen=True)
class GroupProblem:
    """One cluster's completion problem: columns are vectorized observed patches."""

    data: QMatrix
    mask: ObservationMask
    origins: tuple[tuple[int, int, int], ...]
    patch_indices: tuple[int, ...]


def build_group_problems(data, masks, model: ClusterModel,
                         plan: PatchPlan) -> list[GroupProblem]:
    """Gather observed data and mask patches into per-group column stacks."""
    frames = _as_frames(data)
    mask_list = [masks] if isinstance(masks, ObservationMask) else list(masks)
    if len(mask_list) != plan.n3:
        raise ValueError("need one mask per slice")
    s = plan.s
    problems = []
    for g in range(model.n_groups):
        idx = np.nonzero(model.assignment == g)[0]
        cols_w = np.empty((s * s, idx.size))
        cols_x = np.empty_like(cols_w)
        cols_y = np.empty_like(cols_w)
        cols_z = np.empty_like(cols_w)
        cols_m = np.empty((s * s, idx.size), dtype=bool)
        origins = []
        for col, t in enumerate(idx):
            j, r, c = plan.origins[t]
            origins.append((j, r, c))
            f = frames[j]
            cols_w[:, col] = f.w[r:r + s, c:c + s].ravel(order="F")
            cols_x[:, col] = f.x[r:r + s, c:c + s].ravel(order="F")
            cols_y[:, col] = f.y[r:r + s, c:c + s].ravel(order="F")
            cols_z[:, col] = f.z[r:r + s, c:c + s].ravel(order="F")
            cols_m[:, col] = mask_list[j].mask[r:r + s, c:c + s].ravel(order="F")
        problems.append(GroupProblem(
            data=QMatrix(cols_w, cols_x, cols_y, cols_z),
            mask=ObservationMask(cols_m),
            origins=tuple(origins),
            patch_indices=tuple(int(t) for t in idx)))
    return problems


def solve_and_aggregate(groups: list[GroupProblem], config: SolverConfig,
                        shape: tuple[int, int, int],
                        threads: int = 1) -> list[QMatrix]:
    """Solve every group problem and average overlapping patch contributions.

    The aggregation order is fixed by group then column, so threaded and
    sequential execution produce identical output.
    """
    def _solve(g: GroupProblem) -> RecoveryReport:
        return nrqmc_solve(g.data, g.mask, config)

    results: list[RecoveryReport | Exception] = [None] * len(groups)
    if threads > 1 and len(groups) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(_solve, g) for g in groups]
            for i, fut in enumerate(futures):
                try:
                    results[i] = fut.result()
                except Exception as exc:  # noqa: BLE001 - collected below
                    results[i] = exc
    else:
        for i, g in enumerate(groups):
            try:
                results[i] = _solve(g)
            except Exception as exc:  # noqa: BLE001 - collected below
                results[i] = exc

    failed = [i for i, r in enumerate(results) if isinstance(r, Exception)]
    if failed:
        first = results[failed[0]]
        raise NumericalError(f"group solves failed for groups {failed}: {first}")

    n1, n2, n3 = shape
    s = groups[0].data.n1 if groups else 0
    s = int(round(math.sqrt(s)))
    sums = np.zeros((4, n3, n1, n2))
    counts = np.zeros((n3, n1, n2))
    for g, rep in zip(groups, results):
        planes = rep.L.components
        for col, (j, r, c) in enumerate(g.origins):
            for ci in range(4):
                sums[ci, j, r:r + s, c:c + s] += planes[ci][:, col].reshape(s, s, order="F")
            counts[j, r:r + s, c:c + s] += 1.0
    if np.any(counts == 0):
        raise ValueError("patch plan does not cover the full shape")
    return [QMatrix(sums[0, j] / counts[j], sums[1, j] / counts[j],
                    sums[2, j] / counts[j], sums[3, j] / counts[j])
            for j in range(n3)]


def nrqmc_nss(observed, masks, initial_estimate, config: SolverConfig | None = None,
              s: int = 5, l: int = 1, n_groups: int | None = None,
              seed: int = 0, max_rounds: int = 100, threads: int = 1):
    """Patch-grouped robust completion seeded by an initial estimate.

    Patches come from the initial estimate (typically a plain solve of the
    same data); the group problems gather the raw observed values and mask.
    A single matrix runs the 2-D variant; a frame sequence pools patches
    across slices (3-D variant).  Returns the same container kind as the
    input.
    """
    single = isinstance(observed, QMatrix)
    frames = _as_frames(observed)
    initial = _as_frames(initial_estimate)
    if len(initial) != len(frames) or initial[0].shape != frames[0].shape:
        raise ValueError("initial estimate shape must match the observed data")
    config = config or SolverConfig()
    n1, n2 = frames[0].shape
    n3 = len(frames)
    plan = PatchPlan.for_shape(n1, n2, n3, s=s, l=l)
    patches = extract_patches(initial, plan)
    n = n_groups if n_groups is not None else default_cluster_count(plan.total)
    model = kmeanspp_cluster(patches, n, seed=seed, max_rounds=max_rounds)
    groups = build_group_problems(frames, masks, model, plan)
    out = solve_and_aggregate(groups, config, (n1, n2, n3), threads=threads)
    return out[0] if single else out


def assignments_to_csv(model: ClusterModel, plan: PatchPlan) -> str:
    """Cluster assignment dump: patch_index, slice, row, col, group."""
    lines = ["patch_index,slice,row,col,group"]
    for t, (j, r, c) in enumerate(plan.origins):
        lines.append(f"{t},{j},{r},{c},{int(model.assignment[t])}")
    return "\n".join(lines) + "\n"
