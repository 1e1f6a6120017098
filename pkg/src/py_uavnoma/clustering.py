"""K-means clustering of ground users (initial cells of the UAVs)."""

from typing import List, Sequence, Tuple, Union

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

from py_uavnoma.errors import ContractError
from py_uavnoma.models import GroundUser


class KMeansResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    centroids: np.ndarray = Field(..., description="(K, 2) cluster centers")
    assignment: np.ndarray = Field(..., description="Cluster index per user")
    counts: List[int] = Field(..., description="Users per cluster")
    distortion: float = Field(..., description="Sum of squared distances")
    history: List[float] = Field(default_factory=list, description="Per iteration")
    iterations: int = 0
    converged: bool = False


def _points(users: Union[Sequence[GroundUser], np.ndarray]) -> np.ndarray:
    if len(users) and isinstance(users[0], GroundUser):
        return np.array([u.position for u in users], dtype=float)
    return np.asarray(users, dtype=float).reshape(-1, 2)


def _assign(points: np.ndarray, centroids: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    d2 = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    labels = np.argmin(d2, axis=1)
    return labels, d2[np.arange(len(points)), labels]


def kmeans_plus_plus(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """K-means++ seeding: each new center drawn with probability ~ D^2."""
    centers = [points[rng.integers(len(points))]]
    for _ in range(1, k):
        _, d2 = _assign(points, np.array(centers))
        total = d2.sum()
        if total > 0:
            idx = rng.choice(len(points), p=d2 / total)
        else:
            idx = rng.integers(len(points))
        centers.append(points[idx])
    return np.array(centers, dtype=float)


def kmeans(
    users: Union[Sequence[GroundUser], np.ndarray],
    K: int,
    max_iter: int = 100,
    tol: float = 1e-6,
    seed: int = 0,
) -> KMeansResult:
    """Lloyd iterations from K-means++ seeding.

    Stops when no centroid moves by ``tol`` or more, or after ``max_iter``
    iterations. A cluster that becomes empty is re-seeded at the point
    farthest from its current centroid (lowest index on ties).
    """
    points = _points(users)
    if K < 1:
        raise ContractError("K must be >= 1")
    if len(points) < K:
        raise ContractError(f"need at least K={K} users, got {len(points)}")

    rng = np.random.default_rng(seed)
    centroids = kmeans_plus_plus(points, K, rng)
    history: List[float] = []
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        labels, d2 = _assign(points, centroids)
        history.append(float(d2.sum()))
        updated = centroids.copy()
        for k in range(K):
            members = labels == k
            if members.any():
                updated[k] = points[members].mean(axis=0)
                continue
            far = int(np.argmax(d2))
            logger.debug(f"cluster {k} empty, re-seeded at point {far}")
            updated[k] = points[far]
            d2[far] = 0.0
        shift = float(np.linalg.norm(updated - centroids, axis=1).max())
        centroids = updated
        if shift < tol:
            converged = True
            break

    labels, d2 = _assign(points, centroids)
    history.append(float(d2.sum()))
    return KMeansResult(
        centroids=centroids,
        assignment=labels,
        counts=np.bincount(labels, minlength=K).tolist(),
        distortion=float(d2.sum()),
        history=history,
        iterations=iterations,
        converged=converged,
    )
