"""Unit tests for k-means user clustering."""

import numpy as np
import pytest

from py_uavnoma.clustering import kmeans
from py_uavnoma.errors import ContractError
from py_uavnoma.models import GroundUser


class TestKMeans:
    """Tests for Lloyd iterations with k-means++ seeding."""

    def test_square_corners(self):
        points = np.array([[0.0, 0.0], [0.0, 2.0], [1000.0, 0.0], [1000.0, 2.0]])
        result = kmeans(points, 2, seed=3)
        centroids = result.centroids[np.argsort(result.centroids[:, 0])]
        np.testing.assert_allclose(centroids, [[0, 1], [1000, 1]])
        assert result.distortion == pytest.approx(4.0)
        assert result.counts == [2, 2]
        assert result.converged

    def test_two_blobs(self):
        rng = np.random.default_rng(0)
        left = rng.normal((-500.0, 0.0), 10.0, size=(50, 2))
        right = rng.normal((500.0, 0.0), 10.0, size=(50, 2))
        result = kmeans(np.vstack([left, right]), 2, seed=1)
        labels = result.assignment
        assert len(set(labels[:50])) == 1
        assert len(set(labels[50:])) == 1
        assert labels[0] != labels[50]

    def test_history_nonincreasing(self):
        points = np.random.default_rng(2).uniform(-500, 500, size=(200, 2))
        result = kmeans(points, 5, seed=4)
        assert np.all(np.diff(result.history) <= 1e-9)
        assert result.history[-1] == pytest.approx(result.distortion)

    def test_single_cluster_is_mean(self):
        points = np.random.default_rng(5).uniform(-100, 100, size=(30, 2))
        result = kmeans(points, 1)
        np.testing.assert_allclose(result.centroids[0], points.mean(axis=0))

    def test_deterministic(self):
        points = np.random.default_rng(6).uniform(-500, 500, size=(100, 2))
        a = kmeans(points, 4, seed=9)
        b = kmeans(points, 4, seed=9)
        np.testing.assert_array_equal(a.centroids, b.centroids)
        np.testing.assert_array_equal(a.assignment, b.assignment)

    def test_accepts_users(self):
        users = [GroundUser(position=(0, 0)), GroundUser(position=(0, 10))]
        result = kmeans(users, 2)
        assert sorted(result.counts) == [1, 1]
        assert result.distortion == 0.0

    def test_too_few_users(self):
        with pytest.raises(ContractError):
            kmeans(np.zeros((2, 2)), 3)

    def test_invalid_k(self):
        with pytest.raises(ContractError):
            kmeans(np.zeros((2, 2)), 0)
