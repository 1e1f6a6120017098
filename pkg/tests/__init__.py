"""Tests for py-uavnoma."""
