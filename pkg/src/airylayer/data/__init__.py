"""Frozen empirical baselines shipped with the package."""
