"""Observation matrix with optional column-group and row-cluster partitions."""
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Dataset:
    """``N x P`` observations.

    Parameters
    ----------
    observations : array, shape (N, P)
    column_groups : tuple of int, optional
        Sizes of ``G`` contiguous column blocks (views); must sum to ``P``.
    row_clusters : sequence, optional
        One cluster label per row.
    """

    observations: np.ndarray
    column_groups: tuple = None
    row_clusters: tuple = None

    def __post_init__(self):
        obs = np.array(self.observations, dtype=float)
        if obs.ndim == 1:
            obs = obs[:, None]
        if obs.ndim != 2 or obs.shape[0] < 1 or obs.shape[1] < 1:
            raise ValueError(f"observations must be a non-empty N x P matrix, got shape {obs.shape}")
        if not np.all(np.isfinite(obs)):
            raise ValueError("observations must be finite")
        obs.setflags(write=False)
        object.__setattr__(self, "observations", obs)
        if self.column_groups is not None:
            groups = tuple(int(g) for g in self.column_groups)
            if any(g < 1 for g in groups) or sum(groups) != obs.shape[1]:
                raise ValueError(f"column_groups {groups} must be positive and sum to P={obs.shape[1]}")
            object.__setattr__(self, "column_groups", groups)
        if self.row_clusters is not None:
            labels = tuple(self.row_clusters)
            if len(labels) != obs.shape[0]:
                raise ValueError(f"row_clusters needs {obs.shape[0]} labels, got {len(labels)}")
            object.__setattr__(self, "row_clusters", labels)

    @property
    def n(self):
        return self.observations.shape[0]

    @property
    def p(self):
        return self.observations.shape[1]

    @property
    def measurement_density(self):
        """``N / P``; small values flag the high-dimensional regime."""
        return self.n / self.p

    def views(self):
        if self.column_groups is None:
            return [self.observations]
        edges = np.cumsum((0,) + self.column_groups)
        return [self.observations[:, a:b] for a, b in zip(edges[:-1], edges[1:])]

    def clusters(self):
        """Mapping ``label -> row indices``, labels in first-seen order."""
        if self.row_clusters is None:
            return {0: np.arange(self.n)}
        out = {}
        for i, lab in enumerate(self.row_clusters):
            out.setdefault(lab, []).append(i)
        return {k: np.array(v) for k, v in out.items()}
