"""Flat parameter vector with a named group layout.

Optimizers and models share one float64 vector; groups mark contiguous
slices (one per weight matrix or bias vector) used for group-wise
hyperparameters and importance ranking.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Group:
    name: str
    offset: int
    length: int


class GroupLayout:
    """Ordered, disjoint, gap-free cover of a flat parameter vector."""

    def __init__(self, groups: list[tuple[str, int]] | list[Group]):
        built: list[Group] = []
        offset = 0
        for g in groups:
            if isinstance(g, Group):
                name, length = g.name, g.length
            else:
                name, length = g
            if length <= 0:
                raise ValueError(f"group {name!r} must have positive length")
            built.append(Group(name, offset, length))
            offset += length
        names = [g.name for g in built]
        if len(set(names)) != len(names):
            raise ValueError("group names must be unique")
        self.groups: tuple[Group, ...] = tuple(built)
        self.total: int = offset
        self._by_name = {g.name: g for g in built}

    def __iter__(self):
        return iter(self.groups)

    def __len__(self):
        return len(self.groups)

    def group(self, name: str) -> Group:
        return self._by_name[name]

    def names(self) -> list[str]:
        return [g.name for g in self.groups]

    def per_weight(self, value_by_group: float | dict[str, float]) -> np.ndarray:
        """Expand a scalar or per-group mapping to a per-weight vector."""
        out = np.empty(self.total, dtype=np.float64)
        if isinstance(value_by_group, dict):
            unknown = set(value_by_group) - set(self._by_name)
            if unknown:
                raise ValueError(f"unknown group names: {sorted(unknown)}")
            for g in self.groups:
                out[g.offset : g.offset + g.length] = value_by_group.get(g.name, 0.0)
        else:
            out[:] = float(value_by_group)
        return out


class ParamStore:
    """Float64 weight vector plus its immutable group layout."""

    def __init__(self, values: np.ndarray, layout: GroupLayout):
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 1 or values.size != layout.total:
            raise ValueError(
                f"values must be a flat vector of length {layout.total}, "
                f"got shape {values.shape}"
            )
        self.values = values
        self.layout = layout

    def __len__(self):
        return self.values.size

    def view(self, name: str) -> np.ndarray:
        g = self.layout.group(name)
        return self.values[g.offset : g.offset + g.length]

    def copy(self) -> "ParamStore":
        return ParamStore(self.values.copy(), self.layout)
