"""Uniform grids on the unit cube [0,1]^n.

Nodes live at coordinates (i_1/m, ..., i_n/m) for integer multi-indices
0 <= i_j <= m. The linear index is lexicographic with the last axis fastest
(C order), so the backward neighbor along axis j sits exactly (m+1)^(n-j)
positions earlier. The mesh is always parameterized by the integer m; the
mesh size h = 1/m is derived, never stored, so mesh sequences like
m = 40, 160, 640, ... are exact.
"""

from __future__ import annotations

import functools
import itertools
import struct
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

_HEADER = struct.Struct("<qq")  # n, m as little-endian int64


@dataclass(frozen=True)
class GridSpec:
    """Grid over [0,1]^n with m subdivisions (m+1 nodes) per axis."""

    n: int
    m: int

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError(f"dimension must be >= 2, got n={self.n}")
        if self.m < 1:
            raise ValueError(f"need at least one subdivision per axis, got m={self.m}")

    @property
    def h(self) -> float:
        return 1.0 / self.m

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.m + 1,) * self.n

    @property
    def num_nodes(self) -> int:
        return (self.m + 1) ** self.n

    def axis_coords(self) -> np.ndarray:
        """Node coordinates along one axis.

        Computed as i/m (single correctly rounded division) so that e.g. the
        midpoint of an even grid is exactly 0.5 and the last node exactly 1.
        """
        return np.arange(self.m + 1, dtype=np.float64) / self.m

    def mesh(self) -> tuple[np.ndarray, ...]:
        """Open (broadcastable) meshgrid of node coordinates."""
        return tuple(np.meshgrid(*([self.axis_coords()] * self.n),
                                 indexing="ij", sparse=True))

    def coords(self, multi_index: Sequence[int]) -> tuple[float, ...]:
        return tuple(i / self.m for i in multi_index)

    def linear_index(self, multi_index: Sequence[int]) -> int:
        idx = 0
        for i in multi_index:
            idx = idx * (self.m + 1) + i
        return idx

    def multi_index(self, linear: int) -> tuple[int, ...]:
        out = []
        for _ in range(self.n):
            linear, i = divmod(linear, self.m + 1)
            out.append(i)
        return tuple(reversed(out))


def sweep_order(spec: GridSpec) -> Iterator[tuple[int, ...]]:
    """All multi-indices in lexicographic order (last axis fastest).

    Every node appears strictly after all of its backward neighbors, which is
    what makes the single-pass solve well defined.
    """
    return itertools.product(range(spec.m + 1), repeat=spec.n)


def backward_offsets(spec: GridSpec) -> tuple[int, ...]:
    """Linear-index offset of the backward neighbor along each axis.

    Subtracting offset[j] from a node's linear index yields x - h*e_{j+1},
    valid whenever the node's index along that axis is >= 1.
    """
    return tuple((spec.m + 1) ** (spec.n - 1 - ax) for ax in range(spec.n))


@functools.lru_cache(maxsize=4)
def wavefront_order(spec: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    """Linear node indices grouped by index digit-sum d = i_1 + ... + i_n.

    Returns (order, offsets): order[offsets[d]:offsets[d+1]] are the nodes of
    wavefront d, in lexicographic order. All backward neighbors of a node on
    wavefront d lie on wavefront d-1, so processing fronts in order of d is a
    valid single-pass schedule.
    """
    R = spec.m + 1
    ds = np.zeros(spec.shape, dtype=np.int32)
    for ax in range(spec.n):
        sh = [1] * spec.n
        sh[ax] = R
        ds += np.arange(R, dtype=np.int32).reshape(sh)
    flat = ds.ravel()
    order = np.argsort(flat, kind="stable")
    counts = np.bincount(flat, minlength=spec.n * spec.m + 1)
    offsets = np.concatenate(([0], np.cumsum(counts)))
    return order, offsets


class GridField:
    """Double-precision values on every node of a GridSpec."""

    def __init__(self, spec: GridSpec, values: np.ndarray):
        values = np.ascontiguousarray(values, dtype=np.float64)
        if values.shape == (spec.num_nodes,):
            values = values.reshape(spec.shape)
        if values.shape != spec.shape:
            raise ValueError(f"values shape {values.shape} != grid shape {spec.shape}")
        self.spec = spec
        self.values = values

    @classmethod
    def zeros(cls, spec: GridSpec) -> "GridField":
        return cls(spec, np.zeros(spec.shape))

    @property
    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)

    def __getitem__(self, multi_index):
        return self.values[tuple(multi_index)]

    def save_binary(self, path) -> None:
        """Header (n, m as little-endian int64) then node values in
        lexicographic order as little-endian float64."""
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(self.spec.n, self.spec.m))
            fh.write(self.flat.astype("<f8", copy=False).tobytes())

    @classmethod
    def load_binary(cls, path) -> "GridField":
        with open(path, "rb") as fh:
            head = fh.read(_HEADER.size)
            if len(head) != _HEADER.size:
                raise ValueError(f"{path}: truncated header")
            n, m = _HEADER.unpack(head)
            spec = GridSpec(int(n), int(m))
            data = np.frombuffer(fh.read(), dtype="<f8")
        if data.size != spec.num_nodes:
            raise ValueError(
                f"{path}: expected {spec.num_nodes} values for n={n}, m={m}, "
                f"got {data.size}")
        return cls(spec, data.astype(np.float64))

    def save_csv(self, path) -> None:
        """One row per node: coordinates then value, 17 significant digits."""
        xs = self.spec.axis_coords()
        with open(path, "w") as fh:
            for mi, v in zip(sweep_order(self.spec), self.flat):
                row = [f"{xs[i]:.17g}" for i in mi]
                row.append(f"{v:.17g}")
                fh.write(",".join(row) + "\n")

    @classmethod
    def load_csv(cls, path, spec: GridSpec) -> "GridField":
        vals = np.empty(spec.num_nodes)
        with open(path) as fh:
            count = 0
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                if count >= spec.num_nodes:
                    raise ValueError(f"{path}: more rows than grid nodes")
                vals[count] = float(line.split(",")[-1])
                count += 1
        if count != spec.num_nodes:
            raise ValueError(f"{path}: expected {spec.num_nodes} rows, got {count}")
        return cls(spec, vals)


class RollingWindow:
    """Ring buffer over the most recent values of a lexicographic sweep.

    Capacity (m+1)^(n-1) + 1 guarantees that when the sweep reaches a node
    whose indices are all >= 1, every backward neighbor is still inside the
    window (the farthest one is (m+1)^(n-1) positions back).
    """

    def __init__(self, spec: GridSpec):
        self.spec = spec
        self.capacity = (spec.m + 1) ** (spec.n - 1) + 1
        self._buf = np.zeros(self.capacity)
        self.count = 0  # total values appended == linear index of next node

    def append(self, value: float) -> None:
        self._buf[self.count % self.capacity] = value
        self.count += 1

    def value_at(self, linear_index: int) -> float:
        if not (0 <= linear_index < self.count):
            raise IndexError(f"linear index {linear_index} not yet computed")
        if linear_index < self.count - self.capacity:
            raise IndexError(f"linear index {linear_index} fell out of the window")
        return float(self._buf[linear_index % self.capacity])

    def final_slab(self) -> np.ndarray:
        """Values of the last axis-1 slab (nodes with i_1 = m), in order.

        Only meaningful after a completed sweep.
        """
        if self.count != self.spec.num_nodes:
            raise RuntimeError("sweep not complete")
        size = (self.spec.m + 1) ** (self.spec.n - 1)
        start = self.count - size
        idx = (start + np.arange(size)) % self.capacity
        return self._buf[idx].copy()
