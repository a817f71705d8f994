"""Polyline crack paths: chains of 2D points with open/closed topology."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError


@dataclass(frozen=True)
class CrackPath:
    """A set of polyline chains representing a crack (possibly touching the boundary).

    Every chain has at least two points and no zero-length segments.  Closed
    chains wrap implicitly (the last point connects back to the first unless
    they already coincide).
    """

    chains: tuple = field(default_factory=tuple)
    closed: tuple = field(default_factory=tuple)

    def __post_init__(self):
        arrays = []
        for chain in self.chains:
            arr = np.ascontiguousarray(chain, dtype=float).reshape(-1, 2)
            if arr.shape[0] < 2:
                raise ParameterError("crack chain needs at least 2 points")
            if np.any(np.linalg.norm(np.diff(arr, axis=0), axis=1) == 0.0):
                raise ParameterError("crack chain has coincident consecutive points")
            arr.flags.writeable = False
            arrays.append(arr)
        object.__setattr__(self, "chains", tuple(arrays))
        closed = tuple(bool(c) for c in self.closed)
        if len(closed) != len(arrays):
            raise ParameterError("closed flags must match the number of chains")
        object.__setattr__(self, "closed", closed)

    @classmethod
    def empty(cls) -> "CrackPath":
        return cls((), ())

    @classmethod
    def single(cls, points, closed: bool = False) -> "CrackPath":
        return cls((np.asarray(points, dtype=float),), (closed,))

    @property
    def is_empty(self) -> bool:
        return len(self.chains) == 0

    @property
    def n_chains(self) -> int:
        return len(self.chains)

    def segments(self):
        """Yield (p, q) endpoint pairs over all chains, including closing segments."""
        for chain, closed in zip(self.chains, self.closed):
            for k in range(chain.shape[0] - 1):
                yield chain[k], chain[k + 1]
            if closed and not np.allclose(chain[0], chain[-1]):
                yield chain[-1], chain[0]

    def length(self) -> float:
        total = 0.0
        for p, q in self.segments():
            total += float(np.linalg.norm(q - p))
        return total

    def to_csv(self, path) -> None:
        """Write ``chain_id,x,y`` rows, one per polyline point."""
        with open(path, "w", encoding="utf-8") as f:
            f.write("chain_id,x,y\n")
            for cid, chain in enumerate(self.chains):
                for x, y in chain:
                    f.write(f"{cid},{float(x)!r},{float(y)!r}\n")


def path_from_circle(radius: float, n: int, center=(0.0, 0.0)) -> CrackPath:
    """Closed regular polygon approximating a circle; handy for ring slits."""
    if radius <= 0 or n < 3:
        raise ParameterError("circle path needs radius > 0 and n >= 3")
    th = 2.0 * np.pi * np.arange(n) / n
    pts = np.column_stack([center[0] + radius * np.cos(th),
                           center[1] + radius * np.sin(th)])
    return CrackPath.single(pts, closed=True)


def path_from_segment(p, q) -> CrackPath:
    return CrackPath.single(np.array([p, q], dtype=float), closed=False)
