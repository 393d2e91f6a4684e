"""Square focal-plane array geometry and its partition into uniform cells."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DISCRETE = "discrete"
CONTINUOUS = "continuous"


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle [x_min, x_max] x [y_min, y_max], meters."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height


@dataclass(frozen=True)
class ArrayGeometry:
    """Square detector array spanning [-half_extent, half_extent]^2.

    In discrete mode the array is tiled by cells_per_side**2 equal square
    cells, indexed row-major starting from the bottom-left corner: cell 0 is
    the bottom-left square, cell indices increase left to right, then upward.
    All per-cell vectors elsewhere (signal masses, weights, counts) follow
    this order.

    In continuous mode exact photodetection locations are observed and the
    cell grid is unused.
    """

    half_extent: float
    cells_per_side: int = 1
    mode: str = DISCRETE

    def __post_init__(self):
        if not self.half_extent > 0:
            raise ValueError(f"half_extent must be positive, got {self.half_extent}")
        if self.mode not in (DISCRETE, CONTINUOUS):
            raise ValueError(f"mode must be {DISCRETE!r} or {CONTINUOUS!r}, got {self.mode!r}")
        if self.mode == DISCRETE and self.cells_per_side < 1:
            raise ValueError(f"cells_per_side must be >= 1, got {self.cells_per_side}")

    @classmethod
    def from_cell_count(cls, half_extent: float, cell_count: int) -> "ArrayGeometry":
        """Discrete geometry with ``cell_count`` cells; must be a perfect square."""
        n = int(round(np.sqrt(cell_count)))
        if n * n != cell_count or cell_count < 1:
            raise ValueError(
                f"cell_count must be a perfect square (1, 4, 16, 36, ...), got {cell_count}"
            )
        return cls(half_extent=half_extent, cells_per_side=n, mode=DISCRETE)

    @classmethod
    def continuous(cls, half_extent: float) -> "ArrayGeometry":
        return cls(half_extent=half_extent, cells_per_side=1, mode=CONTINUOUS)

    @property
    def is_discrete(self) -> bool:
        return self.mode == DISCRETE

    @property
    def cell_count(self) -> int:
        self._require_discrete("cell_count")
        return self.cells_per_side ** 2

    @property
    def total_area(self) -> float:
        """Area of the whole array, 4 * half_extent**2."""
        return 4.0 * self.half_extent ** 2

    @property
    def cell_area(self) -> float:
        """Area of one cell; every cell has the same area."""
        self._require_discrete("cell_area")
        return self.total_area / self.cell_count

    @property
    def bounds(self) -> Rect:
        e = self.half_extent
        return Rect(-e, e, -e, e)

    def cell_edges(self) -> np.ndarray:
        """Grid line coordinates, shared by the x and y axes (length n+1)."""
        self._require_discrete("cell_edges")
        n = self.cells_per_side
        k = np.arange(n + 1)
        return self.half_extent * (2.0 * k - n) / n

    def cell_region(self, m: int) -> Rect:
        """Rectangle of cell ``m`` in row-major bottom-left order."""
        self._require_discrete("cell_region")
        if not 0 <= m < self.cell_count:
            raise IndexError(f"cell index {m} out of range for {self.cell_count} cells")
        n = self.cells_per_side
        row, col = divmod(m, n)
        edges = self.cell_edges()
        return Rect(edges[col], edges[col + 1], edges[row], edges[row + 1])

    def cell_indices(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Row-major cell index for each point; points must lie on the array."""
        self._require_discrete("cell_indices")
        n = self.cells_per_side
        e = self.half_extent
        step = 2.0 * e / n
        col = np.clip(((np.asarray(x) + e) / step).astype(np.int64), 0, n - 1)
        row = np.clip(((np.asarray(y) + e) / step).astype(np.int64), 0, n - 1)
        return row * n + col

    def _require_discrete(self, what: str) -> None:
        if self.mode != DISCRETE:
            raise ValueError(f"{what} requires a discrete-mode geometry")
