"""Charge-quality metrics and the runtime scaling benchmark.

ESP grids are built per atom on four spherical shells at 1.4, 1.6, 1.8
and 2.0 times the atom's van der Waals radius, with points spread by a
Fibonacci (golden-angle) lattice at about one point per square Å.  Points
closer to any atom than 1.4 times that atom's radius are dropped.
"""

from __future__ import annotations

import gc
import math
import statistics
import time
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from graphqeq.errors import InvalidArgument, SingularPoint
from graphqeq.molio import ChargeResult, Molecule, generate_chain

COULOMB_CONSTANT = 332.0637128  # kcal Å / (mol e^2)
SHELL_MULTIPLIERS = (1.4, 1.6, 1.8, 2.0)
POINT_DENSITY = 1.0  # points per Å^2
SINGULAR_DISTANCE = 1e-6

# Bondi radii (Å); Li, Na, Mg, K, Ca from Mantina et al. 2009
VDW_RADII = {
    "H": 1.20, "Li": 1.81, "C": 1.70, "N": 1.55, "O": 1.52, "F": 1.47, "Na": 2.27, "Mg": 1.73,
    "P": 1.80, "S": 1.80, "Cl": 1.75, "K": 2.75, "Ca": 2.31, "Br": 1.85, "I": 1.98,
}

_GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


def _as_array(charges) -> np.ndarray:
    if isinstance(charges, ChargeResult):
        charges = charges.charges
    return np.asarray(charges, dtype=np.float64).ravel()


def charge_rmse(a, b) -> float:
    a, b = _as_array(a), _as_array(b)
    if len(a) != len(b):
        raise InvalidArgument(f"cannot compare {len(a)} charges with {len(b)}")
    return float(np.sqrt(np.mean((a - b) ** 2)))


@dataclass(frozen=True)
class EspGrid:
    points: np.ndarray
    shell_multipliers: tuple[float, ...] = SHELL_MULTIPLIERS
    density: float = POINT_DENSITY

    def __len__(self):
        return len(self.points)

    def to_xyz(self, label: str = "X") -> str:
        lines = [str(len(self.points)), f"esp grid shells={','.join(map(str, self.shell_multipliers))} density={self.density}"]
        lines += [f"{label} {x:12.6f} {y:12.6f} {z:12.6f}" for x, y, z in self.points]
        return "\n".join(lines) + "\n"


def sphere_points(n: int) -> np.ndarray:
    """``n`` near-equal-area unit vectors on the golden-angle spiral."""
    i = np.arange(n, dtype=np.float64)
    z = 1.0 - (2.0 * i + 1.0) / n
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    phi = i * _GOLDEN_ANGLE
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def shell_point_count(radius: float, density: float = POINT_DENSITY) -> int:
    return max(1, int(round(4.0 * math.pi * radius * radius * density)))


def build_grid(
    mol: Molecule,
    shell_multipliers: Sequence[float] = SHELL_MULTIPLIERS,
    density: float = POINT_DENSITY,
) -> EspGrid:
    if mol.coordinates is None:
        raise InvalidArgument(f"molecule {mol.name!r} has no coordinates; ESP grids need a conformer")
    centers = mol.coordinate_array()
    radii = np.array([VDW_RADII[el] for el in mol.elements])
    chunks = []
    for center, radius in zip(centers, radii):
        for mult in shell_multipliers:
            shell = mult * radius
            chunks.append(center + shell * sphere_points(shell_point_count(shell, density)))
    points = np.concatenate(chunks)
    innermost = min(shell_multipliers) * radii
    dist = np.linalg.norm(points[:, None, :] - centers[None, :, :], axis=-1)
    keep = np.all(dist >= innermost[None, :] * (1.0 - 1e-12), axis=1)
    return EspGrid(points[keep], tuple(shell_multipliers), density)


def esp_at_points(charges, atom_coords, grid) -> np.ndarray:
    """Coulomb potential (kcal/mol/e) of point charges at each grid point."""
    q = _as_array(charges)
    xyz = np.asarray(atom_coords, dtype=np.float64).reshape(-1, 3)
    points = grid.points if isinstance(grid, EspGrid) else np.asarray(grid, dtype=np.float64).reshape(-1, 3)
    if len(q) != len(xyz):
        raise InvalidArgument(f"{len(q)} charges for {len(xyz)} atom positions")
    if not (np.all(np.isfinite(xyz)) and np.all(np.isfinite(points))):
        raise InvalidArgument("coordinates must be finite")
    dist = np.linalg.norm(points[:, None, :] - xyz[None, :, :], axis=-1)
    if dist.size and dist.min() < SINGULAR_DISTANCE:
        k = int(np.argmin(dist.min(axis=1)))
        raise SingularPoint(f"grid point {k} lies on an atom")
    return COULOMB_CONSTANT * (1.0 / dist) @ q


def esp_rmse(charges_a, charges_b, mol: Molecule, grid: EspGrid | None = None) -> float:
    """RMS difference between the ESPs of two charge sets on the molecule's grid."""
    grid = grid if grid is not None else build_grid(mol)
    coords = mol.coordinate_array()
    diff = esp_at_points(_as_array(charges_a) - _as_array(charges_b), coords, grid)
    return float(np.sqrt(np.mean(diff**2)))


# ---------------------------------------------------------------------------
# scaling benchmark


@dataclass
class BenchmarkResult:
    atom_counts: list[int]
    median_seconds: list[float]
    slope: float
    kind: str = "alkane"

    def to_csv(self) -> str:
        rows = ["atom_count,median_seconds"]
        rows += [f"{n},{t:.6e}" for n, t in zip(self.atom_counts, self.median_seconds)]
        return "\n".join(rows) + "\n"


def loglog_slope(x: Sequence[float], y: Sequence[float]) -> float:
    slope, _ = np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)
    return float(slope)


def scaling_benchmark(
    sizes: Sequence[int],
    repeats: int = 5,
    params=None,
    kind: str = "alkane",
    single_thread: bool = True,
) -> BenchmarkResult:
    """Median wall time of featurize -> forward -> QEq on ``generate_chain(n, kind)``.

    Each size gets one untimed warm-up call and is timed with the garbage
    collector paused.  BLAS is pinned to one thread unless ``single_thread``
    is False.
    """
    from graphqeq.pipeline import charge_molecule, default_model

    sizes = [int(n) for n in sizes]
    if not sizes or any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise InvalidArgument(f"sizes must be strictly increasing, got {sizes}")
    if repeats < 1:
        raise InvalidArgument("repeats must be >= 1")
    params = params or default_model()
    molecules = [generate_chain(n, kind) for n in sizes]

    def run():
        atoms, medians = [], []
        for mol in molecules:
            charge_molecule(mol, params)  # warm-up, untimed
            times = []
            gc_was_enabled = gc.isenabled()
            gc.disable()
            try:
                for _ in range(repeats):
                    t0 = time.perf_counter()
                    charge_molecule(mol, params)
                    times.append(time.perf_counter() - t0)
            finally:
                if gc_was_enabled:
                    gc.enable()
            atoms.append(mol.n_atoms)
            medians.append(statistics.median(times))
        return atoms, medians

    if single_thread:
        from threadpoolctl import threadpool_limits

        with threadpool_limits(limits=1):
            atoms, medians = run()
    else:
        atoms, medians = run()
    return BenchmarkResult(atoms, medians, loglog_slope(atoms, medians), kind)
