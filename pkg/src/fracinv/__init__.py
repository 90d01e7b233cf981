"""Invariant curves of planar polynomial systems and their (non-)survival
under Caputo fractional dynamics."""

__version__ = "0.1.0"

from .curves import CurveCandidate, CurveKind, InvariantReport  # noqa: E402
from .detect import analyze, detect_lines, detect_lines_origin  # noqa: E402
from .field import PolyField2D, darboux_check, hamiltonian  # noqa: E402
from .fractional import FractionalSystem, Trajectory, fam_solve  # noqa: E402
from .io import load_system  # noqa: E402
from .mittag_leffler import ml, ml_matrix  # noqa: E402

__all__ = [
    "CurveCandidate", "CurveKind", "InvariantReport", "analyze", "detect_lines",
    "detect_lines_origin", "PolyField2D", "darboux_check", "hamiltonian",
    "FractionalSystem", "Trajectory", "fam_solve", "load_system", "ml", "ml_matrix",
]
