"""Piecewise-ellipsoidal reachable-set bounds for continuous bimodal PWA systems."""
from .config import DEFAULT_TOLERANCES, SearchConfig, SimConfig, Tolerances
from .copositive import QuadraticForm
from .errors import (AllInfeasible, AuditFailed, DimensionMismatch, DimensionUnsupported,
                     EmptyLevelSet, InvalidAlpha, NonFiniteState, NotContinuous, NotHurwitz,
                     ParseError, PwaReachError, ZeroNormal)
from .io import load_certificate, load_system, save_certificate
from .lmi import COMMON, PIECEWISE, build_common_lyapunov, build_piecewise_lyapunov, residuals
from .model import (BimodalSystem, Region, Side, build_geometry, check_continuity,
                    etilde_mode, hurwitz_check)
from .reachset import PiecewiseEllipsoid, compare_dominance, monte_carlo_areas, project_2d
from .sim import (DisturbanceKind, DisturbancePolicy, containment_audit, integrate,
                  lyapunov_audit, simulate_many)
from .solve import Certificate, alpha_search, estimate, solve_at_alpha

__version__ = "0.1.0"
