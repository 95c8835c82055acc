"""Numerical tolerances and run settings shared across modules."""
from dataclasses import dataclass, field, fields, replace


@dataclass(frozen=True)
class Tolerances:
    # model
    tol_cont: float = 1e-8
    tol_pd: float = 1e-10
    tol_hurwitz: float = 0.0
    hurwitz_warn_band: float = 1e-9
    # SDP assembly / audit
    eps_pd: float = 1e-6
    tol_solver: float = 1e-6
    tol_entry: float = 1e-9
    tol_psd: float = 1e-9
    tol_split: float = 1e-9
    # sets and trajectories
    tol_mem: float = 1e-9
    tol_audit: float = 1e-6

    def updated(self, **overrides):
        """Copy with selected fields replaced; ``None`` values are ignored."""
        known = {f.name for f in fields(self)}
        bad = set(overrides) - known
        if bad:
            raise KeyError(f"unknown tolerance(s): {sorted(bad)}")
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})


DEFAULT_TOLERANCES = Tolerances()


@dataclass(frozen=True)
class SearchConfig:
    """Settings for the one-dimensional decay-rate search."""

    grid_points: int = 24
    golden_evals: int = 8
    # lower end of the default log grid, as a fraction of alpha_max
    grid_floor: float = 1e-3
    trace_weights: tuple = (1.0, 1.0)
    solver: str = None


@dataclass(frozen=True)
class SimConfig:
    t_end: float = 30.0
    dt: float = 1e-3
    hold_dt: float = 1e-2
    trajectories: int = 1000
    seed: int = 0
    record_every: int = 1
    extremal: bool = False
    tolerances: Tolerances = field(default_factory=Tolerances)
