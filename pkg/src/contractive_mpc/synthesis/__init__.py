"""Terminal weight and terminal set design."""

from .bmi import (BmiCandidate, BmiOptions, bmi_assemble, bmi_feasible, bmi_min_eig,
                  optimize_gains, synth_terminal_bmi)
from .dare import dare_residual, lqr_gain, riccati_map, solve_dare
from .firstorder import (RegionSweep, firstorder_conventional_member, firstorder_proposed_member,
                         firstorder_qmin, grid_of, region_sweep, scalar_dare_root)
from .terminal import max_level_in_box, size_terminal_alpha, terminal_alpha_admissible

__all__ = [
    "BmiCandidate", "BmiOptions", "bmi_assemble", "bmi_feasible", "bmi_min_eig", "optimize_gains",
    "synth_terminal_bmi", "dare_residual", "lqr_gain", "riccati_map", "solve_dare", "RegionSweep",
    "firstorder_conventional_member", "firstorder_proposed_member", "firstorder_qmin",
    "grid_of", "region_sweep", "scalar_dare_root", "max_level_in_box", "size_terminal_alpha",
    "terminal_alpha_admissible",
]
