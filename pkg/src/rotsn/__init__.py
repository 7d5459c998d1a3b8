"""Numerical lab for constrained minimisers of the planar rotating Schrodinger-Newton energy."""

from .asymptotics import BlowupReport, SweepRecord, blowup_diagnostics, nonexistence_probe, sweep, trial_upper_bound
from .energy import Couplings, energy, energy_breakdown, el_residual
from .field import ComplexField2D, PotentialSpec
from .grid import Grid2D, make_grid
from .groundstate import RadialProfile, critical_mass, solve_radial_ground_state
from .logconv import LogKernelPlan, make_plan
from .minimize import MinimizeConfig, MinimizeReport, minimize

__all__ = [
    "BlowupReport", "ComplexField2D", "Couplings", "Grid2D", "LogKernelPlan", "MinimizeConfig",
    "MinimizeReport", "PotentialSpec", "RadialProfile", "SweepRecord", "blowup_diagnostics",
    "critical_mass", "el_residual", "energy", "energy_breakdown", "make_grid", "make_plan", "minimize",
    "nonexistence_probe", "solve_radial_ground_state", "sweep", "trial_upper_bound",
]
