"""
ParabolicCCD - 一维抛物型 PDE 边界增益与对象参数的协同设计工具包
"""

__version__ = "0.1.0"
__author__ = "CCD Team"

from core.config import RunSpec, parse_config, preset_spec, render_config
from core.discretization import GridConfig, X0Mode, assemble
from core.lyapunov import assess_feasibility, cost_jf, solve_lyapunov
from core.model import DesignObjective, DesignPoint, Weights, theorem1_margins
from core.optimizer import OptimizerConfig, TerminationStatus, run_ccd
from core.pdesim import SimConfig, cost_quadrature, simulate, verify_corollary2
from core.runner import run_case

__all__ = [
    "DesignObjective",
    "DesignPoint",
    "GridConfig",
    "OptimizerConfig",
    "RunSpec",
    "SimConfig",
    "TerminationStatus",
    "Weights",
    "X0Mode",
    "assemble",
    "assess_feasibility",
    "cost_jf",
    "cost_quadrature",
    "parse_config",
    "preset_spec",
    "render_config",
    "run_case",
    "run_ccd",
    "simulate",
    "solve_lyapunov",
    "theorem1_margins",
    "verify_corollary2",
]
