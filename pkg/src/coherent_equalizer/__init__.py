"""Coherent quantum LQG equalizer synthesis for linear quantum optical channels."""

from .config import ProblemConfig, build_problem, load_config, parse_config
from .errors import ConfigError, DimensionError, EqualizerError, NumericalError, PreconditionError
from .lqg import ClassicalController, LqgWeights, synthesize
from .model import (
    AnnihilationSystem,
    EqualizerPlant,
    LowPassFilter,
    QuadratureSystem,
    compose_equalizer_plant,
    paper_example_plant,
    to_quadrature,
)
from .pipeline import SynthesisReport, evaluate_cost, psd, synthesize_equalizer
from .realize import (
    CoherentController,
    check_passive_realizable,
    complete_active,
    complete_passive,
    recover_oscillator,
    verify_active_pr,
)

__version__ = "0.1.0"
