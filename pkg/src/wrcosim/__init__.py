"""Waveform-relaxation co-simulation of circuits coupled to capacitance-like
distributed devices, with a topological convergence predictor and a
monolithic reference solver."""

from .circuit import (CircuitState, CircuitTrajectory, MnaSystem, assemble_mna,
                      circuit_solve_window, perturbed_response)
from .cosim import (RateEstimate, Scheme, Verdict, WindowReport, WrConfig,
                    WrReport, WrResult, estimate_rates, wr_solve, wr_window)
from .errors import (ConfigError, InconsistentStartError, NetlistError,
                     SolverError)
from .field import (FieldModel, FieldState, LinearCapField, field_from_spec,
                    field_solve_window, ladder, lumped_cap)
from .netlist import (CircuitGraph, Element, ElementKind, FieldSpec,
                      SourceSpec, bundled_netlist_path, load_netlist,
                      parse_netlist)
from .oracle import (CoupledSystem, build_coupled, consistent_start,
                     monolithic_solve)
from .studies import (IterateStudyResult, LemmaCheckResult, SweepResult,
                      build_systems, iterate_study, lemma_check, order_study)
from .topology import CvVerdict, Prediction, cv_connected, predict
from .waveform import Waveform, uniform_grid

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
