"""gapsim: temporal annotated-logic inference as a fast, explainable game engine.

The package has two layers.  The logic layer (`lattice`, `lang`, `parser`,
`interp`, `engine`) implements interval-annotated rule programs with delays
and a fixpoint operator, producing a full change trace.  The game layer
(`world`, `policy`, `learning`, `bench`, `server`) compiles a grid war game
into such a program and exposes a reset/step environment for reinforcement
learning, plus benchmarking, scripted replay, and a line-JSON wire protocol.
"""

from .lattice import BOTTOM, FALSE, TRUE, InconsistencyError, Interval, leq, negate, sup
from .lang import (
    AnnotatedLiteral,
    GapRule,
    KnowledgeGraph,
    Literal,
    Predicate,
    Program,
    Var,
    ground,
)
from .interp import Interpretation, TraceRecord
from .engine import (
    EpisodeDriver,
    FixpointReport,
    cascade_immediate,
    check_satisfaction,
    export_trace,
    fixpoint,
    gamma,
    init_interpretation,
)
from .parser import ParseError, SourceSpan, parse_graph, parse_program, print_program
from .world import ActionId, GridWorld, ScenarioConfig, StepResult, WorldState, compile_scenario

__all__ = [
    "ActionId",
    "AnnotatedLiteral",
    "BOTTOM",
    "EpisodeDriver",
    "FALSE",
    "FixpointReport",
    "GapRule",
    "GridWorld",
    "InconsistencyError",
    "Interpretation",
    "Interval",
    "KnowledgeGraph",
    "Literal",
    "ParseError",
    "Predicate",
    "Program",
    "ScenarioConfig",
    "SourceSpan",
    "StepResult",
    "TraceRecord",
    "TRUE",
    "Var",
    "WorldState",
    "cascade_immediate",
    "check_satisfaction",
    "compile_scenario",
    "export_trace",
    "fixpoint",
    "gamma",
    "ground",
    "init_interpretation",
    "leq",
    "negate",
    "parse_graph",
    "parse_program",
    "print_program",
    "sup",
]

__version__ = "0.1.0"
