"""Tabular two-phase cooperative-learning game.

A question-player policy, a shared encoder, and an object-guesser learn a
toy guessing game: each context holds a few objects with hidden binary
attributes, questions probe one attribute each, and a deterministic
answerer replies truthfully for the goal object. Alternating language and
task learning phases share the encoder, so task-phase encoder perturbations
shift the generated-dialogue distribution; the experiment drivers measure
that shift with the coarsened energy statistic and test divergence.
"""

from .world import AnswerOracle, GameConfig, GoalCorpus, GoalItem, sample_goal_corpus
from .learner import (
    EncoderMap,
    GuesserTable,
    RolloutResult,
    TabularPolicy,
    TaskPhaseResult,
    phase_language,
    phase_task,
    rollout,
    task_error,
)
from .experiment import (
    CompareResult,
    Scenario,
    SweepResult,
    compare_cl_leather,
    shift_sweep,
)

__all__ = [
    "AnswerOracle",
    "GameConfig",
    "GoalCorpus",
    "GoalItem",
    "sample_goal_corpus",
    "EncoderMap",
    "GuesserTable",
    "RolloutResult",
    "TabularPolicy",
    "TaskPhaseResult",
    "phase_language",
    "phase_task",
    "rollout",
    "task_error",
    "Scenario",
    "SweepResult",
    "CompareResult",
    "shift_sweep",
    "compare_cl_leather",
]
