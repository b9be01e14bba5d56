"""Goal-oriented dialogue dataset bootstrapping.

Two bots (an agenda-based user and a rule-based system) play task scenarios
against an entity database to produce annotated dialogue outlines; humans (or
an identity paraphraser) turn the template turns into natural language, which
is validated, span-tagged, expandable through a paraphrase map, and measured
with corpus diversity metrics.
"""

from .task_spec import (
    DONTCARE,
    Entity,
    EntityDatabase,
    SlotDef,
    TaskSchema,
    TaskSpec,
    load_task_spec,
    load_task_spec_files,
    query,
)
from .dialogue import (
    ApiState,
    Dialogue,
    DialogueAct,
    DialogueTurn,
    Frame,
    Outline,
    OutlineTurn,
    SlotSpan,
    Speaker,
    TurnAnnotation,
    canonical_key,
    validate_annotation,
    valued_key,
)
from .scenario import (
    Constraint,
    GoalConfig,
    Scenario,
    UserGoal,
    UserProfile,
    sample_goal,
    sample_profile,
    sample_scenario,
)
from .templates import TemplateGrammar, default_grammar, load_overrides, render_frame, render_turn
from .user_sim import Agenda, init_agenda, is_goal_satisfied, next_user_turn
from .system_agent import SystemConfig, SystemState, next_system_turn, resolve_reference
from .selfplay import OutlineBatch, generate_outlines, run_episode
from .crowd import (
    MissingSlots,
    ParaphraseMap,
    ParaphraseTask,
    Rewrite,
    SpanFix,
    ValidationVote,
    apply_validation,
    auto_paraphrase,
    finalize_dialogues,
    make_tasks,
    tag_spans,
)
from .expansion import expand
from .metrics import DiversityReport, compute_report, import_corpus, tokenize
from .corpus_io import read_dialogues, read_outlines, split_corpus, write_dialogues, write_outlines

__version__ = "0.1.0"
