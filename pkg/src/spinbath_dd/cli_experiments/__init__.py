"""Experiment specs, pipelines and the command-line front end."""

from .pipelines import (InitialStateReport, RankEntry, RunManifest, compare_sequences, crossover_fields,
                        initial_state_check, insertion_distances, leader_changes, manybody_free_echo,
                        rank_scores, run, write_csv)
from .spec import ExperimentSpec, Kind, ScheduleSpec, SpecError, resolve_sequence

__all__ = [name for name in dir() if not name.startswith("_")]
