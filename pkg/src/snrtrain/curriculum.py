"""SNR schedules and the patience-driven stage controller.

Three schedule kinds over an SNR grid (default 0..50 dB in 5 dB steps):

  multicondition  one stage holding the full grid
  accan           accordion annealing: stage i holds the lowest i grid
                  values, so training starts at the noisiest level and the
                  range expands upward one step per stage
  accan_reversed  stage i holds the highest i grid values

The controller tracks dev WER per stage; when it fails to improve for
`patience` consecutive epochs the stage switches, training resumes from the
stage-best weights, and the improvement tracking resets. On the last stage
the same rule terminates the run, as does a total epoch cap.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .audio import CLEAN
from .errors import DataError

DEFAULT_SNR_GRID: tuple = tuple(float(v) for v in range(0, 55, 5))
KINDS = ("multicondition", "accan", "accan_reversed")
DEFAULT_MAX_EPOCHS = {"multicondition": 150, "accan": 300, "accan_reversed": 300}


def _validate_grid(grid) -> tuple:
    values = tuple(grid)
    if not values:
        raise DataError("SNR grid must not be empty")
    numeric = [v for v in values if v != CLEAN]
    if any(not math.isfinite(float(v)) for v in numeric):
        raise DataError("SNR grid values must be finite")
    if any(float(a) >= float(b) for a, b in zip(numeric, numeric[1:])):
        raise DataError("SNR grid must be strictly increasing")
    if CLEAN in values and values.index(CLEAN) != len(values) - 1:
        raise DataError("the clean sentinel may only appear at the top of the grid")
    return tuple(float(v) if v != CLEAN else CLEAN for v in values)


@dataclass(frozen=True)
class Schedule:
    kind: str
    grid: tuple = DEFAULT_SNR_GRID
    patience: int = 5
    max_epochs: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DataError(f"unknown schedule kind {self.kind!r}, expected one of {KINDS}")
        object.__setattr__(self, "grid", _validate_grid(self.grid))
        if self.patience < 1:
            raise DataError(f"patience must be >= 1, got {self.patience}")
        if self.max_epochs is not None and self.max_epochs < 1:
            raise DataError(f"max_epochs must be >= 1, got {self.max_epochs}")

    @property
    def resolved_max_epochs(self) -> int:
        if self.max_epochs is not None:
            return self.max_epochs
        return DEFAULT_MAX_EPOCHS[self.kind]


def build_stages(schedule: Schedule) -> list[tuple]:
    """Stage SNR sets, in training order; stages are nested by construction."""
    grid = schedule.grid
    if schedule.kind == "multicondition":
        return [grid]
    if schedule.kind == "accan":
        return [grid[:i] for i in range(1, len(grid) + 1)]
    descending = tuple(reversed(grid))
    return [descending[:i] for i in range(1, len(descending) + 1)]


def sample_snr(stage_set, rng: np.random.Generator, allow_clean: bool = False):
    """Uniform draw from a stage's SNR set."""
    stage_set = tuple(stage_set)
    if not stage_set:
        raise DataError("SNR stage set must not be empty")
    if not allow_clean and CLEAN in stage_set:
        raise DataError("clean sentinel not allowed in this draw")
    return stage_set[int(rng.integers(0, len(stage_set)))]


class Decision(enum.Enum):
    CONTINUE = "continue"
    SWITCH_STAGE = "switch_stage"
    TERMINATE = "terminate"


@dataclass
class StageController:
    """Sequential state machine driving stage switches from dev WER.

    advance() is called once per epoch with the epoch's dev WER and (when
    the caller tracks weights) a checkpoint handle to record on strict
    improvement. On SWITCH_STAGE and TERMINATE the caller should restore
    best_checkpoint; the controller never hands out anything else.
    """

    schedule: Schedule
    stage_index: int = 0
    best_metric: float = math.inf
    epochs_since_improvement: int = 0
    epoch_counter: int = 0
    best_checkpoint: object = None
    log_lines: list = field(default_factory=list)
    _stages: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        self._stages = build_stages(self.schedule)

    @property
    def num_stages(self) -> int:
        return len(self._stages)

    @property
    def stage_set(self) -> tuple:
        return self._stages[self.stage_index]

    @property
    def on_last_stage(self) -> bool:
        return self.stage_index == len(self._stages) - 1

    def advance(self, dev_wer: float, checkpoint=None) -> Decision:
        if not (dev_wer >= 0):
            raise DataError(f"dev WER must be >= 0, got {dev_wer}")
        stage_at_eval = self.stage_index
        self.epoch_counter += 1
        if dev_wer < self.best_metric:
            self.best_metric = dev_wer
            self.best_checkpoint = checkpoint
            self.epochs_since_improvement = 0
        else:
            self.epochs_since_improvement += 1

        if self.epoch_counter >= self.schedule.resolved_max_epochs:
            decision = Decision.TERMINATE
        elif self.epochs_since_improvement >= self.schedule.patience:
            if self.on_last_stage:
                decision = Decision.TERMINATE
            else:
                decision = Decision.SWITCH_STAGE
                self.stage_index += 1
                self.best_metric = math.inf
                self.epochs_since_improvement = 0
        else:
            decision = Decision.CONTINUE

        self.log_lines.append(
            f"{self.epoch_counter}\t{stage_at_eval}\t{dev_wer:.4f}\t{decision.value}"
        )
        return decision

    def to_state(self) -> dict:
        return {
            "stage_index": self.stage_index,
            "best_metric": self.best_metric,
            "epochs_since_improvement": self.epochs_since_improvement,
            "epoch_counter": self.epoch_counter,
            "log_lines": list(self.log_lines),
        }

    def restore_state(self, state: dict, best_checkpoint=None) -> None:
        self.stage_index = int(state["stage_index"])
        self.best_metric = float(state["best_metric"])
        self.epochs_since_improvement = int(state["epochs_since_improvement"])
        self.epoch_counter = int(state["epoch_counter"])
        self.log_lines = list(state["log_lines"])
        self.best_checkpoint = best_checkpoint


# --- schedule description file ---------------------------------------------
#
# Plain declarative text, one "key = value" per line, '#' comments:
#   kind = accan
#   snr_min = 0
#   snr_max = 50
#   snr_step = 5
#   patience = 5
#   max_epochs = 300

_SCHEDULE_KEYS = ("kind", "snr_min", "snr_max", "snr_step", "patience", "max_epochs")


def grid_from_endpoints(snr_min: float, snr_max: float, snr_step: float) -> tuple:
    if snr_step <= 0:
        raise DataError(f"snr_step must be positive, got {snr_step}")
    if snr_max < snr_min:
        raise DataError(f"snr_max {snr_max} below snr_min {snr_min}")
    count = int(round((snr_max - snr_min) / snr_step))
    grid = tuple(snr_min + i * snr_step for i in range(count + 1))
    if abs(grid[-1] - snr_max) > 1e-9:
        raise DataError(f"snr range [{snr_min}, {snr_max}] is not a multiple of {snr_step}")
    return grid


def parse_schedule_file(path) -> Schedule:
    fields: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DataError(f"{path}:{line_no}: expected 'key = value', got {raw!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            if key not in _SCHEDULE_KEYS:
                raise DataError(f"{path}:{line_no}: unknown key {key!r}")
            fields[key] = value.strip()
    if "kind" not in fields:
        raise DataError(f"{path}: schedule file must set 'kind'")
    grid = grid_from_endpoints(
        float(fields.get("snr_min", DEFAULT_SNR_GRID[0])),
        float(fields.get("snr_max", DEFAULT_SNR_GRID[-1])),
        float(fields.get("snr_step", 5.0)),
    )
    return Schedule(
        kind=fields["kind"],
        grid=grid,
        patience=int(fields.get("patience", 5)),
        max_epochs=int(fields["max_epochs"]) if "max_epochs" in fields else None,
    )


def format_schedule_file(schedule: Schedule) -> str:
    numeric = [v for v in schedule.grid if v != CLEAN]
    step = numeric[1] - numeric[0] if len(numeric) > 1 else 5.0
    return (
        f"kind = {schedule.kind}\n"
        f"snr_min = {numeric[0]:g}\n"
        f"snr_max = {numeric[-1]:g}\n"
        f"snr_step = {step:g}\n"
        f"patience = {schedule.patience}\n"
        f"max_epochs = {schedule.resolved_max_epochs}\n"
    )
