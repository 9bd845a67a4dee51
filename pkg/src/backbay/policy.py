from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple, Union

TargetSpec = Optional[Union[int, Tuple[int, ...]]]


@dataclass(frozen=True)
class PoisonPolicy:
    """Attack knobs.

    ``target_label`` is the class (or tuple of classes) whose labels may be
    replaced by ``dirty_label``; ``None`` means every class is a target.
    """

    target_label: TargetSpec = None
    dirty_label: int = 9
    flip_prob: float = 0.1
    replace_prob: float = 1.0
    trigger_alpha: float = 0.1
    poison_rate: float = 0.1
    prior_mean: float = 0.0

    def __post_init__(self):
        if isinstance(self.target_label, list):
            object.__setattr__(self, "target_label", tuple(self.target_label))
        for name in ("flip_prob", "replace_prob", "poison_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} is not a probability")
        if self.trigger_alpha < 0:
            raise ValueError("trigger_alpha must be >= 0")
        if isinstance(self.target_label, int) and self.target_label == self.dirty_label:
            raise ValueError("dirty_label must differ from target_label")

    def is_target(self, y: int) -> bool:
        if self.target_label is None:
            return True
        if isinstance(self.target_label, tuple):
            return y in self.target_label
        return y == self.target_label
