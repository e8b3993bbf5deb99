"""Training configuration and the per-epoch curve record."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path


@dataclass(frozen=True)
class BaselineConfig:
    """Transfer-learning hyperparameters; the defaults are the reference recipe."""

    epochs: int = 50
    batch_size: int = 4
    learning_rate: float = 0.001
    momentum: float = 0.9
    loss: str = "cross_entropy"
    frozen_backbone: bool = True
    num_outputs: int = 2
    # module-local knobs, not part of the reference recipe
    seed: int = 0
    input_size: int = 224
    pretrained: bool = True

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")
        if self.loss != "cross_entropy":
            raise ValueError(f"unsupported loss {self.loss!r}")
        if not self.frozen_backbone:
            raise ValueError("only frozen-backbone training is supported")
        if self.num_outputs != 2:
            raise ValueError("this baseline is strictly two-class")


@dataclass
class TrainingCurve:
    """One row per completed epoch."""

    epochs: list[int] = field(default_factory=list)
    train_loss: list[float] = field(default_factory=list)
    train_acc: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    val_acc: list[float] = field(default_factory=list)

    def append(self, epoch, train_loss, train_acc, val_loss, val_acc):
        self.epochs.append(epoch)
        self.train_loss.append(train_loss)
        self.train_acc.append(train_acc)
        self.val_loss.append(val_loss)
        self.val_acc.append(val_acc)

    def write_csv(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch", "train_loss", "train_acc", "val_loss", "val_acc"])
            for row in zip(self.epochs, self.train_loss, self.train_acc,
                           self.val_loss, self.val_acc):
                writer.writerow(row)

    @classmethod
    def read_csv(cls, path) -> "TrainingCurve":
        curve = cls()
        with open(path, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                curve.append(
                    int(row["epoch"]),
                    float(row["train_loss"]),
                    float(row["train_acc"]),
                    float(row["val_loss"]),
                    float(row["val_acc"]),
                )
        return curve
