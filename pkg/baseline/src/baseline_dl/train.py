"""Head-only training loop for the frozen-backbone classifier."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass
from pathlib import Path

import torch
from torch import nn
from torch.utils.data import DataLoader

from .config import BaselineConfig, TrainingCurve
from .data import ManifestImageDataset, read_manifest, source_image_size, split_records
from .model import TransferClassifier, backbone_checksum, build_model

log = logging.getLogger("baseline_dl")


@dataclass(frozen=True)
class TrainResult:
    curve: TrainingCurve
    backbone_checksum_before: str
    backbone_checksum_after: str
    checkpoint_path: str


def _run_epoch(model: TransferClassifier, loader, criterion, optimizer=None):
    """One pass over ``loader``; returns (mean loss, accuracy).

    The backbone stays in eval mode throughout so its batch-norm statistics
    never move; only the head toggles between train and eval.
    """
    training = optimizer is not None
    model.backbone.eval()
    model.head.train(training)
    total_loss = 0.0
    correct = 0
    seen = 0
    for inputs, targets in loader:
        with torch.set_grad_enabled(training):
            logits = model(inputs)
            loss = criterion(logits, targets)
        if training:
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
        total_loss += float(loss.detach()) * len(targets)
        correct += int((logits.argmax(dim=1) == targets).sum())
        seen += len(targets)
    return total_loss / seen, correct / seen


def train_baseline(
    manifest_path,
    config: BaselineConfig,
    out_checkpoint,
    out_curve,
) -> TrainResult:
    """Train the 2-way head on the manifest's train split.

    Writes the per-epoch curve CSV and a checkpoint; the backbone is
    checksummed before and after training and must come back identical.
    """
    records = read_manifest(manifest_path)
    train_records = split_records(records, "train")
    val_records = split_records(records, "validation")
    if not train_records or not val_records:
        raise ValueError("manifest needs non-empty train and validation splits")
    source_size = source_image_size(train_records)

    torch.manual_seed(config.seed)
    model = build_model(config.num_outputs, config.pretrained, config.seed)
    before = backbone_checksum(model)

    generator = torch.Generator().manual_seed(config.seed)
    train_loader = DataLoader(
        ManifestImageDataset(train_records, config.input_size),
        batch_size=config.batch_size,
        shuffle=True,
        generator=generator,
    )
    val_loader = DataLoader(
        ManifestImageDataset(val_records, config.input_size),
        batch_size=config.batch_size,
    )

    criterion = nn.CrossEntropyLoss()
    optimizer = torch.optim.SGD(
        model.head.parameters(), lr=config.learning_rate, momentum=config.momentum
    )

    curve = TrainingCurve()
    for epoch in range(1, config.epochs + 1):
        train_loss, train_acc = _run_epoch(model, train_loader, criterion, optimizer)
        val_loss, val_acc = _run_epoch(model, val_loader, criterion)
        curve.append(epoch, train_loss, train_acc, val_loss, val_acc)
        log.info(
            "epoch %3d  train loss %.4f acc %.3f  val loss %.4f acc %.3f",
            epoch, train_loss, train_acc, val_loss, val_acc,
        )

    after = backbone_checksum(model)
    if after != before:
        raise RuntimeError("frozen-backbone contract violated: weights changed")

    curve.write_csv(out_curve)
    out_checkpoint = Path(out_checkpoint)
    out_checkpoint.parent.mkdir(parents=True, exist_ok=True)
    torch.save(
        {
            "state_dict": model.state_dict(),
            "config": asdict(config),
            "source_size": source_size,
            "backbone_checksum": after,
        },
        out_checkpoint,
    )
    return TrainResult(
        curve=curve,
        backbone_checksum_before=before,
        backbone_checksum_after=after,
        checkpoint_path=str(out_checkpoint),
    )


def load_checkpoint(path) -> tuple[TransferClassifier, BaselineConfig, tuple[int, int]]:
    """Rebuild the model from a checkpoint without touching the network."""
    payload = torch.load(path, map_location="cpu", weights_only=True)
    config = BaselineConfig(**payload["config"])
    model = build_model(config.num_outputs, pretrained=False, seed=config.seed)
    model.load_state_dict(payload["state_dict"])
    model.eval()
    source_size = tuple(payload["source_size"])
    return model, config, source_size
