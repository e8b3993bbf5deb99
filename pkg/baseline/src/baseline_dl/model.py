"""The transfer model: a frozen classification backbone plus a new 2-way head."""

from __future__ import annotations

import hashlib
import logging

import torch
from torch import nn
from torchvision import models

log = logging.getLogger("baseline_dl")


class TransferClassifier(nn.Module):
    """Frozen backbone followed by one trainable fully-connected layer.

    The new head is concatenated after the backbone's own final layer, so
    its input width is the backbone's original output width (1000 classes
    for the stock backbone).
    """

    def __init__(self, backbone: nn.Module, head: nn.Linear):
        super().__init__()
        self.backbone = backbone
        self.head = head

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.head(self.backbone(x))


def build_model(num_outputs: int = 2, pretrained: bool = True, seed: int = 0) -> TransferClassifier:
    """Assemble the frozen-backbone classifier.

    Tries to fetch pretrained backbone weights; when they are unreachable
    (offline environments) it falls back to a seeded random initialization
    with a warning. Either way the backbone is frozen and kept in eval mode
    so not even batch-norm running statistics change during training.
    """
    torch.manual_seed(seed)
    backbone = None
    if pretrained:
        try:
            backbone = models.resnet18(weights=models.ResNet18_Weights.IMAGENET1K_V1)
        except Exception as exc:  # download failure: fall back, keep training usable
            log.warning("pretrained weights unavailable (%s); using random backbone", exc)
    if backbone is None:
        torch.manual_seed(seed)
        backbone = models.resnet18(weights=None)

    for param in backbone.parameters():
        param.requires_grad_(False)
    backbone.eval()

    head = nn.Linear(backbone.fc.out_features, num_outputs)
    return TransferClassifier(backbone, head)


def backbone_checksum(model: TransferClassifier) -> str:
    """SHA-256 over every backbone parameter and buffer, in state-dict order."""
    digest = hashlib.sha256()
    state = model.backbone.state_dict()
    for key in sorted(state):
        digest.update(key.encode("utf-8"))
        digest.update(state[key].detach().cpu().numpy().tobytes())
    return digest.hexdigest()
