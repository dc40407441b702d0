"""Classifier head: fc4-fc5 shared layers plus per-domain fc6 branches.

Logit index 0 is the target (positive) class, index 1 the background class.
During offline training one fc6 branch exists per training sequence; the
online tracker swaps them for a single fresh branch.
"""

from __future__ import annotations

import torch
import torch.nn.functional as F
from torch import nn


class Head(nn.Module):
    def __init__(self, in_features: int, d4: int = 512, d5: int = 512,
                 n_domains: int = 1, dropout: float = 0.0):
        super().__init__()
        self.in_features = in_features
        self.fc4 = nn.Linear(in_features, d4)
        self.fc5 = nn.Linear(d4, d5)
        self.branches = nn.ModuleList([nn.Linear(d5, 2) for _ in range(n_domains)])
        self.dropout = dropout

    @property
    def n_domains(self) -> int:
        return len(self.branches)

    def shared(self, x: torch.Tensor) -> torch.Tensor:
        """fc4 + fc5 on flattened (B, in_features) feature vectors."""
        if x.dim() > 2:
            x = x.flatten(1)
        if x.shape[1] != self.in_features:
            raise ValueError(f"expected {self.in_features} features, got {x.shape[1]}")
        x = F.relu(self.fc4(x))
        if self.dropout > 0 and self.training:
            x = F.dropout(x, p=self.dropout, training=True)
        x = F.relu(self.fc5(x))
        if self.dropout > 0 and self.training:
            x = F.dropout(x, p=self.dropout, training=True)
        return x

    def forward(self, x: torch.Tensor, domain: int = 0) -> torch.Tensor:
        if not 0 <= domain < self.n_domains:
            raise IndexError(f"domain {domain} out of range, head has {self.n_domains}")
        return self.branches[domain](self.shared(x))

    def replace_branches(self, n_domains: int = 1) -> None:
        """Swap all fc6 branches for fresh uninitialized ones."""
        d5 = self.fc5.out_features
        device = self.fc5.weight.device
        dtype = self.fc5.weight.dtype
        self.branches = nn.ModuleList(
            [nn.Linear(d5, 2).to(device=device, dtype=dtype) for _ in range(n_domains)]
        )


def classify(logits: torch.Tensor) -> torch.Tensor:
    """Softmax (f_plus, f_minus) pairs from raw two-class logits."""
    return F.softmax(logits, dim=-1)


def classification_loss(logits: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    """Mean softmax cross-entropy; labels are 0 (target) or 1 (background)."""
    if logits.shape[0] == 0:
        raise ValueError("loss needs a nonempty batch")
    return F.cross_entropy(logits, labels)
