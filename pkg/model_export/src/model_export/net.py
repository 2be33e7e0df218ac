"""Tiny conv -> global-average-pool -> linear classifier (torch).

The architecture is constrained to GAP + single linear head so original
class-activation mapping applies exactly: CAM weights are the linear
layer's rows over the final conv maps.
"""

from __future__ import annotations

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F


class TinyGapNet(nn.Module):
    def __init__(self, num_classes: int, width: int = 16):
        super().__init__()
        self.conv1 = nn.Conv2d(3, width, 3, padding=1)
        self.conv2 = nn.Conv2d(width, width * 2, 3, padding=1)
        self.conv3 = nn.Conv2d(width * 2, width * 4, 3, padding=1)
        self.fc = nn.Linear(width * 4, num_classes)

    def forward(self, x):
        x = F.max_pool2d(F.relu(self.conv1(x)), 2)
        x = F.max_pool2d(F.relu(self.conv2(x)), 2)
        features = F.relu(self.conv3(x))
        pooled = features.mean(dim=(2, 3))
        return self.fc(pooled), features


def train(model: TinyGapNet, images: np.ndarray, labels: np.ndarray, epochs: int, seed: int,
          lr: float = 3e-3, batch_size: int = 32) -> float:
    """Adam + cross-entropy on float images in [0, 1]; returns final train accuracy."""
    torch.manual_seed(seed)
    x = torch.from_numpy(images.astype(np.float32) / 255.0).permute(0, 3, 1, 2)
    y = torch.from_numpy(labels.astype(np.int64))
    opt = torch.optim.Adam(model.parameters(), lr=lr)
    rng = np.random.default_rng(seed)
    model.train()
    for _ in range(epochs):
        order = rng.permutation(len(x))
        for start in range(0, len(x), batch_size):
            idx = order[start : start + batch_size]
            logits, _ = model(x[idx])
            loss = F.cross_entropy(logits, y[idx])
            opt.zero_grad()
            loss.backward()
            opt.step()
    model.eval()
    with torch.no_grad():
        logits, _ = model(x)
        return float((logits.argmax(dim=1) == y).float().mean())
