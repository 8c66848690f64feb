"""Seen-emitter identifier: reciprocal points, margin losses, novelty test."""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn as nn
import torch.nn.functional as F


@dataclass(frozen=True)
class IdentifierConfig:
    """Identifier head shape and calibration settings.

    projection_dim: width of the identifier's own projection space.
    margin_weight: weight of the margin term inside the identifier loss.
    gamma: fraction of calibration samples the threshold must cover.
    """

    projection_dim: int = 128
    margin_weight: float = 0.1
    gamma: float = 0.95

    def __post_init__(self):
        if self.projection_dim < 1:
            raise ValueError("projection_dim must be >= 1")
        if self.margin_weight < 0:
            raise ValueError("margin_weight must be >= 0")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must lie in (0, 1]")


@dataclass(frozen=True)
class IdentifierState:
    """Calibrated novelty threshold and the settings that produced it."""

    threshold: float
    gamma: float
    calibration_size: int


class ReciprocalPoints(nn.Module):
    """One learned reciprocal point per seen class plus a shared margin radius.

    A class's reciprocal point represents everything that class is not,
    so in-class samples end up far from their own point and the largest
    point distance separates seen from novel.
    """

    def __init__(self, num_classes: int, dim: int):
        super().__init__()
        if num_classes < 1 or dim < 1:
            raise ValueError("num_classes and dim must be >= 1")
        self.points = nn.Parameter(0.1 * torch.randn(num_classes, dim))
        self.radius = nn.Parameter(torch.zeros(1))

    @property
    def num_classes(self) -> int:
        return self.points.shape[0]

    def spatial_distance(self, z: torch.Tensor) -> torch.Tensor:
        """Mean squared coordinate gap: ||z - p||^2 / dim, shape (batch, classes)."""
        dim = self.points.shape[1]
        return torch.cdist(z, self.points) ** 2 / dim

    def angular_distance(self, z: torch.Tensor) -> torch.Tensor:
        """Negative inner product, shape (batch, classes)."""
        return -(z @ self.points.T)

    def distance(self, z: torch.Tensor) -> torch.Tensor:
        """Combined distance used for classification and the novelty test."""
        return self.spatial_distance(z) + self.angular_distance(z)


def reciprocal_distance(z: torch.Tensor, point: torch.Tensor) -> torch.Tensor:
    """Combined distance between single vectors: ||z-p||^2/dim - z.p."""
    if z.shape != point.shape or z.ndim != 1:
        raise ValueError("z and point must be 1-D vectors of equal length")
    dim = z.shape[0]
    return ((z - point) ** 2).sum() / dim - (z * point).sum()


def classification_loss(z: torch.Tensor, labels: torch.Tensor,
                        points: ReciprocalPoints) -> torch.Tensor:
    """Cross-entropy where a LARGER distance to a class's reciprocal
    point means higher probability of that class."""
    return F.cross_entropy(points.distance(z), labels)


def margin_loss(z: torch.Tensor, labels: torch.Tensor,
                points: ReciprocalPoints) -> torch.Tensor:
    """Hinge pulling each sample's own-class spatial distance under the
    learned radius."""
    d_s = points.spatial_distance(z)
    own = d_s.gather(1, labels.view(-1, 1)).squeeze(1)
    return F.relu(own - points.radius).mean()


def identifier_loss(z: torch.Tensor, labels: torch.Tensor,
                    points: ReciprocalPoints,
                    margin_weight: float = 0.1) -> torch.Tensor:
    return classification_loss(z, labels, points) + margin_weight * margin_loss(
        z, labels, points
    )


def calibrate_threshold(z: torch.Tensor, points: ReciprocalPoints,
                        gamma: float = 0.95) -> IdentifierState:
    """Pick the novelty threshold so a gamma fraction of calibration
    samples test as seen.

    Each sample's score is its maximum combined distance over classes;
    the threshold is the floor(gamma * count)-th largest score, so a
    gamma fraction of calibration scores sit at or above it and samples
    scoring strictly above it test as seen.
    """
    if not 0.0 < gamma <= 1.0:
        raise ValueError("gamma must lie in (0, 1]")
    if z.ndim != 2 or z.shape[0] < 1:
        raise ValueError("calibration batch must be (count, dim) with count >= 1")
    with torch.no_grad():
        scores = points.distance(z).max(dim=1).values
    ordered = torch.sort(scores, descending=True, stable=True).values
    count = ordered.shape[0]
    rank = min(max(int(gamma * count), 1), count)
    return IdentifierState(
        threshold=float(ordered[rank - 1]), gamma=gamma, calibration_size=count
    )


def novelty_scores(z: torch.Tensor, points: ReciprocalPoints) -> torch.Tensor:
    """Max combined distance over classes, one score per sample."""
    return points.distance(z).max(dim=1).values


def indicator(z: torch.Tensor, points: ReciprocalPoints,
              state: IdentifierState) -> torch.Tensor:
    """Seen-emitters indicator per sample: +1 seen, -1 novel.

    Training pushes every seen-class sample far from its own class's
    reciprocal point, so a LARGE maximum distance is evidence the
    sample comes from a seen class.  A sample is flagged seen exactly
    when its score strictly exceeds the calibrated threshold.
    """
    if state is None:
        raise ValueError("identifier is not calibrated")
    scores = novelty_scores(z, points)
    return torch.where(scores > state.threshold, 1, -1)
