"""Commitment profiles: the known parameters the simulated agent realizes."""

import logging
from enum import Enum
from typing import Annotated, TypeAlias

from pydantic import Field, model_validator

from ..conditions import AmbiguityClass, Dimension
from ..pydantic_adapters import HarnessModel

logger = logging.getLogger(__name__)

Probability: TypeAlias = Annotated[float, Field(ge=0.0, le=1.0)]
PositiveInt: TypeAlias = Annotated[int, Field(gt=0)]

DEFAULT_EXPONENT = 0.35
DEFAULT_RECONCILIATION_RATE = 0.1
DEFAULT_TRAJECTORY_LENGTH = 10


class CommitmentShape(str, Enum):
    """Growth law of commitment over the trajectory."""

    CONCAVE = "concave"
    LINEAR = "linear"
    CONSTRAINT_RECONCILE = "constraint_reconcile"


class CommitmentProfile(HarnessModel):
    """Commitment curve and success anchors for one dimension.

    `exponent` is only read for concave shapes and `reconciliation_rate` only for
    `constraint_reconcile`; the other shapes ignore them.
    """

    dimension: Dimension
    shape: CommitmentShape
    exponent: Annotated[float, Field(gt=0.0, lt=1.0)] = DEFAULT_EXPONENT
    reconciliation_rate: Annotated[float, Field(ge=0.0)] = DEFAULT_RECONCILIATION_RATE
    p_oracle: Probability
    p_nc: Probability
    trajectory_length: PositiveInt = DEFAULT_TRAJECTORY_LENGTH

    @property
    def informative(self) -> bool:
        """Whether the oracle anchor is at least the no-clarification anchor."""
        return self.p_oracle >= self.p_nc

    @property
    def effective_reconciliation_rate(self) -> float:
        if self.shape is CommitmentShape.CONSTRAINT_RECONCILE:
            return self.reconciliation_rate
        return 0.0


DEFAULT_PROFILES: dict[Dimension, CommitmentProfile] = {
    Dimension.GOAL: CommitmentProfile(
        dimension=Dimension.GOAL, shape=CommitmentShape.CONCAVE, p_oracle=0.80, p_nc=0.40
    ),
    Dimension.INPUT: CommitmentProfile(
        dimension=Dimension.INPUT, shape=CommitmentShape.LINEAR, p_oracle=0.57, p_nc=0.33
    ),
    Dimension.CONSTRAINT: CommitmentProfile(
        dimension=Dimension.CONSTRAINT,
        shape=CommitmentShape.CONSTRAINT_RECONCILE,
        p_oracle=0.12,
        p_nc=0.12,
    ),
    Dimension.CONTEXT: CommitmentProfile(
        dimension=Dimension.CONTEXT, shape=CommitmentShape.CONCAVE, p_oracle=0.80, p_nc=0.60
    ),
}
"""One profile per dimension, anchored on the short tool-use benchmark's oracle/NC rates."""


class ShapeParameters(HarnessModel):
    exponent: Annotated[float, Field(gt=0.0, lt=1.0)] = DEFAULT_EXPONENT
    reconciliation_rate: Annotated[float, Field(ge=0.0)] = DEFAULT_RECONCILIATION_RATE


class Anchors(HarnessModel):
    p_oracle: Probability
    p_nc: Probability


DEFAULT_SUBDIMENSIONS: dict[Dimension, str] = {
    Dimension.GOAL: "format",
    Dimension.INPUT: "source",
    Dimension.CONSTRAINT: "temporal",
    Dimension.CONTEXT: "background",
}


class ProfileSpec(HarnessModel):
    """One entry of a profile config document.

    Each spec becomes `variants` simulated task variants sharing the profile.
    """

    name: str
    dimension: Dimension
    shape: CommitmentShape
    parameters: ShapeParameters = ShapeParameters()
    anchors: Anchors
    trajectory_length: PositiveInt = DEFAULT_TRAJECTORY_LENGTH
    variants: PositiveInt = 1
    benchmark: str = "sim"
    ambiguity_class: AmbiguityClass = AmbiguityClass.OUTCOME_CRITICAL
    subdimension: str | None = None

    @model_validator(mode="after")
    def _warn_uninformative(self) -> "ProfileSpec":
        if self.anchors.p_oracle < self.anchors.p_nc:
            logger.warning(
                "Profile %s has p_oracle < p_nc; injection curves will not be monotone.",
                self.name,
            )
        return self

    def profile(self) -> CommitmentProfile:
        return CommitmentProfile(
            dimension=self.dimension,
            shape=self.shape,
            exponent=self.parameters.exponent,
            reconciliation_rate=self.parameters.reconciliation_rate,
            p_oracle=self.anchors.p_oracle,
            p_nc=self.anchors.p_nc,
            trajectory_length=self.trajectory_length,
        )


class ProfileDocument(HarnessModel):
    """Profile config document: `{"profiles": [...]}`."""

    profiles: Annotated[list[ProfileSpec], Field(min_length=1)]


class SimTask(HarnessModel):
    """What the simulated agent knows about one variant."""

    profile: CommitmentProfile
    oracle_prompt: str
