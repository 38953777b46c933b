"""Simulated agent realizing the commitment model with known parameters.

`sim.agent` and `sim.corpus` depend on the trial and wire records and are imported
directly rather than re-exported here.
"""

from .model import commitment, injected_success_probability, success_probability, voi
from .profiles import (
    DEFAULT_PROFILES,
    CommitmentProfile,
    CommitmentShape,
    ProfileDocument,
    ProfileSpec,
    SimTask,
)
from .rng import keyed_generator, keyed_uniforms

__all__ = [
    "DEFAULT_PROFILES",
    "CommitmentProfile",
    "CommitmentShape",
    "ProfileDocument",
    "ProfileSpec",
    "SimTask",
    "commitment",
    "injected_success_probability",
    "keyed_generator",
    "keyed_uniforms",
    "success_probability",
    "voi",
]
