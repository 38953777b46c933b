"""Variant corpora for simulated runs."""

from collections.abc import Iterable, Mapping

from ..conditions import Dimension
from ..gateway.endpoints import SimulatorEndpoint
from ..trial.models import RemovedSegment, SimGrader, TaskVariant
from .agent import SIM_TOOLS
from .profiles import DEFAULT_PROFILES, DEFAULT_SUBDIMENSIONS, ProfileDocument, ProfileSpec, SimTask

SIM_VALUES: dict[Dimension, str] = {
    Dimension.GOAL: "CSV format",
    Dimension.INPUT: "the shared_drive/reports folder",
    Dimension.CONSTRAINT: "last month of 2022",
    Dimension.CONTEXT: "the report feeds the quarterly review",
}


def sim_variants(spec: ProfileSpec) -> list[TaskVariant]:
    """Expands one profile spec into `spec.variants` simulated variants."""
    profile = spec.profile()
    subdimension = spec.subdimension or DEFAULT_SUBDIMENSIONS[spec.dimension]
    value = SIM_VALUES[spec.dimension]
    width = len(str(spec.variants))
    variants = []
    for number in range(1, spec.variants + 1):
        variant_id = f"{spec.name}-{number:0{width}d}"
        variants.append(
            TaskVariant(
                variant_id=variant_id,
                benchmark=spec.benchmark,
                oracle_prompt=f"[{variant_id}] Complete the task using {value}.",
                underspecified_prompt=f"[{variant_id}] Complete the task.",
                removed_segments=[
                    RemovedSegment(dimension=spec.dimension, subdimension=subdimension, value=value)
                ],
                primary_dimension=spec.dimension,
                ambiguity_class=spec.ambiguity_class,
                grader=SimGrader(profile=profile),
                tools=SIM_TOOLS,
            )
        )
    return variants


def build_sim_corpus(document: ProfileDocument) -> list[TaskVariant]:
    return [variant for spec in document.profiles for variant in sim_variants(spec)]


def default_document(variants_per_profile: int = 1) -> ProfileDocument:
    """Profile document with one spec per shipped default profile."""
    return ProfileDocument(
        profiles=[
            ProfileSpec(
                name=f"sim-{dimension.value}",
                dimension=dimension,
                shape=profile.shape,
                parameters={
                    "exponent": profile.exponent,
                    "reconciliation_rate": profile.reconciliation_rate,
                },
                anchors={"p_oracle": profile.p_oracle, "p_nc": profile.p_nc},
                trajectory_length=profile.trajectory_length,
                variants=variants_per_profile,
            )
            for dimension, profile in DEFAULT_PROFILES.items()
        ]
    )


def sim_tasks(variants: Iterable[TaskVariant]) -> dict[str, SimTask]:
    """Simulator knowledge for every variant graded by the simulator."""
    return {
        variant.variant_id: SimTask(
            profile=variant.grader.profile, oracle_prompt=variant.oracle_prompt
        )
        for variant in variants
        if isinstance(variant.grader, SimGrader)
    }


def attach_tasks(
    endpoint: SimulatorEndpoint, tasks: Mapping[str, SimTask]
) -> SimulatorEndpoint:
    """Copy of `endpoint` that also knows `tasks` (entries already on the endpoint win)."""
    return endpoint.model_copy(update={"tasks": {**tasks, **endpoint.tasks}})
