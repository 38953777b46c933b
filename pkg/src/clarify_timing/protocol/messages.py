"""Injection message templates and the natural-ask prompt notice."""

from collections.abc import Sequence

from pydantic import field_validator

from ..conditions import Dimension
from ..pydantic_adapters import HarnessModel
from ..trial.models import RemovedSegment

FALLBACK_TEMPLATE = "By the way, I should have mentioned: {value}."
SECOND_SEGMENT_TEMPLATE = "Also, {value}."
LATER_SEGMENT_TEMPLATE = "And {value}."

NATURAL_ASK_NOTICE = (
    "IMPORTANT: Your output will be checked by an auto-grader looking for exact answers. "
    "This task may be missing critical information. "
    "Use the ask_user tool to ask the user for any missing details."
)


def normalize_subdimension(subdimension: str) -> str:
    """`Domain_Knowledge` and `domain-knowledge` both become `domain knowledge`."""
    return " ".join(subdimension.replace("_", " ").replace("-", " ").lower().split())


class TemplateEntry(HarnessModel):
    dimension: Dimension
    subdimension: str
    template: str

    @field_validator("subdimension")
    @classmethod
    def _normalized(cls, value: str) -> str:
        return normalize_subdimension(value)

    @field_validator("template")
    @classmethod
    def _has_placeholder(cls, value: str) -> str:
        if "{value}" not in value:
            raise ValueError("template must contain the `{value}` placeholder")
        return value


class TemplateTable(HarnessModel):
    """Templates for the first segment plus the connectives for the rest.

    Config documents may replace or extend `entries`; lookups use the normalized
    subdimension.
    """

    entries: list[TemplateEntry]
    fallback: str = FALLBACK_TEMPLATE
    second: str = SECOND_SEGMENT_TEMPLATE
    later: str = LATER_SEGMENT_TEMPLATE

    def template_for(self, dimension: Dimension, subdimension: str) -> str:
        wanted = normalize_subdimension(subdimension)
        for entry in self.entries:
            if entry.dimension is dimension and entry.subdimension == wanted:
                return entry.template
        return self.fallback

    def extended(self, entries: Sequence[TemplateEntry]) -> "TemplateTable":
        """Copy where `entries` take precedence over existing ones."""
        return self.model_copy(update={"entries": [*entries, *self.entries]})


DEFAULT_TEMPLATES = TemplateTable(
    entries=[
        TemplateEntry(
            dimension=Dimension.GOAL,
            subdimension="target",
            template="By the way, I should clarify: I'm specifically looking for {value}.",
        ),
        TemplateEntry(
            dimension=Dimension.GOAL,
            subdimension="format",
            template="By the way, please give me the result in {value}.",
        ),
        TemplateEntry(
            dimension=Dimension.INPUT,
            subdimension="source",
            template="By the way, you can find the data in {value}.",
        ),
        TemplateEntry(
            dimension=Dimension.INPUT,
            subdimension="location",
            template="By the way, it's located at {value}.",
        ),
        TemplateEntry(
            dimension=Dimension.CONSTRAINT,
            subdimension="temporal",
            template="By the way, I should have mentioned: I'm looking at {value}.",
        ),
        TemplateEntry(
            dimension=Dimension.CONSTRAINT,
            subdimension="selection",
            template="I should mention, only include those that are {value}.",
        ),
        TemplateEntry(
            dimension=Dimension.CONTEXT,
            subdimension="background",
            template="By the way, for context: {value}.",
        ),
        TemplateEntry(
            dimension=Dimension.CONTEXT,
            subdimension="domain knowledge",
            template="For context, {value}.",
        ),
    ]
)


def _fill(template: str, value: str) -> str:
    return template.replace("{value}", value)


def build_injection_message(
    segments: Sequence[RemovedSegment], templates: TemplateTable = DEFAULT_TEMPLATES
) -> str:
    """Renders the synthetic user message carrying the removed segments.

    The first segment uses its `(dimension, subdimension)` template, the second is
    appended as "Also, {value}." and every later one as "And {value}.".

    Args:
        segments (Sequence[RemovedSegment]): Segments in variant order.
        templates (TemplateTable, optional): Template table. Defaults to the shipped table.

    Returns:
        str: The message; identical segment lists always give identical bytes.

    Raises:
        ValueError: `segments` is empty or a segment value is empty.
    """
    if not segments:
        raise ValueError("Cannot build an injection message without removed segments.")
    for position, segment in enumerate(segments):
        if not segment.value.strip():
            raise ValueError(f"Removed segment {position} has an empty value.")

    first, *rest = segments
    sentences = [_fill(templates.template_for(first.dimension, first.subdimension), first.value)]
    for position, segment in enumerate(rest):
        connective = templates.second if position == 0 else templates.later
        sentences.append(_fill(connective, segment.value))
    return " ".join(sentences)


def with_natural_ask_notice(prompt: str) -> str:
    return f"{prompt}\n\n{NATURAL_ASK_NOTICE}"
