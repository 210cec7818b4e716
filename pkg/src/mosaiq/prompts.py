"""Query templates and annotation guidelines.

Four template styles exist per dimension, from a single concise
sentence (Type 1) to an expert-aware description naming concrete
domain criteria (Type 4, the default used for scoring). Queries embed
an image placeholder token and, from Type 2 on, a lowercase dimension
tag like <layout>. The paired response stub keeps a {rating_word} slot
that the scored model fills with one of the five rating words.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

from .model import Dimension, RatingLevel

IMAGE_TOKEN = "<image>"
RATING_WORD_SLOT = "{rating_word}"

RESPONSE_STUB = "The spatial aesthetic {dimension} quality level of this image is {rating_word}."

_BASE_QUERY = "Please evaluate the spatial aesthetic {dimension} quality level of this image."

# Dimension-specific descriptions appended to the base query.
_TYPE3_DETAIL = {
    Dimension.LAYOUT: (
        "The layout dimension describes the spatial distribution and positional "
        "relationships of major elements within a composition. Assess how the layout "
        "contributes to the overall organization, structure, and balance of the image."
    ),
    Dimension.HARMONY: (
        "The harmony dimension emphasizes stylistic consistency, color matching, and "
        "overall visual coordination. Consider how well the elements come together to "
        "create a unified and pleasing appearance."
    ),
    Dimension.LIGHTING: (
        "The lighting dimension focuses on the interaction between light and shadow, "
        "including the quality of lighting effects and the sense of three-dimensionality. "
        "Assess how lighting enhances or affects the depth and overall atmosphere of an image."
    ),
    Dimension.DISTORTION: (
        "The distortion dimension describes the degree of distortion in shapes or the "
        "fidelity of background details. Assess how the distortion impacts the perceived "
        "realism and visual quality of the image."
    ),
}

_TYPE4_DETAIL = {
    Dimension.LAYOUT: (
        "The layout dimension describes the spatial distribution, positional "
        "relationships, and quantity of major elements within the space. Consider how "
        "the layout supports the overall visual order, maintains balance, and enhances "
        "the functional aesthetics of the image."
    ),
    Dimension.HARMONY: (
        "The harmony dimension focuses on stylistic consistency, color coordination, and "
        "overall visual cohesion. Examine how well the combination of elements creates a "
        "balanced and visually pleasant composition, avoiding clashes or imbalances in "
        "style and color."
    ),
    Dimension.LIGHTING: (
        "The lighting dimension examines the quality of light effects, shadow "
        "interactions, and the realism of light sources. Assess how well lighting "
        "contributes to the overall depth, mood, and authenticity of the image, "
        "emphasizing both natural and artificial lighting scenarios."
    ),
    Dimension.DISTORTION: (
        "The distortion dimension assesses whether soft furnishings (e.g., cabinets, "
        "carpets) or fixed structures (e.g., floors, walls) appear deformed or "
        "misaligned. Additionally, evaluate the realism and material accuracy of "
        "textures, and judge whether any distortion negatively impacts the overall "
        "aesthetic quality of the image."
    ),
}


class PromptType(IntEnum):
    """Template style: concise, tagged, detailed, or expert-aware."""

    TYPE1 = 1
    TYPE2 = 2
    TYPE3 = 3
    TYPE4 = 4


@dataclass(frozen=True)
class PromptTemplate:
    """A ready-to-send query and its expected response stub."""

    dimension: Dimension
    prompt_type: PromptType
    query_text: str
    response_stub: str

    def fill_response(self, level: RatingLevel) -> str:
        """Response text with the rating word filled in."""
        return self.response_stub.replace(RATING_WORD_SLOT, level.word)


def dimension_tag(dimension: Dimension) -> str:
    """Lowercase tag token for a dimension, e.g. <layout>."""
    return f"<{dimension.value}>"


def build_query(
    dimension: Dimension, prompt_type: PromptType = PromptType.TYPE4
) -> PromptTemplate:
    """Build the query template for one dimension in one style.

    Every query starts with the image placeholder token; Types 2-4 add
    the dimension tag; Types 3-4 append the dimension description. The
    response stub is shared by all styles.
    """
    name = dimension.value
    base = _BASE_QUERY.format(dimension=name)
    if prompt_type == PromptType.TYPE1:
        query = f"{IMAGE_TOKEN}{base}"
    elif prompt_type == PromptType.TYPE2:
        query = f"{IMAGE_TOKEN}{dimension_tag(dimension)}{base}"
    elif prompt_type == PromptType.TYPE3:
        query = f"{IMAGE_TOKEN}{dimension_tag(dimension)}{base} {_TYPE3_DETAIL[dimension]}"
    elif prompt_type == PromptType.TYPE4:
        query = f"{IMAGE_TOKEN}{dimension_tag(dimension)}{base} {_TYPE4_DETAIL[dimension]}"
    else:
        raise ValueError(f"unknown prompt type {prompt_type!r}")
    return PromptTemplate(
        dimension=dimension,
        prompt_type=prompt_type,
        query_text=query,
        response_stub=RESPONSE_STUB.format(dimension=name, rating_word=RATING_WORD_SLOT),
    )


# Annotation guidelines: dimension definitions and the concrete criteria
# annotators apply, plus the meaning of each rating level.
DIMENSION_CRITERIA: dict[Dimension, str] = {
    Dimension.LAYOUT: (
        "Definition: Spatial arrangement of key elements, their relative positions, and "
        "object counts. Typical problems include excessive emptiness, clutter, and poor "
        "placement.\n"
        "Specific Criteria: All objects exhibit logical positional relationships, "
        "avoiding Floating Objects, Unconventional Placement. Objects should be placed "
        "according to design function and common design practices. The quantity of items "
        "should be appropriate, avoiding Excessive Clutter or Excessive Emptiness. For "
        "close-up shots where main items like chairs or cabinets occupy a large "
        "proportion, fewer auxiliary items are acceptable but not excessive."
    ),
    Dimension.HARMONY: (
        "Definition: Stylistic coherence, color compatibility, and overall visual "
        "consistency. Typical problems include color clashes, mismatched design styles, "
        "and generally unattractive appearance.\n"
        "Specific Criteria: The overall style is unified, avoiding Inconsistent Style or "
        "obvious incongruity. Color schemes are coordinated and consistent with the "
        "design style, avoiding Discordant Colors. The image adheres to popular "
        "aesthetic trends, avoiding Poor Aesthetics, outdated, or unattractive styles."
    ),
    Dimension.LIGHTING: (
        "Definition: Quality of illumination, shadow behavior, and realism of light "
        "sources. Typical problems include unnatural lighting, incorrect or inconsistent "
        "shadows, and implausible light sources.\n"
        "Specific Criteria: Prevents Over-Bright/Unrealistic Light, such as overexposure "
        "due to overly strong or unrealistic light. Ensures Unrealistic Shadows are "
        "avoided, preventing uniformly bright or dark scenes, and ensuring shadow "
        "directions align logically with light sources. Light sources are logically and "
        "realistically placed, thereby avoiding an Implausible Light Source."
    ),
    Dimension.DISTORTION: (
        "Definition: Geometric or semantic deformation of furnishings/fixtures and the "
        "realism of materials. Typical problems include warped or distorted backgrounds, "
        "shape deformation, and unconvincing materials.\n"
        "Specific Criteria: Soft furnishings (various objects) and hard fixtures (e.g., "
        "ceilings, walls, floors) are not subjected to Soft Furnishing Deformation or "
        "Hard Fixture Deformation, meaning they are not deformed, warped, or misaligned. "
        "Material effects are realistic, with appropriate textures and proportions, "
        "avoiding Unrealistic Materials, deformation, stretching, or blurriness."
    ),
}

RATING_GUIDE: dict[RatingLevel, str] = {
    RatingLevel.BAD: "significant major issue",
    RatingLevel.POOR: "noticeable minor issue",
    RatingLevel.FAIR: "subtle minor issue",
    RatingLevel.GOOD: "slight flaw",
    RatingLevel.EXCELLENT: "no issue",
}
