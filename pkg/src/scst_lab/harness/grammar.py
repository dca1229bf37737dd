"""Synthetic scenes, their feature encodings and a caption grammar.

A scene has four attribute slots. The global feature is the concatenation
of one one-hot block per slot. The spatial view spreads the blocks over N
locations: each slot lands on its own location, scaled by N, so the mean
over locations equals the global feature.
"""

from typing import Final

import numpy as np

from ..exceptions import DatasetError
from .types import ToyScene

OBJECTS: Final = ("dog", "cat", "car", "bird", "ball", "boat")
COLORS: Final = ("red", "blue", "green", "black", "white", "yellow")
SIZES: Final = ("small", "large", "tiny")
CONTEXTS: Final = ("grass", "street", "water", "table")

SLOTS: Final = (("object", OBJECTS), ("color", COLORS), ("size", SIZES), ("context", CONTEXTS))

SYNONYMS: Final[dict[str, tuple[str, ...]]] = {
    "dog": ("dog", "puppy"),
    "cat": ("cat", "kitten"),
    "car": ("car", "vehicle"),
    "bird": ("bird",),
    "ball": ("ball",),
    "boat": ("boat", "ship"),
    "small": ("small", "little"),
    "large": ("large", "big"),
    "tiny": ("tiny",),
    "grass": ("on the grass", "on the lawn"),
    "street": ("in the street", "on the road"),
    "water": ("on the water", "near the water"),
    "table": ("on a table", "on the table"),
}

TEMPLATES: Final = (
    "a {size} {color} {object} {context}",
    "there is a {color} {object} {context}",
    "a {object} that is {color} {context}",
    "the {size} {object} is {color}",
    "a {color} {object} with a {size} body {context}",
)


def feature_dim() -> int:
    return sum(len(values) for _, values in SLOTS)


def random_scene(rng: np.random.Generator) -> ToyScene:
    return ToyScene(**{slot: values[rng.integers(len(values))] for slot, values in SLOTS})


def encode_scene(
    scene: ToyScene, n_locations: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Global (F,) and spatial (N, F) features of a scene.

    Slots are assigned to distinct random locations.

    Raises:
        DatasetError: If there are fewer locations than slots.
    """
    if n_locations < len(SLOTS):
        raise DatasetError(f"Need at least {len(SLOTS)} locations, got {n_locations}")
    F = feature_dim()
    global_feats = np.zeros(F)
    spatial = np.zeros((n_locations, F))
    places = rng.permutation(n_locations)[: len(SLOTS)]
    offset = 0
    for (slot, values), loc in zip(SLOTS, places, strict=True):
        col = offset + values.index(getattr(scene, slot))
        global_feats[col] = 1.0
        spatial[loc, col] = float(n_locations)
        offset += len(values)
    return global_feats, spatial


class CaptionGrammar:
    """Template grammar producing reference captions with synonym choices.

    Args:
        templates: Format strings over the slot names.
        refs_per_scene: Number of references per scene.
    """

    def __init__(self, templates: tuple[str, ...] = TEMPLATES, refs_per_scene: int = 5) -> None:
        if refs_per_scene < 1:
            raise DatasetError("Need at least one reference per scene")
        self.templates = templates
        self.refs_per_scene = refs_per_scene

    def caption(self, scene: ToyScene, rng: np.random.Generator) -> list[str]:
        template = self.templates[rng.integers(len(self.templates))]
        words = {}
        for slot, _ in SLOTS:
            value = getattr(scene, slot)
            choices = SYNONYMS.get(value, (value,))
            words[slot] = choices[rng.integers(len(choices))]
        return template.format(**words).split()

    def references(self, scene: ToyScene, rng: np.random.Generator) -> list[list[str]]:
        return [self.caption(scene, rng) for _ in range(self.refs_per_scene)]

    def vocabulary(self) -> set[str]:
        """Every word the grammar can emit."""
        words: set[str] = set()
        for template in self.templates:
            words.update(w for w in template.split() if not w.startswith("{"))
        for slot, values in SLOTS:
            for value in values:
                for phrase in SYNONYMS.get(value, (value,)):
                    words.update(phrase.split())
        return words
