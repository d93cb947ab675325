"""Offline stand-ins for the external providers."""

from .scenarios import SCENARIOS, empty_world, ooc_world, true_claim_world
from .scripted import Doc, ScriptedBackend, World, hash_embedding, visual_embedding

__all__ = [
    "Doc",
    "SCENARIOS",
    "ScriptedBackend",
    "World",
    "empty_world",
    "hash_embedding",
    "ooc_world",
    "true_claim_world",
    "visual_embedding",
]
