"""Party-state recurrent networks with attention for emotion recognition
in multi-turn dyadic conversations."""

__version__ = "0.1.0"
