"""tinytts: low-resource TTS data tooling and a desk-scale attention trainer."""

__version__ = "0.1.0"
