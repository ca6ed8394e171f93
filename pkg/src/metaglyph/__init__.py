"""Metaphoric glyph-based visualization generator.

Decomposes topic-related SVG images into visual elements, searches the
data-to-element mapping space with Monte Carlo tree search, and renders the
winning mappings as editable SVG scenes.
"""

__version__ = "0.1.0"
