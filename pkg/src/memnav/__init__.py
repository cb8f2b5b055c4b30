"""Memory policies for video object segmentation on synthetic scenarios."""

__version__ = "0.1.0"
