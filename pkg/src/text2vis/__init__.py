"""Chinese Text-to-Vis toolchain: VQL parsing and evaluation, VQL-to-
Vega-Lite compilation, and a desk-scale neural question-to-VQL translator."""

__version__ = "0.1.0"
