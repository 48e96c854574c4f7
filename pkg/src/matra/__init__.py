"""matra: multilingual character-level transliteration between English,
Hindi, Bengali, Tamil and Kannada."""

__version__ = "0.1.0"
