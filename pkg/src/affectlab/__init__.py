"""affectlab: desk-scale lab for emotionally aligned marketing-dialogue agents."""

__version__ = "0.1.0"
