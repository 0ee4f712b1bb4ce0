"""Suprema of (g,F)-processes with regularly varying innovations."""
__version__ = "0.1.0"
