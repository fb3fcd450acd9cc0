"""
OUFreq: frequency estimation for partially observed OU-modulated signals.
"""

__version__ = "0.1.0"
