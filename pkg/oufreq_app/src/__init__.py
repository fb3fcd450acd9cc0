"""Source package for OUFreq (core numerics, models, interfaces, utilities)."""
