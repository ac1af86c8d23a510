"""Experimentation laboratory for IR-based bug localization.

Classifier families (VSM, LSI, LDA, entity metrics) over a 3,172-point
factorial configuration space, a VCS-log mining pipeline for ground truth,
top-k / effort / top-k_LOC evaluation, and parameter sensitivity analysis.
"""

__version__ = "0.1.0"
