"""
rftransport: rf-driven transport through avoided-crossing manifolds.
"""

__version__ = "0.1.0"
