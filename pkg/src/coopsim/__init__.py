"""
coopsim - delay-limited cooperative relaying under drift-plus-penalty control
"""

__version__ = "0.1.0"
__author__ = "zhenzhen"
