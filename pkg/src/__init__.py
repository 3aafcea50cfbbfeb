"""
Dependent Doors - planning knock sequences without feedback
Main package initialization
"""
__version__ = "1.0.0"
