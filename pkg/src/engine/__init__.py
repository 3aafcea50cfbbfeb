"""
Planning, evaluation and simulation engines
"""
