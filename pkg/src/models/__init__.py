"""
Door, sequence and result models
"""
