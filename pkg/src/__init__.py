"""
Source package
"""
