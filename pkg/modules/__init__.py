"""
vibench modules package
"""
