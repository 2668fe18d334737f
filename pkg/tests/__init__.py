"""
Tests for coherent-szilard package.
"""
