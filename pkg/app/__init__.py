"""
Finsler Sobolev Toolkit Application Package.

This package contains the numerical services, the command-line interface
and the FastAPI surface of the toolkit.
"""
