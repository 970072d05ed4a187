"""
higher Heine-Stieltjes spectra of Lamé operators and their limit measures
"""

from .__about__ import __version__
