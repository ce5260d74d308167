"""comonotone-mc - Monte Carlo verification of functional co-monotony"""
__version__ = "0.1.0"
