"""Dynamic-ray tails, signed addresses and fundamental hands for cosh-type entire maps"""

__version__ = "1.0.0"
