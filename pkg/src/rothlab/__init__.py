"""rothlab: exact progression counting, Bohr sets, large spectra, Riesz
products, and certificate-producing density-increment engines on finite
abelian groups of odd order."""

from ._kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["KERNEL_BACKEND", "__version__"]
