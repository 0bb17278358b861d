"""Classical simulation of a photonic-chip spin-1/2 spinfoam vertex amplitude.

Modules
-------
lqg_core        vertex tensor, amplitude functions, symmetry and peak analyses
interferometer  unitary dilation, Clements mesh compilation, mesh noise
photonics       permanents, HOM interference, photon-count sampling
tomography      transfer-matrix reconstruction and amplitude fidelity
pipeline        experiment configuration and the end-to-end commands
cli             ``lqgchip`` command-line entry point
"""

from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
