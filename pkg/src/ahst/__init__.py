"""Auxiliary Hilbert space tomography of photonic OAM states in simulation."""

from .errors import AhstError, ConfigError, DegenerateDataError, FitError, FormatError, GeometryError
from .imaging import IntensityImage, NoiseModel, apply_noise, intensity_image, read_image, write_image
from .modes import BeamGeometry, KernelTable, build_kernel_table, kernel_p, lg_amplitude, norm_constant
from .recon import dft2, extract_density, fidelity, fit_physical, fit_waist, physicalize, reconstruct
from .states import DensityMatrix, PureState, mix, benchmark_states, random_density
from .wigner import wigner

__all__ = [
    "AhstError", "ConfigError", "DegenerateDataError", "FitError", "FormatError", "GeometryError",
    "IntensityImage", "NoiseModel", "apply_noise", "intensity_image", "read_image", "write_image",
    "BeamGeometry", "KernelTable", "build_kernel_table", "kernel_p", "lg_amplitude", "norm_constant",
    "dft2", "extract_density", "fidelity", "fit_physical", "fit_waist", "physicalize", "reconstruct",
    "DensityMatrix", "PureState", "mix", "benchmark_states", "random_density", "wigner",
]
