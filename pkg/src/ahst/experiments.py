"""Simulate -> noise -> reconstruct loops used by the CLI and acceptance suite."""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .imaging import apply_noise, intensity_image
from .modes import KernelTable, build_kernel_table, default_r_cut, n_threads
from .recon import fidelity, reconstruct
from .states import benchmark_states


def kernel_table_for(config, geometry=None):
    """Kernel table at the reconstruction waist, reusing ``config.kernel_cache``."""
    geometry = geometry or config.geometry().with_sigma(config.recon_sigma())
    r_cut = config.r_cut if config.r_cut is not None else default_r_cut(config.l_max, geometry.sigma)
    path = config.kernel_cache
    if path:
        try:
            table = KernelTable.load(path)
        except (OSError, ValueError):
            table = None
        if (
            table is not None
            and table.l_max == config.l_max
            and table.compatible_with(geometry)
            and math.isclose(table.r_cut, r_cut)
        ):
            return table
    table = build_kernel_table(geometry, config.l_max, r_cut)
    if path:
        table.save(path)
    return table


def seed_for(seed, *key):
    """Independent, reproducible stream for (run seed, key...)."""
    return np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key))


def round_trip(rho, geometry, table, noise, seed, method="fit", dark_level=0.0):
    """Fidelity of one simulate -> noise -> reconstruct pass."""
    image = apply_noise(intensity_image(rho, geometry), noise, seed)
    rec = reconstruct(image, table, rho.dim, method=method, dark_level=dark_level)
    return fidelity(rho, rec.physical)


@dataclass(frozen=True)
class TableRow:
    group: str
    state: str
    mean: float
    std: float
    fidelities: tuple


def _group(name):
    if name.startswith("|"):
        return "Eigenstate"
    if name.startswith("psi"):
        return "Superposition"
    return "Mixed State"


def table1(config, table=None, states=None):
    """Mean and standard deviation of the fidelity over ``config.repetitions``
    noise seeds for each benchmark state."""
    geometry = config.geometry()
    table = table or kernel_table_for(config)
    noise = config.noise.model()
    states = states or benchmark_states(config.dim)
    reps = 1 if noise.noiseless else config.repetitions
    dark = noise.dark_level if config.subtract_dark else 0.0

    def run(item):
        idx, (name, rho) = item
        fids = tuple(
            round_trip(rho, geometry, table, noise, seed_for(config.seed, idx, r), config.method, dark)
            for r in range(reps)
        )
        return TableRow(_group(name), name, float(np.mean(fids)), float(np.std(fids, ddof=1)) if reps > 1 else 0.0, fids)

    items = list(enumerate(states.items()))
    workers = n_threads()
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(run, items))
    return [run(item) for item in items]
