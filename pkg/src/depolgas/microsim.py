"""Finite-N eigenvalue simulation of the coupled atom-mode system.

A periodic cube of side L holds N = round(n L^3) hard spheres (random
sequential insertion, minimum-image convention) and a basis of transverse
standing-wave modes commensurate with the box.  Linearizing the coupled
oscillator equations and rescaling atom coordinates by sqrt(omega) and mode
amplitudes by sqrt(Omega_nu) yields one real symmetric dynamical matrix

    [ omega^2 I + (2 d^2 omega / hbar eps0) u(x_ij)   g_{j,nu}          ]
    [ g_{j,nu}^T                                      Omega_nu^2 delta  ]

with g_{j,nu} = (d sqrt(omega Omega_nu) / hbar eps0) f_nu(x_j).  The gas is
dynamically stable exactly when this matrix is positive semidefinite, so a
density scan tracks its minimal eigenvalue and brackets the instability
threshold by the sign change of the replica average.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import CODATA, AtomSpecies, PhysicalConstants, dicke_density
from .errors import ConfigError, InfeasiblePackingError, ScaleSeparationError
from .kernels import CutoffProfile, contact_scalars

MAX_PACKING = 0.3          # RSA stays well clear of its jamming fraction
_DEFAULT_ATTEMPTS = 3000   # insertion attempts allowed per atom
_MAX_MATRIX_DIM = 8000


@dataclass(frozen=True)
class Configuration:
    """One sampled hard-sphere configuration in a periodic cube."""

    box_length: float
    core_diameter: float
    positions: np.ndarray  # (N, 3), coordinates in [0, L)

    @property
    def n_atoms(self) -> int:
        return self.positions.shape[0]


def minimum_image(delta: np.ndarray, box_length: float) -> np.ndarray:
    """Map displacement vectors into the centered box."""
    return delta - box_length * np.rint(delta / box_length)


def sample_configuration(density: float, box_length: float, core_diameter: float,
                         seed, mc_sweeps: int = 0,
                         attempts_per_atom: int = _DEFAULT_ATTEMPTS) -> Configuration:
    """Random sequential insertion of round(n L^3) hard spheres.

    Refuses packing fractions of 0.3 and above, where sequential insertion
    degrades; below that it terminates fast.  ``mc_sweeps`` optional local
    Metropolis passes (hard-sphere moves) decorrelate the RSA statistics for
    sensitivity checks.  ``seed`` may be anything accepted by
    ``np.random.SeedSequence``; equal seeds give identical configurations.
    """
    if density <= 0.0 or box_length <= 0.0:
        raise ValueError("density and box_length must be positive")
    n = int(round(density * box_length**3))
    if n < 1:
        raise InfeasiblePackingError(
            f"density {density:g} in box {box_length:g} rounds to zero atoms"
        )
    packing = n * (math.pi / 6.0) * core_diameter**3 / box_length**3
    if packing >= MAX_PACKING:
        raise InfeasiblePackingError(
            f"packing fraction {packing:.3f} >= {MAX_PACKING} for {n} spheres of "
            f"diameter {core_diameter:g} in box {box_length:g}"
        )
    if core_diameter > 0.0 and core_diameter >= box_length / 2.0:
        raise InfeasiblePackingError(
            "core diameter must be below half the box length for minimum image"
        )

    rng = np.random.default_rng(np.random.SeedSequence(seed))
    positions = np.empty((n, 3))
    sigma2 = core_diameter * core_diameter
    budget = attempts_per_atom * n
    accepted = 0
    while accepted < n:
        if budget <= 0:
            raise InfeasiblePackingError(
                f"insertion stalled at {accepted}/{n} spheres "
                f"(packing fraction {packing:.3f})"
            )
        trial = rng.uniform(0.0, box_length, 3)
        budget -= 1
        if accepted and sigma2 > 0.0:
            d = minimum_image(positions[:accepted] - trial, box_length)
            if np.min(np.einsum("ij,ij->i", d, d)) < sigma2:
                continue
        positions[accepted] = trial
        accepted += 1

    if mc_sweeps > 0:
        step = 0.3 * core_diameter if core_diameter > 0.0 else 0.1 * box_length
        for _ in range(mc_sweeps):
            for i in range(n):
                trial = (positions[i] + rng.uniform(-step, step, 3)) % box_length
                if sigma2 > 0.0:
                    d = minimum_image(np.delete(positions, i, axis=0) - trial, box_length)
                    if np.min(np.einsum("ij,ij->i", d, d)) < sigma2:
                        continue
                positions[i] = trial

    return Configuration(box_length=box_length, core_diameter=core_diameter,
                         positions=positions)


def pair_correlation(configs: list[Configuration], n_bins: int, r_max: float):
    """Histogram estimate of g(r) averaged over configurations.

    Returns (bin_centers, g_hat).  r_max must stay below half the box.
    """
    if not configs:
        raise ValueError("need at least one configuration")
    box = configs[0].box_length
    if r_max > box / 2.0:
        raise ValueError("r_max must not exceed half the box length")
    edges = np.linspace(0.0, r_max, n_bins + 1)
    counts = np.zeros(n_bins)
    norm = 0.0
    for cfg in configs:
        n = cfg.n_atoms
        iu, ju = np.triu_indices(n, k=1)
        d = minimum_image(cfg.positions[iu] - cfg.positions[ju], box)
        r = np.sqrt(np.einsum("ij,ij->i", d, d))
        counts += np.histogram(r, bins=edges)[0]
        norm += n * (n - 1) / 2.0 / box**3
    shell = 4.0 * math.pi / 3.0 * (edges[1:] ** 3 - edges[:-1] ** 3)
    g_hat = counts / (norm * shell)
    centers = 0.5 * (edges[1:] + edges[:-1])
    return centers, g_hat


# ---------------------------------------------------------------------------
# transverse standing-wave mode basis


@dataclass(frozen=True)
class ModeBasis:
    """Real transverse modes of a periodic cube, |k| <= 2 pi / lambda_min.

    One canonical wavevector per +-k pair, two unit polarizations
    perpendicular to k, and cos/sin parities (0 = cos, 1 = sin).  Mode
    functions are f_nu(x) = amplitude * pol * {cos|sin}(k . x) with
    amplitude^2 = 4 hbar Omega eps0 / V, which realizes the normalization
    Int f_nu . f_mu d^3x = 2 hbar Omega_nu eps0 delta_numu.
    """

    box_length: float
    lambda_min: float
    k: np.ndarray          # (M, 3) rad/m
    pol: np.ndarray        # (M, 3) unit vectors
    parity: np.ndarray     # (M,) 0 cos, 1 sin
    Omega: np.ndarray      # (M,) rad/s
    amplitude: np.ndarray  # (M,)

    @property
    def n_modes(self) -> int:
        return self.k.shape[0]


def _polarization_pair(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # integer constructions keep k . pol at exact zero before normalization
    mx, my, mz = (float(v) for v in m)
    if mx == 0.0 and my == 0.0:
        return np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0])
    e1 = np.array([my, -mx, 0.0])
    e2 = np.array([mz * mx, mz * my, -(mx * mx + my * my)])
    return e1 / np.linalg.norm(e1), e2 / np.linalg.norm(e2)


def build_mode_basis(box_length: float, lambda_min: float,
                     constants: PhysicalConstants = CODATA) -> ModeBasis:
    """Enumerate box-commensurate transverse modes with 0 < |k| <= 2 pi / lambda_min."""
    if lambda_min <= 0.0 or box_length <= 0.0:
        raise ValueError("box_length and lambda_min must be positive")
    m_max = box_length / lambda_min
    if m_max < 1.0:
        raise ConfigError(
            f"no modes fit: lambda_min {lambda_min:g} exceeds box length {box_length:g}"
        )
    limit = int(math.floor(m_max))
    ks, pols, parities, omegas = [], [], [], []
    base = 2.0 * math.pi / box_length
    for mx in range(-limit, limit + 1):
        for my in range(-limit, limit + 1):
            for mz in range(-limit, limit + 1):
                m = (mx, my, mz)
                if m == (0, 0, 0):
                    continue
                # canonical representative of the +-m pair
                if not (mx > 0 or (mx == 0 and (my > 0 or (my == 0 and mz > 0)))):
                    continue
                if mx * mx + my * my + mz * mz > m_max * m_max:
                    continue
                marr = np.array(m, dtype=float)
                kvec = base * marr
                e1, e2 = _polarization_pair(marr)
                for pol in (e1, e2):
                    for parity in (0, 1):
                        ks.append(kvec)
                        pols.append(pol)
                        parities.append(parity)
                        omegas.append(constants.c * np.linalg.norm(kvec))
    k = np.array(ks)
    omega_arr = np.array(omegas)
    volume = box_length**3
    amplitude = np.sqrt(4.0 * constants.hbar * omega_arr * constants.epsilon0 / volume)
    return ModeBasis(box_length=box_length, lambda_min=lambda_min, k=k,
                     pol=np.array(pols), parity=np.array(parities, dtype=np.int8),
                     Omega=omega_arr, amplitude=amplitude)


def mode_field(basis: ModeBasis, positions: np.ndarray) -> np.ndarray:
    """Mode functions f_nu at given points; shape (M, P, 3)."""
    phase = positions @ basis.k.T            # (P, M)
    wave = np.where(basis.parity[None, :] == 0, np.cos(phase), np.sin(phase))
    scal = basis.amplitude[None, :] * wave   # (P, M)
    return np.einsum("pm,mc->mpc", scal, basis.pol)


# ---------------------------------------------------------------------------
# dynamical matrix


def assemble_dynamical_matrix(config: Configuration, basis: ModeBasis,
                              species: AtomSpecies, profile: CutoffProfile,
                              constants: PhysicalConstants = CODATA,
                              include_contact: bool = True) -> np.ndarray:
    """Symmetrized dynamical matrix of dimension 3 N + M (values in (rad/s)^2)."""
    pos = config.positions
    n = config.n_atoms
    m = basis.n_modes
    dim = 3 * n + m
    if dim > _MAX_MATRIX_DIM:
        raise ConfigError(
            f"dynamical matrix dimension {dim} exceeds the guard {_MAX_MATRIX_DIM}"
        )
    omega = species.omega
    matrix = np.zeros((dim, dim))

    # atom-atom: omega^2 on the diagonal plus the contact kernel on pairs
    if include_contact and n > 1:
        diff = minimum_image(pos[:, None, :] - pos[None, :, :], config.box_length)
        r = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        np.fill_diagonal(r, 1.0)  # placeholder, pair blocks zeroed below
        ut, ul = contact_scalars(profile, r)
        rhat = diff / r[:, :, None]
        outer = np.einsum("ija,ijb->ijab", rhat, rhat)
        blocks = ut[:, :, None, None] * np.eye(3) + (ul - ut)[:, :, None, None] * outer
        idx = np.arange(n)
        blocks[idx, idx] = 0.0
        coupling = 2.0 * species.dipole**2 * omega / (constants.hbar * constants.epsilon0)
        qq = coupling * blocks.transpose(0, 2, 1, 3).reshape(3 * n, 3 * n)
        matrix[: 3 * n, : 3 * n] = qq
    matrix[: 3 * n, : 3 * n] += omega * omega * np.eye(3 * n)

    # atom-mode: d sqrt(omega Omega) / (hbar eps0) * f_nu(x_j)
    if m > 0:
        phase = pos @ basis.k.T
        wave = np.where(basis.parity[None, :] == 0, np.cos(phase), np.sin(phase))
        scal = (species.dipole * np.sqrt(omega * basis.Omega)[None, :]
                / (constants.hbar * constants.epsilon0)
                * basis.amplitude[None, :] * wave)          # (N, M)
        cross = scal[:, None, :] * basis.pol.T[None, :, :]  # (N, 3, M)
        matrix[: 3 * n, 3 * n:] = cross.reshape(3 * n, m)
        matrix[3 * n:, : 3 * n] = matrix[: 3 * n, 3 * n:].T
        matrix[3 * n:, 3 * n:] = np.diag(basis.Omega**2)

    return matrix


def minimal_eigenvalue(matrix: np.ndarray) -> float:
    """Smallest eigenvalue of the (symmetric) dynamical matrix."""
    return float(np.linalg.eigvalsh(matrix)[0])


# ---------------------------------------------------------------------------
# density scan


@dataclass(frozen=True)
class ScanGeometry:
    """Geometry of the numerical experiment, tied to the cutoff length."""

    ell: float
    box_over_ell: float = 8.0
    lambda_min_over_ell: float = 4.0

    @property
    def box_length(self) -> float:
        return self.box_over_ell * self.ell

    @property
    def lambda_min(self) -> float:
        return self.lambda_min_over_ell * self.ell


@dataclass
class StabilityReport:
    """Replica-averaged minimal-eigenvalue curve and threshold bracket."""

    density_grid: np.ndarray       # 1/m^3
    min_eig_mean: np.ndarray       # (rad/s)^2
    min_eig_std: np.ndarray
    unstable_fraction: np.ndarray
    atoms_per_density: np.ndarray
    replicas: int
    threshold_low: float | None = None   # 1/m^3
    threshold_high: float | None = None
    probes: list = field(default_factory=list)


def check_scan_separation(species: AtomSpecies, geometry: ScanGeometry,
                          min_ell_over_core: float = 4.0,
                          min_lambda_over_ell: float = 4.0) -> None:
    """Hard gate on the scale ordering core << ell << lambda_min."""
    sigma = species.core_diameter
    if sigma > 0.0 and geometry.ell < min_ell_over_core * sigma:
        raise ScaleSeparationError(
            "scale separation violated: require ell >= "
            f"{min_ell_over_core:g} * core_diameter (core << ell), got "
            f"ell = {geometry.ell:g} m, core_diameter = {sigma:g} m"
        )
    if geometry.lambda_min < min_lambda_over_ell * geometry.ell:
        raise ScaleSeparationError(
            "scale separation violated: require lambda_min >= "
            f"{min_lambda_over_ell:g} * ell (ell << lambda_min), got "
            f"lambda_min = {geometry.lambda_min:g} m, ell = {geometry.ell:g} m"
        )


def _replica_eigs(density: float, geometry: ScanGeometry, basis: ModeBasis,
                  species: AtomSpecies, profile: CutoffProfile,
                  constants: PhysicalConstants, replicas: int, seed_block: tuple,
                  mc_sweeps: int, include_contact: bool) -> np.ndarray:
    eigs = np.empty(replicas)
    for j in range(replicas):
        cfg = sample_configuration(density, geometry.box_length,
                                   species.core_diameter,
                                   seed=seed_block + (j,), mc_sweeps=mc_sweeps)
        mat = assemble_dynamical_matrix(cfg, basis, species, profile, constants,
                                        include_contact=include_contact)
        eigs[j] = minimal_eigenvalue(mat)
    return eigs


def stability_scan(densities, species: AtomSpecies, profile: CutoffProfile,
                   geometry: ScanGeometry, replicas: int = 10, master_seed: int = 0,
                   bisect_steps: int = 8, mc_sweeps: int = 0,
                   include_contact: bool = True,
                   min_ell_over_core: float = 4.0,
                   min_lambda_over_ell: float = 4.0,
                   constants: PhysicalConstants = CODATA) -> StabilityReport:
    """Minimal-eigenvalue curve over a density grid plus threshold bisection.

    Each (density, replica) task owns an independent RNG stream derived from
    (master_seed, phase, task indices), so results are reproducible and
    independent of evaluation order.  After the grid pass, the first sign
    change of the replica-averaged minimal eigenvalue is refined by
    ``bisect_steps`` density bisections with fresh replicas.
    """
    if profile.ell != geometry.ell:
        raise ConfigError("profile.ell and geometry.ell must agree")
    check_scan_separation(species, geometry, min_ell_over_core, min_lambda_over_ell)
    if replicas < 1:
        raise ValueError("need at least one replica")
    densities = np.sort(np.asarray(list(densities), dtype=float))
    if densities.size == 0 or np.any(densities <= 0.0):
        raise ValueError("density grid must be non-empty and positive")

    basis = build_mode_basis(geometry.box_length, geometry.lambda_min, constants)
    # the largest matrix of the scan is known before any sampling
    worst_dim = 3 * int(round(densities[-1] * geometry.box_length**3)) + basis.n_modes
    if worst_dim > _MAX_MATRIX_DIM:
        raise ConfigError(
            f"dynamical matrix dimension {worst_dim} exceeds the guard "
            f"{_MAX_MATRIX_DIM}; reduce the density grid or the box"
        )
    mean = np.empty(densities.size)
    std = np.empty(densities.size)
    frac = np.empty(densities.size)
    atoms = np.empty(densities.size, dtype=int)
    for i, density in enumerate(densities):
        eigs = _replica_eigs(density, geometry, basis, species, profile, constants,
                             replicas, (master_seed, 0, i), mc_sweeps, include_contact)
        mean[i] = eigs.mean()
        std[i] = eigs.std(ddof=1) if replicas > 1 else 0.0
        frac[i] = np.mean(eigs < 0.0)
        atoms[i] = int(round(density * geometry.box_length**3))

    report = StabilityReport(density_grid=densities, min_eig_mean=mean,
                             min_eig_std=std, unstable_fraction=frac,
                             atoms_per_density=atoms, replicas=replicas)

    crossing = None
    for i in range(densities.size - 1):
        if mean[i] > 0.0 >= mean[i + 1]:
            crossing = i
            break
    if crossing is None:
        return report

    lo, hi = densities[crossing], densities[crossing + 1]
    for step in range(bisect_steps):
        mid = 0.5 * (lo + hi)
        eigs = _replica_eigs(mid, geometry, basis, species, profile, constants,
                             replicas, (master_seed, 1, step), mc_sweeps,
                             include_contact)
        report.probes.append((mid, float(eigs.mean())))
        if eigs.mean() <= 0.0:
            hi = mid
        else:
            lo = mid
    report.threshold_low = lo
    report.threshold_high = hi
    return report
