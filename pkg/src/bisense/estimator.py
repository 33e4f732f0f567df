"""Joint AoA/Doppler estimation with clutter discard and AoA refinement.

The estimator works on the space-time sample covariance of the K subcarrier
snapshots. Model order comes from the MDL criterion, angles from a rooting
stage (either 1D root-MUSIC on the spatial-only covariance, or the exact
rank-reduction determinant over the joint noise subspace), Dopplers from
rooting the noise-subspace null spectrum along slow time at each estimated
angle. Static returns are discarded by a velocity gate; the surviving pair
with the largest speed is the target, whose angle is then refined after
projecting the covariance away from the estimated target signature.

All angles at this layer are broadside-referenced steering angles (the
asin of a unit-circle root argument over pi); the harness converts to the
baseline convention used by the geometry.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from bisense import numerics
from bisense.config import ScenarioConfig
from bisense.errors import ContractViolation, EstimationFailure
from bisense.scene import space_time_vector, steering_vector

# A root this far from the unit circle is treated as spurious.
MAX_ROOT_GAP = 0.5

# An estimated pair whose space-time signature carries less than this
# fraction of its energy in the signal subspace is an artifact of the
# rooting stage, not a source (true pairs sit near 1, noise roots near
# l_hat / dim).
MIN_SUBSPACE_ALIGNMENT = 0.3

# Half-width of the local search around the initial angle in the
# projection refinement step.
REFINE_WINDOW_DEG = 1.0

_INSIDE_TOL = 1e-9


@dataclass(frozen=True)
class CovarianceDecomposition:
    """Sample covariance with its eigenpairs and detected model order."""

    r: np.ndarray
    eigen: numerics.EigenDecomposition
    l_hat: int
    k_snapshots: int

    @property
    def u_noise(self) -> np.ndarray:
        return self.eigen.eigenvectors[:, self.l_hat :]

    @property
    def u_signal(self) -> np.ndarray:
        return self.eigen.eigenvectors[:, : self.l_hat]


@dataclass
class EstimateSet:
    """Paired (steering angle, bistatic velocity) estimates."""

    pairs: list[tuple[float, float]] = field(default_factory=list)
    target_index: Optional[int] = None
    theta_refined_deg: Optional[float] = None

    @property
    def target_pair(self) -> Optional[tuple[float, float]]:
        return None if self.target_index is None else self.pairs[self.target_index]


def sample_covariance(snapshots: np.ndarray) -> np.ndarray:
    """R = (1/K) sum_k y_k y_k^H, Hermitianized."""
    y = np.asarray(snapshots)
    if y.ndim != 2 or y.shape[0] < 1:
        raise ContractViolation("expected a (K, dim) snapshot matrix")
    r = y.T @ y.conj() / y.shape[0]
    return (r + r.conj().T) / 2.0


def mdl_order(eigenvalues: np.ndarray, n_snapshots: int) -> int:
    """Minimum-description-length source count from a descending spectrum."""
    lam = np.asarray(eigenvalues, dtype=float)
    if np.any(np.diff(lam) > 1e-12 * max(1.0, abs(lam[0]))):
        raise ContractViolation("eigenvalues must be sorted descending")
    if n_snapshots < 2:
        raise ContractViolation("MDL needs at least two snapshots")
    lam = np.clip(lam, 0.0, None)
    p = lam.size
    n = n_snapshots
    best_k, best_score = 0, np.inf
    for k in range(p):
        tail = lam[k:]
        am = tail.mean()
        if am <= 0.0:
            ratio = 1.0  # all-zero tail: perfectly flat
        else:
            gm = np.exp(np.mean(np.log(np.clip(tail, 1e-300, None))))
            ratio = gm / am
        score = -n * (p - k) * np.log(max(ratio, 1e-300)) + 0.5 * k * (2 * p - k) * np.log(n)
        if score < best_score:
            best_k, best_score = k, score
    return best_k


def decompose(
    snapshots: np.ndarray,
    order: Optional[int] = None,
) -> CovarianceDecomposition:
    """Covariance, EVD, and model order (MDL unless an order is forced)."""
    r = sample_covariance(snapshots)
    return decompose_covariance(r, k_snapshots=np.asarray(snapshots).shape[0], order=order)


def decompose_covariance(
    r: np.ndarray,
    k_snapshots: int,
    order: Optional[int] = None,
) -> CovarianceDecomposition:
    eigen = numerics.hermitian_evd(r)
    l_hat = mdl_order(eigen.eigenvalues, k_snapshots) if order is None else order
    l_hat = min(l_hat, r.shape[0] - 1)
    return CovarianceDecomposition(r=r, eigen=eigen, l_hat=l_hat, k_snapshots=k_snapshots)


# ---------------------------------------------------------------------------
# 2D-MUSIC grid oracle
# ---------------------------------------------------------------------------


def music2d_spectrum(
    u_noise: np.ndarray,
    theta_grid_deg: np.ndarray,
    fd_grid_hz: np.ndarray,
    cfg: ScenarioConfig,
) -> np.ndarray:
    """P(f_D, theta) = 1 / ||U_noise^H Psi||^2 on a (Doppler x angle) grid."""
    theta_grid_deg = np.atleast_1d(np.asarray(theta_grid_deg, dtype=float))
    fd_grid_hz = np.atleast_1d(np.asarray(fd_grid_hz, dtype=float))
    a = np.exp(
        1j * np.pi * np.arange(cfg.n_rx)[:, None] * np.sin(np.radians(theta_grid_deg))[None, :]
    )
    d = np.exp(
        1j
        * 2.0
        * np.pi
        * cfg.symbol_duration_s
        * np.arange(cfg.m_symbols)[:, None]
        * fd_grid_hz[None, :]
    )
    un = u_noise.conj().T.reshape(u_noise.shape[1], cfg.m_symbols, cfg.n_rx)
    spatial = np.einsum("nmr,rt->nmt", un, a)
    proj = np.einsum("mf,nmt->nft", d, spatial)
    power = np.sum(np.abs(proj) ** 2, axis=0)
    return 1.0 / np.maximum(power, 1e-300)


def _local_maxima(grid: np.ndarray) -> list[tuple[int, int]]:
    """Indices of strict-or-flat local maxima over the 4-neighborhood."""
    padded = np.pad(grid, 1, mode="constant", constant_values=-np.inf)
    core = padded[1:-1, 1:-1]
    mask = (
        (core >= padded[:-2, 1:-1])
        & (core >= padded[2:, 1:-1])
        & (core >= padded[1:-1, :-2])
        & (core >= padded[1:-1, 2:])
    )
    return [tuple(idx) for idx in np.argwhere(mask)]


def music2d_estimate(
    u_noise: np.ndarray,
    n_sources: int,
    cfg: ScenarioConfig,
    theta_span_deg: tuple[float, float] = (-89.0, 89.0),
    fd_span_hz: Optional[tuple[float, float]] = None,
    theta_resolution_deg: float = 1e-3,
    fd_resolution_hz: float = 0.5,
) -> list[tuple[float, float]]:
    """Coarse-then-fine grid search of the 2D-MUSIC spectrum.

    Returns the n_sources largest local maxima as (steering angle deg,
    Doppler Hz) pairs. Serves as the independent oracle for the rooting
    path; deliberately avoids any polynomial machinery.
    """
    if fd_span_hz is None:
        half = 0.5 / cfg.symbol_duration_s
        fd_span_hz = (-0.98 * half, 0.98 * half)

    theta_grid = np.linspace(theta_span_deg[0], theta_span_deg[1], 361)
    fd_grid = np.linspace(fd_span_hz[0], fd_span_hz[1], 481)
    spec = music2d_spectrum(u_noise, theta_grid, fd_grid, cfg)
    peaks = _local_maxima(spec)
    peaks.sort(key=lambda ij: spec[ij], reverse=True)
    results = []
    for fi, ti in peaks[:n_sources]:
        theta_lo, theta_hi = theta_grid[max(ti - 1, 0)], theta_grid[min(ti + 1, theta_grid.size - 1)]
        fd_lo, fd_hi = fd_grid[max(fi - 1, 0)], fd_grid[min(fi + 1, fd_grid.size - 1)]
        while (theta_hi - theta_lo) > theta_resolution_deg or (fd_hi - fd_lo) > fd_resolution_hz:
            tg = np.linspace(theta_lo, theta_hi, 33)
            fg = np.linspace(fd_lo, fd_hi, 33)
            sub = music2d_spectrum(u_noise, tg, fg, cfg)
            fj, tj = np.unravel_index(np.argmax(sub), sub.shape)
            t_step, f_step = tg[1] - tg[0], fg[1] - fg[0]
            theta_lo, theta_hi = tg[tj] - t_step, tg[tj] + t_step
            fd_lo, fd_hi = fg[fj] - f_step, fg[fj] + f_step
        results.append(((theta_lo + theta_hi) / 2.0, (fd_lo + fd_hi) / 2.0))
    return results


# ---------------------------------------------------------------------------
# Root-MUSIC stages
# ---------------------------------------------------------------------------


def _superdiagonal_sums(mat: np.ndarray) -> np.ndarray:
    """Laurent coefficients of a(1/z)^T M a(z): sums over the q-p = l diagonals.

    Returns coefficients for l = -(n-1) .. n-1 in ascending order.
    """
    n = mat.shape[0]
    return np.array([np.trace(mat, offset=l) for l in range(-(n - 1), n)])


def _pick_unit_circle_roots(roots: np.ndarray, count: int):
    """The `count` distinct-phase roots inside and closest to the unit circle.

    Roots of the self-reciprocal null polynomials arrive in conjugate-
    reciprocal pairs sharing a phase; only one member of each pair is a
    source, so near-duplicate phases are collapsed before selection.
    """
    inside = roots[np.abs(roots) < 1.0 + _INSIDE_TOL]
    inside = inside[1.0 - np.abs(inside) <= MAX_ROOT_GAP]
    order = np.argsort(1.0 - np.abs(inside))
    picked = []
    for z in inside[order]:
        if any(abs(np.angle(z * np.conj(p) / abs(p))) < 1e-6 for p in picked):
            continue
        picked.append(z)
        if len(picked) == count:
            break
    picked = np.asarray(picked, dtype=complex)
    if picked.size < count:
        raise EstimationFailure(
            f"only {picked.size} admissible roots for {count} sources",
            partial=picked,
        )
    return picked


def _root_to_steering_deg(z: complex) -> float:
    return math.degrees(math.asin(np.clip(np.angle(z) / np.pi, -1.0, 1.0)))


def spatial_covariance(r_joint: np.ndarray, m_symbols: int, n_rx: int) -> np.ndarray:
    """Average of the symbol-diagonal N_R x N_R blocks of the joint covariance.

    Identical to the sample covariance of all K*M_s per-symbol array
    snapshots.
    """
    blocks = r_joint.reshape(m_symbols, n_rx, m_symbols, n_rx)
    return np.einsum("iaib->ab", blocks) / m_symbols


def _rootmusic_1d(null_matrix: np.ndarray, count: int) -> list[float]:
    """Root the null spectrum a(z)^H C a(z) and map roots to steering degrees."""
    coeffs = _superdiagonal_sums(null_matrix)
    roots = numerics.polynomial_roots(coeffs)
    picked = _pick_unit_circle_roots(roots, count)
    return [_root_to_steering_deg(z) for z in picked]


def _lambda_blocks(lambda_mat: np.ndarray, m_symbols: int, n_rx: int) -> np.ndarray:
    return lambda_mat.reshape(m_symbols, n_rx, m_symbols, n_rx)


def _rare_aoa(lambda_mat: np.ndarray, count: int, cfg: ScenarioConfig) -> list[float]:
    """Rank-reduction AoA stage: roots of det Q(z).

    [Q(z)]_{ij} = sum_{p,q} z^{q-p} [Lambda_ij]_{pq} is singular exactly at
    the spatial root of every source. The determinant polynomial is
    recovered by evaluation at roots of unity followed by an FFT.
    """
    m, n_rx = cfg.m_symbols, cfg.n_rx
    blocks = _lambda_blocks(lambda_mat, m, n_rx)
    # s_l[i, j] = l-th superdiagonal sum of Lambda_ij, l = -(n_rx-1)..n_rx-1
    s = np.stack(
        [np.trace(blocks, offset=l, axis1=1, axis2=3) for l in range(-(n_rx - 1), n_rx)]
    )
    degree = 2 * m * (n_rx - 1)
    n_eval = 1 << int(np.ceil(np.log2(degree + 1)))
    z = np.exp(2j * np.pi * np.arange(n_eval) / n_eval)
    powers = z[None, :] ** np.arange(-(n_rx - 1), n_rx)[:, None]
    q = np.einsum("lij,lt->tij", s, powers)
    det = np.linalg.det(q) * z ** (m * (n_rx - 1))
    coeffs = np.fft.fft(det) / n_eval  # ascending powers 0..n_eval-1
    roots = numerics.polynomial_roots(coeffs[: degree + 1])
    picked = _pick_unit_circle_roots(roots, count)
    return [_root_to_steering_deg(zr) for zr in picked]


def rootmusic_aoa(
    decomp: CovarianceDecomposition,
    cfg: ScenarioConfig,
    count: Optional[int] = None,
) -> list[float]:
    """Steering-angle estimates for the detected sources.

    Strategy "spatial" roots the classic 1D polynomial of the spatial-only
    covariance; "rank_reduction" roots the determinant of the sandwiched
    joint noise subspace. Both must agree with the 2D-MUSIC oracle.
    """
    l_hat = decomp.l_hat if count is None else count
    if l_hat < 1:
        raise EstimationFailure("no sources detected")
    if cfg.aoa_strategy == "rank_reduction":
        lam = decomp.u_noise @ decomp.u_noise.conj().T
        return _rare_aoa(lam, l_hat, cfg)
    r_sp = spatial_covariance(decomp.r, cfg.m_symbols, cfg.n_rx)
    spatial_order = min(l_hat, cfg.n_rx - 1)
    eig = numerics.hermitian_evd((r_sp + r_sp.conj().T) / 2.0)
    u_noise = eig.eigenvectors[:, spatial_order:]
    return _rootmusic_1d(u_noise @ u_noise.conj().T, spatial_order)


def rootmusic_doppler(
    lambda_mat: np.ndarray,
    theta_steering_deg: float,
    cfg: ScenarioConfig,
) -> float:
    """Bistatic velocity at a fixed steering angle from the joint noise subspace.

    Sandwiches each symbol-block of Lambda with the array response at the
    given angle, roots the resulting slow-time null polynomial, and maps
    the admissible root closest to the unit circle to a velocity.
    """
    a = steering_vector(theta_steering_deg, cfg.n_rx)
    blocks = _lambda_blocks(lambda_mat, cfg.m_symbols, cfg.n_rx)
    f = np.einsum("p,ipjq,q->ij", a.conj(), blocks, a)
    coeffs = _superdiagonal_sums(f)
    roots = numerics.polynomial_roots(coeffs)
    z = _pick_unit_circle_roots(roots, 1)[0]
    f_d = np.angle(z) / (2.0 * np.pi * cfg.symbol_duration_s)
    return f_d * cfg.wavelength_m


def select_target(estimates: EstimateSet, v_min_mps: float) -> EstimateSet:
    """Discard near-static pairs and keep the fastest survivor as the target.

    Ties on |v| break toward the smaller pair index.
    """
    best: Optional[int] = None
    for idx, (_, v) in enumerate(estimates.pairs):
        if abs(v) < v_min_mps:
            continue
        if best is None or abs(v) > abs(estimates.pairs[best][1]):
            best = idx
    estimates.target_index = best
    return estimates


def signature_projector(columns: np.ndarray) -> np.ndarray:
    """Orthogonal-complement projector I - C (C^H C)^{-1} C^H."""
    c = np.atleast_2d(columns)
    if c.shape[0] < c.shape[1]:
        c = c.T
    gram_inv = np.linalg.pinv(c.conj().T @ c)
    return np.eye(c.shape[0]) - c @ gram_inv @ c.conj().T


def project_out_target(r: np.ndarray, psi_t: np.ndarray) -> np.ndarray:
    """Clutter-plus-noise covariance P_t R P_t (Hermitian by construction)."""
    p_t = signature_projector(psi_t[:, None])
    r_tilde = p_t @ r @ p_t
    return (r_tilde + r_tilde.conj().T) / 2.0


def refine_aoa(
    decomp: CovarianceDecomposition,
    theta_target_deg: float,
    v_target_mps: float,
    cfg: ScenarioConfig,
) -> float:
    """Refined target steering angle after suppressing the clutter response.

    Two-step mode takes the dominant eigenvectors of the target-projected
    covariance as the interference signatures, projects the original
    covariance onto their orthogonal complement, and locally maximizes the
    projection-normalized beam power Psi^H P R P Psi / Psi^H P Psi around
    the initial angle (the normalization undoes the steering distortion the
    projector introduces). Literal mode reruns the angle rooting stage
    directly on the target-projected covariance and keeps the root nearest
    the initial estimate.
    """
    if decomp.l_hat <= 1:
        return theta_target_deg
    psi_t = space_time_vector(v_target_mps / cfg.wavelength_m, theta_target_deg, cfg)
    r_tilde = project_out_target(decomp.r, psi_t)
    try:
        if cfg.refine_mode == "literal":
            d_lit = decompose_covariance(r_tilde, decomp.k_snapshots, order=decomp.l_hat)
            angles = rootmusic_aoa(d_lit, cfg, count=decomp.l_hat)
            return min(angles, key=lambda t: abs(t - theta_target_deg))
        d_clutter = decompose_covariance(r_tilde, decomp.k_snapshots, order=decomp.l_hat - 1)
        p_c = signature_projector(d_clutter.u_signal)
    except EstimationFailure:
        return theta_target_deg
    r_proj = p_c @ decomp.r @ p_c
    f_d = v_target_mps / cfg.wavelength_m

    def beam_power(theta_deg: float) -> float:
        psi = p_c @ space_time_vector(f_d, theta_deg, cfg)
        norm = (psi.conj() @ psi).real
        if norm < 1e-12:
            return -np.inf
        return float((psi.conj() @ r_proj @ psi).real / norm)

    lo, hi = theta_target_deg - REFINE_WINDOW_DEG, theta_target_deg + REFINE_WINDOW_DEG
    for _ in range(8):
        grid = np.linspace(lo, hi, 21)
        best = int(np.argmax([beam_power(t) for t in grid]))
        step = grid[1] - grid[0]
        lo, hi = grid[best] - step, grid[best] + step
    return (lo + hi) / 2.0


def estimate(
    snapshots: np.ndarray,
    cfg: ScenarioConfig,
    order: Optional[int] = None,
    min_order: int = 1,
) -> tuple[EstimateSet, CovarianceDecomposition]:
    """Full subspace pipeline: covariance, order, angles, Dopplers, selection,
    refinement. Angle/Doppler failures on individual roots are skipped; an
    empty pair list or no surviving pair leaves target_index unset.

    `min_order` floors the detected order: when the scene is known to hold a
    target plus clutter, a floor of 2 keeps a nearly coherent pair (target
    close to the clutter in angle with little Doppler spread across the
    frame) from collapsing into a single merged source.
    """
    decomp = decompose(snapshots, order=order)
    if order is None and decomp.l_hat < min_order:
        # Only raise the order when the extra eigenvalue clears the
        # Marchenko-Pastur bulk edge of the trailing (noise) eigenvalues;
        # otherwise the forced root would be drawn from noise.
        eigs = decomp.eigen.eigenvalues
        dim = eigs.size
        if min_order < dim:
            sigma2 = float(np.mean(eigs[min_order:]))
            edge = sigma2 * (1.0 + math.sqrt(dim / decomp.k_snapshots)) ** 2
            if eigs[min_order - 1] > edge:
                decomp = decompose_covariance(decomp.r, decomp.k_snapshots, order=min_order)
    est = EstimateSet()
    if decomp.l_hat < 1:
        return est, decomp
    lam = decomp.u_noise @ decomp.u_noise.conj().T
    try:
        angles = rootmusic_aoa(decomp, cfg)
    except EstimationFailure as exc:
        partial = exc.partial if exc.partial is not None else []
        angles = [_root_to_steering_deg(z) for z in np.atleast_1d(partial)]
    sector_lo, sector_hi = cfg.steering_sector_deg
    for theta in angles:
        if not sector_lo <= theta <= sector_hi:
            continue
        try:
            v = rootmusic_doppler(lam, theta, cfg)
        except EstimationFailure:
            continue
        psi = space_time_vector(v / cfg.wavelength_m, theta, cfg)
        alignment = np.linalg.norm(decomp.u_signal.conj().T @ psi) ** 2 / psi.size
        if alignment < MIN_SUBSPACE_ALIGNMENT:
            continue
        est.pairs.append((theta, v))
    select_target(est, cfg.v_min_mps)
    if est.target_index is not None:
        theta_t, v_t = est.pairs[est.target_index]
        est.theta_refined_deg = refine_aoa(decomp, theta_t, v_t, cfg)
    return est, decomp
