"""Monte Carlo ground truth for the full-duplex relay outage analysis.

Samples i.i.d. Rayleigh MIMO channels, builds the zero-forcing beamformers
(the relay's receive or transmit vector is projected off the loopback
direction so the self-interference term is exactly nulled), computes the
per-hop instantaneous SNRs, and estimates outage with Wilson confidence
intervals.

Randomness uses the counter-based Philox generator with one jumped
substream per fixed-size block of trials, so the multiset of trials for a
given seed is independent of how blocks are scheduled; runs are exactly
reproducible.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .outage import AntennaConfig, LinkBudget, OutageQuery, ZFMode
from .wishart import WishartDims

log = logging.getLogger(__name__)

#: Trials per RNG substream; fixed so block boundaries never move.
BLOCK_SIZE = 1 << 16

#: Norm below which a projector's defining vector counts as degenerate.
DEGENERATE_TOL = 1e-150

#: Fraction of redrawn degenerate trials above which a run fails loudly.
MAX_REDRAW_FRACTION = 1e-5

#: Two-sided 95% normal quantile for the default Wilson interval.
Z_95 = 1.959963984540054


class DegenerateChannelError(RuntimeError):
    """A normalization denominator underflowed (or too many did)."""


@dataclass(frozen=True)
class ChannelSample:
    """One block-fading realization: entries are CN(0, 1)."""

    h_sr: np.ndarray  # (n_r1, n_s) source -> relay-rx
    h_rr: np.ndarray  # (n_r1, n_r2) relay loopback
    h_rd: np.ndarray  # (n_r2, n_d) relay-tx -> destination


@dataclass(frozen=True)
class BeamformerSet:
    """Unit-norm precoding/combining vectors satisfying the ZF null."""

    t_s: np.ndarray  # (n_s,) source precoder
    t_d: np.ndarray  # (n_d,) destination combiner
    w_r: np.ndarray  # (n_r1,) relay receive vector
    w_t: np.ndarray  # (n_r2,) relay transmit vector


@dataclass(frozen=True)
class TrialResult:
    snr_sr: float
    snr_rd: float
    zf_residual: float


@dataclass(frozen=True)
class OutageEstimate:
    p_hat: float
    ci_low: float
    ci_high: float
    trials: int


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Philox generator for one substream of the given seed."""
    bg = np.random.Philox(key=seed)
    if stream:
        bg = bg.jumped(stream)
    return np.random.Generator(bg)


def _randn_c(rng: np.random.Generator, shape) -> np.ndarray:
    """Circularly-symmetric complex Gaussian entries with unit variance."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


def _sample_arrays(rng: np.random.Generator, config: AntennaConfig, n: int):
    # Fixed draw order (SR, RR, RD) is part of the reproducibility contract.
    h_sr = _randn_c(rng, (n, config.n_r1, config.n_s))
    h_rr = _randn_c(rng, (n, config.n_r1, config.n_r2))
    h_rd = _randn_c(rng, (n, config.n_r2, config.n_d))
    return h_sr, h_rr, h_rd


def sample_channels(rng: np.random.Generator, config: AntennaConfig) -> ChannelSample:
    """Draw one channel realization."""
    h_sr, h_rr, h_rd = _sample_arrays(rng, config, 1)
    return ChannelSample(h_sr=h_sr[0], h_rr=h_rr[0], h_rd=h_rd[0])


def left_null_projector(v: np.ndarray, dim: int | None = None) -> np.ndarray:
    """Orthogonal projector onto the complement of span{v}: I - v v^H / |v|^2.

    Hermitian, idempotent, annihilates v, rank dim - 1.
    """
    v = np.asarray(v).reshape(-1)
    if dim is not None and v.size != dim:
        raise ValueError(f"vector has length {v.size}, expected {dim}")
    nrm2 = float(np.vdot(v, v).real)
    if nrm2 < DEGENERATE_TOL:
        raise DegenerateChannelError("projector direction has (near-)zero norm")
    return np.eye(v.size, dtype=complex) - np.outer(v, v.conj()) / nrm2


def _dominant_eigvec(m: np.ndarray) -> tuple[float, np.ndarray]:
    vals, vecs = np.linalg.eigh(m)
    return float(vals[-1]), vecs[:, -1]


def _unit(v: np.ndarray) -> np.ndarray:
    nrm = float(np.linalg.norm(v))
    if nrm < DEGENERATE_TOL:
        raise DegenerateChannelError("cannot normalize a (near-)zero vector")
    return v / nrm


def design_receive_zf(sample: ChannelSample) -> BeamformerSet:
    """Beamformers with the null on the relay's receive side.

    The relay transmit vector matches the strongest R->D direction; the
    receive vector is the strongest S->R direction projected off the
    loopback image of that transmission, so the loopback term vanishes.
    """
    _, t_d = _dominant_eigvec(sample.h_rd.conj().T @ sample.h_rd)
    h_rd_eff = sample.h_rd @ t_d
    w_t = _unit(h_rd_eff)
    proj = left_null_projector(sample.h_rr @ h_rd_eff)
    _, t_s = _dominant_eigvec(sample.h_sr.conj().T @ proj @ sample.h_sr)
    w_r = _unit(proj @ (sample.h_sr @ t_s))
    return BeamformerSet(t_s=t_s, t_d=t_d, w_r=w_r, w_t=w_t)


def design_transmit_zf(sample: ChannelSample) -> BeamformerSet:
    """Beamformers with the null on the relay's transmit side (mirror case)."""
    _, t_s = _dominant_eigvec(sample.h_sr.conj().T @ sample.h_sr)
    h_sr_eff = sample.h_sr @ t_s
    w_r = _unit(h_sr_eff)
    proj = left_null_projector(sample.h_rr.conj().T @ h_sr_eff)
    _, t_d = _dominant_eigvec(sample.h_rd.conj().T @ proj @ sample.h_rd)
    w_t = _unit(proj @ (sample.h_rd @ t_d))
    return BeamformerSet(t_s=t_s, t_d=t_d, w_r=w_r, w_t=w_t)


def zf_residual(sample: ChannelSample, beams: BeamformerSet) -> float:
    """|w_r^H H_rr w_t| — exactly zero up to roundoff by construction."""
    return abs(complex(beams.w_r.conj() @ sample.h_rr @ beams.w_t))


def instantaneous_snrs(
    sample: ChannelSample,
    beams: BeamformerSet,
    budget: LinkBudget,
    mode: ZFMode,
) -> TrialResult:
    """Per-hop instantaneous SNRs for one trial.

    Each hop's SNR is the link scale times the largest eigenvalue of that
    hop's (possibly projected) Gram matrix; the hop without the null uses
    the full channel.
    """
    if mode is ZFMode.RECEIVE:
        proj = left_null_projector(sample.h_rr @ beams.w_t)
        lam_sr = float(np.linalg.eigvalsh(sample.h_sr.conj().T @ proj @ sample.h_sr)[-1])
        lam_rd = float(np.linalg.eigvalsh(sample.h_rd.conj().T @ sample.h_rd)[-1])
    else:
        proj = left_null_projector(sample.h_rr.conj().T @ beams.w_r)
        lam_sr = float(np.linalg.eigvalsh(sample.h_sr.conj().T @ sample.h_sr)[-1])
        lam_rd = float(np.linalg.eigvalsh(sample.h_rd.conj().T @ proj @ sample.h_rd)[-1])
    return TrialResult(
        snr_sr=budget.scale_sr * lam_sr,
        snr_rd=budget.scale_rd * lam_rd,
        zf_residual=zf_residual(sample, beams),
    )


def received_powers(
    sample: ChannelSample, beams: BeamformerSet, p_s: float, p_r: float
) -> tuple[float, float]:
    """Received powers at relay and destination via the covariance expansion.

    Relay: p_s * w_r^H h h^H w_r + w_r^H w_r (noise term carries the actual
    beamformer norm, not an assumed one).  Destination: p_r * g^H W_t W_t^H g
    plus unit scalar noise.
    """
    h = sample.h_sr @ beams.t_s
    inner_r = complex(beams.w_r.conj() @ h)
    tr_r = p_s * (inner_r * inner_r.conjugate()).real + float(
        np.vdot(beams.w_r, beams.w_r).real
    )
    g = sample.h_rd @ beams.t_d
    tr_d = p_r * float((g.conj() @ np.outer(beams.w_t, beams.w_t.conj()) @ g).real) + 1.0
    return tr_r, tr_d


def power_identity_check(
    sample: ChannelSample, beams: BeamformerSet, budget: LinkBudget
) -> float:
    """Received-power identity residual at both relay and destination.

    Computes each received power once through the covariance expansion and
    once through the compact p * |inner product|^2 + 1 form; returns the
    larger absolute discrepancy.  Non-unit beamformers break the relay-side
    identity, which is what this check is for.
    """
    p_s = budget.effective_p_s
    p_r = budget.effective_p_r
    cov_r, cov_d = received_powers(sample, beams, p_s, p_r)
    h = sample.h_sr @ beams.t_s
    g = sample.h_rd @ beams.t_d
    compact_r = p_s * abs(complex(beams.w_r.conj() @ h)) ** 2 + 1.0
    compact_d = p_r * abs(complex(g.conj() @ beams.w_t)) ** 2 + 1.0
    return max(abs(cov_r - compact_r), abs(cov_d - compact_d))


# -- batched eigenvalue sampling ---------------------------------------------


def _gram(h: np.ndarray) -> np.ndarray:
    """Batched h^H h for h of shape (n, rows, cols)."""
    return np.einsum("nij,nik->njk", h.conj(), h)


def _max_eig(m: np.ndarray) -> np.ndarray:
    lam = np.linalg.eigvalsh(m)[..., -1]
    return np.maximum(lam, 0.0)


def _gains_from_channels(h_sr, h_rr, h_rd, mode: ZFMode):
    """Unit-scale per-hop gains (largest eigenvalues) for a trial batch.

    Returns (lam_sr, lam_rd, bad) where ``bad`` flags trials whose projector
    direction underflowed and whose gains are therefore invalid.
    """
    if mode is ZFMode.RECEIVE:
        vals, vecs = np.linalg.eigh(_gram(h_rd))
        lam_rd = np.maximum(vals[:, -1], 0.0)
        t_d = vecs[:, :, -1]
        h_eff = np.einsum("nij,nj->ni", h_rd, t_d)
        w = np.einsum("nij,nj->ni", h_rr, h_eff)
        nrm = np.linalg.norm(w, axis=1)
        bad = nrm < DEGENERATE_TOL
        what = w / np.where(bad, 1.0, nrm)[:, None]
        u = np.einsum("nij,ni->nj", h_sr.conj(), what)
        m = _gram(h_sr) - u[:, :, None] * u.conj()[:, None, :]
        lam_sr = _max_eig(m)
    else:
        vals, vecs = np.linalg.eigh(_gram(h_sr))
        lam_sr = np.maximum(vals[:, -1], 0.0)
        t_s = vecs[:, :, -1]
        h_eff = np.einsum("nij,nj->ni", h_sr, t_s)
        v = np.einsum("nij,ni->nj", h_rr.conj(), h_eff)
        nrm = np.linalg.norm(v, axis=1)
        bad = nrm < DEGENERATE_TOL
        vhat = v / np.where(bad, 1.0, nrm)[:, None]
        u = np.einsum("nij,ni->nj", h_rd.conj(), vhat)
        m = _gram(h_rd) - u[:, :, None] * u.conj()[:, None, :]
        lam_rd = _max_eig(m)
    return lam_sr, lam_rd, bad


def _block_gains(rng: np.random.Generator, config: AntennaConfig, n: int):
    h_sr, h_rr, h_rd = _sample_arrays(rng, config, n)
    lam_sr, lam_rd, bad = _gains_from_channels(h_sr, h_rr, h_rd, config.mode)
    redraws = 0
    attempts = 0
    while bad.any():
        idx = np.flatnonzero(bad)
        redraws += idx.size
        attempts += 1
        if attempts > 50:
            raise DegenerateChannelError("persistent degenerate trials; giving up")
        hs, hr, hd = _sample_arrays(rng, config, idx.size)
        ls, lr, still_bad = _gains_from_channels(hs, hr, hd, config.mode)
        lam_sr[idx] = ls
        lam_rd[idx] = lr
        bad = np.zeros_like(bad)
        bad[idx[still_bad]] = True
    return lam_sr, lam_rd, redraws


def link_gain_samples(config: AntennaConfig, trials: int, seed: int):
    """Unit-scale (SR, RD) gain samples for ``trials`` independent fades.

    Deterministic in (config, trials, seed).  Multiply by the link scales
    from a LinkBudget to obtain instantaneous SNR samples.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    parts_sr, parts_rd = [], []
    redraws = 0
    for block, start in enumerate(range(0, trials, BLOCK_SIZE)):
        n = min(BLOCK_SIZE, trials - start)
        ls, lr, rd = _block_gains(make_rng(seed, block), config, n)
        parts_sr.append(ls)
        parts_rd.append(lr)
        redraws += rd
    if redraws:
        log.warning("redrew %d degenerate trial(s) of %d", redraws, trials)
        if redraws > trials * MAX_REDRAW_FRACTION:
            raise DegenerateChannelError(
                f"{redraws} degenerate trials out of {trials} exceeds tolerance"
            )
    return np.concatenate(parts_sr), np.concatenate(parts_rd)


def wilson_interval(successes: int, trials: int, z: float = Z_95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 0 <= successes <= trials:
        raise ValueError("successes outside [0, trials]")
    p = successes / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1.0 - p) / trials + z * z / (4.0 * trials * trials)) / denom
    # degenerate counts pin the corresponding endpoint exactly
    lo = 0.0 if successes == 0 else max(0.0, center - half)
    hi = 1.0 if successes == trials else min(1.0, center + half)
    return lo, hi


def estimate_outage(
    config: AntennaConfig,
    budget: LinkBudget,
    query: OutageQuery,
    trials: int,
    seed: int,
) -> OutageEstimate:
    """Empirical end-to-end outage: a trial fails iff either hop is below
    threshold, which is the same event as min(snr_sr, snr_rd) < gamma_t."""
    gamma_t = query.snr_threshold()
    lam_sr, lam_rd = link_gain_samples(config, trials, seed)
    snr_min = np.minimum(budget.scale_sr * lam_sr, budget.scale_rd * lam_rd)
    failures = int(np.count_nonzero(snr_min < gamma_t))
    lo, hi = wilson_interval(failures, trials)
    return OutageEstimate(p_hat=failures / trials, ci_low=lo, ci_high=hi, trials=trials)


def sample_wishart_max_eig(
    rng: np.random.Generator, dims: WishartDims, trials: int
) -> np.ndarray:
    """Largest eigenvalues of ``trials`` direct a x b complex Wishart draws."""
    h = _randn_c(rng, (trials, dims.b, dims.a))
    return _max_eig(_gram(h))


def projected_max_eig_samples(
    rng: np.random.Generator, rows: int, cols: int, trials: int, aux: int = 2
) -> np.ndarray:
    """Largest eigenvalue of a rows x cols channel Gram projected off an
    independent random direction (the image of a second Gaussian channel).

    Distributionally this should match a direct (rows-1) x cols Wishart
    largest eigenvalue; the simulator's ZF constructions rely on exactly
    this reduction.
    """
    h = _randn_c(rng, (trials, rows, cols))
    mix = _randn_c(rng, (trials, rows, aux))
    x = _randn_c(rng, (trials, aux))
    w = np.einsum("nij,nj->ni", mix, x)
    nrm = np.linalg.norm(w, axis=1)
    what = w / np.where(nrm < DEGENERATE_TOL, 1.0, nrm)[:, None]
    u = np.einsum("nij,ni->nj", h.conj(), what)
    m = _gram(h) - u[:, :, None] * u.conj()[:, None, :]
    return _max_eig(m)
