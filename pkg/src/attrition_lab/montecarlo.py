"""Simulation of play under a solved profile, plus empirical estimators.

Sampling is exact inverse-CDF: each strategic player's exit time inverts the
closed-form survivor mass (the concession/challenge split follows from the
cause-specific hazards at the exit time), justified challenge times are
exponential, and court outcomes are drawn from the stated lottery.  No
rejection sampling or time discretization is involved, so hazard estimates
carry only Monte Carlo noise.

Replications are partitioned into fixed-size blocks with independent
deterministic substreams; merging sums sufficient statistics, so reports
are bit-identical for a given (profile, config) regardless of worker count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _payoffs

__all__ = [
    "SimConfig",
    "SimReport",
    "simulate",
    "AuditReport",
    "best_response_audit",
    "EmptyInput",
    "empirical_hazard",
]

_BLOCK = 1 << 14


class EmptyInput(ValueError):
    """No observations supplied."""


@dataclass(frozen=True)
class SimConfig:
    """Simulation settings; ``grid`` defaults to 12 interior audit times."""

    replications: int
    seed: int
    time_cap: float | None = None
    grid: tuple | None = None
    bin_width: float | None = None

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.time_cap is not None and not self.time_cap > 0.0:
            raise ValueError("time_cap must be > 0")
        if self.bin_width is not None and not self.bin_width > 0.0:
            raise ValueError("bin_width must be > 0")


# ---------------------------------------------------------------------------
# Uniform view over the three profile types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _PlayerSim:
    z: float
    gamma: float
    r: float
    a: float
    c: float
    k: float
    w: float
    Q0: float
    alive: object      # vectorized survivor mass of the strategic type
    kappa: object
    chi: object
    q: object          # scalar yield probability when challenged
    can_challenge: bool


def _sim_view(profile):
    """Adapt any solved profile to the per-player sampling interface."""
    g = profile.game
    if hasattr(profile, "q2"):  # one-sided profile
        p1 = _PlayerSim(z=g.z1, gamma=g.gamma1, r=g.r1, a=g.a1, c=g.c1,
                        k=0.0, w=g.w1, Q0=profile.Q1,
                        alive=profile.alive1, kappa=profile.kappa1,
                        chi=profile.chi1, q=lambda t: 1.0,
                        can_challenge=g.gamma1 > 0.0)
        p2 = _PlayerSim(z=g.z2, gamma=0.0, r=g.r2, a=g.a2, c=1.0,
                        k=g.k2, w=0.0, Q0=profile.Q2,
                        alive=profile.alive2, kappa=profile.kappa2,
                        chi=lambda t: np.zeros_like(np.asarray(t, dtype=float)),
                        q=lambda t: float(profile.q2(float(t))),
                        can_challenge=False)
        return (p1, p2), profile.T
    # two-sided (finite or infinite)
    out = []
    for i, (z, gam, r, a, c, k, w) in enumerate((
            (g.z1, g.gamma1, g.r1, g.a1, g.c1, g.k1, g.w1),
            (g.z2, g.gamma2, g.r2, g.a2, g.c2, g.k2, g.w2))):
        pl = i + 1
        out.append(_PlayerSim(
            z=z, gamma=gam, r=r, a=a, c=c, k=k, w=w, Q0=profile.Q[i],
            alive=(lambda t, pl=pl: profile.alive(pl, t)),
            kappa=(lambda t, pl=pl: profile.kappa(pl, t)),
            chi=(lambda t, pl=pl: profile.chi(pl, t)),
            q=(lambda t, pl=pl: float(profile.q(pl, float(t)))),
            can_challenge=gam > 0.0))
    return tuple(out), profile.T


def _invert_alive(player: _PlayerSim, u: np.ndarray, horizon: float) -> np.ndarray:
    """Exit times solving alive(t) = u by vectorized bisection (decreasing).

    Entries with ``u < alive(horizon)`` exit after the horizon and come back
    as +inf (censoring for never-ending profiles).
    """
    lo = np.zeros_like(u)
    hi = np.full_like(u, horizon)
    tail = np.asarray(player.alive(np.full_like(u, horizon)), dtype=float)
    censored = u < tail
    for _ in range(64):
        mid = 0.5 * (lo + hi)
        am = np.asarray(player.alive(mid), dtype=float)
        go_right = am > u
        lo = np.where(go_right, mid, lo)
        hi = np.where(go_right, hi, mid)
    t = 0.5 * (lo + hi)
    return np.where(censored, np.inf, t)


_OUTCOMES = (
    "concession_1", "concession_2", "simultaneous_concession",
    "challenge_1_yielded", "challenge_1_court",
    "challenge_2_yielded", "challenge_2_court",
    "censored",
)


def _run_block(profile, players, horizon, cfg, seed_seq, n, grid, edges):
    rng = np.random.default_rng(np.random.Philox(seed_seq))
    p1, p2 = players
    D = p1.a + p2.a - 1.0

    just = [rng.random(n) < p.z for p in players]
    conc = [np.full(n, np.inf) for _ in range(2)]
    chal = [np.full(n, np.inf) for _ in range(2)]
    for i, p in enumerate(players):
        # justified challenge arrivals
        if p.gamma > 0.0:
            arr = rng.exponential(1.0 / p.gamma, size=n)
            chal[i] = np.where(just[i], arr, np.inf)
        # strategic exits: atom, then inverse-CDF on the survivor mass
        u = rng.random(n)
        strategic = ~just[i]
        alive0 = float(np.asarray(p.alive(np.zeros(1)))[0])
        exit_t = np.zeros(n)
        at_atom = u >= alive0
        interior = strategic & ~at_atom
        if interior.any():
            exit_t[interior] = _invert_alive(p, u[interior], horizon)
        cause_conc = np.ones(n, dtype=bool)
        if p.can_challenge and interior.any():
            tt = exit_t[interior]
            finite = np.isfinite(tt)
            kap = np.asarray(p.kappa(tt), dtype=float)
            ch = np.asarray(p.chi(tt), dtype=float)
            pr = np.where(finite & (kap + ch > 0.0), kap / np.maximum(kap + ch, 1e-300), 1.0)
            cause_conc[interior] = rng.random(interior.sum()) < pr
        conc_i = np.where(strategic & (at_atom | cause_conc), exit_t, np.inf)
        chal_strat = np.where(strategic & ~at_atom & ~cause_conc, exit_t, np.inf)
        conc[i] = np.where(strategic, conc_i, np.inf)
        chal[i] = np.where(strategic, chal_strat, chal[i])

    t_conc = np.minimum(conc[0], conc[1])
    t_chal = np.minimum(chal[0], chal[1])
    t_end = np.minimum(t_conc, t_chal)
    capped = ~np.isfinite(t_end) | (t_end > horizon)
    # Tie rule: a concession at the same instant as a challenge resolves the
    # game by the concession.
    by_conc = (t_conc <= t_chal) & ~capped
    conceder = np.where(conc[0] < conc[1], 1, np.where(conc[1] < conc[0], 2, 0))
    challenger = np.where(chal[0] <= chal[1], 1, 2)

    share = np.full((2, n), np.nan)  # realized shares, strategic players only
    outcome = np.full(n, len(_OUTCOMES) - 1, dtype=int)  # default censored

    idx_conc = np.where(by_conc)[0]
    for j in idx_conc:
        t = t_end[j]
        if conceder[j] == 0:  # simultaneous concession: equal split
            outcome[j] = 2
            s1 = (p1.a + 1.0 - p2.a) / 2.0
            share[0, j], share[1, j] = s1, 1.0 - s1
        else:
            i = conceder[j] - 1
            outcome[j] = i
            share[i, j] = 1.0 - players[1 - i].a
            share[1 - i, j] = players[1 - i].a

    idx_chal = np.where(~by_conc & ~capped)[0]
    for j in idx_chal:
        t = t_end[j]
        i = challenger[j] - 1
        ch_p, df_p = players[i], players[1 - i]
        df_is_just = bool(just[1 - i][j])
        yields = (not df_is_just) and (rng.random() < df_p.q(t))
        if yields:
            outcome[j] = 3 + 2 * i
            share[i, j] = ch_p.a - ch_p.c * D
            share[1 - i, j] = 1.0 - ch_p.a
        else:
            outcome[j] = 4 + 2 * i
            if just[i][j] and df_is_just:
                pass  # both committed; no strategic payoff to record
            elif just[i][j]:  # justified challenger beats a strategic defender
                share[1 - i, j] = 1.0 - ch_p.a - df_p.k * D
            elif df_is_just:  # strategic challenger loses to a justified one
                share[i, j] = 1.0 - df_p.a - ch_p.c * D
            else:
                win = rng.random() < ch_p.w
                if win:
                    share[i, j] = ch_p.a - ch_p.c * D
                    share[1 - i, j] = 1.0 - ch_p.a - df_p.k * D
                else:
                    share[i, j] = 1.0 - df_p.a - ch_p.c * D
                    share[1 - i, j] = df_p.a - df_p.k * D

    # Sufficient statistics -------------------------------------------------
    stats = {"n": n, "outcome": np.bincount(outcome, minlength=len(_OUTCOMES))}
    end_clip = np.where(capped, horizon, t_end)
    for i, p in enumerate(players):
        disc = np.exp(-p.r * end_clip) * np.where(np.isnan(share[i]), 0.0, share[i])
        payoff = np.where(capped, 0.0, disc)  # censored flows beyond the cap are dropped
        strategic = ~just[i]
        stats[f"pay{i+1}_n"] = int(strategic.sum())
        stats[f"pay{i+1}_sum"] = float(payoff[strategic].sum())
        stats[f"pay{i+1}_sumsq"] = float((payoff[strategic] ** 2).sum())
    alive_at = t_end[None, :] > grid[:, None]
    stats["grid_alive"] = alive_at.sum(axis=1)
    stats["grid_alive_j1"] = (alive_at & just[0][None, :]).sum(axis=1)
    stats["grid_alive_j2"] = (alive_at & just[1][None, :]).sum(axis=1)
    # binned events and exposure
    ev_t = t_end[~capped]
    ev_is_chal = (~by_conc)[~capped]
    stats["bin_events"] = np.histogram(ev_t, bins=edges)[0]
    stats["bin_challenges"] = np.histogram(ev_t[ev_is_chal], bins=edges)[0]
    conc_ev = [t_end[by_conc & (conceder == i + 1)] for i in range(2)]
    stats["bin_concessions_1"] = np.histogram(conc_ev[0], bins=edges)[0]
    stats["bin_concessions_2"] = np.histogram(conc_ev[1], bins=edges)[0]
    stats["bin_at_risk"] = (end_clip[None, :] >= edges[:-1, None]).sum(axis=1)
    overlap = np.clip(end_clip[None, :] - edges[:-1, None], 0.0,
                      (edges[1:] - edges[:-1])[:, None])
    stats["bin_person_time"] = overlap.sum(axis=1)
    return stats


@dataclass(frozen=True)
class SimReport:
    """Merged simulation statistics (deterministic for a given config)."""

    replications: int
    seed: int
    horizon: float
    censored: int
    outcome_probs: dict
    payoff_mean: tuple
    payoff_se: tuple
    payoff_n: tuple
    posterior_rows: tuple
    hazard_rows: tuple
    bin_width: float

    def to_dict(self) -> dict:
        return {
            "replications": self.replications,
            "seed": self.seed,
            "horizon": self.horizon,
            "censored": self.censored,
            "outcome_probs": dict(self.outcome_probs),
            "payoff_mean": list(self.payoff_mean),
            "payoff_se": list(self.payoff_se),
            "payoff_n": list(self.payoff_n),
            "posterior": [dict(r) for r in self.posterior_rows],
            "hazard": [dict(r) for r in self.hazard_rows],
            "bin_width": self.bin_width,
        }


def _worker_count() -> int:
    env = os.environ.get("ATTRITION_LAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return min(4, os.cpu_count() or 1)


def simulate(profile, cfg: SimConfig, game=None) -> SimReport:
    """Simulate play under ``profile``; deterministic given the config.

    Behavioral rules: justified players never concede, challenge at their
    Poisson arrivals, and always see challenges; strategic players draw
    concession/challenge exits from the profile's closed forms and yield to
    a challenge with the profile's response probability.  Simultaneous
    concessions split the pie; a simultaneous concession and challenge is
    resolved by the concession.  Never-ending games are censored at the
    horizon.
    """
    if game is not None and game != profile.game:
        raise ValueError("game does not match the profile")
    players, T = _sim_view(profile)
    horizon = cfg.time_cap if cfg.time_cap is not None else \
        (T * 1.25 + 1.0 if math.isfinite(T) else 50.0)
    if math.isfinite(T):
        horizon = max(horizon, T * (1.0 + 1e-9))
    if cfg.grid is not None:
        grid = np.asarray(cfg.grid, dtype=float)
    else:
        upper = min(T, horizon) if math.isfinite(T) else horizon
        grid = np.linspace(0.05 * upper, 0.95 * upper, 12)
    bw = cfg.bin_width if cfg.bin_width is not None else \
        (min(T, horizon) if math.isfinite(T) else horizon) / 25.0
    edges = np.arange(0.0, horizon + bw, bw)

    blocks = []
    start = 0
    idx = 0
    seeds = np.random.SeedSequence(cfg.seed)
    while start < cfg.replications:
        n = min(_BLOCK, cfg.replications - start)
        blocks.append((idx, n))
        start += n
        idx += 1
    spawned = seeds.spawn(len(blocks))

    def run(block):
        i, n = block
        return _run_block(profile, players, horizon, cfg, spawned[i], n, grid, edges)

    workers = _worker_count()
    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, blocks))
    else:
        results = [run(b) for b in blocks]

    merged = results[0]
    for r in results[1:]:
        merged = {k: merged[k] + r[k] for k in merged}

    n_tot = merged["n"]
    probs = {name: merged["outcome"][k] / n_tot for k, name in enumerate(_OUTCOMES)}
    means, ses, ns = [], [], []
    for i in (1, 2):
        cnt = merged[f"pay{i}_n"]
        mean = merged[f"pay{i}_sum"] / cnt if cnt else math.nan
        var = merged[f"pay{i}_sumsq"] / cnt - mean * mean if cnt else math.nan
        ses.append(math.sqrt(max(var, 0.0) / cnt) if cnt else math.nan)
        means.append(mean)
        ns.append(cnt)

    post_rows = []
    for k, t in enumerate(grid):
        alive = int(merged["grid_alive"][k])
        row = {"t": float(t), "alive": alive}
        for i in (1, 2):
            nj = int(merged[f"grid_alive_j{i}"][k])
            row[f"just{i}_frac"] = nj / alive if alive else math.nan
            row[f"just{i}_count"] = nj
        post_rows.append(row)

    hz_rows = []
    for k in range(len(edges) - 1):
        at_risk = int(merged["bin_at_risk"][k])
        events = int(merged["bin_events"][k])
        pt = float(merged["bin_person_time"][k])
        hz_rows.append({
            "bin_start": float(edges[k]), "bin_end": float(edges[k + 1]),
            "at_risk": at_risk, "events": events,
            "challenges": int(merged["bin_challenges"][k]),
            "concessions_1": int(merged["bin_concessions_1"][k]),
            "concessions_2": int(merged["bin_concessions_2"][k]),
            "person_time": pt,
            "hazard": events / (at_risk * bw) if at_risk else math.nan,
            "hazard_exposure": events / pt if pt > 0.0 else math.nan,
            "challenge_hazard_exposure": (int(merged["bin_challenges"][k]) / pt
                                          if pt > 0.0 else math.nan),
        })

    return SimReport(replications=n_tot, seed=cfg.seed, horizon=horizon,
                     censored=int(merged["outcome"][-1]),
                     outcome_probs=probs,
                     payoff_mean=tuple(means), payoff_se=tuple(ses),
                     payoff_n=tuple(ns),
                     posterior_rows=tuple(post_rows),
                     hazard_rows=tuple(hz_rows), bin_width=bw)


# ---------------------------------------------------------------------------
# Best-response audit
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AuditReport:
    """Deviation advantages over the equilibrium payoffs on a time grid."""

    grid: tuple
    concede_advantage: tuple      # per player: max_t U_i(t) - u_i
    challenge_advantage: tuple    # per player: max_t V_i(t) - u_i (nan if n/a)
    support_gap: tuple            # per player: max |V_i - U_i| on own support
    response_advantage: tuple     # per player: max response-rule shortfall
    max_advantage: float


def _profile_payoffs(profile) -> tuple:
    if hasattr(profile, "u1"):
        return (profile.u1, profile.u2)
    return tuple(profile.u)


def best_response_audit(profile, grid, *, q_override=None) -> AuditReport:
    """Evaluate concede/challenge/response deviations against the profile.

    ``q_override`` replaces the DEFENDERS' yield rules (a map player -> q(t)
    callable), which lets tests verify that tampered responses are detected.
    """
    us = _profile_payoffs(profile)
    sides = {i: profile.side(i) for i in (1, 2)}
    if q_override:
        for i, fn in q_override.items():
            sides[i] = sides[i].with_response(fn)
    grid = tuple(float(t) for t in grid)
    conc_adv, chal_adv, gaps, resp_adv = [], [], [], []
    for i in (1, 2):
        me, opp = sides[i], sides[3 - i]
        uvals = [_payoffs.concede_value(me, opp, t) for t in grid]
        conc_adv.append(max(uvals) - us[i - 1])
        if me.c is not None and me.gamma > 0.0:
            vvals = [_payoffs.challenge_value(me, opp, t) for t in grid]
            chal_adv.append(max(vvals) - us[i - 1])
            on_support = [t for t in grid if t < me.chal_stop]
            gaps.append(max((abs(v - u) for v, u, t in zip(vvals, uvals, grid)
                             if t < me.chal_stop), default=0.0))
        else:
            chal_adv.append(math.nan)
            gaps.append(0.0)
        # Response audit: the defender's rule against the challenger's
        # posterior nu_j(t) = mu_j gamma_j / (mu_j gamma_j + (1-mu_j) chi_j).
        j = 3 - i
        opp_side = sides[j]
        worst = 0.0
        if opp_side.gamma > 0.0:
            for t in grid:
                mu_j = float(opp_side.mu(t))
                chi_j = _chi_at(profile, j, t)
                nu_j = mu_j * opp_side.gamma / (mu_j * opp_side.gamma
                                                + (1.0 - mu_j) * chi_j)
                y, s = _payoffs.response_values(me, opp_side, t, nu_j)
                qv = float(me.q(t))
                worst = max(worst, max(y, s) - (qv * y + (1.0 - qv) * s))
        resp_adv.append(worst)
    max_adv = max(max(conc_adv), max(a for a in chal_adv if not math.isnan(a)),
                  max(resp_adv))
    return AuditReport(grid=grid, concede_advantage=tuple(conc_adv),
                       challenge_advantage=tuple(chal_adv),
                       support_gap=tuple(gaps),
                       response_advantage=tuple(resp_adv),
                       max_advantage=max_adv)


def _chi_at(profile, player: int, t: float) -> float:
    if hasattr(profile, "chi1"):
        return float(profile.chi1(t)) if player == 1 else 0.0
    return float(profile.chi(player, t))


# ---------------------------------------------------------------------------
# Empirical hazard estimation
# ---------------------------------------------------------------------------

def empirical_hazard(durations, censored=None, bin_width: float = 1.0):
    """Life-table hazard: events / (at-risk count x bin width) per bin.

    Censored observations leave the risk set at their time without counting
    as events; bins with an empty risk set report a missing (NaN) hazard.
    """
    durations = np.asarray(list(durations), dtype=float)
    if durations.size == 0:
        raise EmptyInput("no durations supplied")
    if np.any(durations < 0.0) or not np.all(np.isfinite(durations)):
        raise ValueError("durations must be finite and nonnegative")
    if bin_width <= 0.0:
        raise ValueError("bin_width must be > 0")
    if censored is None:
        censored = np.zeros_like(durations, dtype=bool)
    else:
        censored = np.asarray(list(censored), dtype=bool)
        if censored.shape != durations.shape:
            raise ValueError("censored flags must match durations")
    n_bins = int(math.floor(durations.max() / bin_width)) + 1
    rows = []
    for k in range(n_bins):
        lo, hi = k * bin_width, (k + 1) * bin_width
        at_risk = int((durations >= lo).sum())
        in_bin = (durations >= lo) & (durations < hi)
        events = int((in_bin & ~censored).sum())
        rows.append({
            "bin_start": lo, "bin_end": hi, "at_risk": at_risk,
            "events": events,
            "hazard": events / (at_risk * bin_width) if at_risk else math.nan,
        })
    return rows
