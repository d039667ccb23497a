"""Seeded discrete-event loop for the mining network.

Each step draws a block solve time, picks a winner proportional to
hashrate, credits the scheduled reward scaled by proof-of-mining
participation, retargets difficulty, and lets every agent re-decide
whether to keep mining.  A run is strictly sequential and bit-identical
for a given (config, seed).
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .agents import MinerAgent, PomCredit, PopulationSpec, generate_population
from .difficulty import (
    DifficultyMap,
    RetargetState,
    fit_difficulty_map,
    hash_to_difficulty,
    rate_constant_from_map,
    retarget,
)
from .errors import ConfigError, InternalError, ParameterError
from .reward_curve import RewardScheduleParams, find_peak, reward, schedule_to_dict

_MAX_STALL_QUANTA = 100_000


@dataclass(frozen=True)
class RetargetConfig:
    target_interval: float = 120.0
    smoothing: float = 0.2
    clamp: float = 1.25

    def __post_init__(self):
        # delegate range checks to RetargetState
        RetargetState(
            current_difficulty=1.0,
            ema_interval=self.target_interval,
            target_interval=self.target_interval,
            smoothing=self.smoothing,
            clamp=self.clamp,
        )


@dataclass(frozen=True)
class EconomicsConfig:
    margin_on: float = 1.1
    margin_off: float = 0.9
    dwell: int = 30

    def __post_init__(self):
        if not (self.margin_off <= 1.0 <= self.margin_on):
            raise ParameterError(
                f"need margin_off <= 1 <= margin_on, got {self.margin_off}, {self.margin_on}"
            )
        if self.dwell < 0:
            raise ParameterError(f"dwell must be nonnegative, got {self.dwell}")


@dataclass(frozen=True)
class PricePath:
    """Exogenous coin price: constant, one-time step, or explicit series."""

    constant: Optional[float] = None
    initial: Optional[float] = None
    factor: Optional[float] = None
    at_block: Optional[int] = None
    series: Optional[tuple[float, ...]] = None

    def __post_init__(self):
        kinds = sum(
            [self.constant is not None, self.initial is not None, self.series is not None]
        )
        if kinds != 1:
            raise ParameterError("price path must be exactly one of constant/step/series")
        if self.initial is not None and (self.factor is None or self.at_block is None):
            raise ParameterError("step price path needs initial, factor and at_block")
        for v in self.values_preview():
            if v <= 0.0:
                raise ParameterError("price path must be positive everywhere")

    def values_preview(self):
        if self.constant is not None:
            return [self.constant]
        if self.series is not None:
            return list(self.series)
        return [self.initial, self.initial * self.factor]

    def at(self, height: int) -> float:
        if self.constant is not None:
            return self.constant
        if self.series is not None:
            return self.series[min(height, len(self.series) - 1)]
        return self.initial * self.factor if height >= self.at_block else self.initial


@dataclass
class SimConfig:
    schedule: RewardScheduleParams
    horizon: int
    seed: int
    difficulty_map: DifficultyMap = field(default_factory=fit_difficulty_map)
    retarget: RetargetConfig = field(default_factory=RetargetConfig)
    population: PopulationSpec = field(default_factory=PopulationSpec)
    explicit_population: Optional[list[MinerAgent]] = None
    pom: PomCredit = field(default_factory=PomCredit)
    price: PricePath = field(default_factory=lambda: PricePath(constant=30.0))
    economics: EconomicsConfig = field(default_factory=EconomicsConfig)
    constant_reward: bool = False
    rate_constant: Optional[float] = None
    anchor_hashrate: float = 40.0
    large_threshold: float = 5.0

    def __post_init__(self):
        if self.horizon < 0:
            raise ConfigError("horizon: must be nonnegative")
        if not (self.large_threshold > 0.0):
            raise ConfigError("large_threshold: must be positive")
        if self.rate_constant is not None and not (self.rate_constant > 0.0):
            raise ConfigError("rate_constant: must be positive when given")

    def resolved_rate_constant(self) -> float:
        if self.rate_constant is not None:
            return self.rate_constant
        return rate_constant_from_map(
            self.difficulty_map, self.anchor_hashrate, self.retarget.target_interval
        )

    def to_dict(self) -> dict:
        d = {
            "schedule": schedule_to_dict(self.schedule),
            "constant_reward": self.constant_reward,
            "difficulty_map": {
                "slope": self.difficulty_map.slope,
                "intercept": self.difficulty_map.intercept,
                "floor": self.difficulty_map.floor,
            },
            "retarget": {
                "target_interval": self.retarget.target_interval,
                "smoothing": self.retarget.smoothing,
                "clamp": self.retarget.clamp,
            },
            "pom": {"window": self.pom.window, "required": self.pom.required},
            "economics": {
                "margin_on": self.economics.margin_on,
                "margin_off": self.economics.margin_off,
                "dwell": self.economics.dwell,
            },
            "horizon": self.horizon,
            "seed": self.seed,
            "rate_constant": self.rate_constant,
            "anchor_hashrate": self.anchor_hashrate,
            "large_threshold": self.large_threshold,
        }
        if self.explicit_population is not None:
            d["population"] = {
                "explicit": [
                    {
                        "id": m.id,
                        "hashrate": m.hashrate,
                        "unit_cost": m.unit_cost,
                        "class": m.miner_class,
                        "duty": list(m.duty) if m.duty else None,
                    }
                    for m in self.explicit_population
                ]
            }
        else:
            p = self.population
            d["population"] = {
                "n_small": p.n_small,
                "n_large": p.n_large,
                "small_hash": list(p.small_hash),
                "large_hash": list(p.large_hash),
                "small_cost": list(p.small_cost),
                "large_cost": list(p.large_cost),
            }
        if self.price.constant is not None:
            d["price"] = {"constant": self.price.constant}
        elif self.price.series is not None:
            d["price"] = {"series": list(self.price.series)}
        else:
            d["price"] = {
                "initial": self.price.initial,
                "factor": self.price.factor,
                "at_block": self.price.at_block,
            }
        return d

    def digest(self) -> str:
        # the digest identifies the experiment; the seed identifies the run
        d = self.to_dict()
        d.pop("seed")
        return config_digest(d)


def config_digest(config_dict: dict) -> str:
    """SHA-256 hex of the canonicalized config JSON."""
    canon = json.dumps(config_dict, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


@dataclass
class BlockRecord:
    height: int
    timestamp: float
    difficulty: float
    total_hash: float
    winner: str
    raw_reward: float
    pom_multiplier: float
    credited_reward: float
    active_miner_count: int
    large_miner_share: float


@dataclass
class RunSummary:
    initial_hashrate: float
    initial_large_share: float
    r_max: float
    burn_in: int
    mean_hashrate: Optional[float] = None
    std_hashrate: Optional[float] = None
    mean_interval: Optional[float] = None
    std_interval: Optional[float] = None
    mean_share: Optional[float] = None
    std_share: Optional[float] = None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class RunSeries:
    config_digest: str
    records: list[BlockRecord]
    summary: RunSummary


@dataclass
class NetworkState:
    """Mutable per-run state: clock, controller, and population arrays."""

    height: int
    clock: float
    retarget_state: RetargetState
    r_max: float
    ids: list[str]
    hashrate: np.ndarray
    unit_cost: np.ndarray
    is_large: np.ndarray
    active: np.ndarray
    dwell: np.ndarray
    duty_on: np.ndarray
    duty_off: np.ndarray
    hist: np.ndarray  # bool, (pom window, n agents), circular
    hist_count: np.ndarray
    hist_pos: int
    blocks_seen: int


def _available(state: NetworkState) -> np.ndarray:
    avail = state.active.copy()
    duty = state.duty_on > 0
    if duty.any():
        period = state.duty_on + state.duty_off
        phase = state.height % np.maximum(period, 1)
        avail &= ~(duty & (phase >= state.duty_on))
    return avail


def _decide_all(
    state: NetworkState,
    config: SimConfig,
    rng: np.random.Generator,
    block_reward: float,
    price: float,
    total_hash: float,
) -> None:
    """Vectorized mirror of agents.decide over the whole population.

    Inactive miners evaluate the revenue they would earn after joining
    (their hashrate added to the total), so an empty network can restart.
    """
    h = state.hashrate
    prospective = np.where(state.active, max(total_hash, 1e-300), total_hash + h)
    rev = (h / prospective) * block_reward * price * (3600.0 / config.retarget.target_interval)
    cost = state.unit_cost * h
    want_on = rev >= config.economics.margin_on * cost
    want_off = rev < config.economics.margin_off * cost
    busy = state.dwell > 0
    state.dwell[busy] -= 1
    flip_on = (~state.active) & want_on & ~busy
    flip_off = state.active & want_off & ~busy
    flips = flip_on | flip_off
    n_flips = int(flips.sum())
    state.active[flip_on] = True
    state.active[flip_off] = False
    if n_flips:
        base = config.economics.dwell
        jitter = rng.integers(0, base, n_flips) if base > 0 else np.zeros(n_flips, dtype=int)
        state.dwell[flips] = base + jitter


def step(
    state: NetworkState, config: SimConfig, rng: np.random.Generator
) -> tuple[NetworkState, BlockRecord]:
    """Produce one block, updating state in place.

    If no miner is available the step advances time in stall quanta,
    decaying difficulty and re-running decisions until someone re-enters.
    """
    kappa = config.resolved_rate_constant()
    floor = config.difficulty_map.floor
    price = config.price.at(state.height)

    avail = _available(state)
    total = float(state.hashrate[avail].sum())
    stalls = 0
    while total <= 0.0:
        stalls += 1
        if stalls > _MAX_STALL_QUANTA:
            raise InternalError("network stalled: no miner re-entered within the stall budget")
        rt = state.retarget_state
        quantum = rt.target_interval * rt.clamp
        state.clock += quantum
        state.retarget_state = retarget(rt, quantum)
        d = state.retarget_state.current_difficulty
        r = _block_reward(config, d, state.r_max)
        _decide_all(state, config, rng, r, price, 0.0)
        avail = _available(state)
        total = float(state.hashrate[avail].sum())

    d = max(state.retarget_state.current_difficulty, floor)
    interval = float(rng.exponential(d / (kappa * total)))
    state.clock += interval

    # winner proportional to available hashrate
    u = rng.random() * total
    cum = np.cumsum(state.hashrate * avail)
    widx = int(np.searchsorted(cum, u, side="right"))
    widx = min(widx, len(cum) - 1)

    raw = _block_reward(config, d, state.r_max)
    if state.blocks_seen < config.pom.window:
        mult = 1.0  # warm-up: no penalty for pre-history
    else:
        mult = min(1.0, float(state.hist_count[widx]) / config.pom.required)
    credited = raw * mult

    large_avail = avail & state.is_large
    record = BlockRecord(
        height=state.height,
        timestamp=state.clock,
        difficulty=d,
        total_hash=total,
        winner=state.ids[widx],
        raw_reward=raw,
        pom_multiplier=mult,
        credited_reward=credited,
        active_miner_count=int(avail.sum()),
        large_miner_share=float(state.hashrate[large_avail].sum()) / total,
    )

    # participation history (circular buffer over the PoM window)
    state.hist_count -= state.hist[state.hist_pos]
    state.hist[state.hist_pos] = avail
    state.hist_count += avail
    state.hist_pos = (state.hist_pos + 1) % config.pom.window
    state.blocks_seen += 1

    state.retarget_state = retarget(state.retarget_state, interval)
    _decide_all(state, config, rng, raw, price, total)
    state.height += 1
    return state, record


def _block_reward(config: SimConfig, d: float, r_max: float) -> float:
    if config.constant_reward:
        return r_max
    return reward(d, config.schedule)


def schedule_max(schedule: RewardScheduleParams) -> tuple[float, float]:
    """Peak (d_star, r_max) of a schedule over its natural range."""
    hi = 20.0 / schedule.base.a
    if schedule.cutoff is not None:
        hi = min(hi, schedule.cutoff.d_co + 20.0 * schedule.cutoff.spread)
    return find_peak(schedule, 1e-12, hi)


def initial_state(config: SimConfig, rng: np.random.Generator) -> NetworkState:
    if config.explicit_population is not None:
        agents = config.explicit_population
    else:
        agents = generate_population(config.population, rng, pom_window=config.pom.window)
    n = len(agents)
    if n == 0:
        raise ConfigError("population: must contain at least one miner")
    hashrate = np.array([m.hashrate for m in agents])
    unit_cost = np.array([m.unit_cost for m in agents])
    is_large = hashrate > config.large_threshold
    active = np.array([m.active for m in agents])
    duty_on = np.array([m.duty[0] if m.duty else 0 for m in agents], dtype=int)
    duty_off = np.array([m.duty[1] if m.duty else 0 for m in agents], dtype=int)
    base_dwell = config.economics.dwell
    if base_dwell > 0:
        dwell = np.asarray(rng.integers(0, base_dwell, n), dtype=int)  # staggered start
    else:
        dwell = np.zeros(n, dtype=int)
    _, r_max = schedule_max(config.schedule)
    h0 = float(hashrate[active].sum())
    d0 = hash_to_difficulty(h0, config.difficulty_map) if h0 > 0 else config.difficulty_map.floor
    rt = RetargetState(
        current_difficulty=d0,
        ema_interval=config.retarget.target_interval,
        target_interval=config.retarget.target_interval,
        smoothing=config.retarget.smoothing,
        clamp=config.retarget.clamp,
        floor=config.difficulty_map.floor,
    )
    return NetworkState(
        height=0,
        clock=0.0,
        retarget_state=rt,
        r_max=r_max,
        ids=[m.id for m in agents],
        hashrate=hashrate,
        unit_cost=unit_cost,
        is_large=is_large,
        active=active,
        dwell=dwell,
        duty_on=duty_on,
        duty_off=duty_off,
        hist=np.zeros((config.pom.window, n), dtype=bool),
        hist_count=np.zeros(n, dtype=int),
        hist_pos=0,
        blocks_seen=0,
    )


def run(config: SimConfig) -> RunSeries:
    """Execute the configured horizon from genesis; deterministic per seed."""
    rng = np.random.default_rng(config.seed)
    state = initial_state(config, rng)
    h0 = float(state.hashrate[state.active].sum())
    large0 = float(state.hashrate[state.active & state.is_large].sum())
    share0 = large0 / h0 if h0 > 0 else 0.0

    records: list[BlockRecord] = []
    for _ in range(config.horizon):
        state, rec = step(state, config, rng)
        records.append(rec)

    burn_in = config.horizon // 5
    summary = RunSummary(
        initial_hashrate=h0,
        initial_large_share=share0,
        r_max=state.r_max,
        burn_in=burn_in,
    )
    if records:
        tail = records[burn_in:]
        hs = np.array([r.total_hash for r in tail])
        shares = np.array([r.large_miner_share for r in tail])
        ts = np.array([r.timestamp for r in records])
        intervals = np.diff(np.concatenate([[0.0], ts]))[burn_in:]
        summary.mean_hashrate = float(hs.mean())
        summary.std_hashrate = float(hs.std())
        summary.mean_interval = float(intervals.mean())
        summary.std_interval = float(intervals.std())
        summary.mean_share = float(shares.mean())
        summary.std_share = float(shares.std())
    return RunSeries(config_digest=config.digest(), records=records, summary=summary)


CSV_HEADER = [
    "height",
    "timestamp",
    "difficulty",
    "total_hash",
    "winner",
    "raw_reward",
    "pom_multiplier",
    "credited_reward",
    "active_miner_count",
    "large_miner_share",
]


def write_series_csv(series: RunSeries, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(CSV_HEADER)
        for r in series.records:
            w.writerow(
                [
                    r.height,
                    repr(r.timestamp),
                    repr(r.difficulty),
                    repr(r.total_hash),
                    r.winner,
                    repr(r.raw_reward),
                    repr(r.pom_multiplier),
                    repr(r.credited_reward),
                    r.active_miner_count,
                    repr(r.large_miner_share),
                ]
            )


def read_series_csv(path) -> list[BlockRecord]:
    records = []
    with open(path, newline="") as f:
        rd = csv.reader(f)
        header = next(rd)
        if header != CSV_HEADER:
            raise ConfigError(f"unexpected CSV header in {path}")
        for row in rd:
            records.append(
                BlockRecord(
                    height=int(row[0]),
                    timestamp=float(row[1]),
                    difficulty=float(row[2]),
                    total_hash=float(row[3]),
                    winner=row[4],
                    raw_reward=float(row[5]),
                    pom_multiplier=float(row[6]),
                    credited_reward=float(row[7]),
                    active_miner_count=int(row[8]),
                    large_miner_share=float(row[9]),
                )
            )
    return records
