"""Experiment configuration: strict JSON schema in, SimConfig out.

Unknown keys are rejected everywhere (silent misconfiguration is the main
operator hazard) and every error names the offending field path.
"""

from __future__ import annotations

import json
from collections import deque
from contextlib import contextmanager
from pathlib import Path

from .agents import MinerAgent, PomCredit, PopulationSpec
from .difficulty import DifficultyMap, fit_difficulty_map
from .errors import ConfigError, PomSimError
from .reward_curve import calibrate_schedule, schedule_from_dict
from .simulator import EconomicsConfig, PricePath, RetargetConfig, SimConfig


@contextmanager
def _section(path: str):
    """Re-raise validation errors from nested constructors with the field path."""
    try:
        yield
    except ConfigError:
        raise
    except PomSimError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _require_mapping(obj, path: str) -> dict:
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: expected an object, got {type(obj).__name__}")
    return obj


def _check_keys(obj: dict, path: str, required: set[str], optional: set[str] = frozenset()):
    unknown = set(obj) - required - set(optional)
    if unknown:
        raise ConfigError(f"{path}: unknown key(s) {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        raise ConfigError(f"{path}: missing required key(s) {sorted(missing)}")


def _number(obj: dict, key: str, path: str, allow_none: bool = False):
    v = obj.get(key)
    if v is None and allow_none:
        return None
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        raise ConfigError(f"{path}.{key}: expected a number, got {v!r}")
    return float(v)


def _integer(obj: dict, key: str, path: str) -> int:
    v = obj.get(key)
    if not isinstance(v, int) or isinstance(v, bool):
        raise ConfigError(f"{path}.{key}: expected an integer, got {v!r}")
    return v


def _pair(obj: dict, key: str, path: str) -> tuple[float, float]:
    v = obj.get(key)
    if not (isinstance(v, list) and len(v) == 2):
        raise ConfigError(f"{path}.{key}: expected a [lo, hi] pair, got {v!r}")
    return (float(v[0]), float(v[1]))


def _parse_schedule(obj, path: str):
    obj = _require_mapping(obj, path)
    if "landmarks" in obj:
        _check_keys(obj, path, {"landmarks"})
        lm = _require_mapping(obj["landmarks"], f"{path}.landmarks")
        _check_keys(
            lm,
            f"{path}.landmarks",
            {"peak_d", "half_d", "tenth_d", "r_max"},
            {"b_ratio"},
        )
        return calibrate_schedule(
            peak_d=_number(lm, "peak_d", f"{path}.landmarks"),
            half_d=_number(lm, "half_d", f"{path}.landmarks"),
            tenth_d=_number(lm, "tenth_d", f"{path}.landmarks"),
            r_max_target=_number(lm, "r_max", f"{path}.landmarks"),
            b_ratio=_number(lm, "b_ratio", f"{path}.landmarks") if "b_ratio" in lm else 4.0,
        )
    _check_keys(obj, path, {"a", "b"}, {"scale", "d_co", "spread"})
    return schedule_from_dict(obj)


def _parse_difficulty_map(obj, path: str) -> DifficultyMap:
    obj = _require_mapping(obj, path)
    if "anchors" in obj:
        _check_keys(obj, path, {"anchors"}, {"floor"})
        anchors = obj["anchors"]
        if not isinstance(anchors, list) or not all(
            isinstance(p, list) and len(p) == 2 for p in anchors
        ):
            raise ConfigError(f"{path}.anchors: expected a list of [hashrate, difficulty] pairs")
        floor = _number(obj, "floor", path) if "floor" in obj else 1e-6
        return fit_difficulty_map(anchors, floor=floor)
    _check_keys(obj, path, {"slope", "intercept"}, {"floor"})
    return DifficultyMap(
        slope=_number(obj, "slope", path),
        intercept=_number(obj, "intercept", path),
        floor=_number(obj, "floor", path) if "floor" in obj else 1e-6,
    )


def _parse_population(obj, path: str, pom_window: int):
    obj = _require_mapping(obj, path)
    if "explicit" in obj:
        _check_keys(obj, path, {"explicit"})
        agents = []
        entries = obj["explicit"]
        if not isinstance(entries, list) or not entries:
            raise ConfigError(f"{path}.explicit: expected a nonempty list of miners")
        for i, e in enumerate(entries):
            epath = f"{path}.explicit[{i}]"
            e = _require_mapping(e, epath)
            _check_keys(e, epath, {"hashrate", "unit_cost"}, {"id", "class", "duty"})
            duty = e.get("duty")
            if duty is not None:
                if not (isinstance(duty, list) and len(duty) == 2):
                    raise ConfigError(f"{epath}.duty: expected [on_blocks, off_blocks]")
                duty = (int(duty[0]), int(duty[1]))
            agents.append(
                MinerAgent(
                    id=str(e.get("id", f"m{i:03d}")),
                    hashrate=_number(e, "hashrate", epath),
                    unit_cost=_number(e, "unit_cost", epath),
                    miner_class=str(e.get("class", "small")),
                    duty=duty,
                    history=deque(maxlen=pom_window),
                )
            )
        return None, agents
    _check_keys(
        obj,
        path,
        set(),
        {"n_small", "n_large", "small_hash", "large_hash", "small_cost", "large_cost"},
    )
    kwargs = {}
    if "n_small" in obj:
        kwargs["n_small"] = _integer(obj, "n_small", path)
    if "n_large" in obj:
        kwargs["n_large"] = _integer(obj, "n_large", path)
    for key in ("small_hash", "large_hash", "small_cost", "large_cost"):
        if key in obj:
            kwargs[key] = _pair(obj, key, path)
    return PopulationSpec(**kwargs), None


def _parse_price(obj, path: str) -> PricePath:
    obj = _require_mapping(obj, path)
    if "constant" in obj:
        _check_keys(obj, path, {"constant"})
        return PricePath(constant=_number(obj, "constant", path))
    if "series" in obj:
        _check_keys(obj, path, {"series"})
        series = obj["series"]
        if not isinstance(series, list) or not series:
            raise ConfigError(f"{path}.series: expected a nonempty list of prices")
        return PricePath(series=tuple(float(v) for v in series))
    _check_keys(obj, path, {"initial", "factor", "at_block"})
    return PricePath(
        initial=_number(obj, "initial", path),
        factor=_number(obj, "factor", path),
        at_block=_integer(obj, "at_block", path),
    )


TOP_REQUIRED = {"schedule", "horizon", "seed"}
TOP_OPTIONAL = {
    "constant_reward",
    "difficulty_map",
    "retarget",
    "population",
    "pom",
    "price",
    "economics",
    "rate_constant",
    "anchor_hashrate",
    "large_threshold",
}


def config_from_dict(data: dict) -> SimConfig:
    data = _require_mapping(data, "$")
    _check_keys(data, "$", TOP_REQUIRED, TOP_OPTIONAL)

    pom = PomCredit()
    if "pom" in data:
        pobj = _require_mapping(data["pom"], "$.pom")
        _check_keys(pobj, "$.pom", set(), {"window", "required"})
        with _section("$.pom"):
            pom = PomCredit(
                window=_integer(pobj, "window", "$.pom") if "window" in pobj else 50,
                required=_integer(pobj, "required", "$.pom") if "required" in pobj else 40,
            )

    retarget = RetargetConfig()
    if "retarget" in data:
        robj = _require_mapping(data["retarget"], "$.retarget")
        _check_keys(robj, "$.retarget", set(), {"target_interval", "smoothing", "clamp"})
        defaults = RetargetConfig()
        with _section("$.retarget"):
            retarget = RetargetConfig(
                target_interval=_number(robj, "target_interval", "$.retarget")
                if "target_interval" in robj
                else defaults.target_interval,
                smoothing=_number(robj, "smoothing", "$.retarget")
                if "smoothing" in robj
                else defaults.smoothing,
                clamp=_number(robj, "clamp", "$.retarget") if "clamp" in robj else defaults.clamp,
            )

    economics = EconomicsConfig()
    if "economics" in data:
        eobj = _require_mapping(data["economics"], "$.economics")
        _check_keys(eobj, "$.economics", set(), {"margin_on", "margin_off", "dwell"})
        defaults = EconomicsConfig()
        with _section("$.economics"):
            economics = EconomicsConfig(
                margin_on=_number(eobj, "margin_on", "$.economics")
                if "margin_on" in eobj
                else defaults.margin_on,
                margin_off=_number(eobj, "margin_off", "$.economics")
                if "margin_off" in eobj
                else defaults.margin_off,
                dwell=_integer(eobj, "dwell", "$.economics") if "dwell" in eobj else defaults.dwell,
            )

    population, explicit = (PopulationSpec(), None)
    if "population" in data:
        population, explicit = _parse_population(data["population"], "$.population", pom.window)

    try:
        return SimConfig(
            schedule=_parse_schedule(data["schedule"], "$.schedule"),
            horizon=_integer(data, "horizon", "$"),
            seed=_integer(data, "seed", "$"),
            difficulty_map=_parse_difficulty_map(data["difficulty_map"], "$.difficulty_map")
            if "difficulty_map" in data
            else fit_difficulty_map(),
            retarget=retarget,
            population=population if population is not None else PopulationSpec(),
            explicit_population=explicit,
            pom=pom,
            price=_parse_price(data["price"], "$.price")
            if "price" in data
            else PricePath(constant=30.0),
            economics=economics,
            constant_reward=bool(data.get("constant_reward", False)),
            rate_constant=_number(data, "rate_constant", "$", allow_none=True)
            if "rate_constant" in data
            else None,
            anchor_hashrate=_number(data, "anchor_hashrate", "$")
            if "anchor_hashrate" in data
            else 40.0,
            large_threshold=_number(data, "large_threshold", "$")
            if "large_threshold" in data
            else 5.0,
        )
    except ConfigError:
        raise
    except PomSimError as exc:
        raise ConfigError(f"$: {exc}") from exc


def load_config(path) -> SimConfig:
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    return config_from_dict(data)
