"""Run configuration and the INI-style configuration file.

Example file::

    [run]
    tier = low
    family = reasoning
    seed = 0
    planner_enabled = true

    [thresholds]
    tau = 0.8
    eta = 0.2
    alpha_max = 50
    n_max = 16

    [tiers]
    low = 5, 2000, 1000        ; tool calls, reasoning tokens, instruct tokens

    [backends]
    chat_url = http://localhost:8000/v1
    model = my-model
    corpus = corpus.jsonl

    [pricing]
    input_rate_per_mtok = 0.03
    output_rate_per_mtok = 0.14
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from .budget import BUDGET_TIERS, DEFAULT_ALPHA_MAX, tier_limits
from .costs import PRICING, PricingModel
from .critic import DEFAULT_HISTORY_WINDOW, DEFAULT_TAU
from .selector import DEFAULT_N_MAX

DEFAULT_ETA = 0.2
MAX_OUTPUT_TOKENS = 512


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    tier: str = "low"
    family: str = "reasoning"
    # Explicit limits override the tier preset when both are set.
    tool_budget: int | None = None
    token_budget: int | None = None
    tau: float = DEFAULT_TAU
    eta: float = DEFAULT_ETA
    alpha_max: float = DEFAULT_ALPHA_MAX
    n_max: int = DEFAULT_N_MAX
    seed: int = 0
    history_window: int = DEFAULT_HISTORY_WINDOW
    charge_critic_tokens: bool = True
    planner_enabled: bool = True
    use_value: bool = True
    use_budget: bool = True
    max_output_tokens: int = MAX_OUTPUT_TOKENS
    retrieval_k: int = 5
    # None keeps the family sampling defaults for the critic too.
    critic_temperature: float | None = None
    tiers: dict = field(default_factory=lambda: dict(BUDGET_TIERS), compare=False, repr=False)

    def __post_init__(self):
        if not 0 < self.eta < self.tau <= 1:
            raise ConfigError("thresholds must satisfy 0 < eta < tau <= 1")
        if self.n_max < 1:
            raise ConfigError("n_max must be >= 1")
        if self.alpha_max < 1:
            raise ConfigError("alpha_max must be >= 1")
        if self.history_window < 1 or self.max_output_tokens < 1:
            raise ConfigError("history_window and max_output_tokens must be positive")
        if (self.tool_budget is None) != (self.token_budget is None):
            raise ConfigError("tool_budget and token_budget must be given together")
        if self.tool_budget is None and self.tier not in self.tiers:
            raise ConfigError(f"unknown tier {self.tier!r}")

    def limits(self) -> tuple[int, int]:
        if self.tool_budget is not None:
            return self.tool_budget, self.token_budget
        return tier_limits(self.tier, self.family, self.tiers)

    @property
    def tier_label(self) -> str:
        return self.tier if self.tool_budget is None else f"{self.tool_budget}/{self.token_budget}"

    def replace(self, **changes) -> RunConfig:
        return dataclasses.replace(self, **changes)


RUN_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig) if f.name != "tiers"}
PRICING_FIELDS = {f.name: f for f in dataclasses.fields(PricingModel)}


def _coerce(raw: str, annotation: str):
    raw = raw.strip()
    if "bool" in annotation:
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"not a boolean: {raw!r}")
    if "None" in annotation and raw.lower() in ("", "none"):
        return None
    if "int" in annotation:
        return int(raw)
    if "float" in annotation:
        return float(raw)
    return raw


def apply_overrides(config: RunConfig, pricing: PricingModel, overrides: dict) -> tuple[RunConfig, PricingModel]:
    """Apply ``key -> value`` overrides; keys must exist on RunConfig or PricingModel."""
    run_changes, price_changes = {}, {}
    for key, value in overrides.items():
        if key in RUN_FIELDS:
            run_changes[key] = _coerce(value, str(RUN_FIELDS[key].type)) if isinstance(value, str) else value
        elif key in PRICING_FIELDS:
            price_changes[key] = float(value)
        else:
            raise ConfigError(f"unknown configuration key {key!r}")
    return config.replace(**run_changes), dataclasses.replace(pricing, **price_changes)


@dataclass
class LoadedConfig:
    run: RunConfig
    pricing: PricingModel
    backends: dict[str, str]


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> LoadedConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    if path is not None:
        if not parser.read(path, encoding="utf-8"):
            raise ConfigError(f"cannot read configuration file {path}")
    values: dict[str, str] = {}
    for section in ("run", "thresholds"):
        if parser.has_section(section):
            values.update(parser[section])
    tiers = dict(BUDGET_TIERS)
    if parser.has_section("tiers"):
        for name, spec in parser["tiers"].items():
            parts = [int(p) for p in spec.split(",")]
            if len(parts) != 3:
                raise ConfigError(f"tier {name!r} needs 'tools, reasoning_tokens, instruct_tokens'")
            tiers[name] = tuple(parts)
    price_values = dict(parser["pricing"]) if parser.has_section("pricing") else {}
    backends = dict(parser["backends"]) if parser.has_section("backends") else {}

    overrides = dict(overrides or {})
    family = str(overrides.pop("family", values.pop("family", "reasoning"))).strip()
    tier = str(overrides.pop("tier", values.pop("tier", "low"))).strip()
    base = RunConfig(family=family, tier=tier, tiers=tiers)
    pricing = PRICING.get(family, PRICING["reasoning"])
    run, pricing = apply_overrides(base, pricing, {**values, **price_values, **overrides})
    return LoadedConfig(run, pricing, backends)
