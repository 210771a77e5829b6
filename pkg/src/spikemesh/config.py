"""System configuration: validated scalars shared by every simulation."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

from .routing import PRIORITY, ROUND_ROBIN


class ConfigError(ValueError):
    pass


@dataclass
class SystemConfig:
    grid_width: int = 1
    grid_height: int = 1
    f_clk_mhz: float = 55.0
    fifo_capacity: int = 16
    scheduler_capacity: int = 16
    aer_cycles_per_transaction: int = 6
    router_arbiter: str = ROUND_ROBIN
    strict_routing: bool = True
    record_spike_trace: bool = False

    def validate(self) -> "SystemConfig":
        if not 1 <= self.grid_width <= 7:
            raise ConfigError(f"grid_width={self.grid_width} outside [1, 7]")
        if not 1 <= self.grid_height <= 7:
            raise ConfigError(f"grid_height={self.grid_height} outside [1, 7]")
        if self.f_clk_mhz <= 0:
            raise ConfigError(f"f_clk_mhz={self.f_clk_mhz} must be positive")
        if self.fifo_capacity < 1:
            raise ConfigError(f"fifo_capacity={self.fifo_capacity} must be >= 1")
        if self.scheduler_capacity < 1:
            raise ConfigError(
                f"scheduler_capacity={self.scheduler_capacity} must be >= 1")
        if self.aer_cycles_per_transaction < 1:
            raise ConfigError("aer_cycles_per_transaction must be >= 1")
        if self.router_arbiter not in (ROUND_ROBIN, PRIORITY):
            raise ConfigError(f"router_arbiter={self.router_arbiter!r} unknown")
        return self

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "SystemConfig":
        known = {f for f in cls.__dataclass_fields__}
        for key in d:
            if key not in known:
                raise ConfigError(f"unknown configuration key {key!r}")
        return cls(**d).validate()

    @classmethod
    def from_json_file(cls, path) -> "SystemConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))
