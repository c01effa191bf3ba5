"""Run configuration and its flat ``key=value`` file format."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path

from srnaflow.errors import ConfigError


@dataclass(frozen=True)
class PipelineConfig:
    """Tunable parameters. Defaults are tuned for plant small-RNA libraries."""

    min_srna_freq: int = 10
    min_mirna_freq: int = 100
    min_srna_len: int = 18
    mirna_len_range: tuple[int, int] = (21, 24)
    max_premirna_len: int = 300
    max_loci: int = 15
    precursor_search_range: int = 300
    extra_flank: int = 10
    dust_threshold: float = 2.0
    max_second_loop: int = 5
    dominance_threshold: float = 0.75
    duplex_max_unpaired: int = 5
    duplex_max_bulge: int = 3
    fc_up: float = 2.0
    # None resolves to 1 / fc_up
    fc_down: float | None = None
    alpha: float = 0.05
    enrichment_alpha: float = 0.05
    bitscore_threshold: float = 20.0
    target_max_transcripts: int = 100
    target_top_genes: int = 5
    # accepted for compatibility; the pair-maximizing folder has no energy model
    temperature: float = 37.0
    workers: int = 1

    def __post_init__(self):
        if self.fc_down is None:
            object.__setattr__(self, "fc_down", 1.0 / self.fc_up)
        lo, hi = self.mirna_len_range
        if not (self.min_srna_len <= lo <= hi <= self.max_premirna_len):
            raise ConfigError(
                f"mirna_len_range {lo},{hi} must lie within "
                f"[{self.min_srna_len}, {self.max_premirna_len}]"
            )
        if not 0 < self.alpha < 1:
            raise ConfigError(f"alpha must be in (0, 1), got {self.alpha}")
        if not 0 < self.enrichment_alpha < 1:
            raise ConfigError("enrichment_alpha must be in (0, 1)")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if not 0 < self.dominance_threshold <= 1:
            raise ConfigError("dominance_threshold must be in (0, 1]")
        if self.dust_threshold <= 0:
            raise ConfigError("dust_threshold must be > 0")
        for name in ("min_srna_freq", "min_mirna_freq", "max_loci",
                     "precursor_search_range", "extra_flank", "max_second_loop",
                     "duplex_max_unpaired", "duplex_max_bulge"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")

    def replace(self, **changes) -> "PipelineConfig":
        return dataclasses.replace(self, **changes)


def default_config() -> PipelineConfig:
    return PipelineConfig()


def _parse_value(name: str, ftype, text: str):
    text = text.strip()
    try:
        if name == "mirna_len_range":
            lo, hi = (int(x) for x in text.split(","))
            return (lo, hi)
        if "int" in str(ftype):
            return int(text)
        if "float" in str(ftype):
            return float(text)
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {text!r}") from exc
    return text


def _format_value(value) -> str:
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    return repr(value) if isinstance(value, float) else str(value)


def parse_config(text: str, base: PipelineConfig | None = None) -> PipelineConfig:
    """Parse ``key=value`` lines; ``#`` starts a comment; unknown keys fail."""
    known = {f.name: f.type for f in fields(PipelineConfig)}
    changes = {}
    for line_no, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {line_no}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in known:
            raise ConfigError(f"line {line_no}: unknown key {key!r}")
        changes[key] = _parse_value(key, known[key], value)
    base = base or default_config()
    if "fc_up" in changes and "fc_down" not in changes:
        changes["fc_down"] = None
    return dataclasses.replace(base, **changes)


def load_config(path) -> PipelineConfig:
    return parse_config(Path(path).read_text())


def dump_config(config: PipelineConfig, exclude=()) -> str:
    lines = [
        f"{f.name}={_format_value(getattr(config, f.name))}"
        for f in fields(config)
        if f.name not in exclude
    ]
    return "\n".join(lines) + "\n"
