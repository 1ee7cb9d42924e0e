"""Configuration tree and INI loader for the simulator.

Configs are plain dataclasses grouped by concern; ``load_config`` fills them
from a flat INI file and fails fast on unknown sections, unknown keys, or
values that do not parse as the field's type.
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field

from .association import AssociationConfig
from .clustering import SimilarityConfig
from .learning import CostParams
from .netmodel import ChannelModel

MODES = ("classical", "learning_no_clusters", "learning_clustered")
TRAFFIC_DISTRIBUTIONS = ("exponential", "constant")


class ConfigError(ValueError):
    """Bad config file: unknown keys, bad types, or invalid values."""


@dataclass
class LayoutConfig:
    side_m: float = 1000.0  # square service area edge
    n_small: int = 10
    n_ues: int = 50
    min_dist_macro_small_m: float = 75.0
    min_dist_macro_ue_m: float = 35.0
    min_dist_small_small_m: float = 40.0
    min_dist_small_ue_m: float = 10.0


@dataclass
class PowerConfig:
    macro_p_max_dbm: float = 46.0
    macro_p_idle_w: float = 1.0
    small_p_max_dbm: float = 30.0
    small_p_idle_w: float = 0.1
    # active-state overhead multiplier on idle draw; > 1 so sleeping saves
    # the (q - 1) * p_idle base draw on top of the load-scaled transmit term
    idle_scale_active: float = 2.0


@dataclass
class ChannelConfig:
    bandwidth_hz: float = 10e6
    noise_psd_dbm_hz: float = -174.0


@dataclass
class TrafficConfig:
    mean_rate_bps: float = 180e3
    distribution: str = "exponential"  # per-UE draw; "constant" pins the mean


@dataclass
class ClusteringConfig:
    eps_d_m: float = 250.0  # adjacency distance cutoff
    sigma_d_m: float = 300.0  # distance similarity scale
    sigma_l: float = 1.0  # load similarity scale
    theta: float = 0.5  # distance weight in the joint similarity
    load_sign: str = "gaussian"
    laplacian: str = "standard"
    recluster_every: int = 50  # steps between partition refreshes
    kmeans_iters: int = 100


@dataclass
class LearningConfig:
    alpha: float = 0.5  # cost weight on power
    beta: float = 0.5  # cost weight on load
    kappa: float = 10.0  # Boltzmann-Gibbs temperature
    utility_exp: float = 0.6
    regret_exp: float = 0.7
    policy_exp: float = 0.8
    max_actions: int = 1024


@dataclass
class RunConfig:
    mode: str = "learning_clustered"
    steps: int = 400
    runs: int = 20
    seed: int = 1
    burn_in_frac: float = 0.3  # fraction of steps dropped from summaries
    jobs: int = 1  # parallel worker processes for Monte-Carlo runs
    load_gamma: float = 0.5  # damping of the load fixed-point iteration
    load_tol: float = 1e-6
    load_max_iter: int = 200


@dataclass
class ScenarioConfig:
    layout: LayoutConfig = field(default_factory=LayoutConfig)
    power: PowerConfig = field(default_factory=PowerConfig)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    traffic: TrafficConfig = field(default_factory=TrafficConfig)
    clustering: ClusteringConfig = field(default_factory=ClusteringConfig)
    association: AssociationConfig = field(default_factory=AssociationConfig)
    learning: LearningConfig = field(default_factory=LearningConfig)
    run: RunConfig = field(default_factory=RunConfig)

    def channel_model(self) -> ChannelModel:
        lay = self.layout
        return ChannelModel(
            bandwidth_hz=self.channel.bandwidth_hz,
            noise_psd_dbm_hz=self.channel.noise_psd_dbm_hz,
            min_dist_macro_m=lay.min_dist_macro_ue_m,
            min_dist_small_m=lay.min_dist_small_ue_m,
        )

    def similarity_config(self) -> SimilarityConfig:
        c = self.clustering
        return SimilarityConfig(
            eps_d=c.eps_d_m,
            sigma_d=c.sigma_d_m,
            sigma_l=c.sigma_l,
            theta=c.theta,
            load_sign=c.load_sign,
        )

    def cost_params(self) -> CostParams:
        return CostParams(alpha=self.learning.alpha, beta=self.learning.beta)


_SECTIONS = {
    "layout": "layout",
    "power": "power",
    "channel": "channel",
    "traffic": "traffic",
    "clustering": "clustering",
    "association": "association",
    "learning": "learning",
    "run": "run",
}


def default_config() -> ScenarioConfig:
    return ScenarioConfig()


def _coerce(section: str, key: str, raw: str, current):
    kind = type(current)
    try:
        if kind is bool:
            lowered = raw.strip().lower()
            if lowered in ("true", "yes", "on", "1"):
                return True
            if lowered in ("false", "no", "off", "0"):
                return False
            raise ValueError(raw)
        return kind(raw)
    except ValueError as exc:
        raise ConfigError(
            f"[{section}] {key}: cannot parse {raw!r} as {kind.__name__}"
        ) from exc


def validate_config(cfg: ScenarioConfig) -> None:
    run, lay = cfg.run, cfg.layout
    checks = [
        (run.mode in MODES, f"run.mode must be one of {MODES}, got {run.mode!r}"),
        (run.steps >= 1, "run.steps must be >= 1"),
        (run.runs >= 1, "run.runs must be >= 1"),
        (run.jobs >= 1, "run.jobs must be >= 1"),
        (run.seed >= 0, "run.seed must be >= 0"),
        (0.0 <= run.burn_in_frac < 1.0, "run.burn_in_frac must be in [0, 1)"),
        (0.0 < run.load_gamma <= 1.0, "run.load_gamma must be in (0, 1]"),
        (lay.side_m > 0, "layout.side_m must be positive"),
        (lay.n_small >= 0, "layout.n_small must be >= 0"),
        (lay.n_ues >= 0, "layout.n_ues must be >= 0"),
        (cfg.power.idle_scale_active > 1.0, "power.idle_scale_active must exceed 1"),
        (
            cfg.traffic.distribution in TRAFFIC_DISTRIBUTIONS,
            f"traffic.distribution must be one of {TRAFFIC_DISTRIBUTIONS}",
        ),
        (cfg.traffic.mean_rate_bps > 0, "traffic.mean_rate_bps must be positive"),
        (cfg.clustering.recluster_every >= 1, "clustering.recluster_every must be >= 1"),
        (cfg.learning.max_actions >= 2, "learning.max_actions must be >= 2"),
        (cfg.association.delta >= 0, "association.delta must be >= 0"),
    ]
    for ok, message in checks:
        if not ok:
            raise ConfigError(message)
    try:
        cfg.similarity_config()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if cfg.clustering.laplacian not in ("standard", "rowsum"):
        raise ConfigError("clustering.laplacian must be 'standard' or 'rowsum'")


def load_config(path: str) -> ScenarioConfig:
    """Read an INI file into a ScenarioConfig, failing fast on anything odd."""
    parser = configparser.ConfigParser(
        inline_comment_prefixes=("#", ";"), interpolation=None
    )
    loaded = parser.read(path)
    if not loaded:
        raise ConfigError(f"config file not found: {path}")
    cfg = default_config()
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown section [{section}]")
        target = getattr(cfg, _SECTIONS[section])
        known = {f.name for f in dataclasses.fields(target)}
        for key, raw in parser.items(section):
            if key not in known:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            setattr(target, key, _coerce(section, key, raw, getattr(target, key)))
    validate_config(cfg)
    return cfg
