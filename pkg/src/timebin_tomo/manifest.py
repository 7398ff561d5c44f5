"""Run manifests: the complete, replayable description of a CLI run."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .simulate import DEFAULT_PAIR_THRESHOLD, DEFAULT_PHOTONS, DEFAULT_THRESHOLD, ExperimentConfig, make_config
from .states import phase_family, sample_state_grid
from .wavepacket import DEFAULT_BETA_PS2_PER_M, DEFAULT_SIGMA_PS, DEFAULT_TAU_PS, PulseConfig

SYSTEMS = {"qubit": 2, "qutrit": 3, "entangled": 2}
MANIFEST_NAME = "manifest.json"


class ConfigError(ValueError):
    """Invalid run configuration (CLI exit code 1)."""


@dataclass
class RunManifest:
    system: str = "qubit"
    lengths_m: list = field(default_factory=lambda: [200.0, 500.0])
    jitters_ps: list = field(default_factory=lambda: [0.0, 1.0, 4.0])
    methods: list = field(default_factory=lambda: ["ls", "mle"])
    photons: int = DEFAULT_PHOTONS
    operators: int | None = None
    threshold_fraction: float | None = None
    resolution: int = 7
    phases: int = 20
    seed: int = 0
    sigma_ps: float = DEFAULT_SIGMA_PS
    tau_ps: float = DEFAULT_TAU_PS
    beta_ps2_per_m: float = DEFAULT_BETA_PS2_PER_M
    out_dir: str = "out"
    workers: int = 1
    tool_version: str = __version__

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.system not in SYSTEMS:
            raise ConfigError(f"unknown system {self.system!r}; choose from {sorted(SYSTEMS)}")
        bad = [m for m in self.methods if m not in ("ls", "mle")]
        if bad or not self.methods:
            raise ConfigError(f"methods must be a non-empty subset of ['ls', 'mle'], got {self.methods}")
        if not self.lengths_m or any(L < 0 for L in self.lengths_m):
            raise ConfigError("fiber lengths must be non-negative")
        if not self.jitters_ps or any(s < 0 for s in self.jitters_ps):
            raise ConfigError("jitter values must be non-negative")
        if self.photons < 1:
            raise ConfigError("photons must be >= 1")
        if self.resolution < 2 or self.phases < 1:
            raise ConfigError("resolution must be >= 2 and phases >= 1")
        if not 0 < self.threshold < 1:
            raise ConfigError("threshold_fraction must lie in (0, 1)")
        if self.sigma_ps <= 0 or self.tau_ps <= 0:
            raise ConfigError("sigma_ps and tau_ps must be positive")
        ops = self.operator_count
        if self.two_photon:
            root = int(round(ops**0.5))
            if root * root != ops or root < 2:
                raise ConfigError(f"entangled runs need a square operator count >= 4, got {ops}")
        elif ops < self.dim**2:
            raise ConfigError(f"need at least {self.dim ** 2} operators for {self.system}, got {ops}")

    @property
    def dim(self) -> int:
        return SYSTEMS[self.system]

    @property
    def two_photon(self) -> bool:
        return self.system == "entangled"

    @property
    def threshold(self) -> float:
        if self.threshold_fraction is not None:
            return float(self.threshold_fraction)
        return DEFAULT_PAIR_THRESHOLD if self.two_photon else DEFAULT_THRESHOLD

    @property
    def operator_count(self) -> int:
        if self.operators is not None:
            return int(self.operators)
        return 25 if self.two_photon else 26

    def cells(self) -> list[tuple[float, float]]:
        return [(float(L), float(s)) for L in self.lengths_m for s in self.jitters_ps]

    def experiment(self, length: float, sigma_d: float) -> ExperimentConfig:
        pulse = PulseConfig(self.sigma_ps, self.tau_ps, self.dim)
        try:
            return make_config(length=length, sigma_d=sigma_d, photons=self.photons,
                               operators=self.operator_count, seed=self.seed,
                               two_photon=self.two_photon, threshold=self.threshold,
                               pulse=pulse, beta=self.beta_ps2_per_m)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def states(self) -> list[np.ndarray]:
        if self.two_photon:
            return phase_family(self.phases)
        return sample_state_grid(self.dim, self.resolution)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunManifest":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown manifest keys: {sorted(unknown)}")
        return cls(**data)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def write(self, directory: str | Path | None = None) -> Path:
        path = Path(directory or self.out_dir) / MANIFEST_NAME
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.dumps() + "\n", encoding="utf-8")
        return path

    @classmethod
    def read(cls, path: str | Path) -> "RunManifest":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read manifest {path}: {exc}") from exc
        return cls.from_dict(data)
