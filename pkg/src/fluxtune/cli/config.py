"""Run configuration: strict JSON schema, defaults and canonical serialization.

Every section rejects unknown keys. Only the circuit parameters in
``device`` are required; everything else has a documented default.
"""

from __future__ import annotations

import hashlib
import json
import sys
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, ValidationError, model_validator

from ..errors import FluxtuneError
from ..noise import NoiseEnv
from ..params import DeviceParams

__all__ = ["ConfigError", "RunConfig", "parse_config", "load_config", "config_json", "config_hash"]


class ConfigError(FluxtuneError):
    """Configuration could not be parsed or validated.

    ``problems`` lists ``{"path": ..., "message": ...}`` entries.
    """

    def __init__(self, message: str, problems: list[dict] | None = None):
        self.problems = list(problems or [])
        detail = "; ".join(f"{p['path']}: {p['message']}" for p in self.problems)
        super().__init__(f"{message}: {detail}" if detail else message)


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", strict=True, frozen=True)


class DeviceSection(_Strict):
    ej_ghz: PositiveFloat
    ec_ghz: PositiveFloat
    l0_nH: PositiveFloat
    lr_nH: PositiveFloat
    cavity_ghz: PositiveFloat
    constants: Literal["si2019", "rounded"] = "si2019"


class NoiseSection(_Strict):
    m1_phi0_per_A: PositiveFloat = 40.0
    m2_phi0_per_A: PositiveFloat = 40.0
    m3_phi0_per_A: PositiveFloat = 35.0
    zr_ohm: PositiveFloat = 50.0
    aphi_phi0: PositiveFloat = 1e-6
    aic_rel: PositiveFloat = 1e-6
    ac_e: PositiveFloat = 1e-4


class GridSection(_Strict):
    """f values in units of pi; the closed interval must sit inside (0, 1)."""

    start: float = 0.96
    stop: float = 0.9995
    points: int = Field(200, ge=2)

    @model_validator(mode="after")
    def _inside(self):
        if not 0.0 < self.start < self.stop < 1.0:
            raise ValueError(
                f"need 0 < start < stop < 1 in units of pi (f = pi is unreachable), "
                f"got start={self.start}, stop={self.stop}"
            )
        return self


class TruncationSection(_Strict):
    n_fock: int = Field(15, ge=2)
    n_charge: int = Field(20, ge=1)


class Tolerances(_Strict):
    validation_margin: PositiveFloat = 0.1
    lambda_max: PositiveFloat = 0.3
    ls_nH: Optional[PositiveFloat] = None
    regime_negligible: float = Field(1e-4, ge=0)
    regime_ultrastrong: PositiveFloat = 0.1


class RunConfig(_Strict):
    """Full run description; ``target_delta_e_ghz`` defaults to the cavity frequency."""

    device: DeviceSection
    noise: NoiseSection = NoiseSection()
    target_delta_e_ghz: Optional[PositiveFloat] = None
    f_grid: GridSection = GridSection()
    truncation: TruncationSection = TruncationSection()
    engine: Literal["perturbative", "exact"] = "exact"
    variant: Literal["full", "simplified"] = "full"
    form: Literal["exact", "linearized"] = "exact"
    tolerances: Tolerances = Tolerances()

    @property
    def target(self) -> float:
        t = self.target_delta_e_ghz
        return self.device.cavity_ghz if t is None else t

    def device_params(self) -> DeviceParams:
        d, n = self.device, self.noise
        return DeviceParams(
            ej_ghz=d.ej_ghz,
            ec_ghz=d.ec_ghz,
            l0_nH=d.l0_nH,
            lr_nH=d.lr_nH,
            cavity_ghz=d.cavity_ghz,
            m1_m2_m3_phi0_per_A=(n.m1_phi0_per_A, n.m2_phi0_per_A, n.m3_phi0_per_A),
            zr_ohm=n.zr_ohm,
            aphi_phi0=n.aphi_phi0,
            aic_rel=n.aic_rel,
            ac_e=n.ac_e,
            constants=d.constants,
        )

    def noise_env(self) -> NoiseEnv:
        return NoiseEnv.from_device(self.device_params())


def _problems(exc: ValidationError) -> list[dict]:
    out = []
    for err in exc.errors():
        path = ".".join(str(p) for p in err["loc"]) or "<root>"
        out.append({"path": path, "message": err["msg"]})
    return out


def parse_config(text: str) -> RunConfig:
    """Parse a JSON document into a validated :class:`RunConfig`.

    An empty document is treated as ``{}`` so the error lists every
    required field.
    """
    if not text.strip():
        data: object = {}
    else:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}")
    if not isinstance(data, dict):
        raise ConfigError("top-level JSON value must be an object")
    if "device" not in data:
        data = {**data, "device": {}}
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError("invalid configuration", _problems(exc)) from None


def load_config(path: str) -> RunConfig:
    """Read a config from ``path``; ``-`` means standard input."""
    if path == "-":
        return parse_config(sys.stdin.read())
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc.strerror}") from None
    return parse_config(text)


def config_json(cfg: RunConfig, indent: int | None = 2) -> str:
    """Canonical JSON with every default filled in and keys sorted."""
    return json.dumps(cfg.model_dump(mode="json"), sort_keys=True, indent=indent)


def config_hash(cfg: RunConfig) -> str:
    """SHA-256 of the compact canonical JSON, first 16 hex digits."""
    blob = json.dumps(cfg.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]
