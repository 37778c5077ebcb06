"""Run configuration, state files and contour grids.

A run is described by one JSON document.  Everything that is not physics
(resolution, step sizes, output directory, RNG seed) has a default, so the
minimal document only names the channel parameters::

    {"schema": "qgchannel/1", "k": 0.01, "beta": 0.25, "psi_A0": 0.2,
     "topography": {"ridge": {"h0": 0.2}},
     "closure": {"constant_fave": 0.002}}

The ``schema`` key may be omitted; when present it must match
:data:`SCHEMA`.  Unknown keys anywhere are rejected.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .fields import SpectralState, compute_Uave, psi_modes, synthesize
from .params import Affine, ChannelParams, ConstantFave, ConstantUave, Ridge, Zonal

SCHEMA = "qgchannel/1"
STATE_SCHEMA = "qgchannel-state/1"
CONTOUR_SCHEMA = "qgchannel-contours/1"


class ConfigError(ValueError):
    """Invalid run configuration; ``errors`` lists ``(key path, message)`` pairs."""

    def __init__(self, errors: list[tuple[str, str]]):
        self.errors = errors
        super().__init__("; ".join(f"{k}: {m}" for k, m in errors))


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


# --------------------------------------------------------------------------
# physics


class RidgeCfg(_Strict):
    h0: float


class ZonalCfg(_Strict):
    eta: float
    # amplitude of the cos y profile; defaults to the forcing amplitude sqrt2*psi_A0
    C: Optional[float] = None


class TopographyCfg(_Strict):
    ridge: Optional[RidgeCfg] = None
    zonal: Optional[ZonalCfg] = None

    @model_validator(mode="after")
    def _one(self):
        if (self.ridge is None) == (self.zonal is None):
            raise ValueError("give exactly one of 'ridge' or 'zonal'")
        return self


class AffineCfg(_Strict):
    a: float
    b: float
    c: float

    @model_validator(mode="after")
    def _nondegenerate(self):
        if self.a == 0 and self.b == 0:
            raise ValueError("affine closure needs a != 0 or b != 0")
        return self


class ClosureCfg(_Strict):
    constant_fave: Optional[float] = None
    constant_uave: Optional[float] = None
    affine: Optional[AffineCfg] = None

    @model_validator(mode="after")
    def _one(self):
        given = [v is not None for v in (self.constant_fave, self.constant_uave, self.affine)]
        if sum(given) != 1:
            raise ValueError("give exactly one of 'constant_fave', 'constant_uave' or 'affine'")
        return self


# --------------------------------------------------------------------------
# per-subcommand settings


Symmetry = Literal["full", "even", "sym"]


class DnsCfg(_Strict):
    dt: float = Field(0.02, gt=0)
    T: float = Field(100.0, gt=0)
    M: int = Field(64, ge=1)
    N: int = Field(96, ge=4)
    sample_every: int = Field(50, ge=1)
    symmetry: Symmetry = "sym"
    dealias_y: bool = True
    # "basic" for the parallel flow, or a path to a state file
    initial: str = "basic"
    checkpoint_every: int = Field(0, ge=0)


class ContinuationCfg(_Strict):
    M: int = Field(16, ge=1)
    N: int = Field(128, ge=4)
    symmetry: Symmetry = "sym"
    ds_init: float = Field(0.01, gt=0)
    ds_min: float = Field(1e-6, gt=0)
    ds_max: float = Field(0.01, gt=0)
    max_points: int = Field(5000, ge=2)
    F_min: float = 0.0
    F_max: float = 0.01
    seed_F: float = 0.003
    first_direction: Literal[-1, 1] = -1
    newton_tol: float = Field(1e-10, gt=0)
    write_states: bool = False


class StabilityCfg(_Strict):
    eta: float = 0.0
    T: float = Field(200.0, gt=0)
    dt: float = Field(0.1, gt=0)
    sample_every: int = Field(10, ge=1)
    M: int = Field(6, ge=2)
    N: int = Field(64, ge=8)
    amplitude: float = Field(0.01, gt=0)

    @field_validator("eta")
    @classmethod
    def _eta(cls, v: float) -> float:
        if not v > -1:
            raise ValueError(f"eta must exceed -1 for the stability theorems, got {v}")
        return v


class LowdimCfg(_Strict):
    T: float = Field(0.0, ge=0)
    dt: float = Field(0.1, gt=0)


class ContoursCfg(_Strict):
    source: Optional[str] = None
    Nx: int = Field(256, ge=4)
    Ny: int = Field(129, ge=3)
    levels: Optional[list[float]] = None


class RunConfig(_Strict):
    """Validated run description; see the module docstring for the layout."""

    schema_: Literal["qgchannel/1"] = Field(SCHEMA, alias="schema")
    k: float = Field(gt=0)
    beta: float
    psi_A0: float
    topography: TopographyCfg = TopographyCfg(ridge=RidgeCfg(h0=0.0))
    closure: ClosureCfg = ClosureCfg(constant_fave=0.0)
    dns: DnsCfg = DnsCfg()
    continuation: ContinuationCfg = ContinuationCfg()
    stability: StabilityCfg = StabilityCfg()
    lowdim: LowdimCfg = LowdimCfg()
    contours: ContoursCfg = ContoursCfg()
    output: str = "out"
    seed: int = Field(0, ge=0, lt=2**64)

    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)

    # ----------------------------------------------------------------------

    def channel_params(self) -> ChannelParams:
        t = self.topography
        if t.ridge is not None:
            topo = Ridge(t.ridge.h0)
        else:
            C = t.zonal.C if t.zonal.C is not None else np.sqrt(2.0) * self.psi_A0
            topo = Zonal(C, t.zonal.eta)
        c = self.closure
        if c.constant_fave is not None:
            closure = ConstantFave(c.constant_fave)
        elif c.constant_uave is not None:
            closure = ConstantUave(c.constant_uave)
        else:
            closure = Affine(c.affine.a, c.affine.b, c.affine.c)
        return ChannelParams(self.k, self.beta, self.psi_A0, topo, closure)

    def canonical(self) -> str:
        """Deterministic JSON text with every default spelled out."""
        return json.dumps(self.model_dump(mode="json", by_alias=True, exclude_none=True), indent=2, sort_keys=True) + "\n"

    def with_resolution(self, M: int, N: int) -> "RunConfig":
        upd = {name: getattr(self, name).model_copy(update={"M": M, "N": N}) for name in ("dns", "continuation", "stability")}
        return self.model_copy(update=upd)


def _loc(loc: tuple) -> str:
    return ".".join(str(p) for p in loc) or "<root>"


def validate_config(data: Any) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError([("<root>", "config must be a JSON object")])
    try:
        return RunConfig.model_validate(data)
    except ValidationError as err:
        errors = sorted((_loc(e["loc"]), e["msg"]) for e in err.errors())
        raise ConfigError(errors) from None


def parse_config(path) -> RunConfig:
    """Read and validate a JSON run configuration.

    Raises :class:`ConfigError` with dotted key paths for unknown keys, type
    mismatches and constraint violations, and ``FileNotFoundError`` if the
    file is missing.
    """
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError([("<root>", f"invalid JSON: {err}")]) from None
    return validate_config(data)


# --------------------------------------------------------------------------
# state files


def _floats(a: np.ndarray) -> list:
    # json writes the shortest repr, which round-trips float64 exactly
    return np.asarray(a, dtype=float).tolist()


def state_to_json(state: SpectralState, **meta: float) -> dict:
    return {
        "schema": STATE_SCHEMA,
        "M": state.M,
        "N": state.N,
        "symmetry": state.symmetry,
        "U0": _floats(state.U0),
        "V_re": _floats(state.V.real),
        "V_im": _floats(state.V.imag),
        "meta": {k: float(v) for k, v in sorted(meta.items())},
    }


def state_from_json(data: dict) -> tuple[SpectralState, dict]:
    if data.get("schema") != STATE_SCHEMA:
        raise ValueError(f"not a state file (schema {data.get('schema')!r})")
    V = np.asarray(data["V_re"], float) + 1j * np.asarray(data["V_im"], float)
    s = SpectralState(np.asarray(data["U0"], float), V.reshape(data["M"], data["N"]), data["symmetry"])
    return s, dict(data.get("meta", {}))


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=1, sort_keys=True, allow_nan=False) + "\n")


def save_state(path, state: SpectralState, **meta: float) -> None:
    """Write a state as plain JSON (exact float round-trip)."""
    write_json(path, state_to_json(state, **meta))


def load_state(path) -> tuple[SpectralState, dict]:
    return state_from_json(json.loads(Path(path).read_text()))


# --------------------------------------------------------------------------
# contour grids


@dataclass
class ContourExport:
    x: np.ndarray
    y: np.ndarray
    psi: np.ndarray  # (Ny, Nx), psi = 0 on the southern wall
    topography: np.ndarray
    levels: list
    F_ave: float
    U_ave: float
    t: float
    psi_max: float
    psi_max_at: tuple[float, float]

    @property
    def phi_c(self) -> float:
        """Flux of the closed circulation cell, which equals psi_max."""
        return self.psi_max

    def to_json(self) -> dict:
        return {
            "schema": CONTOUR_SCHEMA,
            "x": _floats(self.x),
            "y": _floats(self.y),
            "psi": _floats(self.psi),
            "topography": _floats(self.topography),
            "levels": [float(v) for v in self.levels],
            # F_ave is unknown (null) for states without a stored forcing
            "meta": {"F_ave": self.F_ave if np.isfinite(self.F_ave) else None, "U_ave": self.U_ave, "t": self.t},
            "psi_max": self.psi_max,
            "psi_max_at": [float(v) for v in self.psi_max_at],
            "phi_c": self.phi_c,
        }


def default_levels(U_ave: float) -> list[float]:
    return [f * np.pi * U_ave for f in (0.0, -0.25, -0.5, -0.75, -1.0)]


def contour_grid(
    state: SpectralState,
    params: ChannelParams,
    Nx: int = 256,
    Ny: int = 129,
    levels: Optional[list] = None,
    F_ave: float = float("nan"),
    t: float = 0.0,
) -> ContourExport:
    """Stream function and topography on a uniform (x, y) grid.

    The grid includes both walls.  psi_max is the largest grid value and its
    location; for flows without a closed cell it is ~0 at the southern wall.
    """
    x = 2 * np.pi * np.arange(Nx) / Nx
    y = np.linspace(0.0, np.pi, Ny)
    psi = synthesize(psi_modes(state), y, Nx)
    h = synthesize(params.topography_modes(state.M, state.N), y, Nx)
    U = compute_Uave(state)
    j, i = np.unravel_index(int(np.argmax(psi)), psi.shape)
    return ContourExport(
        x, y, psi, h,
        list(levels) if levels is not None else default_levels(U),
        float(F_ave), U, float(t), float(psi[j, i]), (float(x[i]), float(y[j])),
    )


def export_contours(path, state: SpectralState, params: ChannelParams, **kw) -> ContourExport:
    out = contour_grid(state, params, **kw)
    write_json(path, out.to_json())
    return out


__all__ = [
    "SCHEMA", "ConfigError", "RunConfig", "parse_config", "validate_config",
    "save_state", "load_state", "state_to_json", "state_from_json", "write_json",
    "ContourExport", "contour_grid", "export_contours", "default_levels",
]
