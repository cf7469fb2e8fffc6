"""
Copyright (C) 2026 Bence Göblyös

This program is free software: you can redistribute it and/or modify it under
the terms of the GNU General Public License as published by the Free Software
Foundation, version 3.

This program is distributed in the hope that it will be useful, but WITHOUT ANY
WARRANTY; without even the implied warranty of MERCHANTABILITY or FITNESS FOR A
PARTICULAR PURPOSE. See the GNU General Public License for more details.

You should have received a copy of the GNU General Public License along with
this program. If not, see https://www.gnu.org/licenses/.
"""

import logging
from dataclasses import dataclass, fields, replace

import yaml

from Link.Channel import EVOLUTIONS, defaultCpLength, dopplerFromVelocity
from Link.Grid import FrameConfig, buildConstellation
from Utilities.Errors import ConfigError
from Utilities.UnitFormatting import formatPrefix

logger = logging.getLogger('OTFS-NOMA.Config')

SCHEMES = ("proposed_optimized", "proposed_naive", "mmse_sic")


@dataclass(frozen = True)
class SimConfig:
    """
    Full simulation configuration. Defaults reproduce the simulation
    parameter table: 64 x 16 grid at 15 kHz spacing on a 5.9 GHz carrier,
    TDL-C with 300 ns delay spread, K = 10, U = 15, eps = 1e-2.
    """
    delay_bins: int = 64
    doppler_bins: int = 16
    cp_length: object = "auto"
    carrier_frequency_hz: float = 5.9e9
    subcarrier_spacing_hz: float = 15e3
    qam_order_1: int = 4
    qam_order_2: int = 4
    channel_model: str = "TDL-C"
    delay_spread_s: float = 300e-9
    user_velocity_kmh: tuple = (200.0,)
    v_max_hz: tuple = ()
    snr_db_user1: tuple = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
    snr_gap_db: float = 15.0
    algorithm1_iterations: int = 10
    mlsqr_iterations: int = 15
    mlsqr_tolerance: float = 1e-2
    trials: int = 1000
    seed: int = 2024
    schemes: tuple = SCHEMES
    channel_mode: str = "continuous"
    zone_rule: str = "or"
    naive_start_factor: float = 2.0
    refresh_gamma_from_solver: bool = False
    empirical_probabilities: bool = False
    threads: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError(f"trials must be at least 1, got {self.trials}.")
        if not self.snr_db_user1:
            raise ConfigError("snr_db_user1 sweep is empty.")
        if not self.user_velocity_kmh and not self.v_max_hz:
            raise ConfigError("Either user_velocity_kmh or v_max_hz must list at least one value.")
        if any(v < 0 for v in self.user_velocity_kmh) or any(v < 0 for v in self.v_max_hz):
            raise ConfigError("Velocities and Doppler shifts must be non-negative.")
        if not self.schemes:
            raise ConfigError("No detection scheme selected.")
        for s in self.schemes:
            if s not in SCHEMES:
                raise ConfigError(f"Unknown scheme '{s}', expected one of {SCHEMES}.")
        if self.channel_model != "TDL-C":
            raise ConfigError(f"Only the TDL-C channel model is available, got '{self.channel_model}'.")
        if self.channel_mode not in EVOLUTIONS:
            raise ConfigError(f"Unknown channel mode '{self.channel_mode}', expected one of {EVOLUTIONS}.")
        if self.zone_rule not in ("and", "or"):
            raise ConfigError(f"Unknown zone rule '{self.zone_rule}'.")
        if self.snr_gap_db < 0:
            raise ConfigError("snr_gap_db must be non-negative (User 2 is the stronger user).")
        if self.algorithm1_iterations < 1 or self.mlsqr_iterations < 1:
            raise ConfigError("Iteration counts must be positive.")
        if self.threads < 1:
            raise ConfigError(f"threads must be at least 1, got {self.threads}.")
        if self.delay_spread_s <= 0:
            raise ConfigError(f"delay_spread_s must be positive, got {self.delay_spread_s}.")
        # Fail early on bad orders and frame sizes
        buildConstellation(self.qam_order_1)
        buildConstellation(self.qam_order_2)
        frame = self.frame()
        needed = defaultCpLength(self.delay_spread_s, frame)
        if frame.n_cp < needed:
            raise ConfigError(f"cp_length = {frame.n_cp} is shorter than the largest TDL-C tap ({needed} samples).")

    def frame(self):
        """FrameConfig with the CP length resolved."""
        probe = FrameConfig(M = self.delay_bins, N = self.doppler_bins, n_cp = 0,
                            delta_f = self.subcarrier_spacing_hz, f_c = self.carrier_frequency_hz)
        if self.cp_length == "auto":
            n_cp = defaultCpLength(self.delay_spread_s, probe)
        else:
            n_cp = int(self.cp_length)
        return replace(probe, n_cp = n_cp)

    def constellations(self):
        return buildConstellation(self.qam_order_1), buildConstellation(self.qam_order_2)

    def dopplerPoints(self):
        """
        Doppler axis of the sweep as (velocity_kmh or None, v_max_hz) pairs.
        An explicit v_max_hz list takes precedence over velocities.
        """
        if self.v_max_hz:
            return [(None, float(v)) for v in self.v_max_hz]
        return [(float(v), dopplerFromVelocity(v, self.carrier_frequency_hz)) for v in self.user_velocity_kmh]


def ftpaAllocate(snr1_db, snr2_db):
    """
    Fractional transmit power allocation with the weaker user getting the
    larger share: rho1 = g2 / (g1 + g2), rho2 = g1 / (g1 + g2).
    """
    g1 = 10**(snr1_db / 10)
    g2 = 10**(snr2_db / 10)
    return g2 / (g1 + g2), g1 / (g1 + g2)


def _bool(value):
    if isinstance(value, bool):
        return value
    t = str(value).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: '{value}'")


def _number(cast):
    def parse(value):
        if isinstance(value, bool):
            raise ValueError(f"expected a number, got '{value}'")
        number = cast(value)
        if cast is int and isinstance(value, float) and number != value:
            raise ValueError(f"expected an integer, got '{value}'")
        return number
    return parse


def _text(value):
    if not isinstance(value, str):
        raise ValueError(f"expected text, got '{value}'")
    return value.strip()


def _list(cast):
    def parse(value):
        if isinstance(value, str):
            value = [item for item in value.split(",") if item.strip()]
        elif not isinstance(value, (list, tuple)):
            value = [value]
        return tuple(cast(item) for item in value)
    return parse


def _cpLength(value):
    if isinstance(value, str) and value.strip().lower() == "auto":
        return "auto"
    return _number(int)(value)


PARSERS = {
    "delay_bins": _number(int),
    "doppler_bins": _number(int),
    "cp_length": _cpLength,
    "carrier_frequency_hz": _number(float),
    "subcarrier_spacing_hz": _number(float),
    "qam_order_1": _number(int),
    "qam_order_2": _number(int),
    "channel_model": _text,
    "delay_spread_s": _number(float),
    "user_velocity_kmh": _list(_number(float)),
    "v_max_hz": _list(_number(float)),
    "snr_db_user1": _list(_number(float)),
    "snr_gap_db": _number(float),
    "algorithm1_iterations": _number(int),
    "mlsqr_iterations": _number(int),
    "mlsqr_tolerance": _number(float),
    "trials": _number(int),
    "seed": _number(int),
    "schemes": _list(_text),
    "channel_mode": _text,
    "zone_rule": _text,
    "naive_start_factor": _number(float),
    "refresh_gamma_from_solver": _bool,
    "empirical_probabilities": _bool,
    "threads": _number(int)
}


class _UniqueKeyLoader(yaml.SafeLoader):
    """Safe loader that rejects repeated mapping keys."""

    def construct_mapping(self, node, deep = False):
        seen = set()
        for key_node, _ in node.value:
            key = self.construct_object(key_node, deep = deep)
            if key in seen:
                raise yaml.constructor.ConstructorError(None, None, f"duplicate key '{key}'", key_node.start_mark)
            seen.add(key)
        return super().construct_mapping(node, deep = deep)


def parseConfigText(text, source = "<string>"):
    """
    Parse a flat YAML mapping into a dictionary of typed overrides.

    Lists may be YAML sequences or comma separated text. Numbers written
    as text (PyYAML reads 5.9e9 as a string) are converted.

    Raises
    ------
    ConfigError
        Malformed YAML, a document that is not a flat mapping, unknown
        key, duplicate key or unparsable value.

    """
    try:
        doc = yaml.load(text, Loader = _UniqueKeyLoader)
    except yaml.YAMLError as e:
        raise ConfigError(f"{source}: {e}") from e
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise ConfigError(f"{source}: expected a mapping of settings, got {type(doc).__name__}.")

    values = {}
    for key, value in doc.items():
        if key not in PARSERS:
            raise ConfigError(f"{source}: unknown key '{key}'.")
        if isinstance(value, dict):
            raise ConfigError(f"{source}: '{key}' must not be a nested mapping.")
        try:
            values[key] = PARSERS[key](value)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"{source}: bad value for '{key}': {e}") from e
    return values


def loadConfig(path = None, overrides = None):
    """
    Build a SimConfig from the defaults, an optional config file and
    optional overrides (applied last).

    Parameters
    ----------
    path : str, optional
        YAML configuration file.
    overrides : dict, optional
        Already typed values, e.g. from the command line. None values are
        skipped.

    Returns
    -------
    SimConfig

    """
    values = {}
    if path is not None:
        try:
            with open(path, "r", encoding = "utf-8") as f:
                text = f.read()
        except OSError as e:
            raise ConfigError(f"Cannot read config file {path}: {e}") from e
        values.update(parseConfigText(text, source = str(path)))
        logger.info(f"Loaded {len(values)} settings from {path}")

    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in PARSERS:
            raise ConfigError(f"Unknown override '{key}'.")
        values[key] = value

    try:
        return SimConfig(**values)
    except TypeError as e:
        raise ConfigError(str(e)) from e


def describeConfig(cfg):
    """Resolved configuration as (key, value, pretty) rows for display."""
    frame = cfg.frame()
    rows = []
    for f in fields(SimConfig):
        rows.append((f.name, getattr(cfg, f.name), ""))
    rows.append(("resolved_cp_length", frame.n_cp, f"{frame.n_cp} samples"))
    rows.append(("sampling_period", frame.t_s, formatPrefix(frame.t_s, "s", precision = 4)))
    rows.append(("bandwidth", frame.M * frame.delta_f, formatPrefix(frame.M * frame.delta_f, "Hz", precision = 3)))
    for velocity, nu in cfg.dopplerPoints():
        label = "v_max" if velocity is None else f"v_max@{velocity:g}km/h"
        rows.append((label, nu, formatPrefix(nu, "Hz", precision = 4)))
    rows.append(("rho_at_gap", ftpaAllocate(0.0, cfg.snr_gap_db), ""))
    return rows
