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

class OtfsNomaError(Exception):
    """Base class for every error raised by the simulator."""


class ConfigError(OtfsNomaError):
    """Invalid or inconsistent configuration (maps to exit code 1)."""


class DimensionError(OtfsNomaError, ValueError):
    """Array lengths or grid sizes that do not fit together."""


class DomainError(OtfsNomaError, ValueError):
    """Argument outside the mathematical domain of a function."""


class BracketError(OtfsNomaError):
    """Root finder called on an interval without a sign change."""


class SizeCapError(OtfsNomaError):
    """Exact computation refused because the grid is too large."""
