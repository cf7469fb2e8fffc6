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
from dataclasses import dataclass

import pandas as pd

from Utilities.Errors import OtfsNomaError

logger = logging.getLogger('OTFS-NOMA.ResultsIO')

CSV_COLUMNS = ["snr_db", "v_max_hz", "scheme", "user", "symbol_errors", "symbols", "ser", "trials", "wall_time_s"]


@dataclass(frozen = True)
class ResultRecord:
    """Symbol error count of one scheme at one user and sweep point."""
    snr_db: float
    v_max_hz: float
    scheme: str
    user: int
    symbol_errors: int
    symbols: int
    trials: int
    wall_time_s: float = 0.0

    def __post_init__(self):
        if self.symbols < 1 or not 0 <= self.symbol_errors <= self.symbols:
            raise OtfsNomaError(f"Inconsistent counts: {self.symbol_errors} errors in {self.symbols} symbols.")

    @property
    def ser(self):
        return self.symbol_errors / self.symbols

    def asDict(self):
        return {
            "snr_db": self.snr_db,
            "v_max_hz": self.v_max_hz,
            "scheme": self.scheme,
            "user": self.user,
            "symbol_errors": self.symbol_errors,
            "symbols": self.symbols,
            "ser": self.ser,
            "trials": self.trials,
            "wall_time_s": self.wall_time_s
        }


def recordsToFrame(records):
    return pd.DataFrame([r.asDict() for r in records], columns = CSV_COLUMNS)


def _writeFrame(df, path):
    try:
        df.to_csv(path, index = False)
    except OSError as e:
        raise OtfsNomaError(f"Cannot write results to {path}: {e}") from e
    logger.info(f"Wrote {len(df)} rows to {path}")


def writeCsv(records, path):
    """
    Write result records with the fixed header; SER is written in
    scientific notation with six significant digits.
    """
    df = recordsToFrame(records)
    df["ser"] = [f"{s:.5e}" for s in df["ser"]]
    _writeFrame(df, path)


def writeFrameCsv(df, path):
    """Write any result table, e.g. the approximation error sweep."""
    _writeFrame(df, path)


def readCsv(path):
    """Parse a file written by writeCsv back into ResultRecords."""
    try:
        df = pd.read_csv(path, dtype = {"scheme": str}, float_precision = "round_trip")
    except OSError as e:
        raise OtfsNomaError(f"Cannot read results from {path}: {e}") from e
    if list(df.columns) != CSV_COLUMNS:
        raise OtfsNomaError(f"{path} does not have the expected header.")

    return [
        ResultRecord(snr_db = float(row.snr_db), v_max_hz = float(row.v_max_hz), scheme = row.scheme,
                     user = int(row.user), symbol_errors = int(row.symbol_errors), symbols = int(row.symbols),
                     trials = int(row.trials), wall_time_s = float(row.wall_time_s))
        for row in df.itertuples(index = False)
    ]
