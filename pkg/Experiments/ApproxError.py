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

import numpy as np
import pandas as pd
from tqdm import tqdm

from Link.Channel import addAwgn, applyLtvChannel, sampleTdlc, snrToSigma2
from Link.Waveform import effectiveChannelOperator, firstColumn, otfsDemodulate, otfsModulate
from Receivers.MLSQR import EXACT_SIZE_CAP, approxMse, bccbEigenvalues, exactEqualizerRecursion, exactMse, lsqrSolve
from Utilities.Errors import SizeCapError
from Utilities.ResultsIO import writeFrameCsv


def gammaError(exact_gamma, approx_gamma):
    """Mean squared deviation of the per-symbol MSE from the scalar approximation."""
    exact_gamma = np.asarray(exact_gamma, dtype = float)
    return float(np.mean(np.abs(exact_gamma - approx_gamma)**2))


class ApproxErrorExperiment():
    def __init__(self, cfg, size_cap = EXACT_SIZE_CAP):
        """
        Compare the exact per-symbol MSE with its circulant approximation
        over channel realizations at each velocity of the sweep.

        Parameters
        ----------
        cfg : SimConfig
            Resolved configuration. Uses the first entry of snr_db_user1 and
            trials as the number of realizations per velocity.
        size_cap : int, optional
            Largest MN accepted by the exact path. The default is 256.

        Raises
        ------
        SizeCapError
            If the frame exceeds size_cap.

        Returns
        -------
        None.

        """
        self.logger = logging.getLogger('OTFS-NOMA.ApproxError')
        self.logger.propagate = True
        self.logger.setLevel(logging.NOTSET)
        self.logger.debug("Logger initialized.")

        self.cfg = cfg
        self.frame = cfg.frame()
        if self.frame.symbols > size_cap:
            raise SizeCapError(f"Approximation error needs the exact MSE, MN = {self.frame.symbols} exceeds {size_cap}.")
        self.size_cap = size_cap
        self.c1, _ = cfg.constellations()
        self.snr_db = float(cfg.snr_db_user1[0])
        self.sigma2 = snrToSigma2(self.snr_db)

    def measureRealization(self, v_max_hz, rng):
        """
        Draw one channel and frame, run one solve and return the error
        between the exact and approximate MSE of that solve.
        """
        frame, cfg = self.frame, self.cfg
        ch = sampleTdlc(cfg.delay_spread_s, v_max_hz, frame, rng, evolution = cfg.channel_mode)
        x = self.c1.randomSymbols(frame.symbols, rng)
        y = otfsDemodulate(addAwgn(applyLtvChannel(otfsModulate(x, frame), ch, frame), self.sigma2, rng), frame)

        op = effectiveChannelOperator(ch, frame)
        _, hist = lsqrSolve(op, y, self.sigma2, max_iter = cfg.mlsqr_iterations, tol = cfg.mlsqr_tolerance)
        if hist.iterations == 0:
            return 0.0

        exact = exactMse(exactEqualizerRecursion(hist, op, self.sigma2, size_cap = self.size_cap), op, self.sigma2)
        approx = approxMse(hist, bccbEigenvalues(firstColumn(op), frame.M, frame.N), self.sigma2, frame.M, frame.N)
        return gammaError(exact.gamma, approx.gamma)

    def iterateVelocities(self, out = None, progress = True):
        """
        Average the approximation error over cfg.trials realizations per
        velocity.

        Parameters
        ----------
        out : str, optional
            CSV path. If not None, the table is written there. The default is None.
        progress : bool, optional
            Show progress bars. The default is True.

        Returns
        -------
        df : pandas.DataFrame
            One row per velocity with columns velocity_kmh, v_max_hz,
            e_gamma and realizations.

        """
        tmp = []
        for velocity, nu in self.cfg.dopplerPoints():
            errors = []
            for r in tqdm(range(self.cfg.trials), desc = f"v_max {nu:.1f} Hz", disable = not progress):
                # Same realizations at every velocity
                rng = np.random.default_rng(np.random.SeedSequence(self.cfg.seed, spawn_key = (r,)))
                errors.append(self.measureRealization(nu, rng))
            tmp.append({
                "velocity_kmh": velocity,
                "v_max_hz": nu,
                "e_gamma": float(np.mean(errors)),
                "realizations": len(errors)
            })
            self.logger.info(f"v_max = {nu:.1f} Hz: e_gamma = {tmp[-1]['e_gamma']:.3e}")

        df = pd.DataFrame.from_dict(tmp)
        if out is not None:
            writeFrameCsv(df, out)
        return df
