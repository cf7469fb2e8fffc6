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
import time
from dataclasses import dataclass
from functools import partial
from multiprocessing import Pool

import numpy as np
from tqdm import tqdm

from Link.Channel import addAwgn, applyLtvChannel, sampleTdlc, snrToSigma2
from Link.Waveform import (effectiveChannelDense, effectiveChannelOperator, firstColumn, otfsDemodulate,
                           otfsModulate, superimpose)
from Receivers.Baseline import mmseMatrix, mmseSicDetect
from Receivers.Detector import DetectorConfig, RZDetector
from Utilities.Config import ftpaAllocate
from Utilities.ResultsIO import ResultRecord, recordsToFrame, writeCsv
from Utilities.UnitFormatting import formatPrefix


@dataclass(frozen = True)
class SimPoint:
    """One (SNR, Doppler) point of the sweep with everything derived from it."""
    i_snr: int
    i_v: int
    snr1_db: float
    snr2_db: float
    velocity_kmh: float
    v_max_hz: float
    rho1: float
    rho2: float

    @property
    def sigma2(self):
        return {1: snrToSigma2(self.snr1_db), 2: snrToSigma2(self.snr2_db)}


def trialSeed(master, i_snr, i_v, t):
    """
    Seed of trial t at sweep point (i_snr, i_v). Depends only on the indices,
    so results do not depend on execution order or worker count.
    """
    return np.random.SeedSequence(master, spawn_key = (i_snr, i_v, t))


# Per-process experiment for pool workers
_worker = None


def _initWorker(cfg):
    global _worker
    _worker = SerExperiment(cfg)


def _trialWorker(point, t):
    return _worker.runTrial(point, np.random.default_rng(trialSeed(_worker.cfg.seed, point.i_snr, point.i_v, t)))


class SerExperiment():
    def __init__(self, cfg):
        """
        Monte Carlo symbol error rate experiment of the two-user downlink.

        Parameters
        ----------
        cfg : SimConfig
            Resolved simulation configuration.

        Returns
        -------
        None.

        """
        self.logger = logging.getLogger('OTFS-NOMA.SER')
        self.logger.propagate = True
        self.logger.setLevel(logging.NOTSET)
        self.logger.debug("Logger initialized.")

        self.cfg = cfg
        self.frame = cfg.frame()
        self.c1, self.c2 = cfg.constellations()
        self.detectors = {}
        for scheme, policy in (("proposed_optimized", "optimized"), ("proposed_naive", "naive")):
            if scheme not in cfg.schemes:
                continue
            for user in (1, 2):
                dcfg = DetectorConfig(user_i = user, K = cfg.algorithm1_iterations, threshold_policy = policy,
                                      naive_start_factor = cfg.naive_start_factor, zone_rule = cfg.zone_rule,
                                      U = cfg.mlsqr_iterations, eps = cfg.mlsqr_tolerance,
                                      refresh_gamma_from_solver = cfg.refresh_gamma_from_solver,
                                      empirical_probabilities = cfg.empirical_probabilities)
                self.detectors[(scheme, user)] = RZDetector(dcfg, self.c1, self.c2, self.frame.M, self.frame.N)

    def points(self):
        """Cartesian product of the SNR and Doppler axes."""
        pts = []
        for i_snr, snr1 in enumerate(self.cfg.snr_db_user1):
            snr2 = snr1 + self.cfg.snr_gap_db
            rho1, rho2 = ftpaAllocate(snr1, snr2)
            for i_v, (velocity, nu) in enumerate(self.cfg.dopplerPoints()):
                pts.append(SimPoint(i_snr = i_snr, i_v = i_v, snr1_db = float(snr1), snr2_db = float(snr2),
                                    velocity_kmh = velocity, v_max_hz = nu, rho1 = rho1, rho2 = rho2))
        return pts

    def runTrial(self, point, rng):
        """
        Transmit one superimposed frame and detect it at both receivers with
        every configured scheme.

        Parameters
        ----------
        point : SimPoint
            Sweep point.
        rng : numpy.random.Generator
            Random source of this trial.

        Returns
        -------
        dict
            Symbol error count keyed by (scheme, user).

        """
        frame, cfg = self.frame, self.cfg
        MN = frame.symbols

        x = {1: self.c1.randomSymbols(MN, rng), 2: self.c2.randomSymbols(MN, rng)}
        s = superimpose(otfsModulate(x[1], frame), otfsModulate(x[2], frame), point.rho1, point.rho2)

        errors = {}
        for user in (1, 2):
            sigma2 = point.sigma2[user]
            ch = sampleTdlc(cfg.delay_spread_s, point.v_max_hz, frame, rng, evolution = cfg.channel_mode)
            y = otfsDemodulate(addAwgn(applyLtvChannel(s, ch, frame), sigma2, rng), frame)
            op = effectiveChannelOperator(ch, frame)
            fc = firstColumn(op)

            for scheme in cfg.schemes:
                if scheme == "mmse_sic":
                    ctx = mmseMatrix(effectiveChannelDense(ch, frame), sigma2, user = user)
                    x_hat = mmseSicDetect(y, ctx.G, user, point.rho1, point.rho2, sigma2, self.c1, self.c2,
                                          context = ctx)
                else:
                    result = self.detectors[(scheme, user)].detect(op, y, point.rho1, point.rho2, sigma2,
                                                                   first_column = fc)
                    x_hat = result.x_hat_user
                errors[(scheme, user)] = int(np.count_nonzero(np.abs(x_hat - x[user]) > 1e-9))
        return errors

    def runPoint(self, point, progress = True):
        """
        Run all trials of one sweep point, in a worker pool when more than
        one thread is configured.

        Returns
        -------
        list of ResultRecord

        """
        cfg = self.cfg
        start = time.time()
        totals = {(scheme, user): 0 for scheme in cfg.schemes for user in (1, 2)}
        trials = range(cfg.trials)

        def accumulate(counts):
            for key, value in counts.items():
                totals[key] += value

        label = f"SNR {point.snr1_db:g} dB, {formatPrefix(point.v_max_hz, 'Hz', precision = 1)}"
        if cfg.threads > 1:
            with Pool(cfg.threads, initializer = _initWorker, initargs = (cfg,)) as pool:
                it = pool.imap(partial(_trialWorker, point), trials, chunksize = max(cfg.trials // (4 * cfg.threads), 1))
                for counts in tqdm(it, desc = label, disable = not progress):
                    accumulate(counts)
        else:
            for t in tqdm(trials, desc = label, disable = not progress):
                rng = np.random.default_rng(trialSeed(cfg.seed, point.i_snr, point.i_v, t))
                try:
                    accumulate(self.runTrial(point, rng))
                except Exception:
                    self.logger.error(f"Trial {t} at {label} failed.")
                    raise

        wall = time.time() - start
        symbols = cfg.trials * self.frame.symbols
        return [ResultRecord(snr_db = point.snr1_db if user == 1 else point.snr2_db, v_max_hz = point.v_max_hz,
                             scheme = scheme, user = user, symbol_errors = totals[(scheme, user)],
                             symbols = symbols, trials = cfg.trials, wall_time_s = wall)
                for scheme in cfg.schemes for user in (1, 2)]

    def iterateSweep(self, out = None, progress = True):
        """
        Run every sweep point.

        Parameters
        ----------
        out : str, optional
            CSV path. If not None, the records are written there. The default is None.
        progress : bool, optional
            Show progress bars. The default is True.

        Returns
        -------
        list of ResultRecord

        """
        records = []
        pts = self.points()
        self.logger.info(f"Sweeping {len(pts)} points x {self.cfg.trials} trials, schemes {', '.join(self.cfg.schemes)}")
        for point in pts:
            records.extend(self.runPoint(point, progress = progress))

        if out is not None:
            writeCsv(records, out)
        return records

    @staticmethod
    def recordsToFrame(records):
        return recordsToFrame(records)
