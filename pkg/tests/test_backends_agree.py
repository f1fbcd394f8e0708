"""Weyl engine vs dense Fock backend on identical single-mode environments.

The full cross-backend sweep (two-mode baths, three temperatures, 50-point
grids) lives in the acceptance suite; this module keeps a quick smoke version
in the default test run.
"""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from dephlab import (OracleBackend, WeylBackend, build_fock, grid_bath,
                     scheme_point, subset_rescaled)

DELTA_MEV = 1000.0

NUMERIC_FIELDS = ("a", "b01", "b10", "b", "p_plus", "p_minus", "coherence",
                  "d_plus", "d_minus", "g_plus", "g_minus", "g_av", "g_norm")


@pytest.mark.parametrize("temperature", [0.0, 34.0])
def test_single_mode_scheme_points_agree(material, temperature):
    bath = subset_rescaled(grid_bath(material, temperature), [1])
    weyl = WeylBackend(bath.as_ref())
    fock = OracleBackend(build_fock(bath))
    rng = np.random.default_rng(17)
    taus = np.concatenate(([0.0], rng.uniform(0.05, 2.0, 5)))
    times = rng.uniform(0.0, 6.0, 2)
    for tau in taus:
        for t in times:
            pw = scheme_point(weyl, DELTA_MEV, float(tau), float(t))
            pf = scheme_point(fock, DELTA_MEV, float(tau), float(t))
            assert pw.plus_flag == pf.plus_flag
            assert pw.minus_flag == pf.minus_flag
            assert pw.norm_flag == pf.norm_flag
            for name in NUMERIC_FIELDS:
                vw = getattr(pw, name)
                vf = getattr(pf, name)
                if isinstance(vw, float) and np.isnan(vw):
                    assert np.isnan(vf)
                    continue
                assert_allclose(vf, vw, atol=1e-8,
                                err_msg=f"{name} at tau={tau} t={t} "
                                        f"T={temperature}")


def test_raw_traces_agree(material):
    bath = subset_rescaled(grid_bath(material, 34.0), [1])
    weyl = WeylBackend(bath.as_ref())
    fock = OracleBackend(build_fock(bath))
    for i in (0, 1):
        for j in (0, 1):
            for tau, t in ((0.3, 1.1), (1.0, 4.0)):
                assert_allclose(fock.cross_trace(i, j, tau, t),
                                weyl.cross_trace(i, j, tau, t), atol=1e-9)
