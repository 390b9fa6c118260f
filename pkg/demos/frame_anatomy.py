"""
What the frame metrics mean
===========================

Compares three very different frames through the same metrics report:
an orthonormal basis, a simplex equiangular tight frame, and a frame
produced by the design loop.
"""

import numpy as np

from incoframes import (
    DesignConfig,
    Frame,
    certify_etf,
    frame_metrics,
    make_simplex_etf,
    run,
)


def describe(name, frame):
    fm = frame_metrics(frame)
    cert = certify_etf(frame)
    cap = "unbounded" if fm.sparsity_cap is None else fm.sparsity_cap
    print(f"--- {name} ({frame.m} x {frame.n_vectors})")
    print(f"coherence {fm.mu:.4f}   average |corr| {fm.mu_avg:.4f}   welch {fm.welch:.4f}")
    floor = frame.n_vectors**2 / frame.m
    print(f"frame potential {fm.frame_potential:.4f} (tight floor {floor:.4f})")
    print(f"sparsity cap {cap}   equiangular {cert.is_equiangular}   tight {cert.is_tight}")
    print()


# An orthonormal basis has zero coherence and no sparsity cap: every
# signal is its own best sparse representation.
describe("orthonormal basis", Frame(np.eye(6)))

# The simplex ETF meets the Welch bound exactly: all pairwise
# correlations equal 1/m, and the certificate confirms both properties.
describe("simplex ETF", make_simplex_etf(6))

# A designed frame does not reach the bound (no ETF exists for most
# shapes) but closes most of the gap from the random start.
frame, report = run(DesignConfig(m=6, n_vectors=16, sweeps=60, seed=3))
describe("designed (6, 16)", frame)
print(f"the run started at coherence {report.initial_coherence:.4f}")
