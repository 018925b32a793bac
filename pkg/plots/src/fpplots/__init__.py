"""Figure rendering for fpsampler run artifacts.

Pure consumers of the run-directory file formats (loss_history.csv,
samples*.csv, metrics.json, mc_convergence.csv); no solver code is
imported or re-implemented here.
"""

__version__ = "0.1.0"
