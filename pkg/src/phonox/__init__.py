"""phonox: design toolkit for release-free piezo-optomechanical transducers.

Cross-section elastic/piezoelectric/optical mode solvers with perfectly
matched layers, a reduced one-dimensional cavity model, opto- and
electromechanical coupling-rate integrals, transducer figures of merit,
constrained design optimization, and disorder robustness studies.
"""

__version__ = "0.1.0"
