"""Model-free benchmark toolkit for vision-based tactile sensor gels.

Library layout:

- ``core``       shared data types, protocol presets, run manifests
- ``manifest``   run-directory save/load (manifest.json + PNG frames)
- ``kernels``    hot loops (compiled extension or numpy fallback)
- ``metrics``    frame averaging, wear MAE series, force-sensitivity curves
- ``spatial``    bandpass + per-row PSD + two-bin SNR pipeline
- ``simulator``  synthetic sensor frames, wear injection, ground truth
- ``cli``        the ``tactile-bench`` command line front end
"""

__version__ = "0.1.0"
