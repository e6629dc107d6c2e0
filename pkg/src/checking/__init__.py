# Conflict-check engine: Monte Carlo runner, calibration, generic checks
