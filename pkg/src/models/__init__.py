# Model-specific checks: conjugate models, Laplace prior, trine measurement
