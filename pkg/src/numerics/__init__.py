# Numerical building blocks: special functions, random streams, quadrature
