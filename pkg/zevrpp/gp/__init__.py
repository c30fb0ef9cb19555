"""Log-convex modeling: expressions, constraints, solvers and surrogate fits."""
