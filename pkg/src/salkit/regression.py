"""Graph-Laplacian regularized kernel regression with a closed-form solve.

The objective over coefficient vectors a is

    F(a) = (1/l) ||y - J K a||^2 + gamma_A a'Ka + (gamma_I/(l+u)^2) a'KLKa

where the data term covers the first l (labeled) nodes via the selector
J = diag(1,...,1,0,...,0), the second term is the squared RKHS norm of the
regressor, and the third penalizes score differences across graph edges.
The minimizer has the closed form

    a* = (J K + gamma_A l I + (gamma_I l / (l+u)^2) L K)^{-1} y,

which is exact when the unlabeled entries of y are zero; that requirement is
enforced as a type invariant so there is no silent mismatch between y and Jy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import SuperpixelGraph, gram_matrix

CONDITION_LIMIT = 1e12


class NumericalError(RuntimeError):
    """Raised when the linear system is too ill-conditioned to trust."""

    def __init__(self, condition):
        super().__init__(f"system condition estimate {condition:.3e} exceeds {CONDITION_LIMIT:.0e}")
        self.condition = condition


@dataclass(frozen=True)
class RegressionProblem:
    """Seeded regression instance in the first-l-labeled ordering.

    y : length-n seed scores in [-1, 1]; entries at index >= l must be 0
    l : number of labeled nodes (the first l indices)
    gamma_a : ambient (RKHS norm) trade-off, strictly positive
    gamma_i : Laplacian smoothness trade-off, non-negative
    """

    graph: SuperpixelGraph
    y: np.ndarray
    l: int
    gamma_a: float = 1e-6
    gamma_i: float = 1.0

    def __post_init__(self):
        n = self.graph.n
        y = np.ascontiguousarray(self.y, dtype=np.float64)
        if y.shape != (n,):
            raise ValueError(f"y must have length {n}, got shape {y.shape}")
        if not 1 <= self.l <= n:
            raise ValueError(f"l must be in [1, {n}], got {self.l}")
        if np.abs(y).max() > 1.0:
            raise ValueError("seed scores must lie in [-1, 1]")
        if self.l < n and np.any(y[self.l :] != 0.0):
            raise ValueError("unlabeled seed entries must be exactly 0")
        if self.gamma_a <= 0:
            raise ValueError(f"gamma_a must be strictly positive, got {self.gamma_a}")
        if self.gamma_i < 0:
            raise ValueError(f"gamma_i must be non-negative, got {self.gamma_i}")
        y.setflags(write=False)
        object.__setattr__(self, "y", y)

    @property
    def n(self):
        return self.graph.n


@dataclass(frozen=True)
class RegressionSolution:
    """Coefficients a* and the fitted node scores g = K a*."""

    alpha: np.ndarray
    g: np.ndarray

    def __post_init__(self):
        if not (np.all(np.isfinite(self.alpha)) and np.all(np.isfinite(self.g))):
            raise ValueError("solution must be finite")
        for name in ("alpha", "g"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def system_matrix(problem):
    """J K + gamma_a l I + (gamma_i l / n^2) L K."""
    g = problem.graph
    n, l = problem.n, problem.l
    A = g.K.copy()
    A[l:, :] = 0.0
    A += problem.gamma_a * l * np.eye(n)
    if problem.gamma_i != 0.0:
        A += (problem.gamma_i * l / n**2) * (g.L @ g.K)
    return A


def solve(problem):
    """Closed-form coefficients via a dense partial-pivot LU solve."""
    A = system_matrix(problem)
    condition = np.linalg.cond(A)
    if not np.isfinite(condition) or condition > CONDITION_LIMIT:
        raise NumericalError(condition)
    alpha = np.linalg.solve(A, problem.y)
    return RegressionSolution(alpha=alpha, g=problem.graph.K @ alpha)


def objective(problem, alpha):
    """Evaluate the regularized objective F at the given coefficients."""
    g = problem.graph
    n, l = problem.n, problem.l
    alpha = np.asarray(alpha, dtype=np.float64)
    fitted = g.K @ alpha
    residual = problem.y.copy()
    residual[:l] -= fitted[:l]
    data = residual @ residual / l
    ambient = problem.gamma_a * (alpha @ fitted)
    smooth = (problem.gamma_i / n**2) * (fitted @ (g.L @ fitted))
    return float(data + ambient + smooth)


def gradient(problem, alpha):
    """Gradient of the objective; zero (to solver accuracy) at a*."""
    g = problem.graph
    n, l = problem.n, problem.l
    alpha = np.asarray(alpha, dtype=np.float64)
    fitted = g.K @ alpha
    masked = fitted.copy()
    masked[l:] = 0.0
    grad = (2.0 / l) * (g.K @ (np.where(np.arange(n) < l, masked - problem.y, 0.0)))
    grad += 2.0 * problem.gamma_a * fitted
    grad += (2.0 * problem.gamma_i / n**2) * (g.K @ (g.L @ fitted))
    return grad


def stationarity_residual(problem, solution):
    """Infinity norm of the gradient at the solution."""
    return float(np.abs(gradient(problem, solution.alpha)).max())


def predict(solution, graph, query_features):
    """Score arbitrary feature vectors: sum_i alpha_i K(x, x_i)."""
    query = np.atleast_2d(np.asarray(query_features, dtype=np.float64))
    if query.shape[1] != graph.features.shape[1]:
        raise ValueError("query feature dimension differs from training features")
    sq = ((query[:, None, :] - graph.features[None, :, :]) ** 2).sum(axis=2)
    return np.exp(-sq / graph.rho) @ solution.alpha


def _permuted_graph(graph, perm):
    idx = np.ix_(perm, perm)
    return SuperpixelGraph(
        W=graph.W[idx],
        K=graph.K[idx],
        L=graph.L[idx],
        rho=graph.rho,
        features=graph.features[perm],
    )


def solve_with_labels(graph, labeled, values, gamma_a=1e-6, gamma_i=1.0):
    """Solve with an arbitrary labeled-index set.

    Internally permutes the nodes so the labeled ones come first, solves, and
    returns (alpha, g) back in the original node order.
    """
    labeled = np.asarray(labeled, dtype=np.int64)
    values = np.asarray(values, dtype=np.float64)
    if labeled.size != values.size:
        raise ValueError("labeled indices and values must pair up")
    if labeled.size == 0:
        raise ValueError("at least one labeled node is required")
    if np.unique(labeled).size != labeled.size:
        raise ValueError("labeled indices must be distinct")
    n = graph.n
    mask = np.zeros(n, dtype=bool)
    mask[labeled] = True
    perm = np.concatenate([labeled, np.nonzero(~mask)[0]])

    y = np.zeros(n)
    y[: labeled.size] = values
    problem = RegressionProblem(
        graph=_permuted_graph(graph, perm),
        y=y,
        l=int(labeled.size),
        gamma_a=gamma_a,
        gamma_i=gamma_i,
    )
    sol = solve(problem)
    alpha = np.empty(n)
    g = np.empty(n)
    alpha[perm] = sol.alpha
    g[perm] = sol.g
    return alpha, g


__all__ = [
    "CONDITION_LIMIT",
    "NumericalError",
    "RegressionProblem",
    "RegressionSolution",
    "gram_matrix",
    "system_matrix",
    "solve",
    "objective",
    "gradient",
    "stationarity_residual",
    "predict",
    "solve_with_labels",
]
