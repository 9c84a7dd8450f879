"""
Perturbed power iteration for configuration rankings.

For a shifted configuration with sequence (M_0, ..., M_{k-1}) the solver
iterates r <- M(tau) r / ||M(tau) r||_1 with
M(tau) = (M_0 + tau I)(M_1 + tau I)...(M_{k-1} + tau I), halving tau
between stages, and then propagates r_0 around the ring.
"""
import enum
import logging
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from configurations import ShiftedConfiguration
from multiplex import DimensionError, Layer, MultiplexNetwork, ScoreVector

logger = logging.getLogger(__name__)

Chain = Sequence[Tuple[Layer, bool]]
LayerSource = Union[MultiplexNetwork, Sequence[Layer]]


class SettingsError(ValueError):
    """Raised for invalid solver settings."""


class NonConvergenceError(RuntimeError):
    """Raised when the outer tau-halving loop exhausts its cap."""

    def __init__(self, message: str, trace: List['TauStage']):
        super().__init__(message)
        self.trace = trace


class SolverInvariantError(RuntimeError):
    """Raised when an iterate vanishes at tau > 0, which M(tau) rules out."""


class EvalMode(str, enum.Enum):
    MATVEC_CHAIN = 'matvec-chain'
    EXPLICIT_PRODUCT = 'explicit-product'


@dataclass(frozen=True)
class SolverSettings:
    tau0: float = 0.5
    inner_tol: float = 1e-13
    outer_tol: float = 1e-10
    max_inner_iters: int = 10_000
    max_outer_halvings: int = 60
    eval_mode: EvalMode = EvalMode.MATVEC_CHAIN
    halving_factor: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, 'eval_mode', EvalMode(self.eval_mode))
        if not 0 < self.tau0 < 1:
            raise SettingsError(f"tau0 must lie in (0, 1), got {self.tau0}")
        if not (self.inner_tol > 0 and self.outer_tol > 0):
            raise SettingsError("tolerances must be positive")
        if self.max_inner_iters < 1 or self.max_outer_halvings < 1:
            raise SettingsError("iteration caps must be at least 1")
        if not 0 < self.halving_factor < 1:
            raise SettingsError(f"halving factor must lie in (0, 1), got {self.halving_factor}")

    def to_dict(self) -> dict:
        data = asdict(self)
        data['eval_mode'] = self.eval_mode.value
        return data

    @classmethod
    def from_dict(cls, data: dict) -> 'SolverSettings':
        return cls(**data)


@dataclass(frozen=True)
class TauStage:
    """One tau stage: fixed point diagnostics for a single perturbation value."""
    tau: float
    inner_iterations: int
    l1_delta: float
    eigenvalue: float
    inner_converged: bool


@dataclass(frozen=True, eq=False)
class SolveReport:
    rankings: List[ScoreVector]
    final_tau: float
    per_tau_trace: List[TauStage]
    principal_eigenvalue_estimate: float
    configuration: str = ""
    propagation_norms: List[float] = field(default_factory=list)

    @property
    def total_iterations(self) -> int:
        return sum(stage.inner_iterations for stage in self.per_tau_trace)

    def to_dict(self, vertex_ids: Optional[Sequence[int]] = None, include_trace: bool = True) -> dict:
        """
        JSON-ready form. Field names are stable and documented in docs/FORMATS.md.
        """
        data = {
            'configuration': self.configuration,
            'rankings': [r.to_list() for r in self.rankings],
            'final_tau': self.final_tau,
            'principal_eigenvalue': self.principal_eigenvalue_estimate,
        }
        if vertex_ids is not None:
            data['vertex_ids'] = list(vertex_ids)
        if include_trace:
            data['trace'] = [asdict(stage) for stage in self.per_tau_trace]
            data['propagation_norms'] = list(self.propagation_norms)
        return data


@dataclass(frozen=True, eq=False)
class ProbePoint:
    halving: int
    tau: float
    vector: np.ndarray
    l1_error: float
    inner_iterations: int

    @property
    def error_over_tau(self) -> float:
        return self.l1_error / self.tau


def _layers_of(source: LayerSource) -> Sequence[Layer]:
    if isinstance(source, MultiplexNetwork):
        return source.layers
    return list(source)


def build_chain(source: LayerSource, sc: ShiftedConfiguration) -> List[Tuple[Layer, bool]]:
    """Resolve the written sequence of a shifted configuration to (layer, transposed) pairs."""
    layers = _layers_of(source)
    sc.check_layers(len(layers))
    return [(layers[atom.layer], atom.transposed) for atom in sc.sequence]


def _chain_size(chain: Chain) -> int:
    sizes = {layer.n for layer, _ in chain}
    if len(sizes) != 1:
        raise DimensionError(f"chain mixes vertex counts {sorted(sizes)}")
    return sizes.pop()


def explicit_product(chain: Chain, tau: float) -> np.ndarray:
    """Dense M(tau) = prod_s (M_s + tau I), multiplied left to right."""
    n = _chain_size(chain)
    identity = np.eye(n)
    product = identity.copy()
    for layer, transposed in chain:
        product = product @ (layer.to_dense(transposed) + tau * identity)
    return product


def apply_perturbed_chain(seq: Chain, tau: float, v: Sequence[float],
                          eval_mode: EvalMode = EvalMode.MATVEC_CHAIN) -> np.ndarray:
    """
    Compute M(tau)·v.

    In matvec-chain mode the factors are applied right to left,
    v <- M_s v + tau v for s = k-1 ... 0, so no matrix product is formed.

    Raises:
        DimensionError: If v does not match the layers' vertex count
    """
    if tau < 0:
        raise SettingsError("tau must be nonnegative")
    n = _chain_size(seq)
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.shape[0] != n:
        raise DimensionError(f"vector of length {v.shape[0] if v.ndim else 0} does not match n={n}")
    if EvalMode(eval_mode) is EvalMode.EXPLICIT_PRODUCT:
        return explicit_product(seq, tau) @ v
    out = v.copy()
    for layer, transposed in reversed(seq):
        out = layer.operator(transposed).matvec(out) + tau * out
    return np.asarray(out, dtype=float).ravel()


class _PerturbedOperator:
    """M(tau) for one stage, with the explicit product cached when requested."""

    def __init__(self, chain: Chain, tau: float, eval_mode: EvalMode):
        self.chain = chain
        self.tau = tau
        self.eval_mode = eval_mode
        self._dense = explicit_product(chain, tau) if eval_mode is EvalMode.EXPLICIT_PRODUCT else None

    def __call__(self, v: np.ndarray) -> np.ndarray:
        if self._dense is not None:
            return self._dense @ v
        return apply_perturbed_chain(self.chain, self.tau, v)


def _power_stage(op: _PerturbedOperator, start: np.ndarray,
                 settings: SolverSettings) -> Tuple[np.ndarray, int, float, bool]:
    r = start
    for iteration in range(1, settings.max_inner_iters + 1):
        w = op(r)
        norm = w.sum()
        if not norm > 0:
            raise SolverInvariantError(f"iterate vanished at tau={op.tau!r}")
        w = w / norm
        delta = np.abs(w - r).sum()
        r = w
        if delta <= settings.inner_tol:
            return r, iteration, float(op(r).sum()), True
    logger.warning("inner loop hit %d iterations at tau=%g", settings.max_inner_iters, op.tau)
    return r, settings.max_inner_iters, float(op(r).sum()), False


def _run_stages(chain: Chain, settings: SolverSettings,
                extra_halvings: int = 0) -> Tuple[List[np.ndarray], List[TauStage], bool]:
    n = _chain_size(chain)
    r = np.full(n, 1.0 / n)
    previous = r
    tau = settings.tau0
    vectors: List[np.ndarray] = []
    trace: List[TauStage] = []
    converged = False
    remaining_extra = extra_halvings
    for halving in range(settings.max_outer_halvings + extra_halvings):
        op = _PerturbedOperator(chain, tau, settings.eval_mode)
        r, iterations, eigenvalue, inner_ok = _power_stage(op, r, settings)
        delta = float(np.abs(r - previous).sum())
        vectors.append(r)
        trace.append(TauStage(tau=tau, inner_iterations=iterations, l1_delta=delta,
                              eigenvalue=eigenvalue, inner_converged=inner_ok))
        logger.debug("stage %d: tau=%g iters=%d delta=%.3e lambda=%.6g",
                     halving, tau, iterations, delta, eigenvalue)
        if converged:
            remaining_extra -= 1
            if remaining_extra <= 0:
                break
        elif delta <= settings.outer_tol:
            converged = True
            if extra_halvings == 0:
                break
        elif halving + 1 >= settings.max_outer_halvings:
            break
        previous = r
        tau *= settings.halving_factor
    return vectors, trace, converged


def _propagate(chain: Chain, r0: np.ndarray, tau: float) -> Tuple[List[np.ndarray], List[float]]:
    k = len(chain)
    rankings: List[Optional[np.ndarray]] = [None] * k
    rankings[0] = r0
    norms: List[float] = []
    current = r0
    for s in range(k - 1, 0, -1):
        layer, transposed = chain[s]
        w = np.asarray(layer.operator(transposed).matvec(current), dtype=float).ravel() + tau * current
        norm = float(w.sum())
        if not norm > 0:
            raise SolverInvariantError(f"propagation vanished at step {s}, tau={tau!r}")
        current = w / norm
        rankings[s] = current
        norms.append(norm)
    return rankings, norms


def propagate_scores(m: LayerSource, sc: ShiftedConfiguration, r0: ScoreVector,
                     tau_final: float) -> List[ScoreVector]:
    """
    Recover r_{k-1}, ..., r_1 from r_0 with the perturbed matrices at tau_final.

    r_{s}(tau) = M_s(tau) r_{s+1}(tau) / ||M_s(tau) r_{s+1}(tau)||_1, indices mod k.
    """
    if not tau_final > 0:
        raise SettingsError("propagation needs tau_final > 0")
    chain = build_chain(m, sc)
    rankings, _ = _propagate(chain, r0.values, tau_final)
    return [ScoreVector.normalize(r) for r in rankings]


def solve(m: LayerSource, sc: ShiftedConfiguration,
          settings: Optional[SolverSettings] = None) -> SolveReport:
    """
    Compute the k ring rankings of a shifted configuration.

    Starts from the uniform vector, runs the inner power loop until the L1
    change drops to inner_tol (or the inner cap), halves tau, and stops once
    two consecutive stage fixed points are within outer_tol. Each stage is
    warm-started from the previous fixed point.

    Args:
        m: A multiplex, or a list of layer-like matrices (e.g. Google matrices)
        sc: The configuration and shift to compute
        settings: Solver settings (defaults if None)

    Returns:
        The rankings r_0 ... r_{k-1} and the per-stage trace

    Raises:
        LayerIndexError: If the configuration needs a missing layer
        NonConvergenceError: If max_outer_halvings is exhausted
    """
    settings = settings or SolverSettings()
    chain = build_chain(m, sc)
    vectors, trace, converged = _run_stages(chain, settings)
    if not converged:
        raise NonConvergenceError(
            f"{sc}: no convergence after {len(trace)} tau halvings "
            f"(last delta {trace[-1].l1_delta:.3e})", trace)
    final_tau = trace[-1].tau
    rankings, norms = _propagate(chain, vectors[-1], final_tau)
    return SolveReport(
        rankings=[ScoreVector.normalize(r) for r in rankings],
        final_tau=final_tau,
        per_tau_trace=trace,
        principal_eigenvalue_estimate=trace[-1].eigenvalue,
        configuration=str(sc),
        propagation_norms=norms,
    )


def convergence_probe(m: LayerSource, sc: ShiftedConfiguration,
                      settings: Optional[SolverSettings] = None,
                      reference_halvings: int = 12) -> List[ProbePoint]:
    """
    Error curve ||v(tau) - v(tau_ref)||_1 over the solver's tau stages.

    After the solver's own stopping point the probe keeps halving for
    reference_halvings more stages; the last of those stands in for v(0).
    Only the solver's stages are reported.

    Raises:
        NonConvergenceError: As solve
    """
    settings = settings or SolverSettings()
    chain = build_chain(m, sc)
    vectors, trace, converged = _run_stages(chain, settings, extra_halvings=reference_halvings)
    if not converged:
        raise NonConvergenceError(f"{sc}: probe did not converge", trace)
    reported = len(trace) - reference_halvings if reference_halvings else len(trace)
    reference = vectors[-1]
    return [
        ProbePoint(halving=i, tau=trace[i].tau, vector=vectors[i],
                   l1_error=float(np.abs(vectors[i] - reference).sum()),
                   inner_iterations=trace[i].inner_iterations)
        for i in range(reported)
    ]


def probe_records(points: Sequence[ProbePoint]) -> List[Dict[str, float]]:
    return [
        {'halving': p.halving, 'tau': p.tau, 'l1_error': p.l1_error,
         'error_over_tau': p.error_over_tau, 'inner_iterations': p.inner_iterations}
        for p in points
    ]
