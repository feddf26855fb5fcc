"""
Finite-difference gradient checker.

A probe is a small random instance of one operator or composite in 64-bit
mode.  The checker contracts the output with a fixed random tensor ``R``
so the scalar loss is ``sum(R * out)``; the analytic gradient is the probe's
backward of ``R`` and the numeric one is the central difference

    (loss(x + h) - loss(x - h)) / 2h

for every element of every input and parameter.  The reported error for
one element is ``|analytic - numeric| / max(1, |numeric|)``.
"""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from typing import ClassVar, Dict, Iterable, List, Optional, Type

import numpy as np

from core.parameters import ParameterSet
from dto.reports import GradcheckReport
from errors import UnregisteredOperatorError

logger = logging.getLogger(__name__)

DEFAULT_STEP = 1e-4
DEFAULT_TOLERANCE = 1e-3
DEFAULT_PROBES = 5
MAX_PROBE_ELEMENTS = 10_000


class GradProbe(ABC):
    """
    One random instance of a differentiable computation.

    Subclasses fill ``self.inputs`` (name -> float64 array, the tensors the
    gradient is checked against) and ``self.params`` in ``__init__``.
    Anything else the computation needs (indices, coordinates, masks) is
    held as a plain attribute and treated as a constant.

    ``forward`` must build fresh operators on every call and read the
    current values of ``inputs`` / ``params``; ``backward`` returns one
    gradient per entry of ``inputs`` and accumulates parameter gradients.
    """

    kind: ClassVar[str] = ""
    tolerance: ClassVar[float] = DEFAULT_TOLERANCE
    probes: ClassVar[int] = DEFAULT_PROBES

    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self.inputs: Dict[str, np.ndarray] = {}
        self.params = ParameterSet()

    @abstractmethod
    def forward(self) -> np.ndarray:
        ...

    @abstractmethod
    def backward(self, upstream: np.ndarray) -> Dict[str, np.ndarray]:
        ...

    @property
    def element_count(self) -> int:
        return sum(a.size for a in self.inputs.values()) + self.params.total_size


# -------------------------------------------------------------------
# Registry:  probe kind -> probe class
# -------------------------------------------------------------------

_PROBES: Dict[str, Type[GradProbe]] = {}


def register_probe(cls: Type[GradProbe]) -> Type[GradProbe]:
    if not cls.kind:
        raise ValueError(f"{cls.__name__} has no kind")
    _PROBES[cls.kind] = cls
    return cls


def probe_kinds() -> List[str]:
    return list(_PROBES)


def get_probe(kind: str) -> Type[GradProbe]:
    cls = _PROBES.get(kind)
    if cls is None:
        raise UnregisteredOperatorError(kind)
    return cls


# -------------------------------------------------------------------
# Checking
# -------------------------------------------------------------------


def _max_relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    if numeric.size == 0:
        return 0.0
    err = np.abs(analytic - numeric) / np.maximum(1.0, np.abs(numeric))
    return float(err.max())


def check_probe(probe: GradProbe, step: float = DEFAULT_STEP) -> Dict[str, float]:
    """Worst relative error per input and parameter of one probe."""
    if probe.element_count > MAX_PROBE_ELEMENTS:
        raise ValueError(
            f"{probe.kind}: probe has {probe.element_count} elements, "
            f"limit is {MAX_PROBE_ELEMENTS}"
        )
    out = probe.forward()
    contraction = probe.rng.standard_normal(np.shape(out))

    def loss() -> float:
        return float(np.sum(contraction * probe.forward()))

    probe.params.zero_grad()
    analytic_inputs = probe.backward(contraction)
    analytic_params = {p.name: p.grad.copy() for p in probe.params}

    errors: Dict[str, float] = {}
    targets = [(name, arr, analytic_inputs[name]) for name, arr in probe.inputs.items()]
    targets += [(p.name, p.value, analytic_params[p.name]) for p in probe.params]
    for name, arr, analytic in targets:
        numeric = np.zeros(arr.shape, dtype=np.float64)
        for i in range(arr.size):
            orig = arr.flat[i]
            arr.flat[i] = orig + step
            plus = loss()
            arr.flat[i] = orig - step
            minus = loss()
            arr.flat[i] = orig
            numeric.flat[i] = (plus - minus) / (2.0 * step)
        errors[name] = _max_relative_error(np.asarray(analytic, dtype=np.float64), numeric)
    return errors


def gradcheck(
    kind: str,
    probe: Optional[GradProbe] = None,
    step: float = DEFAULT_STEP,
    tolerance: Optional[float] = None,
    probes: Optional[int] = None,
    seed: int = 0,
) -> GradcheckReport:
    """
    Check one registered kind over several random probes (or one given probe).

    Errors are the maximum over probes, per input / parameter name.
    """
    cls = get_probe(kind) if probe is None else type(probe)
    tol = cls.tolerance if tolerance is None else tolerance
    count = 1 if probe is not None else (probes or cls.probes)

    worst: Dict[str, float] = {}
    for i in range(count):
        instance = probe if probe is not None else cls(np.random.default_rng([seed, i]))
        for name, err in check_probe(instance, step).items():
            worst[name] = max(err, worst.get(name, 0.0))
    report = GradcheckReport(kind=kind, errors=worst, tolerance=tol, probes=count)
    logger.debug("gradcheck %s: max error %.3g over %d probe(s)", kind, report.max_error, count)
    return report


def run_suite(
    kinds: Optional[Iterable[str]] = None,
    step: float = DEFAULT_STEP,
    probes: Optional[int] = None,
    seed: int = 0,
) -> List[GradcheckReport]:
    """Check every registered kind (or the named ones), in registration order."""
    selected = list(kinds) if kinds else probe_kinds()
    reports = []
    for kind in selected:
        report = gradcheck(kind, step=step, probes=probes, seed=seed)
        if not report.passed:
            logger.warning(
                "gradcheck FAIL %s: max error %.3g > %.1e", kind, report.max_error, report.tolerance
            )
        reports.append(report)
    return reports
