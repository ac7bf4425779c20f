"""Affine lambda-equidistants of closed planar curves.

The pipeline runs from a Fourier curve through its parallel structure and
glueing schemes to traced branches with cusps and inflexions marked.
"""

from .curve import FourierCurve, genericity_check, load_curve, save_curve
from .equidistant import (Branch, branch_polyline, classify_onshell_endpoint, css_curve,
                          detect_cusps, detect_inflexions, full_equidistant, trace_branch)
from .errors import EquidistError, InvalidInput, NonGeneric, NumericalFailure
from .fixtures import FIXTURE_NAMES, load_fixture
from .gluing import LambdaClass, maximal_schemes, predict
from .parallelism import parallel_structure

__version__ = "0.1.0"

__all__ = [
    "FIXTURE_NAMES", "Branch", "EquidistError", "FourierCurve", "InvalidInput", "LambdaClass", "NonGeneric",
    "NumericalFailure", "branch_polyline", "classify_onshell_endpoint", "css_curve",
    "detect_cusps", "detect_inflexions", "full_equidistant", "genericity_check", "load_curve",
    "load_fixture", "maximal_schemes", "parallel_structure", "predict", "save_curve", "trace_branch",
]
