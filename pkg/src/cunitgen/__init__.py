"""cunitgen: unit-test generation for an annotated C subset.

The pipeline parses annotated C, lowers it to control-flow graphs in
3-address form, explores them through a lazily expanded symbolic test case
tree, interprets traces over a history-based symbolic memory, decides path
constraints with a built-in bit-vector solver (or exports them as SMT-LIB2),
and emits compilable C drivers, stubs, coverage reports and a requirement
trace matrix.
"""

from .config import Config  # noqa: F401
from .pipeline import FunctionOutcome, generate_function  # noqa: F401

__version__ = "0.1.0"
