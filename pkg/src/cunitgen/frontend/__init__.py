"""Front end: annotated C-subset source to a typed AST plus annotations."""

from .csyntax import SourceUnit, FunctionDef, AnnotationKind, Annotation  # noqa: F401
from .parser import parse_unit  # noqa: F401
from .annotations import AnnotationSet, extract_annotations  # noqa: F401
