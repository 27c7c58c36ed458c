"""Proof nets for multiplicative-exponential linear logic with a
stratification modality: structural validation, switching-acyclicity
correctness, integer indexings, cut-elimination, and three equivalent
deciders for membership in the level-stratified fragment."""

from .formula import (
    Atom,
    Bottom,
    Formula,
    OfCourse,
    One,
    Par,
    Paragraph,
    Tensor,
    WhyNot,
    bullet_formula,
    dual,
    parse_formula,
    print_formula,
    shift_formula,
)
from .net import (
    Box,
    Label,
    Link,
    Net,
    canonical_form,
    load,
    nets_equal,
    parr_closure,
    save,
    underlying_graph,
    validate,
)

__version__ = "0.1.0"

__all__ = [
    "Atom",
    "Bottom",
    "Formula",
    "OfCourse",
    "One",
    "Par",
    "Paragraph",
    "Tensor",
    "WhyNot",
    "bullet_formula",
    "dual",
    "parse_formula",
    "print_formula",
    "shift_formula",
    "Box",
    "Label",
    "Link",
    "Net",
    "canonical_form",
    "load",
    "nets_equal",
    "parr_closure",
    "save",
    "underlying_graph",
    "validate",
    "__version__",
]
