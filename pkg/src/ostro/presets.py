"""Named sequences, kernels and convolution families for one-command runs."""

from __future__ import annotations

import json
from pathlib import Path

from .convolution import ComponentFamily, ConvolutionModel, make_family
from .errors import ValidationError
from .io import validate_json
from .kernels import ProbabilityKernel, constant, kernel_from_json, make_kernel
from .measures import MeasureModel
from .sequences import GeneratorRule, OstroSequence

# q_1 = 6, 48, 6^8, 2^8 3^32, 2^64 3^64, 2^256 3^64
EXAMPLE3_TERMS = (6, 48, 6**8, 2**8 * 3**32, 2**64 * 3**64, 2**256 * 3**64)

SEQUENCE_PRESETS = {
    "sylvester1": lambda: OstroSequence.from_rule(GeneratorRule.sylvester(1)),
    "sylvester2": lambda: OstroSequence.from_rule(GeneratorRule.sylvester(2)),
    "power2": lambda: OstroSequence.from_rule(GeneratorRule.power(2)),
    "power3": lambda: OstroSequence.from_rule(GeneratorRule.power(3)),
    "prime_chain": lambda: OstroSequence.from_rule(GeneratorRule.prime_chain(2)),
    "example3": lambda: OstroSequence(list(EXAMPLE3_TERMS), None),
}

KERNEL_PRESETS = {
    "uniform": lambda: make_kernel("uniform"),
    "constant-0.3": lambda: constant("3/10"),
    "inverse-2k": lambda: make_kernel("inverse_2k"),
    "half-minus-quarter-sqrt": lambda: make_kernel("half_minus_quarter_sqrt"),
    "half-minus-geometric": lambda: make_kernel("half_minus_geometric"),
    "alternating-example": lambda: make_kernel("alternating_example"),
    "dyadic-positions": lambda: make_kernel("dyadic_positions"),
    "alternating-degenerate": lambda: make_kernel("alternating_degenerate"),
    "one-minus-inverse-square": lambda: make_kernel("one_minus_inverse_square"),
    "first-digit-uniform": lambda: make_kernel("first_digit_uniform"),
}

FAMILY_PRESETS = {
    "geometric-discrete": lambda: make_family("geometric_discrete"),
    "dyadic-uniform": lambda: make_family("dyadic_uniform"),
    "nested": lambda: make_family("nested"),
    "linear-q1": lambda: make_family("linear_q1"),
}


def _read_json(ref: str, schema: str) -> dict | None:
    path = Path(ref)
    if path.suffix == ".json" or path.is_file():
        if not path.is_file():
            raise ValidationError(f"no such file: {ref}")
        with path.open() as fh:
            data = json.load(fh)
        validate_json(data, schema)
        return data
    return None


def load_sequence(ref: str, max_exact_depth: int | None = None) -> OstroSequence:
    """Preset name or path to a sequence JSON file."""
    data = _read_json(ref, "sequence")
    if data is not None:
        kw = {} if max_exact_depth is None else {"max_exact_depth": max_exact_depth}
        return OstroSequence.from_json(data, **kw)
    try:
        seq = SEQUENCE_PRESETS[ref]()
    except KeyError:
        raise ValidationError(f"unknown sequence preset {ref!r}; known: {', '.join(SEQUENCE_PRESETS)}") from None
    if max_exact_depth is not None and seq.rule is not None:
        seq = OstroSequence(seq.terms(min(seq.materialized, max_exact_depth)), seq.rule, max_exact_depth)
    return seq


def load_kernel(ref: str) -> ProbabilityKernel:
    """Preset name, ``constant:<p0>``, or path to a kernel JSON file."""
    data = _read_json(ref, "kernel")
    if data is not None:
        return kernel_from_json(data)
    if ref.startswith("constant:"):
        return constant(ref.split(":", 1)[1])
    try:
        return KERNEL_PRESETS[ref]()
    except KeyError:
        raise ValidationError(f"unknown kernel preset {ref!r}; known: {', '.join(KERNEL_PRESETS)}") from None


def load_family(ref: str) -> ComponentFamily:
    data = _read_json(ref, "convolution")
    if data is not None:
        fam = data.get("family") or {}
        return make_family(fam.get("name", ""), **(fam.get("params") or {}))
    try:
        return FAMILY_PRESETS[ref]()
    except KeyError:
        raise ValidationError(f"unknown family preset {ref!r}; known: {', '.join(FAMILY_PRESETS)}") from None


def load_convolution(ref: str) -> ConvolutionModel:
    """Convolution model file: finite components or an infinite family."""
    data = _read_json(ref, "convolution")
    if data is None:
        return ConvolutionModel("infinite", family=load_family(ref))
    if data["mode"] == "infinite":
        fam = data.get("family") or {}
        return ConvolutionModel("infinite", family=make_family(fam.get("name", ""), **(fam.get("params") or {})))
    components = [
        MeasureModel(OstroSequence.from_json(c["sequence"]), kernel_from_json(c["kernel"])) for c in data.get("components", [])
    ]
    return ConvolutionModel("finite", components=components)
