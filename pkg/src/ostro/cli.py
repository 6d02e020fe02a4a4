"""Command-line interface.

Every subcommand prints one JSON report (or a table with ``--format table``)::

    ostro seq gen --rule sylvester --q1 1 --depth 5
    ostro expand --x 5/7
    ostro dim mu-nustar --kernel half-minus-quarter-sqrt --n 10000
    ostro conv auto-cover --seq sylvester1 --kernel uniform --m 2 --n 6 --alpha 1/2

Exit codes: 0 ok, 2 invalid input, 3 precision budget exhausted,
4 undetermined outcome when ``--require-verdict`` is given.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction

import jsonschema

from . import __version__
from . import convolution as conv
from . import cylinders as cyl
from . import dimension as dim
from . import fourier, measures, numerics
from .errors import (
    BudgetExceeded,
    InsufficientDepth,
    NonTerminatingBudget,
    OstroError,
    PrecisionBudget,
    Undecidable,
    ValidationError,
)
from .io import FORMAT_VERSION, canonical_dumps, digest
from .numerics import IntervalEnclosure, as_rational, rational_str
from .presets import FAMILY_PRESETS, KERNEL_PRESETS, SEQUENCE_PRESETS, load_convolution, load_family, load_kernel, load_sequence
from .sequences import DEFAULT_MAX_EXACT_DEPTH, GeneratorRule, OstroSequence, expand, generate, reconstruct, validate

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_PRECISION = 3
EXIT_UNDETERMINED = 4

ENV_TOL = "OSTRO_TOL"
ENV_PREC = "OSTRO_PREC_BITS"
KS_TOL = Fraction(1, 1000)


def _exact(x) -> str | dict:
    if isinstance(x, IntervalEnclosure):
        return x.to_json()
    return rational_str(Fraction(x))


def parse_t(text: str) -> fourier.Argument:
    """``3/2``, ``pi*3/2``, ``3/2*pi`` or ``2pi``."""
    s = text.replace(" ", "")
    if "pi" not in s:
        return fourier.Argument.of(as_rational(s))
    coeff = s.replace("*pi", "").replace("pi*", "").replace("pi", "") or "1"
    if coeff == "-":
        coeff = "-1"
    return fourier.Argument.pi_times(as_rational(coeff))


# -- handlers ---------------------------------------------------------------------


def _model(args) -> measures.MeasureModel:
    return measures.MeasureModel(load_sequence(args.seq, args.max_exact_depth), load_kernel(args.kernel))


def _inputs(args) -> dict:
    """Resolved inputs, hashed into the report's digest."""
    out = {}
    for key in ("seq", "kernel", "family", "model"):
        ref = getattr(args, key, None)
        if ref is None:
            continue
        refs = ref if isinstance(ref, list) else [ref]
        if key == "seq":
            out[key] = [load_sequence(r, args.max_exact_depth).to_json() for r in refs]
        elif key == "kernel":
            out[key] = [load_kernel(r).to_json() for r in refs]
        elif key == "family":
            out[key] = [load_family(r).describe() for r in refs]
        else:
            out[key] = [canonical_dumps(_read_file(r)) for r in refs]
    return out


def _read_file(path):
    with open(path) as fh:
        return json.load(fh)


def cmd_seq_gen(args):
    params = {"sylvester": {"q1": args.q1}, "power": {"s": args.s}, "prime_chain": {"p1": args.p1, "mr_rounds": args.mr_rounds}}
    rule = getattr(GeneratorRule, args.rule)(**params[args.rule])
    seq = generate(rule, args.depth, max(args.max_exact_depth, args.depth) if args.force_depth else args.max_exact_depth)
    return [str(q) for q in seq.terms(args.depth)]


def cmd_seq_validate(args):
    seq = load_sequence(args.seq, args.max_exact_depth)
    report = validate(seq, args.depth)
    # a failed property means the input is not a valid sequence
    return report.to_json(), EXIT_OK if report.all_pass else EXIT_INVALID


def cmd_expand(args):
    try:
        seq, terminated, _ = expand(as_rational(args.x), args.max_terms, strict=not args.no_strict)
    except NonTerminatingBudget as exc:
        seq, terminated, _ = exc.partial
        exc.partial_result = {"q": [str(q) for q in seq.terms()], "terminated": False}
        raise
    return {"q": [str(q) for q in seq.terms()], "terminated": terminated}


def cmd_reconstruct(args):
    if args.q:
        seq = OstroSequence([int(v) for v in args.q.split(",")], None)
    else:
        seq = load_sequence(args.seq, args.max_exact_depth)
    n = args.n if args.n is not None else seq.materialized
    return {"n": n, "value": rational_str(reconstruct(seq, n))}


def cmd_cylinder(args):
    seq = load_sequence(args.seq, args.max_exact_depth)
    return cyl.cylinder(seq, args.word, as_rational(args.width)).to_json()


def cmd_cover(args):
    seq = load_sequence(args.seq, args.max_exact_depth)
    cover = cyl.cover_set(seq, args.rank, as_rational(args.width))
    return {"rank": args.rank, "count": len(cover), "cylinders": [c.to_json() for c in cover]}


def cmd_measure_mass(args):
    model = _model(args)
    return {"word": cyl.word_str(args.word), "mass": _exact(measures.cylinder_mass(model, args.word))}


def cmd_measure_cdf(args):
    return measures.cdf_detail(_model(args), as_rational(args.x), args.tol).to_json()


def cmd_measure_gauge(args):
    value = measures.gauge_eval(_model(args), as_rational(args.t), args.which, args.tol)
    return {"t": args.t, "which": args.which, "value": value.to_json()}


def cmd_measure_sample(args):
    model = _model(args)
    values = measures.sample(model, args.depth, args.seed, args.count)
    out = {
        "rng": measures.RNG_ALGORITHM,
        "seed": args.seed,
        "depth": args.depth,
        "count": args.count,
    }
    if args.ks:
        # the distance itself is only meaningful to ~1/sqrt(count); no need for finer CDF values
        out["ks"] = measures.ks_distance(model, values, max(args.tol, KS_TOL))
    if not args.summary_only:
        out["values"] = [rational_str(v) for v in values]
    return out


def _verdict(result, args):
    data = result.to_json()
    if args.require_verdict and result.verdict == "undetermined":
        return data, EXIT_UNDETERMINED
    return data


def cmd_measure_continuity(args):
    return _verdict(measures.continuity_test(load_kernel(args.kernel), args.depth), args)


def cmd_measure_kakutani(args):
    return _verdict(measures.kakutani_classify(load_kernel(args.kernel), args.depth), args)


def cmd_cf_eval(args):
    model = _model(args)
    arg = parse_t(args.t)
    if args.modulus:
        value = fourier.cf_modulus(model, arg, args.n_terms, args.tol, not args.no_tail, args.prec)
    else:
        value = fourier.cf_eval(model, arg, args.n_terms, args.tol, not args.no_tail, args.prec)
    return {"t": arg.to_json(), "value": value.to_json(), "include_tail": not args.no_tail}


def cmd_cf_coeff(args):
    value = fourier.fs_coefficient(_model(args), args.m, args.tol)
    return {"m": str(args.m), "value": value.to_json()}


def cmd_cf_probe(args):
    return fourier.coefficient_probe(_model(args), range(args.n_from, args.n_to + 1), args.tol).to_json()


def cmd_cf_lbound(args):
    model = _model(args)
    probe = fourier.coefficient_probe(model, range(args.n_from, args.n_to + 1), args.tol)
    out = fourier.l_lower_bound(model, probe)
    if args.require_verdict and out["L_equals_1_condition"]["status"] == "undetermined":
        return out, EXIT_UNDETERMINED
    return out


def cmd_dim_spectrum(args):
    seq = load_sequence(args.seq, args.max_exact_depth)
    return dim.spectrum_dim_profile(seq, range(args.k_from, args.k_to + 1)).to_json()


def cmd_dim_entropy(args):
    kern = load_kernel(args.kernel)
    return dim.entropy_profile(kern, args.n).to_json()


def _dim_report(report, args):
    data = report.to_json()
    if args.require_verdict and report.analytic_limit is None:
        return data, EXIT_UNDETERMINED
    return data


def cmd_dim_nustar(args):
    return _dim_report(dim.dim_mu_nu_star(load_kernel(args.kernel), args.n), args)


def cmd_dim_nur(args):
    return _dim_report(dim.dim_mu_nu_r(load_kernel(args.kernel), args.n), args)


def cmd_dim_spectrum_nur(args):
    return _dim_report(dim.dim_spectrum_nu_r(load_kernel(args.kernel), args.n), args)


def cmd_dim_preservation(args):
    return _verdict(dim.preservation_check(load_kernel(args.kernel), as_rational(args.p_floor), args.n), args)


def _models(args):
    if getattr(args, "model", None):
        model = load_convolution(args.model)
        if model.mode != "finite":
            raise ValidationError("this command needs a finite convolution model")
        return model.components
    seqs, kerns = args.seq, args.kernel
    if len(kerns) == 1:
        kerns = kerns * len(seqs)
    if len(seqs) == 1:
        seqs = seqs * len(kerns)
    if len(seqs) != len(kerns):
        raise ValidationError("give one --kernel, or one per --seq")
    return [measures.MeasureModel(load_sequence(s, args.max_exact_depth), load_kernel(k)) for s, k in zip(seqs, kerns)]


def cmd_conv_auto(args):
    model = _models(args)[0]
    return conv.autoconv_cover(model, args.m, args.n, args.alpha).to_json()


def cmd_conv_gen(args):
    return conv.genconv_cover(_models(args), args.n, args.alpha).to_json()


def cmd_conv_cf(args):
    arg = parse_t(args.t)
    return {"t": arg.to_json(), "value": conv.conv_cf(_models(args), arg, args.tol).to_json()}


def cmd_conv_infinite(args):
    return _verdict(conv.infinite_conv_classify(load_family(args.family), args.j_max, args.k_max), args)


# -- parser -----------------------------------------------------------------------


def _default_tol() -> str:
    return os.environ.get(ENV_TOL, "1/1000000")


def _default_prec() -> int:
    return int(os.environ.get(ENV_PREC, fourier.DEFAULT_PREC))


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("output and precision")
    g.add_argument("--format", choices=("json", "table"), default="json")
    g.add_argument("--result-only", action="store_true", help="print only the result, without the envelope")
    g.add_argument("--indent", type=int, default=None, help="pretty-print JSON")
    g.add_argument("--tol", default=None, help=f"tolerance as a rational (default ${ENV_TOL} or 1/1000000)")
    g.add_argument("--max-exact-depth", type=int, default=DEFAULT_MAX_EXACT_DEPTH)
    g.add_argument("--prec", type=int, default=None, help=f"interval precision in bits (default ${ENV_PREC} or 256)")
    g.add_argument("--require-verdict", action="store_true", help="exit 4 on undetermined outcomes")
    return p


def _model_args(p, kernel=True):
    p.add_argument("--seq", default="sylvester1", help=f"preset ({', '.join(SEQUENCE_PRESETS)}) or JSON path")
    if kernel:
        p.add_argument("--kernel", default="uniform", help=f"preset ({', '.join(KERNEL_PRESETS)}), constant:<p0>, or JSON path")


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="ostro", description="Second Ostrogradsky series and their Bernoulli convolutions.")
    parser.add_argument("--version", action="version", version=f"ostro {__version__}")
    top = parser.add_subparsers(dest="group", required=True)

    def leaf(sub, name, func, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(func=func)
        return p

    # seq
    seq = top.add_parser("seq", help="generate or validate denominator sequences").add_subparsers(dest="cmd", required=True)
    p = leaf(seq, "gen", cmd_seq_gen, "generate a sequence from a rule")
    p.add_argument("--rule", choices=("sylvester", "power", "prime_chain"), required=True)
    p.add_argument("--q1", type=int, default=1)
    p.add_argument("--s", type=int, default=2)
    p.add_argument("--p1", type=int, default=2)
    p.add_argument("--mr-rounds", type=int, default=24)
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--force-depth", action="store_true", help="raise max-exact-depth to --depth")
    p = leaf(seq, "validate", cmd_seq_validate, "check the structural properties of a sequence")
    _model_args(p, kernel=False)
    p.add_argument("--depth", type=int, default=None)

    p = leaf(top, "expand", cmd_expand, "expand a rational in (0, 1]")
    p.add_argument("--x", required=True)
    p.add_argument("--max-terms", type=int, default=64)
    p.add_argument("--no-strict", action="store_true", help="return the partial prefix instead of failing")

    p = leaf(top, "reconstruct", cmd_reconstruct, "sum a prefix exactly")
    _model_args(p, kernel=False)
    p.add_argument("--q", default=None, help="comma-separated denominators (overrides --seq)")
    p.add_argument("--n", type=int, default=None)

    p = leaf(top, "cylinder", cmd_cylinder, "enclose one cylinder interval")
    _model_args(p, kernel=False)
    p.add_argument("--word", default="", help="digit word such as 0110")
    p.add_argument("--width", default=rational_str(cyl.DEFAULT_WIDTH))
    p = leaf(top, "cover", cmd_cover, "all cylinders of a rank")
    _model_args(p, kernel=False)
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("--width", default=rational_str(cyl.DEFAULT_WIDTH))

    # measure
    meas = top.add_parser("measure", help="masses, distribution function, sampling, classification").add_subparsers(
        dest="cmd", required=True
    )
    p = leaf(meas, "mass", cmd_measure_mass, "probability of a cylinder")
    _model_args(p)
    p.add_argument("--word", required=True)
    p = leaf(meas, "cdf", cmd_measure_cdf, "enclose F(x) = P(xi < x)")
    _model_args(p)
    p.add_argument("--x", required=True)
    p = leaf(meas, "gauge", cmd_measure_gauge, "gauge functions h1 and h2")
    _model_args(p)
    p.add_argument("--t", required=True)
    p.add_argument("--which", choices=("h1", "h2"), default="h1")
    p = leaf(meas, "sample", cmd_measure_sample, "seeded truncated samples")
    _model_args(p)
    p.add_argument("--depth", type=int, default=10)
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--ks", action="store_true", help="add a certified Kolmogorov-Smirnov distance")
    p.add_argument("--summary-only", action="store_true", help="omit the sample values")
    p = leaf(meas, "classify-continuity", cmd_measure_continuity, "Lévy continuity criterion")
    _model_args(p)
    p.add_argument("--depth", type=int, default=1024)
    p = leaf(meas, "classify-kakutani", cmd_measure_kakutani, "equivalence or singularity w.r.t. the uniformized measure")
    _model_args(p)
    p.add_argument("--depth", type=int, default=1024)

    # cf
    cf = top.add_parser("cf", help="characteristic function and Fourier-Stieltjes coefficients").add_subparsers(
        dest="cmd", required=True
    )
    p = leaf(cf, "eval", cmd_cf_eval, "enclose f(t)")
    _model_args(p)
    p.add_argument("--t", required=True, help="rational, or a rational multiple of pi such as pi*3/2")
    p.add_argument("--n-terms", type=int, default=1)
    p.add_argument("--no-tail", action="store_true", help="finite product only")
    p.add_argument("--modulus", action="store_true", help="enclose |f(t)| instead")
    p = leaf(cf, "coeff", cmd_cf_coeff, "coefficient c_m = f(2 pi m)")
    _model_args(p)
    p.add_argument("--m", type=int, required=True)
    for name, func, text in (("probe", cmd_cf_probe, "|c_k| at k = lcm(q_1..q_n)"), ("l-bound", cmd_cf_lbound, "lower bound for limsup |f(t)|")):
        p = leaf(cf, name, func, text)
        _model_args(p)
        p.add_argument("--n-from", type=int, default=2)
        p.add_argument("--n-to", type=int, default=5)

    # dim
    d = top.add_parser("dim", help="dimension profiles").add_subparsers(dest="cmd", required=True)
    p = leaf(d, "spectrum", cmd_dim_spectrum, "k ln2 / (-ln r_k)")
    _model_args(p, kernel=False)
    p.add_argument("--k-from", type=int, default=1)
    p.add_argument("--k-to", type=int, default=12)
    for name, func, text in (
        ("entropy", cmd_dim_entropy, "entropy checkpoints h_n, H_n, g_n"),
        ("mu-nustar", cmd_dim_nustar, "H_n / (g_n ln 2)"),
        ("mu-nur", cmd_dim_nur, "H_n / (n ln 2)"),
        ("spectrum-nur", cmd_dim_spectrum_nur, "N_k / k"),
    ):
        p = leaf(d, name, func, text)
        p.add_argument("--kernel", default="uniform")
        p.add_argument("--n", type=int, default=10000)
    p = leaf(d, "preservation", cmd_dim_preservation, "dimension preservation test")
    p.add_argument("--kernel", default="uniform")
    p.add_argument("--n", type=int, default=10000)
    p.add_argument("--p-floor", default="1/10")

    # conv
    c = top.add_parser("conv", help="convolutions").add_subparsers(dest="cmd", required=True)
    for name, func, text in (
        ("auto-cover", cmd_conv_auto, "cover of an m-fold autoconvolution"),
        ("gen-cover", cmd_conv_gen, "cover of a convolution of distinct models"),
        ("cf", cmd_conv_cf, "characteristic function of a finite convolution"),
    ):
        p = leaf(c, name, func, text)
        p.add_argument("--seq", action="append", default=None, help="repeat for several components")
        p.add_argument("--kernel", action="append", default=None)
        p.add_argument("--model", default=None, help="convolution model JSON (overrides --seq/--kernel)")
        if name == "cf":
            p.add_argument("--t", required=True)
        else:
            p.add_argument("--n", type=int, required=True)
            p.add_argument("--alpha", action="append", required=True, help="repeatable")
        if name == "auto-cover":
            p.add_argument("--m", type=int, default=2)
    p = leaf(c, "classify-infinite", cmd_conv_infinite, "pure-type classification of an infinite convolution")
    p.add_argument("--family", required=True, help=f"preset ({', '.join(FAMILY_PRESETS)}) or JSON path")
    p.add_argument("--j-max", type=int, default=20)
    p.add_argument("--k-max", type=int, default=20)
    return parser


# -- report -----------------------------------------------------------------------


def _config(args) -> dict:
    out = {}
    for key, value in sorted(vars(args).items()):
        if key in ("func", "format", "indent", "result_only"):
            continue
        if isinstance(value, Fraction):
            value = rational_str(value)
        out[key.replace("_", "-")] = value
    return out


def _envelope(args, result, error=None) -> dict:
    command = f"{args.group} {args.cmd}" if getattr(args, "cmd", None) else args.group
    config = _config(args)
    try:
        inputs = _inputs(args)
    except (OstroError, jsonschema.ValidationError, ValueError):
        inputs = {}
    report = {
        "format_version": FORMAT_VERSION,
        "version": __version__,
        "command": command,
        "config": config,
        "input_digest": digest({"config": config, "inputs": inputs}),
        "precision": {
            "tol": rational_str(args.tol),
            "max_exact_depth": args.max_exact_depth,
            "log_prec_bits": numerics.LOG_PREC_BITS,
            "interval_prec_bits": args.prec,
        },
        "seed": getattr(args, "seed", None),
        "result": result,
    }
    if error is not None:
        report["error"] = error
    return report


def _cell(v) -> str:
    if isinstance(v, dict) and set(v) >= {"lo", "hi"}:
        return f"[{v['lo']}, {v['hi']}]"
    if isinstance(v, (dict, list)):
        return canonical_dumps(v)
    return str(v)


def render_table(report: dict) -> str:
    lines = [f"# {report['command']}  ({report['input_digest'][:19]})"]
    result = report.get("result")
    if isinstance(result, dict):
        for key in ("checkpoints", "rows", "cylinders", "volumes", "evidence"):
            if isinstance(result.get(key), list) and result[key] and isinstance(result[key][0], dict):
                rows = result[key]
                rest = {k: v for k, v in result.items() if k != key}
                lines += [f"{k}: {_cell(v)}" for k, v in rest.items()]
                lines.append(_rows_table(rows))
                break
        else:
            width = max((len(k) for k in result), default=0)
            lines += [f"{k:<{width}}  {_cell(v)}" for k, v in result.items()]
    elif isinstance(result, list) and result and isinstance(result[0], dict):
        lines.append(_rows_table(result))
    elif isinstance(result, list):
        lines += [_cell(v) for v in result]
    else:
        lines.append(_cell(result))
    if "error" in report:
        lines.append(f"error: {report['error']['message']}")
    return "\n".join(lines)


def _rows_table(rows) -> str:
    cols = list(dict.fromkeys(k for r in rows for k in r))
    cells = [[_cell(r.get(c, "")) for c in cols] for r in rows]
    widths = [max(len(c), *(len(row[i]) for row in cells)) for i, c in enumerate(cols)]
    out = ["  ".join(c.ljust(w) for c, w in zip(cols, widths))]
    out += ["  ".join(v.ljust(w) for v, w in zip(row, widths)) for row in cells]
    return "\n".join(out)


def _emit(args, report, out) -> None:
    if args.format == "table":
        out.write(render_table(report) + "\n")
    else:
        body = report["result"] if args.result_only and "error" not in report else report
        out.write(canonical_dumps(body, args.indent) + "\n")


def run(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "seq", None) is None and args.group == "conv" and args.cmd != "classify-infinite":
        args.seq = ["sylvester1"]
    if getattr(args, "kernel", None) is None and args.group == "conv" and args.cmd != "classify-infinite":
        args.kernel = ["uniform"]
    try:
        args.tol = as_rational(args.tol if args.tol is not None else _default_tol())
        if args.tol <= 0:
            raise ValidationError("tol must be positive")
        args.prec = args.prec if args.prec is not None else _default_prec()
    except (OstroError, ValueError) as exc:
        parser.error(str(exc))

    code = EXIT_OK
    try:
        result = args.func(args)
        if isinstance(result, tuple):
            result, code = result
        report = _envelope(args, result)
    except (ValidationError, jsonschema.ValidationError, ValueError) as exc:
        code = EXIT_INVALID
        message = exc.message if isinstance(exc, jsonschema.ValidationError) else str(exc)
        report = _envelope(args, None, {"type": type(exc).__name__, "message": message})
    except Undecidable as exc:
        code = EXIT_UNDETERMINED if args.require_verdict else EXIT_PRECISION
        report = _envelope(args, None, {"type": "Undecidable", "message": str(exc), "rank": exc.rank})
    except (PrecisionBudget, InsufficientDepth, BudgetExceeded) as exc:
        code = EXIT_PRECISION
        report = _envelope(args, getattr(exc, "partial_result", None), {"type": type(exc).__name__, "message": str(exc)})
    _emit(args, report, out)
    return code


def main(argv=None) -> int:
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
