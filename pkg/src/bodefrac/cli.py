"""Command-line front end.

Exit status: 0 verification passed, 1 input error, 2 verification mismatch.
"""

import argparse
import json
import math
import os
import sys
import tempfile

from . import bodeint, contour, tuner, weier
from .errors import BodeFracError, ConfigurationError, ModelError
from .funcmodel import model_from_dict, model_to_dict
from .rootfind import certify_stability

EXIT_OK, EXIT_INPUT, EXIT_MISMATCH = 0, 1, 2
DEFAULT_REL_TOL = 1e-6
RECONCILE_RTOL = 5e-3


class InputError(Exception):
    pass


def _float_list(text):
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def build_parser():
    p = argparse.ArgumentParser(prog="bodefrac", description="Bode sensitivity integral toolkit")
    sub = p.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON model, family or grid document")
    common.add_argument("--out", default=None, help="directory for reports and CSV files")
    common.add_argument("--csv", action="store_true", help="write CSV plot data")
    common.add_argument("--rel-tol", type=float, default=None, help="relative quadrature tolerance")
    common.add_argument("--radius-ladder", type=_float_list, default=None, help="outer-arc radii, comma separated")
    common.add_argument("--eps-ladder", type=_float_list, default=None, help="small-circle radii, comma separated")
    common.add_argument("--dump-config", action="store_true", help="print the parsed document and exit")
    sub.add_parser("analyze", parents=[common], help="Bode integral with stability certificate and reconciliation")
    sub.add_parser("lemmas", parents=[common], help="run the contour lemma checks and closure")
    sub.add_parser("synth", parents=[common], help="synthetic Blaschke-product harnesses")
    sub.add_parser("sweep", parents=[common], help="controller grid sweep")
    return p


# -- io helpers ---------------------------------------------------------------


def read_document(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def atomic_write(path, text):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _jsonable(x):
    if isinstance(x, complex):
        return [x.real, x.imag]
    if hasattr(x, "item"):
        v = x.item()
        return [v.real, v.imag] if isinstance(v, complex) else v
    if hasattr(x, "__dict__"):
        return x.__dict__
    raise TypeError(type(x).__name__)


def _dump(obj):
    return json.dumps(obj, indent=2, default=_jsonable) + "\n"


def _settings(args, doc):
    """Defaults < config "settings" block < command-line flags."""
    cfg = doc.get("settings", {}) if isinstance(doc, dict) else {}
    if not isinstance(cfg, dict):
        raise InputError('"settings" must be an object')
    rel = args.rel_tol if args.rel_tol is not None else cfg.get("rel_tol", DEFAULT_REL_TOL)
    radii = args.radius_ladder if args.radius_ladder is not None else cfg.get("radius_ladder")
    eps = args.eps_ladder if args.eps_ladder is not None else cfg.get("eps_ladder")
    try:
        rel = float(rel)
    except (TypeError, ValueError):
        raise InputError(f"rel_tol must be a number, got {rel!r}") from None
    if not 0 < rel < 1:
        raise InputError(f"rel_tol must lie in (0, 1), got {rel}")
    return {"rel_tol": rel, "radius_ladder": radii, "eps_ladder": eps}


def _model(doc):
    if not isinstance(doc, dict):
        raise InputError("model document must be a JSON object")
    return model_from_dict(doc)


def _out_dir(args):
    return args.out if args.out is not None else "."


def _fmt_c(z):
    return f"{z.real:.10g}{z.imag:+.10g}i"


# -- commands -----------------------------------------------------------------


def cmd_analyze(args, doc, out=sys.stdout):
    model = _model(doc)
    if args.dump_config:
        out.write(_dump(model_to_dict(model)))
        return EXIT_OK
    st = _settings(args, doc)
    poles = model.rhp_zeros()
    out.write(f"model: {model!r}\n")
    out.write("open-loop RHP poles: " + (", ".join(f"{_fmt_c(p.location)} (order {p.order:g})" for p in poles) or "none") + "\n")
    cert = certify_stability(model)
    out.write(f"stability certificate: {cert.verdict} (zeros counted: {cert.zero_count}, region {cert.region})\n")
    result = {"certificate": cert.to_dict(), "poles": [[p.location, p.order] for p in poles]}
    if cert.verdict != "stable":
        out.write("closed loop is not certified stable; the Bode integral identity does not apply\n")
        _write_outputs(args, "analyze", result, {})
        return EXIT_MISMATCH
    rep = bodeint.bode_integral(model, rel_tol=st["rel_tol"])
    est = contour.gamma_R_residual(model, st["radius_ladder"])
    rep.reconcile(est.value)
    out.write(f"numeric I        = {rep.numeric_value:.10g}  (est. abs error {rep.estimated_abs_error:.2g})\n")
    out.write(f"theoretical I    = {rep.theoretical_value:.10g}\n")
    out.write(f"arc residual     = {_fmt_c(est.value)}  (error {est.error:.2g})\n")
    predicted = rep.theoretical_value + (2j * est.value).real
    out.write(f"theory + 2i*res  = {predicted:.10g}\n")
    out.write(f"reconciliation   = {rep.reconciliation:.3g}\n")
    for n in rep.notes:
        out.write(f"note: {n}\n")
    scale = max(1.0, abs(rep.numeric_value), abs(predicted))
    ok = rep.converged and est.converged and abs(rep.reconciliation) <= RECONCILE_RTOL * scale
    out.write(f"verdict: {'pass' if ok else 'MISMATCH'}\n")
    result["report"] = rep.to_dict()
    result["residual"] = {"value": est.value, "error": est.error, "converged": est.converged}
    result["passed"] = bool(ok)
    csvs = {"integrand.csv": bodeint.integrand_csv(model, rep)} if args.csv else {}
    _write_outputs(args, "analyze", result, csvs)
    return EXIT_OK if ok else EXIT_MISMATCH


def cmd_lemmas(args, doc, out=sys.stdout):
    model = _model(doc)
    if args.dump_config:
        out.write(_dump(model_to_dict(model)))
        return EXIT_OK
    st = _settings(args, doc)
    radii = st["radius_ladder"] or [1e2, 1e3, 1e4]
    eps = st["eps_ladder"] or [1e-2, 1e-3, 1e-4]
    reports = []
    arc = contour.verify_lemma_arc(model, radii)
    reports.append(arc)
    _print_lemma(out, "arc decay (slope vs alpha+n-m+1)", arc)
    if "limit_estimate" in arc.extra:
        out.write(f"  arc term does not vanish; limit estimate {_fmt_c(arc.extra['limit_estimate'])}\n")
    poles = model.rhp_zeros()
    if not poles:
        out.write("no open-loop RHP poles: pole-circle and corridor checks skipped\n")
    for p in poles:
        r = contour.verify_lemma_pole_circle(model, p, eps)
        reports.append(r)
        _print_lemma(out, f"pole circle at {_fmt_c(p.location)} (exponent vs eps ln(1/eps))", r)
        c = contour.verify_corridor_pair(model, p)
        reports.append(c)
        out.write(f"corridor pair at {_fmt_c(p.location)}: limit {_fmt_c(c.extra['limit'])}, "
                  f"|limit| {c.fitted:.8g} vs 2 pi d Re p = {c.expected:.8g}: {'pass' if c.passed else 'FAIL'}\n")
    if model.origin_singular:
        r = contour.verify_lemma_origin(model, eps)
        reports.append(r)
        _print_lemma(out, "origin semicircle (exponent vs eps ln(1/eps))", r)
    spec = contour.default_contour_spec(model)
    total, segs = contour.closure_check(model, spec, details=True)
    biggest = max(abs(s.value) for s in segs)
    closed = abs(total) < 1e-3 * biggest
    out.write(f"closure: |sum| = {abs(total):.3g}, largest segment {biggest:.4g}: {'pass' if closed else 'FAIL'}\n")
    ok = all(r.passed for r in reports) and closed
    result = {"lemmas": [r.__dict__ for r in reports], "closure": {"sum": total, "largest": biggest, "passed": closed},
              "passed": ok}
    csvs = {"contour.csv": contour.contour_samples_csv(segs)} if args.csv else {}
    _write_outputs(args, "lemmas", result, csvs)
    return EXIT_OK if ok else EXIT_MISMATCH


def _print_lemma(out, title, r):
    out.write(f"{title}: {'pass' if r.passed else 'FAIL'}\n")
    for x, m in zip(r.parameters, r.magnitudes):
        out.write(f"  {x:<10.4g} {m:.6e}\n")
    out.write(f"  fitted {r.fitted:.4f}, expected {r.expected:.4f}\n")


def cmd_synth(args, doc, out=sys.stdout):
    model, fam = weier.synthetic_from_dict(doc)
    if args.dump_config:
        out.write(_dump(doc))
        return EXIT_OK
    st = _settings(args, doc)
    N = doc["N"]
    n_list = doc.get("N_list")
    csvs = {}
    if fam.kind == "offaxis_limit_point":
        n_list = n_list or [N, 2 * N]
        rep = weier.demonstrate_divergence(fam, n_list)
        out.write(f"family {fam.name}: corridor sums over N = {rep.N_list}\n")
        for n, s, b in zip(rep.N_list, rep.sums, rep.bounds):
            out.write(f"  N={n:<4d} sum {s:.6g}   lower bound {b:.6g}\n")
        out.write(f"  ratios {['%.4f' % r for r in rep.ratios]}\nverdict: {rep.verdict}\n")
        if rep.contrast:
            out.write(f"contrast family {rep.contrast['family']}: sums {['%.5g' % s for s in rep.contrast['sums']]}\n")
        ok = rep.passed
        result = rep.to_dict()
        if args.csv:
            rows = ["N,index,corridor_magnitude"]
            for n in rep.N_list:
                rows += [f"{n},{k},{v!r}" for k, v in enumerate(rep.per_term[n])]
            csvs["corridors.csv"] = "\n".join(rows) + "\n"
    else:
        n_list = n_list or [N]
        if doc.get("outer", "matched") == "matched":
            if fam.kind == "no_limit_point":
                rep = weier.verify_theorem_no_limit(fam, n_list, tol=RECONCILE_RTOL)
            else:
                rep = weier.verify_theorem_limit(fam, n_list, tol=RECONCILE_RTOL, eps_list=st["eps_ladder"] or (1e-2, 1e-3, 1e-4))
            out.write(f"family {fam.name} ({fam.kind}), matched outer\n")
            for r in rep.rows:
                out.write(f"  N={r.N:<4d} numeric {r.numeric:.10g}  4 pi sum {r.theoretical:.10g}  rel err {r.rel_error:.2e}"
                          f"  sum Re p {r.partial_sum:.8f}\n")
            for k, v in rep.extra.items():
                out.write(f"  {k}: {v}\n")
            out.write(f"verdict: {'pass' if rep.passed else 'MISMATCH'}\n")
            ok, result = rep.passed, rep.to_dict()
        else:
            rep = bodeint.bode_integral(model, rel_tol=st["rel_tol"])
            est = contour.gamma_R_residual(model, st["radius_ladder"])
            rep.reconcile(est.value)
            out.write(f"family {fam.name}, N={N}: numeric I {rep.numeric_value:.10g}, theory {rep.theoretical_value:.10g}, "
                      f"residual {_fmt_c(est.value)}, reconciliation {rep.reconciliation:.3g}\n")
            scale = max(1.0, abs(rep.theoretical_value))
            ok = rep.converged and est.converged and abs(rep.reconciliation) <= RECONCILE_RTOL * scale
            out.write(f"verdict: {'pass' if ok else 'MISMATCH'}\n")
            result = {"report": rep.to_dict(), "residual": est.value, "passed": ok}
        if args.csv:
            rep_i = bodeint.bode_integral(model, rel_tol=st["rel_tol"])
            csvs["integrand.csv"] = bodeint.integrand_csv(model, rep_i)
    _write_outputs(args, "synth", result, csvs)
    return EXIT_OK if ok else EXIT_MISMATCH


def cmd_sweep(args, doc, out=sys.stdout):
    if not isinstance(doc, dict) or "plant" not in doc or "grid" not in doc:
        raise InputError('sweep document needs "plant" and "grid"')
    probe = model_from_dict({"plant": doc["plant"], "pid": {"k0": 1.0, "alpha": 1.0, "beta": 1.0}})
    plant = probe.plant
    if args.dump_config:
        out.write(_dump(doc))
        return EXIT_OK
    st = _settings(args, doc)
    points = tuner.sweep(plant, doc["grid"], rel_tol=st["rel_tol"])
    n_stable = sum(p.stable for p in points)
    spread = tuner.invariance_spread(points)
    errors = [p for p in points if p.error]
    out.write(f"grid points: {len(points)}, certified stable: {n_stable}, errors: {len(errors)}\n")
    for p in errors:
        out.write(f"  {p.gains}: {p.error}\n")
    out.write(f"invariance spread (stable, degree condition met): {spread:.3g} of 4 pi sum d Re p\n")
    ok = n_stable > 0 and (math.isnan(spread) or spread < 1e-2)
    result = {"points": len(points), "stable": n_stable, "spread": spread, "passed": ok}
    if "compare" in doc:
        cmp_doc = doc["compare"]
        cmp = tuner.compare_integer_vs_fractional(plant, cmp_doc["gains"], cmp_doc["alpha_beta"], st["rel_tol"])
        out.write(cmp.table() + "\n")
        result["comparison"] = [r.__dict__ for r in cmp.rows]
    out.write(f"verdict: {'pass' if ok else 'MISMATCH'}\n")
    csvs = {"sweep.csv": tuner.sweep_csv(points)} if args.csv else {}
    _write_outputs(args, "sweep", result, csvs)
    return EXIT_OK if ok else EXIT_MISMATCH


def _write_outputs(args, name, result, csvs):
    if args.out is None and not csvs:
        return
    d = _out_dir(args)
    if args.out is not None:
        atomic_write(os.path.join(d, f"{name}_report.json"), _dump(result))
    for fname, text in csvs.items():
        atomic_write(os.path.join(d, fname), text)


COMMANDS = {"analyze": cmd_analyze, "lemmas": cmd_lemmas, "synth": cmd_synth, "sweep": cmd_sweep}


def main(argv=None, out=None):
    out = sys.stdout if out is None else out
    args = build_parser().parse_args(argv)
    try:
        doc = read_document(args.config)
        return COMMANDS[args.command](args, doc, out)
    except (InputError, ModelError, ConfigurationError) as exc:
        sys.stderr.write(f"bodefrac: input error: {exc}\n")
        return EXIT_INPUT
    except BodeFracError as exc:
        sys.stderr.write(f"bodefrac: {type(exc).__name__}: {exc}\n")
        return EXIT_MISMATCH


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
