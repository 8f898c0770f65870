"""Command-line front end.

Exit codes: 0 success, 1 input or parse error, 2 mathematical
infeasibility, 3 verification failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from ._backend import NAME as BACKEND
from .empirical import aggregate, type_of
from .errors import InfeasibleError, InputError, NonConvergence, TiltgapError
from .gen_gap import (
    gap_decomposition_general,
    gap_decomposition_pz,
    gibbs_audit,
    gibbs_posterior,
    model_marginal,
)
from .io import dumps, load_dataset, load_instance
from .loss import expected_loss
from .measure import DiscreteMeasure, mix
from .sensitivity import (
    corollary3_specialization,
    empirical_sensitivity,
    jeffreys_gap,
    sensitivity_closed_form,
)
from .verify import InstanceSpec, run_suite
from .worst_case import gamma_sup, lemma3_identities, solve_beta, tilt

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_VERIFY = 0, 1, 2, 3


class UsageError(InputError):
    pass


# -- serialization helpers ---------------------------------------------------


def _measure(m: DiscreteMeasure) -> dict:
    return {label: float(w) for label, w in zip(m.alphabet.points, m.weights)}


def _sens(rep) -> dict:
    out = {
        "g_direct": rep.g_direct,
        "g_closed_form": rep.g_closed_form,
        "residual": rep.residual,
        "beta": rep.beta,
        "terms": [
            {"name": t.name, "coefficient": t.coefficient, "value": t.value}
            for t in rep.terms
        ],
        "reference": _measure(rep.reference),
    }
    if rep.groups:
        out["groups"] = dict(rep.groups)
    return out


def _tilt(w, lm) -> dict:
    out = {
        "model": lm.models.label(w.theta),
        "beta": w.beta,
        "beta_is_infinite": w.degenerate,
        "gamma": w.gamma,
        "log_partition": w.log_partition,
        "measure": _measure(w.measure),
        "expected_loss_reference": expected_loss(lm, w.theta, w.base),
        "expected_loss_tilted": expected_loss(lm, w.theta, w.measure),
    }
    if not w.degenerate:
        r1, r2 = lemma3_identities(w, lm)
        out["dual_identity_residuals"] = {"primal": r1, "dual": r2}
    return out


# -- argument resolution -----------------------------------------------------


def _model(inst, label):
    try:
        return inst.lm.model_index(label)
    except TiltgapError:
        raise UsageError(
            f"--model: {label!r} is not a model of {inst.path} "
            f"(field 'models': {list(inst.lm.models.points)})"
        ) from None


def _selector(inst, sel: str, inputs: dict, flag: str):
    """Resolve a measure selector; returns ``(measure, dataset_or_None)``."""
    if sel == "reference":
        return inst.reference, None
    if sel == "data":
        if inst.data is None:
            raise UsageError(f"{flag}: {inst.path} has no field 'data'")
        return inst.data, None
    if sel.startswith("dataset:"):
        path = sel[len("dataset:"):]
        z, digest = load_dataset(path, inst.alphabet)
        inputs[path] = digest
        return type_of(z).as_measure, z
    if sel.startswith("weights:"):
        try:
            w = [float(x) for x in sel[len("weights:"):].split(",")]
            return DiscreteMeasure(inst.alphabet, w), None
        except (ValueError, TiltgapError) as exc:
            raise UsageError(f"{flag}: invalid inline weights ({exc})") from None
    raise UsageError(
        f"{flag}: unknown selector {sel!r}; use reference, data, dataset:PATH or weights:W1,W2,..."
    )


def _data_measure(inst):
    return inst.data if inst.data is not None else inst.reference


def _worst(inst, theta, ref, beta, gamma):
    if beta is not None:
        return tilt(inst.lm, theta, ref, beta)
    return solve_beta(inst.lm, theta, ref, gamma)


def _require_one(args):
    if (args.beta is None) == (args.gamma is None):
        raise UsageError("exactly one of --beta or --gamma is required")


def _header(args, inputs):
    return {
        "command": args.command,
        "arguments": {
            k: v for k, v in sorted(vars(args).items())
            if k not in ("command", "func", "output") and v is not None
        },
        "inputs": dict(sorted(inputs.items())),
        "backend": BACKEND,
        "version": __version__,
    }


# -- commands ----------------------------------------------------------------


def cmd_solve_beta(args):
    inst = load_instance(args.instance)
    inputs = {inst.path: inst.digest}
    theta = _model(inst, args.model)
    w = solve_beta(inst.lm, theta, inst.reference, args.gamma)
    report = _header(args, inputs)
    report["gamma_target"] = args.gamma
    report["gamma_sup"] = gamma_sup(inst.lm, theta, inst.reference)
    report["tilt"] = _tilt(w, inst.lm)
    return report, EXIT_OK


def cmd_tilt(args):
    inst = load_instance(args.instance)
    inputs = {inst.path: inst.digest}
    theta = _model(inst, args.model)
    ref, _ = _selector(inst, args.reference, inputs, "--reference")
    w = tilt(inst.lm, theta, ref, args.beta)
    report = _header(args, inputs)
    report["tilt"] = _tilt(w, inst.lm)
    report["jeffreys_form"] = _sens(jeffreys_gap(inst.lm, w))
    return report, EXIT_OK


def cmd_decompose(args):
    inst = load_instance(args.instance)
    inputs = {inst.path: inst.digest}
    theta = _model(inst, args.model)
    p1, z1 = _selector(inst, args.p1, inputs, "--p1")
    p2, z2 = _selector(inst, args.p2, inputs, "--p2")
    report = _header(args, inputs)
    if args.reference in ("p1", "p2"):
        if args.beta is None:
            raise UsageError(f"--reference {args.reference} needs --beta")
        rep = corollary3_specialization(inst.lm, theta, p1, p2, args.beta, args.reference)
        report["form"] = f"reference-{args.reference}"
        report["decomposition"] = _sens(rep)
        return report, EXIT_OK
    _require_one(args)
    if args.reference == "mix":
        ref = mix(p1, p2, 0.5)
    elif args.reference == "aggregate":
        if z1 is None or z2 is None:
            raise UsageError("--reference aggregate needs dataset selectors for --p1 and --p2")
        ref = type_of(aggregate(z1, z2)).as_measure
    else:
        ref, _ = _selector(inst, args.reference, inputs, "--reference")
    w = _worst(inst, theta, ref, args.beta, args.gamma)
    if z1 is not None and z2 is not None:
        rep = empirical_sensitivity(inst.lm, w, z1, z2)
        report["form"] = "datasets"
    else:
        rep = sensitivity_closed_form(inst.lm, w, p1, p2)
        report["form"] = "measures"
    report["decomposition"] = _sens(rep)
    report["inputs"] = dict(sorted(inputs.items()))
    return report, EXIT_OK


def cmd_gap(args):
    inst = load_instance(args.instance)
    inputs = {inst.path: inst.digest}
    theta = _model(inst, args.model)
    _require_one(args)
    pz = _data_measure(inst)
    z, digest = load_dataset(args.dataset, inst.alphabet)
    inputs[args.dataset] = digest
    report = _header(args, inputs)
    if args.reference == "data":
        beta = args.beta
        if beta is None:
            beta = solve_beta(inst.lm, theta, pz, args.gamma).beta
        rep = gap_decomposition_pz(inst.lm, theta, pz, z, beta)
        report["form"] = "reference-data"
    else:
        if args.reference == "mix":
            ref = mix(pz, type_of(z).as_measure, 0.5)
        else:
            ref, _ = _selector(inst, args.reference, inputs, "--reference")
        w = _worst(inst, theta, ref, args.beta, args.gamma)
        rep = gap_decomposition_general(inst.lm, theta, pz, z, w)
        report["form"] = "general"
    report["decomposition"] = _sens(rep)
    report["inputs"] = dict(sorted(inputs.items()))
    return report, EXIT_OK


def cmd_gibbs_audit(args):
    inst = load_instance(args.instance)
    inputs = {inst.path: inst.digest}
    models = inst.lm.models
    if args.prior == "uniform":
        q = DiscreteMeasure.uniform(models)
    elif args.prior == "prior":
        if inst.prior is None:
            raise UsageError(f"--prior: {inst.path} has no field 'prior'")
        q = inst.prior
    elif args.prior.startswith("weights:"):
        try:
            q = DiscreteMeasure(models, [float(x) for x in args.prior[8:].split(",")])
        except (ValueError, TiltgapError) as exc:
            raise UsageError(f"--prior: invalid inline weights ({exc})") from None
    else:
        raise UsageError(f"--prior: unknown selector {args.prior!r}; use uniform, prior or weights:...")
    if args.n < 1:
        raise UsageError("--n: dataset length must be at least 1")
    pz = _data_measure(inst)
    g = gibbs_posterior(inst.lm, q, args.lam, args.n)
    audit = gibbs_audit(g, pz)
    report = _header(args, inputs)
    report["enumerated_datasets"] = g.n_datasets
    report["audit"] = {
        "doubly_expected_gap": audit.doubly_expected_direct,
        "mutual_information": audit.mutual_info,
        "lautum_information": audit.lautum_info,
        "lambda_times_information_sum": audit.information_side,
        "identity_residual": audit.identity_residual,
    }
    report["model_marginal"] = _measure(model_marginal(g, pz))
    return report, EXIT_OK


def cmd_verify(args):
    try:
        spec = InstanceSpec(
            trials=args.trials, seed=args.seed,
            alphabet_min=args.alphabet_min, alphabet_max=args.alphabet_max,
            models_min=args.models_min, models_max=args.models_max,
            loss_max=args.loss_max, beta_min=args.beta_min, beta_max=args.beta_max,
            dataset_max=args.dataset_max, threshold=args.threshold,
        )
    except ValueError as exc:
        raise UsageError(f"invalid verification flags: {exc}") from None
    summary = run_suite(spec)
    report = _header(args, {})
    report["summary"] = summary.as_dict()
    return report, EXIT_OK if summary.ok else EXIT_VERIFY


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="tiltgap",
        description="Worst-case data-generating measures and generalization-gap decompositions.",
    )
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, model=True):
        sp.add_argument("--instance", required=True, help="instance JSON file")
        if model:
            sp.add_argument("--model", required=True, help="model label")
        sp.add_argument("--output", default="-", help="report path ('-' for stdout)")

    sp = sub.add_parser("solve-beta", help="find beta whose tilt spends exactly the budget gamma")
    common(sp)
    sp.add_argument("--gamma", type=float, required=True)
    sp.set_defaults(func=cmd_solve_beta)

    sp = sub.add_parser("tilt", help="tilt the reference at a given beta")
    common(sp)
    sp.add_argument("--beta", type=float, required=True)
    sp.add_argument("--reference", default="reference", help="measure selector for P_S")
    sp.set_defaults(func=cmd_tilt)

    sp = sub.add_parser("decompose", help="decompose G(theta, P1, P2) into relative entropies")
    common(sp)
    sp.add_argument("--p1", required=True, help="selector: reference, data, dataset:PATH, weights:...")
    sp.add_argument("--p2", required=True)
    sp.add_argument("--reference", default="reference",
                    help="selector, or mix, aggregate, p1, p2")
    sp.add_argument("--beta", type=float)
    sp.add_argument("--gamma", type=float)
    sp.set_defaults(func=cmd_decompose)

    sp = sub.add_parser("gap", help="decompose the generalization gap of a model on a dataset")
    common(sp)
    sp.add_argument("--dataset", required=True, help="training dataset JSON file")
    sp.add_argument("--reference", default="data", help="data (default), mix, or a selector")
    sp.add_argument("--beta", type=float)
    sp.add_argument("--gamma", type=float)
    sp.set_defaults(func=cmd_gap)

    sp = sub.add_parser("gibbs-audit", help="check the Gibbs gap against lambda*(I + L)")
    common(sp, model=False)
    sp.add_argument("--prior", default="uniform", help="uniform, prior, or weights:...")
    sp.add_argument("--lam", type=float, required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.set_defaults(func=cmd_gibbs_audit)

    sp = sub.add_parser("verify", help="run the randomized identity suite")
    d = InstanceSpec()
    sp.add_argument("--trials", type=int, default=d.trials)
    sp.add_argument("--seed", type=int, default=d.seed)
    sp.add_argument("--alphabet-min", type=int, default=d.alphabet_min)
    sp.add_argument("--alphabet-max", type=int, default=d.alphabet_max)
    sp.add_argument("--models-min", type=int, default=d.models_min)
    sp.add_argument("--models-max", type=int, default=d.models_max)
    sp.add_argument("--loss-max", type=float, default=d.loss_max)
    sp.add_argument("--beta-min", type=float, default=d.beta_min)
    sp.add_argument("--beta-max", type=float, default=d.beta_max)
    sp.add_argument("--dataset-max", type=int, default=d.dataset_max)
    sp.add_argument("--threshold", type=float, default=d.threshold)
    sp.add_argument("--output", default="-", help="report path ('-' for stdout)")
    sp.set_defaults(func=cmd_verify)
    return p


def _emit(text: str, dest: str):
    if dest == "-":
        sys.stdout.write(text)
    else:
        Path(dest).write_text(text, encoding="utf-8")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        report, code = args.func(args)
    except InputError as exc:
        print(f"tiltgap {args.command}: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (InfeasibleError, NonConvergence) as exc:
        print(f"tiltgap {args.command}: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    try:
        _emit(dumps(report), args.output)
    except OSError as exc:
        print(f"tiltgap {args.command}: --output: cannot write {args.output} ({exc.strerror})",
              file=sys.stderr)
        return EXIT_INPUT
    return code


if __name__ == "__main__":
    sys.exit(main())
