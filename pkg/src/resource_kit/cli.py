"""Command-line front end. All numerics live in the library; this only orchestrates.

Exit codes: 0 success, 1 check failed, 2 parse error, 3 invariant
violation, 4 resource limit or sampler failure.
"""

import os
import sys

import click
import numpy as np

from . import __version__
from .channels import MCDCSpec, is_cptp, is_dephasing_covariant, is_dio, is_mio, mc_extend
from .coding import enum_limit
from .errors import InvalidState, ResourceKitError, SamplingFailed, SpecInvalid, TooLarge
from .io import (
    ParseError,
    channel_from_json,
    channel_to_json,
    dumps,
    load_file,
    matrix_from_json,
    reports_to_csv,
)
from .monotones import (
    MEASURES,
    mc_distillable,
    negativity,
    renyi_entanglement,
)
from .protocols import CSV_COLUMNS, simulate_distillation, simulate_formation
from .search import replay_witness, search_l1
from .states import check_density, mc_recognize

EXIT_OK, EXIT_CHECK, EXIT_PARSE, EXIT_INVARIANT, EXIT_RESOURCE = 0, 1, 2, 3, 4


class Exit(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _parse_dims(text):
    if text is None:
        return None
    try:
        dims = [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise Exit(EXIT_PARSE, f"bad --dims {text!r}: {exc}") from exc
    if not dims or min(dims) < 1:
        raise Exit(EXIT_PARSE, f"bad --dims {text!r}")
    return dims


def _parse_ns(text):
    try:
        ns = [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise Exit(EXIT_PARSE, f"bad --n {text!r}: {exc}") from exc
    if not ns or min(ns) < 1:
        raise Exit(EXIT_PARSE, f"bad --n {text!r}")
    return ns


def _load_state(path, tol):
    try:
        rho = matrix_from_json(load_file(path))
    except ParseError as exc:
        raise Exit(EXIT_PARSE, str(exc)) from exc
    try:
        return check_density(rho, tol)
    except InvalidState as exc:
        raise Exit(EXIT_INVARIANT, f"{path}: {exc}") from exc


def _load_channel(path):
    try:
        return channel_from_json(load_file(path))
    except (ParseError, ValueError) as exc:
        raise Exit(EXIT_PARSE, str(exc)) from exc


def _emit(text, out):
    if out is None:
        click.echo(text, nl=False)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _report(command, config, tolerances, body):
    body = dict(body)
    body.update({"command": command, "version": __version__, "config": config,
                 "tolerances": tolerances})
    return body


def _run(fn):
    try:
        code = fn()
    except Exit as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(exc.code)
    except ParseError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_PARSE)
    except TooLarge as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_RESOURCE)
    except SamplingFailed as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_RESOURCE)
    except (InvalidState, SpecInvalid) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_INVARIANT)
    except ResourceKitError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_INVARIANT)
    sys.exit(code or EXIT_OK)


@click.group()
@click.version_option(__version__, prog_name="resource-kit")
def main():
    """Coherence and MC-entanglement resource toolkit."""


@main.command("monotone")
@click.argument("state", type=click.Path())
@click.option("--measure", required=True,
              type=click.Choice(["cr", "l1", "entropy", "negativity", "renyi", "mc-distillable"]))
@click.option("--alpha", type=float, default=1.0, show_default=True, help="Renyi order (inf allowed).")
@click.option("--dims", default=None, help="Comma-separated local dimensions, e.g. 2,2.")
@click.option("--tol", type=float, default=1e-9, show_default=True, help="Density-matrix tolerance.")
@click.option("--out", type=click.Path(), default=None)
def monotone(state, measure, alpha, dims, tol, out):
    """Evaluate one resource measure on a matrix-JSON state."""

    def go():
        if tol <= 0:
            raise Exit(EXIT_PARSE, "--tol must be positive")
        rho = _load_state(state, tol)
        d = _parse_dims(dims)
        if measure in MEASURES:
            fn, units = MEASURES[measure]
            value = fn(rho)
        elif measure == "negativity":
            value, units = negativity(rho, d or _square_split(rho)), "dimensionless"
        elif measure == "renyi":
            value, units = renyi_entanglement(rho, d or _square_split(rho), alpha), "bits"
        else:
            split = d or _square_split(rho)
            mc = mc_recognize(rho, split)
            if mc is None:
                raise Exit(EXIT_INVARIANT, "state is not maximally correlated in the computational basis")
            value, units = mc_distillable(mc), "bits"
        config = {"state": state, "measure": measure, "alpha": alpha if measure == "renyi" else None,
                  "dims": d}
        body = {"measure": measure, "value": float(value), "units": units}
        _emit(dumps(_report("monotone", config, {"state": tol}, body)), out)

    _run(go)


def _square_split(rho):
    k = int(round(np.sqrt(rho.shape[0])))
    if k * k != rho.shape[0]:
        raise Exit(EXIT_PARSE, f"cannot infer a bipartite split of dimension {rho.shape[0]}; pass --dims")
    return [k, k]


@main.command("check-channel")
@click.argument("channel", type=click.Path())
@click.option("--checks", default="cptp,dio,mio", show_default=True,
              help="Comma-separated subset of cptp,dio,mio,covariant.")
@click.option("--tol", type=float, default=1e-9, show_default=True)
@click.option("--out", type=click.Path(), default=None)
def check_channel(channel, checks, tol, out):
    """Verify CPTP, DIO and MIO membership of a channel JSON."""

    def go():
        if tol <= 0:
            raise Exit(EXIT_PARSE, "--tol must be positive")
        ch = _load_channel(channel)
        wanted = [c.strip() for c in checks.split(",") if c.strip()]
        funcs = {"cptp": is_cptp, "dio": is_dio, "mio": is_mio,
                 "covariant": lambda c, t: is_dephasing_covariant(c, tol=t)}
        bad = [c for c in wanted if c not in funcs]
        if bad or not wanted:
            raise Exit(EXIT_PARSE, f"unknown checks {bad}")
        results = {c: funcs[c](ch, tol).to_dict() for c in wanted}
        body = {c: r["ok"] for c, r in results.items()}
        body["residuals"] = results
        config = {"channel": channel, "checks": wanted}
        _emit(dumps(_report("check-channel", config, {"check": tol}, body)), out)
        return EXIT_OK if all(r["ok"] for r in results.values()) else EXIT_CHECK

    _run(go)


def _load_bases(path):
    if path is None:
        return (None, None), (None, None)
    try:
        obj = load_file(path)
        pair = lambda key: tuple(matrix_from_json(m) for m in obj[key]) if key in obj else (None, None)
        return pair("in"), pair("out")
    except (KeyError, TypeError) as exc:
        raise Exit(EXIT_PARSE, f"malformed bases JSON: {exc}") from exc
    except ParseError as exc:
        raise Exit(EXIT_PARSE, str(exc)) from exc


@main.command("mc-extend")
@click.argument("channel", type=click.Path())
@click.option("--bases", type=click.Path(), default=None,
              help='JSON {"in": [U, V], "out": [U, V]} of local basis unitaries.')
@click.option("--tol", type=float, default=1e-9, show_default=True)
@click.option("--out", type=click.Path(), default=None)
def mc_extend_cmd(channel, bases, tol, out):
    """Build the MC extension of a DIO channel, with a verification stanza."""

    def go():
        ch = _load_channel(channel)
        b_in, b_out = _load_bases(bases)
        rep = is_dio(ch, tol)
        if not rep.ok:
            raise Exit(EXIT_INVARIANT, f"input channel is not DIO: residual {rep.max_residual:.3e} "
                                       f"at unit {list(rep.worst)} (tol {tol:.1e})")
        ext = mc_extend(MCDCSpec(ch, b_in, b_out), tol)
        F_in, F_out = ext.meta["product_bases"]
        cov = is_dephasing_covariant(ext, F_in, F_out, tol)
        cp = is_cptp(ext, tol)
        body = {"channel": channel_to_json(ext),
                "verification": {"product_basis_covariance": cov.to_dict(), "cptp": cp.to_dict()}}
        config = {"channel": channel, "bases": bases}
        _emit(dumps(_report("mc-extend", config, {"dio": tol}, body)), out)
        return EXIT_OK if cov.ok and cp.ok else EXIT_CHECK

    _run(go)


@main.command("simulate")
@click.argument("state", type=click.Path())
@click.option("--protocol", type=click.Choice(["distill", "form"]), required=True)
@click.option("--n", "ns", required=True, help="Comma-separated block lengths.")
@click.option("--eps", type=float, required=True)
@click.option("--delta", type=float, required=True)
@click.option("--seed", type=int, required=True)
@click.option("--tol", type=float, default=1e-9, show_default=True, help="DIO certificate tolerance.")
@click.option("--out", type=click.Path(), default=None,
              help="Directory for per-n JSON reports and sweep.csv; stdout if omitted.")
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json", show_default=True)
def simulate(state, protocol, ns, eps, delta, seed, tol, out, fmt):
    """Run a seeded n-sweep of the distillation or formation protocol."""

    def go():
        rho = _load_state(state, 1e-9)
        n_list = _parse_ns(ns)
        if not 0 < eps < 1 or delta <= 0:
            raise Exit(EXIT_PARSE, "need 0 < eps < 1 and delta > 0")
        sim = simulate_distillation if protocol == "distill" else simulate_formation
        config = {"state": state, "protocol": protocol, "n": n_list, "eps": eps, "delta": delta,
                  "seed": seed, "max_enum": enum_limit(),
                  "max_enum_from_env": "RESOURCE_KIT_MAX_ENUM" in os.environ}
        tolerances = {"dio": tol, "state": 1e-9}
        reports = [sim(rho, n, eps, delta, seed=seed, dio_tol=tol) for n in n_list]
        csv_text = reports_to_csv(reports, CSV_COLUMNS)
        docs = [_report("simulate", config, tolerances, r.to_dict()) for r in reports]
        if out is not None:
            os.makedirs(out, exist_ok=True)
            for r, doc in zip(reports, docs):
                with open(os.path.join(out, f"{protocol}_n{r.n}.json"), "w") as fh:
                    fh.write(dumps(doc))
            with open(os.path.join(out, "sweep.csv"), "w") as fh:
                fh.write(csv_text)
        elif fmt == "csv":
            click.echo(csv_text, nl=False)
        else:
            click.echo(dumps(docs), nl=False)
        ok = all(r.details["dio"]["ok"] for r in reports)
        return EXIT_OK if ok else EXIT_CHECK

    _run(go)


@main.command("search-l1")
@click.option("--dim", type=int, default=2, show_default=True)
@click.option("--samples", type=int, default=1000, show_default=True)
@click.option("--seed", type=int, required=True)
@click.option("--max-iter", type=int, default=200, show_default=True)
@click.option("--out", type=click.Path(), default=None)
def search_l1_cmd(dim, samples, seed, max_iter, out):
    """Search random DIO channels for an l1-coherence increase."""

    def go():
        if dim < 2 or samples < 1:
            raise Exit(EXIT_PARSE, "need --dim >= 2 and --samples >= 1")
        rep = search_l1(dim, samples, seed, max_iter=max_iter)
        config = {"dim": dim, "samples": samples, "seed": seed, "max_iter": max_iter}
        _emit(dumps(_report("search-l1", config, {"dio": 1e-9, "witness": 1e-12}, rep)), out)
        return EXIT_RESOURCE if rep["failure_rate"] > 0.5 else EXIT_OK

    _run(go)


@main.command("replay-witness")
@click.argument("report", type=click.Path())
@click.option("--tol", type=float, default=1e-10, show_default=True)
def replay_witness_cmd(report, tol):
    """Recompute the l1 increase of a saved search witness."""

    def go():
        obj = load_file(report)
        witness = obj.get("witness", obj) if isinstance(obj, dict) else None
        if not witness or "channel" not in witness:
            raise Exit(EXIT_PARSE, "report carries no witness")
        try:
            value = replay_witness(witness)
        except (ParseError, KeyError) as exc:
            raise Exit(EXIT_PARSE, str(exc)) from exc
        diff = abs(value - float(witness["increase"]))
        body = {"recorded": float(witness["increase"]), "replayed": value, "difference": diff,
                "ok": diff <= tol}
        click.echo(dumps(_report("replay-witness", {"report": report}, {"replay": tol}, body)), nl=False)
        return EXIT_OK if diff <= tol else EXIT_CHECK

    _run(go)


if __name__ == "__main__":
    main()
