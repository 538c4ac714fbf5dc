"""Command-line front end."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path


from . import __version__
from .analysis import (
    CAPACITY_LIMIT, TWO_LEVEL, UNQUANTIZED, Method, ThresholdQuery, density_bound,
    min_normalized_density, parse_method, rate_bound, reproduce_table, sweep_ber_bound,
    sweep_density_bound, sweep_right_regular_threshold, threshold_ebn0,
)
from .channels import (
    BEC, BIAWGN, BSC, Channel, biawgn_for_capacity, biawgn_from_ebn0, capacity, error_weight,
    load_custom_channel, quantity_a,
)
from .ensembles import EnsembleSpec, get_builtin, load_ensemble
from .numerics import DomainError, NumericalError, default_seed
from .report import ReportDocument, ReportRow, timestamp
from .unquantized import (
    BerBoundInput, DegreeProfile, Normalized, SeriesConfig, ber_lower_bound, epsilon0_degree,
    epsilon0_normalized, legacy_ber_bound,
)


class InputError(Exception):
    pass


def _kv(body: str, what: str) -> dict[str, str]:
    out = {}
    for part in filter(None, body.split(",")):
        if "=" not in part:
            raise InputError(f"{what}: expected key=value, got {part!r}")
        k, v = part.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _float(params: dict, key: str, what: str) -> float:
    try:
        return float(params[key])
    except KeyError:
        raise InputError(f"{what}: missing field {key!r}") from None
    except ValueError:
        raise InputError(f"{what}: field {key!r} is not a number ({params[key]!r})") from None


def parse_channel(spec: str, default_rate: float | None = None) -> Channel:
    """bec:p=.., bsc:eps=.., biawgn:sigma=.. | ebn0_db=..,rate=.. | capacity=.., custom:file=.."""
    kind, _, body = spec.partition(":")
    params = _kv(body, "channel")
    kind = kind.strip().lower()
    try:
        if kind == "bec":
            return BEC(_float(params, "p", "channel"))
        if kind == "bsc":
            return BSC(_float(params, "eps", "channel"))
        if kind == "biawgn":
            if "sigma" in params:
                return BIAWGN(_float(params, "sigma", "channel"))
            if "capacity" in params:
                return biawgn_for_capacity(_float(params, "capacity", "channel"))
            if "ebn0_db" in params:
                rate = _float(params, "rate", "channel") if "rate" in params else default_rate
                if rate is None:
                    raise InputError("channel: field 'rate' is required with ebn0_db")
                return biawgn_from_ebn0(_float(params, "ebn0_db", "channel"), rate)
            raise InputError("channel: biawgn needs sigma, ebn0_db or capacity")
        if kind == "custom":
            if "file" not in params:
                raise InputError("channel: custom needs file=PATH")
            return load_custom_channel(params["file"])
    except DomainError as exc:
        raise InputError(f"channel: {exc}") from None
    raise InputError(f"channel: unknown kind {kind!r} (use bec, bsc, biawgn or custom)")


def parse_ensemble(spec: str) -> EnsembleSpec:
    key, _, val = spec.partition("=")
    try:
        if key == "builtin":
            return get_builtin(val)
        if key == "file":
            return load_ensemble(val)
    except DomainError as exc:
        raise InputError(f"ensemble: {exc}") from None
    raise InputError(f"ensemble: expected builtin=NAME or file=PATH, got {spec!r}")


def _grid(text: str) -> list[float]:
    """Comma list or start:stop:step (inclusive)."""
    try:
        if ":" in text:
            a, b, s = (float(x) for x in text.split(":"))
            n = int(round((b - a) / s))
            return [round(a + i * s, 12) for i in range(n + 1)]
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise InputError(f"grid: cannot parse {text!r}") from None


def _channel_inputs(ch: Channel) -> dict:
    if isinstance(ch, BIAWGN):
        return {"kind": "biawgn", "sigma": ch.sigma}
    if isinstance(ch, BEC):
        return {"kind": "bec", "p": ch.p}
    if isinstance(ch, BSC):
        return {"kind": "bsc", "eps": ch.eps}
    return {"kind": "custom", "label": ch.label}


def _ensemble_inputs(ens: EnsembleSpec) -> dict:
    return {"name": ens.name, "design_rate": ens.design_rate,
            "dk": [[k, v] for k, v in ens.dk.dk],
            "renormalization": dict(ens.renormalization)}


def _need(args, name: str):
    if getattr(args, name) is None:
        raise InputError(f"--{name.replace('_', '-')} is required for {args.command}")
    return getattr(args, name)


def cmd_capacity(args, doc: ReportDocument):
    ch = parse_channel(_need(args, "channel"))
    doc.inputs["channel"] = _channel_inputs(ch)
    doc.rows += [ReportRow("capacity", capacity(ch), "bits/use"),
                 ReportRow("error_weight", error_weight(ch), "probability"),
                 ReportRow("tanh_moment_A", quantity_a(ch), "moment")]


def cmd_rate_bound(args, doc: ReportDocument):
    ens = parse_ensemble(_need(args, "ensemble"))
    ch = parse_channel(_need(args, "channel"), ens.design_rate)
    m = parse_method(args.method)
    doc.inputs.update(channel=_channel_inputs(ch), ensemble=_ensemble_inputs(ens))
    doc.rows.append(ReportRow(m.label, rate_bound(m, ch, ens.dk, _series(args), args.seed),
                              "bits/use", ensemble=ens.name, design_rate=ens.design_rate))


def cmd_density_bound(args, doc: ReportDocument):
    ch = parse_channel(_need(args, "channel"), args.rate)
    c = capacity(ch)
    if args.gap is not None:
        eps = args.gap
    elif args.rate is not None:
        eps = 1.0 - args.rate / c
    else:
        raise InputError("density-bound needs --gap or --rate")
    if not 0.0 < eps < 1.0:
        raise InputError(f"gap: {eps} outside (0, 1)")
    doc.inputs.update(channel=_channel_inputs(ch), epsilon=eps)
    methods = [parse_method(args.method)] if args.method else [TWO_LEVEL, Method("quantized", 2),
                                                                 Method("quantized", 3), UNQUANTIZED]
    for m in methods:
        if m.kind == "capacity_limit":
            raise InputError("method: no density bound for the capacity limit")
        b = density_bound(m, ch, eps, args.seed)
        doc.rows.append(ReportRow(m.label, b.value, "ones/info-bit", trivial=b.trivial))


def cmd_ber_bound(args, doc: ReportDocument):
    rate = _need(args, "rate")
    ch = parse_channel(_need(args, "channel"), rate)
    series = _series(args)
    doc.inputs.update(channel=_channel_inputs(ch), rate=rate)
    if args.target_pb is not None:
        for legacy in (False, True):
            md = min_normalized_density(ch, rate, args.target_pb, legacy, series)
            tag = "legacy" if legacy else "unquantized"
            prov = "computed-reconstructed" if legacy else "computed"
            doc.rows += [ReportRow(f"{tag}:t_min", md.t_min, "normalized-density", provenance=prov),
                         ReportRow(f"{tag}:density_min", md.density_min, "ones/info-bit", provenance=prov)]
        return
    if args.ensemble:
        ens = parse_ensemble(args.ensemble)
        doc.inputs["ensemble"] = _ensemble_inputs(ens)
        inp = BerBoundInput(rate, ch, DegreeProfile(ens.dk))
        b = ber_lower_bound(inp, series)
        doc.rows += [ReportRow("unquantized:h2_pb", b.h2_pb, "bits", ensemble=ens.name,
                               design_rate=ens.design_rate, trivial=b.trivial),
                     ReportRow("unquantized:pb", b.pb, "probability", ensemble=ens.name,
                               design_rate=ens.design_rate, trivial=b.trivial),
                     ReportRow("epsilon0", epsilon0_degree(ch, ens.dk, series), "gap",
                               ensemble=ens.name, design_rate=ens.design_rate)]
        return
    t = _need(args, "t")
    inp = BerBoundInput(rate, ch, Normalized(t))
    doc.inputs["t"] = t
    new, old = ber_lower_bound(inp, series), legacy_ber_bound(inp)
    doc.rows += [ReportRow("unquantized:pb", new.pb, "probability", trivial=new.trivial),
                 ReportRow("legacy:pb", old.pb, "probability", trivial=old.trivial,
                           provenance="computed-reconstructed"),
                 ReportRow("epsilon0", epsilon0_normalized(ch, t, series), "gap")]


def cmd_threshold(args, doc: ReportDocument):
    ens = parse_ensemble(_need(args, "ensemble"))
    doc.inputs["ensemble"] = _ensemble_inputs(ens)
    methods = [parse_method(args.method)] if args.method else [CAPACITY_LIMIT, TWO_LEVEL,
                                                                 Method("quantized", 2),
                                                                 Method("quantized", 3), UNQUANTIZED]
    for m in methods:
        v = threshold_ebn0(ThresholdQuery(ens, m, series=_series(args), seed=args.seed))
        doc.rows.append(ReportRow(m.label, v, "dB", ensemble=ens.name, design_rate=ens.design_rate))


def cmd_table(args, doc: ReportDocument):
    doc.inputs["table"] = args.table_id
    for row in reproduce_table(args.table_id, _series(args), args.seed, args.workers):
        for label, v in row.thresholds:
            doc.rows.append(ReportRow(label, v, "dB", ensemble=row.ensemble, design_rate=row.design_rate))
        for label, v in row.references:
            doc.rows.append(ReportRow(label.removesuffix("_db"), v, "dB", provenance="reference-constant",
                                      ensemble=row.ensemble, design_rate=row.design_rate))


def cmd_sweep(args, doc: ReportDocument):
    series = _series(args)
    if args.figure == "fig2":
        rates = _grid(args.rates or "0.1:0.9:0.1")
        methods = [parse_method(m) for m in (args.method or "cap,2level,q4,q8,unq").split(",")]
        doc.inputs.update(a_r=args.ar, rates=rates)
        for p in sweep_right_regular_threshold(args.ar, rates, methods, series, args.seed):
            doc.rows.append(ReportRow(f"{p.method}@rate={p.rate:.4f}", p.threshold_db, "dB",
                                      ensemble=f"right_regular_{args.ar}", design_rate=p.rate))
    elif args.figure == "fig3":
        eps = _grid(args.epsilons or "0.01,0.05,0.1")
        ts = _grid(args.t_grid or "1:10:0.5")
        doc.inputs.update(capacity=args.capacity, epsilons=eps, t_grid=ts)
        for p in sweep_ber_bound(args.capacity, eps, ts, series):
            tag = f"eps={p.epsilon:.4f},t={p.t:.4f}"
            doc.rows += [ReportRow(f"unquantized@{tag}", p.pb, "probability", trivial=p.pb_trivial),
                         ReportRow(f"legacy@{tag}", p.pb_legacy, "probability", trivial=p.legacy_trivial,
                                   provenance="computed-reconstructed")]
    else:
        grid = _grid(args.ebn0_grid or "0:4:0.25")
        rate = args.rate if args.rate is not None else 0.5
        methods = [parse_method(m) for m in (args.method or "2level,unq").split(",")]
        doc.inputs.update(rate=rate, ebn0_grid=grid)
        for m in methods:
            for p in sweep_density_bound(rate, m, grid, args.seed):
                doc.rows.append(ReportRow(f"{m.label}@ebn0_db={p.ebn0_db:.4f}", p.value, "ones/info-bit",
                                          design_rate=rate, trivial=p.trivial,
                                          provenance="beyond-capacity" if p.beyond_capacity else "computed"))


def _series(args) -> SeriesConfig:
    try:
        return SeriesConfig(args.series_p)
    except DomainError as exc:
        raise InputError(f"series-p: {exc}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--channel")
    common.add_argument("--ensemble")
    common.add_argument("--method")
    common.add_argument("--series-p", type=int, default=10)
    common.add_argument("--out")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--rate", type=float)
    common.add_argument("--gap", type=float)
    common.add_argument("--t", type=float)
    common.add_argument("--target-pb", type=float)
    common.add_argument("--workers", type=int, default=1)

    p = argparse.ArgumentParser(prog="mbios-bounds", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("capacity", parents=[common], help="capacity, error weight and A of a channel")
    sub.add_parser("rate-bound", parents=[common], help="upper bound on achievable rate")
    sub.add_parser("density-bound", parents=[common], help="lower bound on parity-check density")
    sub.add_parser("ber-bound", parents=[common], help="lower bound on bit error probability")
    sub.add_parser("threshold", parents=[common], help="Eb/N0 threshold bounds of an ensemble")
    t = sub.add_parser("table", parents=[common], help="regenerate a threshold table")
    t.add_argument("table_id", type=int, choices=(1, 2, 3))
    s = sub.add_parser("sweep", parents=[common], help="data series for plots")
    s.add_argument("figure", choices=("fig2", "fig3", "fig4"))
    s.add_argument("--ar", type=int, default=6)
    s.add_argument("--rates")
    s.add_argument("--capacity", type=float, default=0.5)
    s.add_argument("--epsilons")
    s.add_argument("--t-grid")
    s.add_argument("--ebn0-grid")
    return p


COMMANDS = {"capacity": cmd_capacity, "rate-bound": cmd_rate_bound, "density-bound": cmd_density_bound,
            "ber-bound": cmd_ber_bound, "threshold": cmd_threshold, "table": cmd_table,
            "sweep": cmd_sweep}


def run(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    try:
        args.seed = default_seed()
        doc = ReportDocument(command=argv, version=__version__, timestamp=timestamp(),
                             inputs={"truncation_p": args.series_p, "seed": args.seed})
        COMMANDS[args.command](args, doc)
    except (InputError, DomainError, OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    fmt = args.format or ("json" if args.out and Path(args.out).suffix == ".json" else "csv")
    text = doc.to_json() if fmt == "json" else doc.to_csv()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def main() -> None:
    sys.exit(run())
