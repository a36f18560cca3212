"""Command-line entry point: ``ltesig {decode,analyze,compare,simulate,synth}``.

Exit status is 0 on success, 1 on I/O failure and 2 on invalid arguments.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import analytics, floodsim, synth
from .pcap import (
    DEFAULT_DLT,
    Channel,
    FramingError,
    PcapFormatError,
    classify_channel,
    read_capture,
)
from .rrc import (
    Imsi,
    Mib,
    PagingMessage,
    Sib1,
    SystemInformationSummary,
    decode_mib,
    decode_pcch,
    decode_sib1,
)
from .uper import DecodeError

EXIT_OK = 0
EXIT_IO = 1
EXIT_USAGE = 2

log = logging.getLogger("ltesig")


class UsageError(Exception):
    pass


def _identity_dict(ident) -> dict:
    if isinstance(ident, Imsi):
        return {"imsi": ident.masked()}
    return {"s_tmsi": f"{ident.key:010x}", "mmec": ident.mmec, "m_tmsi": ident.m_tmsi}


def message_to_dict(msg) -> dict:
    """JSON-ready form of a decoded message; IMSI digits are masked."""
    if isinstance(msg, PagingMessage):
        return {
            "message": "Paging",
            "records": [
                {**_identity_dict(r.ue_identity), "cn_domain": r.cn_domain.value}
                for r in msg.records
            ],
            "system_info_modification": msg.system_info_modification,
            "etws_indication": msg.etws_indication,
        }
    if isinstance(msg, Mib):
        return {
            "message": "MasterInformationBlock",
            "dl_bandwidth": msg.dl_bandwidth.value,
            "phich_duration": msg.phich_duration.value,
            "phich_resource": msg.phich_resource.value,
            "sfn_msb": msg.sfn_msb,
        }
    if isinstance(msg, Sib1):
        return {
            "message": "SystemInformationBlockType1",
            "plmns": [
                {
                    "mcc": "".join(map(str, p.mcc)) if p.mcc else None,
                    "mnc": "".join(map(str, p.mnc)),
                    "cell_reserved": p.cell_reserved,
                }
                for p in msg.plmn_list
            ],
            "tracking_area_code": f"{msg.tracking_area_code:04x}",
            "cell_identity": f"{msg.cell_identity:07x}",
            "cell_barred": msg.cell_barred,
            "intra_freq_reselection": msg.intra_freq_reselection.value,
            "csg_indication": msg.csg_indication,
            "si_window_length_ms": msg.si_window_length_ms,
            "scheduling_info_count": msg.scheduling_info_count,
        }
    if isinstance(msg, SystemInformationSummary):
        return {
            "message": "SystemInformation",
            "sib_count": msg.sib_count,
            "first_sib": f"sib{msg.first_sib}",
            "contains_sib2": msg.contains_sib2,
        }
    raise TypeError(type(msg))


def _message_text(d: dict) -> str:
    kind = d["message"]
    if kind == "Paging":
        parts = [f"Paging records={len(d['records'])}"]
        if d["system_info_modification"]:
            parts.append("systemInfoModification")
        if d["etws_indication"]:
            parts.append("etws-Indication")
        for r in d["records"]:
            ident = f"s-TMSI {r['s_tmsi']}" if "s_tmsi" in r else f"IMSI {r['imsi']}"
            parts.append(f"[{ident} {r['cn_domain']}]")
        return " ".join(parts)
    if "plmns" in d:
        d = {**d, "plmns": ",".join(f"{p['mcc'] or '-'}-{p['mnc']}" for p in d["plmns"])}
    fields = " ".join(f"{k}={v}" for k, v in d.items() if k != "message")
    return f"{kind} {fields}"


_DECODERS = {
    Channel.PCCH: decode_pcch,
    Channel.BCCH_BCH: decode_mib,
    Channel.BCCH_DL_SCH: decode_sib1,
}


def _decode_item(index: int, item) -> dict:
    if isinstance(item, FramingError):
        return {
            "record": index,
            "error": "FramingError",
            "kind": item.kind.value,
            "offset": item.offset,
            "timestamp_us": item.timestamp_us,
        }
    channel = classify_channel(item)
    out = {"record": index, "timestamp_us": item.timestamp_us, "channel": channel.value}
    if item.sfn is not None:
        out["sfn"], out["subframe"] = item.sfn, item.subframe
    decoder = _DECODERS.get(channel)
    if decoder is None:
        out["payload_len"] = len(item.payload)
        return out
    try:
        out.update(message_to_dict(decoder(item.payload)))
    except DecodeError as err:
        out.update(error="DecodeError", kind=err.kind.value, bit_offset=err.bit_offset)
    return out


_FRAME_KEYS = {"record", "timestamp_us", "channel", "sfn", "subframe"}


def _decode_line(d: dict) -> str:
    ts = d.get("timestamp_us")
    when = f"{ts / 1e6:.6f}" if ts is not None else "-"
    head = f"#{d['record']} {when}"
    if d.get("error") == "FramingError":
        return f"{head} FramingError {d['kind']} at byte {d['offset']}"
    head += f" {d['channel']}"
    if "sfn" in d:
        head += f" sfn={d['sfn']}.{d['subframe']}"
    if d.get("error") == "DecodeError":
        return f"{head} DecodeError {d['kind']} at bit {d['bit_offset']}"
    if "message" not in d:
        return f"{head} {d['payload_len']} bytes"
    body = {k: d[k] for k in d if k not in _FRAME_KEYS}
    return f"{head} {_message_text(body)}"


def cmd_decode(args) -> int:
    out = sys.stdout
    for i, item in enumerate(read_capture(args.input, args.dlt)):
        d = _decode_item(i, item)
        if args.format == "jsonl":
            out.write(json.dumps(d, sort_keys=True) + "\n")
        else:
            out.write(_decode_line(d) + "\n")
    return EXIT_OK


def _positive(value: str) -> float:
    try:
        v = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {value!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive: {value!r}")
    return v


def cmd_analyze(args) -> int:
    names = args.names or [Path(p).stem for p in args.input]
    if len(names) != len(args.input):
        raise UsageError("--names needs one name per --in file")
    all_stats = [analytics.analyze_capture(p, args.dlt) for p in args.input]
    sys.stdout.write(analytics.render_report(all_stats, names))
    for name, stats in zip(names, all_stats):
        if stats.decode_errors:
            sys.stdout.write(f"note: {name}: {stats.decode_errors} paging frame(s) failed to decode\n")
    if args.csv:
        out = Path(args.csv)
        out.mkdir(parents=True, exist_ok=True)
        for name, stats in zip(names, all_stats):
            analytics.write_sessions_csv(stats, out / f"{name}.sessions.csv")
            hist = analytics.lifespan_histogram(stats, args.bin_minutes)
            analytics.write_histogram_csv(hist, out / f"{name}.histogram.csv")
    return EXIT_OK


def cmd_compare(args) -> int:
    a = analytics.analyze_capture(args.a, args.dlt)
    b = analytics.analyze_capture(args.b, args.dlt)
    result = analytics.persistence_compare(a, b)
    print(f"capture A: {a.unique_tmsis} unique TMSIs ({args.a})")
    print(f"capture B: {b.unique_tmsis} unique TMSIs ({args.b})")
    print(f"overlap: {len(result.overlap)}")
    print(f"jaccard: {result.jaccard:.6f}")
    for key in sorted(result.overlap):
        print(f"  persisted {key:010x}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    overrides = {} if args.seed is None else {"rng_seed": args.seed}
    try:
        cfg = floodsim.load_config(args.config, **overrides)
    except FileNotFoundError:
        raise UsageError(f"config file not found: {args.config}") from None
    except (ValueError, TypeError) as err:
        raise UsageError(f"{args.config}: {err}") from None
    result = floodsim.run_simulation(cfg)
    metrics = floodsim.metrics_csv([result])
    if args.out:
        Path(args.out).write_text(metrics)
    else:
        sys.stdout.write(metrics)
    if args.events:
        Path(args.events).write_text(floodsim.event_log_jsonl(result))
    return EXIT_OK


def cmd_synth(args) -> int:
    try:
        model = synth.SynthModel(
            duration_min=args.duration_min,
            page_rate_per_s=args.page_rate,
            tmsi_population=args.population,
            short_lived_fraction=args.short_fraction,
            short_lifespan_max_min=args.short_max_min,
            long_lived_fraction_full_duration=args.long_fraction,
            imsi_page_count=args.imsi_pages,
            rng_seed=args.seed,
            mmecs=tuple(args.mmec),
        )
    except ValueError as err:
        raise UsageError(str(err)) from None
    extra = []
    if args.beacon_period_ms:
        from .rrc import PlmnInfo

        sib1 = Sib1(plmn_list=(PlmnInfo(mnc=(0, 1), mcc=(0, 0, 1)),), tracking_area_code=1, cell_identity=1)
        extra = synth.generate_sib_beacon(
            Mib(),
            sib1,
            args.beacon_period_ms,
            model.duration_ms,
            start_time_us=model.start_time_us,
        )
    truth = synth.write_trace(model, args.out, args.dlt, extra_frames=extra)
    print(
        f"wrote {args.out}: {truth.stats.total_pages} pages, "
        f"{truth.stats.unique_tmsis} TMSIs; truth in {synth.truth_path(args.out)}"
    )
    return EXIT_OK


def integer(value: str) -> int:
    return int(value, 0)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ltesig", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log IMSI sightings and progress")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("decode", help="print every frame of a capture, decoded")
    d.add_argument("--in", dest="input", required=True, metavar="PCAP")
    d.add_argument("--dlt", type=int, default=None, help="expected DLT_USER link type")
    d.add_argument("--format", choices=("text", "jsonl"), default="text")
    d.set_defaults(func=cmd_decode)

    a = sub.add_parser("analyze", help="paging statistics table, one column per capture")
    a.add_argument("--in", dest="input", required=True, nargs="+", metavar="PCAP")
    a.add_argument("--names", nargs="+", help="column names (default: file stems)")
    a.add_argument("--bin-minutes", type=_positive, default=5.0)
    a.add_argument("--csv", metavar="DIR", help="write session and histogram CSVs here")
    a.add_argument("--dlt", type=int, default=None)
    a.set_defaults(func=cmd_analyze)

    c = sub.add_parser("compare", help="TMSI persistence between two captures")
    c.add_argument("--a", required=True, metavar="PCAP")
    c.add_argument("--b", required=True, metavar="PCAP")
    c.add_argument("--dlt", type=int, default=None)
    c.set_defaults(func=cmd_compare)

    s = sub.add_parser("simulate", help="run an RRC flood scenario")
    s.add_argument("--config", required=True)
    s.add_argument("--seed", type=integer, default=None)
    s.add_argument("--out", help="metrics CSV path (default: stdout)")
    s.add_argument("--events", help="write the JSON-lines event log here")
    s.set_defaults(func=cmd_simulate)

    y = sub.add_parser("synth", help="write a synthetic paging capture and its truth file")
    defaults = synth.SynthModel()
    y.add_argument("--out", required=True, metavar="PCAP")
    y.add_argument("--seed", type=integer, default=0)
    y.add_argument("--duration-min", type=float, default=defaults.duration_min)
    y.add_argument("--page-rate", type=float, default=defaults.page_rate_per_s)
    y.add_argument("--population", type=int, default=defaults.tmsi_population)
    y.add_argument("--short-fraction", type=float, default=defaults.short_lived_fraction)
    y.add_argument("--short-max-min", type=float, default=defaults.short_lifespan_max_min)
    y.add_argument("--long-fraction", type=float, default=defaults.long_lived_fraction_full_duration)
    y.add_argument("--imsi-pages", type=int, default=0)
    y.add_argument("--mmec", type=integer, nargs="+", default=list(defaults.mmecs))
    y.add_argument("--beacon-period-ms", type=int, default=0, help="add MIB/SIB1 frames")
    y.add_argument("--dlt", type=int, default=DEFAULT_DLT)
    y.set_defaults(func=cmd_synth)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits on --help (0) and on bad usage (2)
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.ERROR,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except UsageError as err:
        parser.print_usage(sys.stderr)
        print(f"ltesig: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except BrokenPipeError:
        # downstream closed early (e.g. piped into head); not an input failure
        sys.stderr.close()
        return EXIT_OK
    except (PcapFormatError, OSError) as err:
        print(f"ltesig: {err}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
