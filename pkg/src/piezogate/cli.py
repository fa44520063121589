"""Command-line interface: ``piezogate process|simulate|eval|sweep``.

Settings resolve as built-in defaults, then a ``key = value`` config file
(``--config``), then command-line flags; later sources win. Config keys are
the flag names without the leading dashes (``mic-snr-db`` and ``mic_snr_db``
are equivalent).

Exit status:
    0  success
    1  invalid configuration or usage
    2  unreadable input or I/O failure
    3  sample-rate mismatch
    4  unsupported audio format
    5  missing ground-truth parts for evaluation
    6  sweep grid outside the parameter domain
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import audio
from .gate import GateMode, GateParams
from .metrics import CSV_COLUMNS, EvalReport, evaluate, sweep
from .pipeline import align, padded_length, process
from .sim import FixtureKind, MixSpec, make_pair, synth_fixture
from .spectral import FrameParams, TimeSignal

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2
EXIT_RATE = 3
EXIT_FORMAT = 4
EXIT_MISSING_PARTS = 5
EXIT_GRID = 6

SIM_FILES = ("s", "noise", "mic", "pickup", "mic_signal_part", "mic_noise_part")
MANIFEST_NAME = "manifest.txt"


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _parse_mode(v: str) -> str:
    return GateMode(v.lower()).value


def _parse_kind(v: str) -> str:
    return FixtureKind(v.lower().replace("_", "-")).value


def _parse_format(v: str) -> str:
    return audio.SampleFormat(v.lower()).value


# key -> (parser, default)
CONFIG_KEYS = {
    "th": (float, 4.0),
    "d": (float, 0.95),
    "r": (float, 0.1),
    "mode": (_parse_mode, "smooth"),
    "window": (int, 2048),
    "hop": (int, 512),
    "lag": (int, 0),
    "seed": (int, 0),
    "out": (str, None),
    "format": (_parse_format, "float32"),
    "kind": (_parse_kind, "plucked-vs-band"),
    "duration": (float, 8.0),
    "sample_rate": (int, 44100),
    "mic_snr_db": (float, 0.0),
    "pickup_leak_db": (float, -40.0),
    "rt60": (float, 0.6),
    "drr_db": (float, 0.0),
    "eq": (str, "default"),
    "workers": (int, 1),
}

# Keys written to a simulation manifest, in a fixed order.
MANIFEST_KEYS = (
    "kind", "duration", "sample_rate", "seed", "mic_snr_db", "pickup_leak_db",
    "rt60", "drr_db", "eq", "format", "th", "d", "r", "mode", "window", "hop",
)


def _canonical(key: str) -> str:
    return key.strip().replace("-", "_")


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(f"{source}:{lineno}: expected 'key = value'", EXIT_CONFIG)
        key, value = (part.strip() for part in line.split("=", 1))
        key = _canonical(key)
        if key not in CONFIG_KEYS:
            raise CliError(f"{source}:{lineno}: unknown key '{key}'", EXIT_CONFIG)
        values[key] = _convert(key, value, f"{source}:{lineno}")
    return values


def _convert(key, value, where):
    parser = CONFIG_KEYS[key][0]
    try:
        return parser(value)
    except ValueError:
        raise CliError(f"{where}: invalid value for '{key}': {value!r}", EXIT_CONFIG) from None


def format_config(values: dict, keys=MANIFEST_KEYS) -> str:
    lines = []
    for key in keys:
        v = values[key]
        if isinstance(v, float):
            v = repr(v)
        lines.append(f"{key} = {v}")
    return "\n".join(lines) + "\n"


def resolve_config(args: argparse.Namespace) -> dict:
    """Merge defaults, the optional config file and explicit flags, then validate."""
    values = {k: default for k, (_, default) in CONFIG_KEYS.items()}
    if getattr(args, "config", None):
        path = Path(args.config)
        try:
            text = path.read_text()
        except OSError as exc:
            raise CliError(f"cannot read config {path}: {exc.strerror or exc}", EXIT_IO) from exc
        values.update(parse_config_text(text, str(path)))
    for key in CONFIG_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = _convert(key, str(flag), f"--{key.replace('_', '-')}")
    _validate(values)
    return values


def _validate(v: dict):
    def bad(key, why):
        raise CliError(f"invalid '{key.replace('_', '-')}': {why}", EXIT_CONFIG)

    if not math.isfinite(v["th"]) or v["th"] < 0:
        bad("th", f"must be >= 0, got {v['th']}")
    for key in ("d", "r"):
        if not 0 < v[key] < 1:
            bad(key, f"must lie in (0, 1), got {v[key]}")
    if v["window"] <= 0:
        bad("window", f"must be positive, got {v['window']}")
    if not 0 < v["hop"] <= v["window"]:
        bad("hop", f"must satisfy 0 < hop <= window, got hop={v['hop']} window={v['window']}")
    if v["sample_rate"] <= 0:
        bad("sample_rate", f"must be positive, got {v['sample_rate']}")
    if v["duration"] < 1:
        bad("duration", f"must be at least 1 s, got {v['duration']}")
    if v["pickup_leak_db"] > 0:
        bad("pickup_leak_db", f"must be <= 0, got {v['pickup_leak_db']}")
    if v["rt60"] < 0:
        bad("rt60", f"must be >= 0, got {v['rt60']}")
    if not math.isfinite(v["mic_snr_db"]):
        bad("mic_snr_db", "must be finite")
    if v["eq"] not in ("default", "flat"):
        bad("eq", f"unknown preset {v['eq']!r} (choose default or flat)")
    if v["workers"] < 1:
        bad("workers", f"must be >= 1, got {v['workers']}")


def gate_params(v: dict) -> GateParams:
    return GateParams(th=v["th"], d=v["d"], r=v["r"], mode=v["mode"])


def frame_params(v: dict, sample_rate: float) -> FrameParams:
    return FrameParams(window_size=v["window"], hop=v["hop"], sample_rate=sample_rate)


def _read(path) -> TimeSignal:
    try:
        return audio.read_wav(path)
    except audio.AudioReadError as exc:
        raise CliError(str(exc), EXIT_IO) from exc
    except audio.UnsupportedFormatError as exc:
        raise CliError(str(exc), EXIT_FORMAT) from exc


def _write(path, sig: TimeSignal, fmt: str):
    try:
        audio.write_wav(path, sig, fmt)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc.strerror or exc}", EXIT_IO) from exc


def _same_rate(**signals: TimeSignal):
    rates = {name: s.sample_rate for name, s in signals.items()}
    if len(set(rates.values())) > 1:
        desc = ", ".join(f"{k} {r:g} Hz" for k, r in rates.items())
        raise CliError(f"sample-rate mismatch: {desc}", EXIT_RATE)


def _log(msg: str):
    print(msg, file=sys.stderr)


def _params_desc(fp: FrameParams, gp: GateParams) -> str:
    return (f"th={gp.th:g} d={gp.d:g} r={gp.r:g} mode={gp.mode.value} "
            f"window={fp.window_size} hop={fp.hop} fs={fp.sample_rate:g}")


def cmd_process(args) -> int:
    cfg = resolve_config(args)
    if not cfg["out"]:
        raise CliError("process needs --out", EXIT_CONFIG)
    start = time.perf_counter()
    mic = _read(args.mic)
    pickup = _read(args.pickup)
    _same_rate(mic=mic, pickup=pickup)
    if len(mic) == 0 or len(pickup) == 0:
        raise CliError("input files contain no samples", EXIT_FORMAT)
    fp = frame_params(cfg, mic.sample_rate)
    gp = gate_params(cfg)
    out = process(mic, pickup, fp, gp, cfg["lag"])
    _write(cfg["out"], out, cfg["format"])
    frames = fp.n_frames(padded_length(len(mic), len(pickup), cfg["lag"]))
    _log(f"frames={frames} {_params_desc(fp, gp)} lag={cfg['lag']}")
    _log(f"elapsed={time.perf_counter() - start:.3f}s")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = resolve_config(args)
    if not cfg["out"]:
        raise CliError("simulate needs --out DIR", EXIT_CONFIG)
    out_dir = Path(cfg["out"])
    start = time.perf_counter()
    fixture = synth_fixture(cfg["kind"], cfg["duration"], float(cfg["sample_rate"]),
                            cfg["seed"], window_size=cfg["window"])
    spec = MixSpec(mic_snr_db=cfg["mic_snr_db"], pickup_leak_db=cfg["pickup_leak_db"],
                   reverb_rt60_s=cfg["rt60"], reverb_drr_db=cfg["drr_db"],
                   pickup_eq=cfg["eq"], seed=cfg["seed"])
    pair = make_pair(fixture.signal, fixture.noises, spec)
    noise_sum = TimeSignal(np.sum([n.samples for n in fixture.noises], axis=0),
                           fixture.signal.sample_rate)
    outputs = dict(zip(SIM_FILES, (fixture.signal, noise_sum, pair.mic, pair.pickup,
                                   pair.mic_signal_part, pair.mic_noise_part)))
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        for name, sig in outputs.items():
            _write(out_dir / f"{name}.wav", sig, cfg["format"])
        (out_dir / MANIFEST_NAME).write_text(format_config(cfg))
    except OSError as exc:
        raise CliError(f"cannot write to {out_dir}: {exc.strerror or exc}", EXIT_IO) from exc
    _log(f"wrote {len(outputs)} files and {MANIFEST_NAME} to {out_dir} "
         f"kind={cfg['kind']} seed={cfg['seed']}")
    _log(f"elapsed={time.perf_counter() - start:.3f}s")
    return EXIT_OK


def load_parts(sim_dir, lag: int = 0):
    """Load ground-truth parts and an aligned pickup from a simulation directory."""
    sim_dir = Path(sim_dir)
    if not sim_dir.is_dir():
        raise CliError(f"{sim_dir} is not a directory", EXIT_IO)
    needed = ("mic_signal_part", "mic_noise_part", "pickup")
    missing = [n for n in needed if not (sim_dir / f"{n}.wav").exists()]
    if missing:
        names = ", ".join(f"{n}.wav" for n in missing)
        raise CliError(
            f"{sim_dir} lacks {names}; evaluation needs the separated signal and "
            "noise parts as recorded at the microphone", EXIT_MISSING_PARTS)
    s = _read(sim_dir / "mic_signal_part.wav")
    n = _read(sim_dir / "mic_noise_part.wav")
    p = _read(sim_dir / "pickup.wav")
    _same_rate(mic_signal_part=s, mic_noise_part=n, pickup=p)
    if len(s) != len(n) or len(s) == 0:
        raise CliError(
            f"signal part ({len(s)} samples) and noise part ({len(n)} samples) "
            "must be non-empty and equally long", EXIT_MISSING_PARTS)
    return s, n, align(p, len(s), lag)


def _csv_lines(rows, header: bool) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if header:
        writer.writerow(CSV_COLUMNS)
    writer.writerows(rows)
    return buf.getvalue()


def _append_csv(path: Path, rows):
    try:
        new = not path.exists() or path.stat().st_size == 0
        with open(path, "a", newline="") as fh:
            fh.write(_csv_lines(rows, header=new))
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc.strerror or exc}", EXIT_IO) from exc


def cmd_eval(args) -> int:
    cfg = resolve_config(args)
    start = time.perf_counter()
    s, n, p = load_parts(args.sim_dir, cfg["lag"])
    fp = frame_params(cfg, s.sample_rate)
    report = evaluate(s, n, p, fp, gate_params(cfg))
    rows = [report.csv_row()]
    sys.stdout.write(_csv_lines(rows, header=True))
    out = Path(cfg["out"]) if cfg["out"] else Path(args.sim_dir) / "eval.csv"
    _append_csv(out, rows)
    _log(f"frames={fp.n_frames(len(s))} {_params_desc(fp, report.gate)} "
         f"improvement={report.improvement_db:.2f} dB")
    _log(f"elapsed={time.perf_counter() - start:.3f}s")
    return EXIT_OK


def parse_grid(text: str, param: str) -> np.ndarray:
    """``start:stop:steps`` -> ``steps`` evenly spaced values, endpoints included."""
    parts = text.split(":")
    try:
        if len(parts) != 3:
            raise ValueError
        lo, hi, steps = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise CliError(f"invalid grid {text!r}; expected start:stop:steps", EXIT_CONFIG) from None
    if steps < 1:
        raise CliError(f"grid needs at least one step, got {steps}", EXIT_CONFIG)
    values = np.array([lo]) if steps == 1 else np.linspace(lo, hi, steps)
    if param in ("d", "r") and not np.all((values > 0) & (values < 1)):
        raise CliError(f"grid for {param} must lie inside (0, 1), got {text}", EXIT_GRID)
    if param == "th" and not np.all(np.isfinite(values) & (values >= 0)):
        raise CliError(f"grid for th must be >= 0, got {text}", EXIT_GRID)
    return values


def cmd_sweep(args) -> int:
    cfg = resolve_config(args)
    values = parse_grid(args.grid, args.param)
    start = time.perf_counter()
    s, n, p = load_parts(args.sim_dir, cfg["lag"])
    fp = frame_params(cfg, s.sample_rate)
    reports: list[EvalReport] = sweep(s, n, p, args.param, values, fp, gate_params(cfg),
                                      workers=cfg["workers"])
    rows = [r.csv_row() for r in reports]
    text = _csv_lines(rows, header=True)
    sys.stdout.write(text)
    if cfg["out"]:
        try:
            Path(cfg["out"]).write_text(text)
        except OSError as exc:
            raise CliError(f"cannot write {cfg['out']}: {exc.strerror or exc}", EXIT_IO) from exc
    _log(f"swept {args.param} over {len(values)} points; elapsed={time.perf_counter() - start:.3f}s")
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _add_common(p: argparse.ArgumentParser):
    g = p.add_argument_group("gate and framing")
    g.add_argument("--th", type=str, help="pickup magnitude threshold (default 4)")
    g.add_argument("--d", type=str, help="decay factor in (0, 1) (default 0.95)")
    g.add_argument("--r", type=str, help="rise factor in (0, 1) (default 0.1)")
    g.add_argument("--mode", type=str, help="hard or smooth (default smooth)")
    g.add_argument("--window", type=str, help="STFT window size in samples (default 2048)")
    g.add_argument("--hop", type=str, help="STFT hop in samples (default 512)")
    g.add_argument("--lag", type=str, help="pickup lag in samples; positive advances the pickup")
    g.add_argument("--seed", type=str, help="random seed (default 0)")
    g.add_argument("--config", help="key = value file; flags override it")
    g.add_argument("--out", type=str, help="output file or directory")
    g.add_argument("--format", type=str, help="float32, pcm16 or pcm24 for written audio")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="piezogate", description=__doc__.split("\n")[0],
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("process", help="gate a microphone recording with a pickup recording")
    p.add_argument("mic")
    p.add_argument("pickup")
    _add_common(p)
    p.set_defaults(func=cmd_process)

    p = sub.add_parser("simulate", help="write a simulated microphone/pickup data set")
    p.add_argument("kind", nargs="?", help="disjoint-tones, plucked-vs-band or overlapping-harmonics")
    _add_common(p)
    m = p.add_argument_group("mixing")
    m.add_argument("--duration", type=str, help="seconds (default 8)")
    m.add_argument("--sample-rate", dest="sample_rate", type=str, help="Hz (default 44100)")
    m.add_argument("--mic-snr-db", dest="mic_snr_db", type=str, help="target SNR at the microphone")
    m.add_argument("--pickup-leak-db", dest="pickup_leak_db", type=str,
                   help="background level in the pickup; -inf for none")
    m.add_argument("--rt60", type=str, help="room decay time in seconds; 0 for a dry microphone")
    m.add_argument("--drr-db", dest="drr_db", type=str, help="direct-to-reverberant ratio")
    m.add_argument("--eq", type=str, help="pickup EQ preset: default or flat")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("eval", help="compute SNR/SDR figures for a simulation directory")
    p.add_argument("sim_dir")
    _add_common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="evaluate over a grid of one gate parameter")
    p.add_argument("sim_dir")
    p.add_argument("--param", required=True, choices=("th", "d", "r"))
    p.add_argument("--grid", required=True, help="start:stop:steps")
    p.add_argument("--workers", type=str, help="parallel grid evaluations (default 1)")
    _add_common(p)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        _log(f"piezogate: {exc}")
        return exc.code
    except ValueError as exc:
        _log(f"piezogate: {exc}")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
