"""Command-line driver: dissociation scans, single-point runs and file conversion.

    varqa scan CONFIG.json [--output scan.csv] [flags]
    varqa run SOURCE [flags]
    varqa convert INPUT OUTPUT
    varqa fixtures [MOLECULE]

A scan config is a JSON object; every key is optional except the sources::

    {"sources": [{"label": "0.735", "path": "h2_0.735.pauli", "format": "pauli_text"}],
     "fixtures": {"molecule": "h2", "distances": [0.5, 0.735]},
     "digitizer": "d2", "mode": "exhaustive", "trials": null,
     "backend": "gibbs", "samples": 1000, "beta": 2.0, "sweeps": 1000,
     "seed": 0, "fine_tune": false, "fine_tune_coordinates": null,
     "excited": {"k": null, "k_rule": [[0.0, 5], [0.475, 3], [0.75, 1]], "alpha_shift": 2.0},
     "ordering": "blocked", "jobs": 1, "output": "scan.csv"}

Relative paths are resolved against the config file. Command-line flags
override config values.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import fixtures
from .errors import ParseError, UnsupportedConversion, VarqaError
from .hamiltonian import (
    BLOCKED,
    ORDERINGS,
    exact_diagonalize,
    format_pauli_text,
    molecular_hamiltonian,
    read_fcidump,
    read_pauli_text,
)
from .hamiltonian.ed import DEFAULT_ALPHA
from .optimizer import (
    DEFAULT_K_RULE,
    EXHAUSTIVE,
    HARTREE_TO_KCAL,
    RANDOM,
    DigitizerSpec,
    deflated_hamiltonian,
    evaluate_trial,
    fine_tune,
    format_report,
    k_for_distance,
    varqa_search,
)
from .sampler import (
    DEFAULT_GIBBS_BETA,
    EXACT_ANNEAL,
    EXACT_GIBBS,
    INFINITE,
    SIMULATED_ANNEALING,
    AnnealSchedule,
    SamplerConfig,
    n_parameters,
    trial_seed,
)

log = logging.getLogger("varqa")

FCIDUMP = "fcidump"
PAULI_TEXT = "pauli_text"
FORMATS = (FCIDUMP, PAULI_TEXT)
CSV_HEADER = ["label", "varqa_hartree", "ed_hartree", "error_kcal_mol", "trials", "support",
              "seconds", "error"]
BACKEND_FLAGS = {"gibbs": EXACT_GIBBS, "sa": SIMULATED_ANNEALING, "anneal": EXACT_ANNEAL}

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_CONFIG = 2


class ConfigError(VarqaError, ValueError):
    pass


def guess_format(path):
    suffix = Path(path).suffix.lower()
    if suffix in (".fcidump", ".fcid") or Path(path).name.upper().startswith("FCIDUMP"):
        return FCIDUMP
    if suffix in (".pauli", ".txt"):
        return PAULI_TEXT
    raise ConfigError(f"cannot infer the format of {path}; pass it explicitly")


@dataclass(frozen=True)
class Source:
    label: str
    path: Path
    format: str = PAULI_TEXT

    def __post_init__(self):
        if self.format not in FORMATS:
            raise ConfigError(f"unknown source format {self.format!r}")


@dataclass(frozen=True)
class ExcitedConfig:
    """Deflate a fixed ``k`` states, or pick k from the label via ``k_rule``."""

    k: int | None = None
    k_rule: tuple = DEFAULT_K_RULE
    alpha_shift: float = DEFAULT_ALPHA

    def __post_init__(self):
        thresholds = [t for t, _ in self.k_rule]
        if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
            raise ConfigError("k-rule thresholds must be strictly increasing")

    def k_for(self, label):
        if self.k is not None:
            return self.k
        try:
            distance = float(label)
        except ValueError:
            raise ConfigError(f"label {label!r} is not a distance; set a fixed k") from None
        return k_for_distance(distance, self.k_rule)


@dataclass
class ScanConfig:
    sources: list = field(default_factory=list)
    digitizer: str = "D2"
    mode: str = EXHAUSTIVE
    trials: int | None = None
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    excited: ExcitedConfig | None = None
    fine_tune: bool = False
    fine_tune_coordinates: list | None = None
    ordering: str = BLOCKED
    output: Path | None = None
    seed: int = 0
    jobs: int = 1
    timings: bool = False

    def __post_init__(self):
        labels = [s.label for s in self.sources]
        if len(set(labels)) != len(labels):
            raise ConfigError("source labels must be unique")
        if self.ordering not in ORDERINGS:
            raise ConfigError(f"unknown ordering {self.ordering!r}")

    def digitizer_for(self, n_qubits):
        return DigitizerSpec(self.digitizer, n_parameters(n_qubits), self.mode, self.trials, self.seed)


@dataclass
class ScanRow:
    label: str
    varqa_energy: float | None = None
    ed_energy: float | None = None
    trials: int = 0
    support: int = 0
    seconds: float = 0.0
    error: str = ""
    report: str = ""

    @property
    def error_kcal(self):
        if self.varqa_energy is None or self.ed_energy is None:
            return None
        return (self.varqa_energy - self.ed_energy) * HARTREE_TO_KCAL

    def csv_fields(self, timings=False):
        def num(x):
            return "" if x is None else f"{x:.12f}"
        return [self.label, num(self.varqa_energy), num(self.ed_energy), num(self.error_kcal),
                str(self.trials), str(self.support), f"{self.seconds:.3f}" if timings else "",
                self.error]


def load_hamiltonian(source, ordering=BLOCKED):
    if source.format == FCIDUMP:
        return molecular_hamiltonian(read_fcidump(source.path), ordering)
    return read_pauli_text(source.path)


def run_row(source, config):
    """One scan row; numerical failures are recorded on the row rather than raised."""
    t0 = time.perf_counter()
    row = ScanRow(source.label)
    try:
        h = load_hamiltonian(source, config.ordering)
        k = config.excited.k_for(source.label) if config.excited else 0
        alpha = config.excited.alpha_shift if config.excited else DEFAULT_ALPHA
        target, spectrum = deflated_hamiltonian(h, k, alpha, config.ordering)
        row.ed_energy = float(spectrum.eigenvalues[k])
        spec = config.digitizer_for(h.n_qubits)
        result = varqa_search(target, spec, config.sampler, config.seed, config.jobs)
        theta, energy, state = result.best_theta, result.best_energy, result.best_state
        if config.fine_tune:
            seed = trial_seed(config.seed, result.best_trial)
            tuned, tuned_energy, _ = fine_tune(theta, target, config.sampler,
                                               config.fine_tune_coordinates, seed=seed)
            if tuned_energy < energy:
                ev = evaluate_trial(tuned, target, config.sampler, seed)
                theta, energy, state = tuned, ev.energy, ev.state
                result = replace(result, best_theta=tuned, best_signs=ev.signs,
                                 best_state=ev.state, best_energy=ev.energy)
        row.varqa_energy = energy
        row.trials = result.trials_evaluated
        row.support = len(state)
        row.report = f"# {source.label}\n" + format_report(result, row.ed_energy)
    except (VarqaError, ValueError, ArithmeticError) as exc:
        log.error("row %s failed: %s", source.label, exc)
        row.error = f"{type(exc).__name__}: {exc}"
    row.seconds = time.perf_counter() - t0
    return row


def format_csv(rows, timings=False):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow(row.csv_fields(timings))
    return buf.getvalue()


def run_scan(config):
    """Evaluate every source in config order; writes the CSV when ``config.output`` is set."""
    for source in config.sources:
        if not Path(source.path).is_file():
            raise FileNotFoundError(f"source {source.label}: {source.path} not found")
    rows = [run_row(source, config) for source in config.sources]
    if config.output is not None:
        Path(config.output).write_text(format_csv(rows, config.timings))
    return rows


def convert(input_path, output_path, input_format=None, output_format=PAULI_TEXT, ordering=BLOCKED):
    """fcidump -> pauli_text, or pauli_text -> pauli_text (canonical rewrite)."""
    input_format = input_format or guess_format(input_path)
    if output_format != PAULI_TEXT or input_format not in FORMATS:
        raise UnsupportedConversion(f"cannot convert {input_format} to {output_format}")
    h = load_hamiltonian(Source("convert", Path(input_path), input_format), ordering)
    text = format_pauli_text(h)
    Path(output_path).write_text(text)
    return text


def _sources_from(obj, base):
    sources = []
    for item in obj.get("sources", []):
        path = Path(item["path"])
        if not path.is_absolute():
            path = base / path
        fmt = item.get("format") or guess_format(path)
        sources.append(Source(str(item.get("label", path.stem)), path, fmt))
    fx = obj.get("fixtures")
    if fx:
        molecule = fx["molecule"]
        wanted = fx.get("distances") or fixtures.distances(molecule)
        for d in wanted:
            sources.append(Source(f"{float(d):.3f}", fixtures.fixture_path(molecule, float(d)), PAULI_TEXT))
    return sources


def config_from_dict(obj, base=Path(".")):
    backend = BACKEND_FLAGS.get(str(obj.get("backend", "gibbs")).lower())
    if backend is None:
        raise ConfigError(f"unknown backend {obj.get('backend')!r}")
    samples = obj.get("samples", 1000)
    sweeps = int(obj.get("sweeps", AnnealSchedule.sweeps))
    sampler = SamplerConfig(
        backend=backend,
        shots=INFINITE if samples in (INFINITE, None) else int(samples),
        beta=float(obj.get("beta", DEFAULT_GIBBS_BETA)),
        schedule=AnnealSchedule(sweeps=sweeps,
                                beta_start=float(obj.get("beta_start", AnnealSchedule.beta_start)),
                                beta_end=float(obj.get("beta_end", AnnealSchedule.beta_end))),
    )
    excited = None
    ex = obj.get("excited")
    if ex is True:
        ex = {}
    if isinstance(ex, dict):
        excited = ExcitedConfig(
            k=ex.get("k"),
            k_rule=tuple((float(t), int(k)) for t, k in ex.get("k_rule", DEFAULT_K_RULE)),
            alpha_shift=float(ex.get("alpha_shift", DEFAULT_ALPHA)),
        )
    output = obj.get("output")
    if output is not None and not Path(output).is_absolute():
        output = base / output
    return ScanConfig(
        sources=_sources_from(obj, base),
        digitizer=str(obj.get("digitizer", "D2")).upper(),
        mode=obj.get("mode", EXHAUSTIVE),
        trials=obj.get("trials"),
        sampler=sampler,
        excited=excited,
        fine_tune=bool(obj.get("fine_tune", False)),
        fine_tune_coordinates=obj.get("fine_tune_coordinates"),
        ordering=obj.get("ordering", BLOCKED),
        output=Path(output) if output is not None else None,
        seed=int(obj.get("seed", 0)),
        jobs=int(obj.get("jobs", 1)),
        timings=bool(obj.get("timings", False)),
    )


def _apply_flags(obj, args):
    mapping = {
        "digitizer": args.digitizer, "mode": args.mode, "trials": args.trials,
        "samples": args.samples, "backend": args.backend, "beta": args.beta,
        "sweeps": args.sweeps, "seed": args.seed, "ordering": args.ordering,
        "output": args.output, "jobs": args.jobs,
    }
    for key, value in mapping.items():
        if value is not None:
            obj[key] = value
    if args.fine_tune:
        obj["fine_tune"] = True
    if args.timings:
        obj["timings"] = True
    if args.excited_k is not None or args.alpha_shift is not None:
        ex = dict(obj.get("excited") or {})
        if args.excited_k is not None:
            ex["k"] = args.excited_k
        if args.alpha_shift is not None:
            ex["alpha_shift"] = args.alpha_shift
        obj["excited"] = ex
    return obj


def _samples_arg(text):
    return INFINITE if text == INFINITE else int(text)


def _common_flags():
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("search")
    g.add_argument("--digitizer", choices=["d1", "d2"], type=str.lower)
    g.add_argument("--mode", choices=[EXHAUSTIVE, RANDOM])
    g.add_argument("--trials", type=int, help="trial count for random mode")
    g.add_argument("--samples", type=_samples_arg, help="shots per trial, or 'infinite' (gibbs and anneal only)")
    g.add_argument("--backend", choices=sorted(BACKEND_FLAGS))
    g.add_argument("--beta", type=float, help="inverse temperature of the exact Gibbs sampler")
    g.add_argument("--sweeps", type=int, help="simulated-annealing sweeps")
    g.add_argument("--seed", type=int, help="master seed")
    g.add_argument("--fine-tune", action="store_true")
    g.add_argument("--excited-k", type=int, help="number of lowest states to deflate")
    g.add_argument("--alpha-shift", type=float, help="deflation shift in Hartree")
    g.add_argument("--ordering", choices=list(ORDERINGS))
    g.add_argument("--output", help="CSV path")
    g.add_argument("--jobs", type=int, help="worker processes for the trial loop")
    g.add_argument("--timings", action="store_true", help="fill the seconds column (not reproducible)")
    return p


def build_parser():
    common = _common_flags()
    ap = argparse.ArgumentParser(prog="varqa", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("scan", parents=[common], help="run every source of a JSON config")
    sp.add_argument("config")
    sp.add_argument("--report", help="write the per-row plain-text report here")

    rp = sub.add_parser("run", parents=[common], help="single-point run on one Hamiltonian file")
    rp.add_argument("source")
    rp.add_argument("--format", choices=list(FORMATS))
    rp.add_argument("--label")

    cp = sub.add_parser("convert", help="fcidump -> pauli_text")
    cp.add_argument("input")
    cp.add_argument("output")
    cp.add_argument("--from", dest="input_format", choices=list(FORMATS))
    cp.add_argument("--to", dest="output_format", default=PAULI_TEXT, choices=list(FORMATS))
    cp.add_argument("--ordering", choices=list(ORDERINGS), default=BLOCKED)

    fp = sub.add_parser("fixtures", help="list bundled Hamiltonians")
    fp.add_argument("molecule", nargs="?", choices=list(fixtures.MOLECULES))
    return ap


def _scan_command(args):
    config_path = Path(args.config)
    obj = json.loads(config_path.read_text())
    config = config_from_dict(_apply_flags(obj, args), config_path.parent)
    rows = run_scan(config)
    if config.output is None:
        sys.stdout.write(format_csv(rows, config.timings))
    if args.report:
        Path(args.report).write_text("".join(r.report or f"# {r.label}\nerror {r.error}\n" for r in rows))
    return EXIT_PARTIAL if any(r.error for r in rows) else EXIT_OK


def _run_command(args):
    path = Path(args.source)
    obj = {"sources": [{"label": args.label or path.stem, "path": str(path.resolve()),
                        "format": args.format or guess_format(path)}]}
    config = config_from_dict(_apply_flags(obj, args))
    rows = run_scan(config)
    row = rows[0]
    if row.error:
        sys.stderr.write(f"error: {row.error}\n")
        return EXIT_PARTIAL
    sys.stdout.write(row.report)
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "scan":
            return _scan_command(args)
        if args.command == "run":
            return _run_command(args)
        if args.command == "convert":
            convert(args.input, args.output, args.input_format, args.output_format, args.ordering)
            return EXIT_OK
        for row in fixtures.manifest(args.molecule):
            print(f"{row['molecule']}\t{row['distance']:.3f}\t{fixtures.data_dir() / row['pauli']}")
        return EXIT_OK
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ParseError, IndexError,
            VarqaError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
