"""Command-line entry point.

Every subcommand resolves its parameters as defaults < ``--config`` JSON <
explicit flags, echoes the resolved record in its JSON result, and writes
data files whose bytes depend only on that record (never on ``--threads``).

Exit codes: 0 ok, 1 config error, 2 I/O error, 3 cap exceeded, 4 budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .core import (
    ALL_NOISY,
    CLIFFORD_PERFECT_T,
    Bits,
    BudgetExceeded,
    CapExceeded,
    NoiseParams,
)
from .ensembles import GeneratorConfig, anti_concentration_estimate, build_fig1a, build_fig1b
from .experiments import OracleSpectra, chebyshev_check, noise_eps, theorem1_sweep, truncation_sweep
from .fast import approximate_output, count_low_weight, fast_spectrum_dense
from .fourier import (
    SpectrumTable,
    choose_l,
    choose_l_closed_form,
    decay_apply,
    parseval_gap,
    truncate_spectrum,
    wht_forward,
    write_spectrum_jsonl,
)
from .io import ConfigError, dumps, load_circuit
from .oracle import joint_tables, output_distribution_noisy, output_distribution_pure

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_CAP, EXIT_BUDGET = 0, 1, 2, 3, 4

# name -> (type, default, help); type "flag" is a boolean switch, "ints" a comma list
_NOISE = {
    "e1": (float, 0.0, "Z-flip probability"),
    "e2": (float, 0.0, "X-flip probability"),
    "e3": (float, 0.0, "Y-flip probability"),
    "epsilon": (float, None, "shorthand setting e1 = e2 = EPSILON, e3 = 0"),
}

PARAMS: dict[str, dict] = {
    "gen": {
        "kind": (str, ALL_NOISY, "fig1a or fig1b"),
        "n": (int, 2, "qubits"),
        "d": (int, 2, "fig1a depth"),
        "t": (int, 1, "fig1b T count"),
        "clifford_depth": (int, 4, "fig1b gates per Clifford block"),
        "seed": (int, 0, "master seed"),
        "white_box_set": (str, "HSCNOTT", "HTCNOT, HSCNOTT, SU4, clifford or identity"),
        "layout": (str, "brickwork", "brickwork or custom"),
        "r": (int, None, "measured wires 0..r-1"),
        **_NOISE,
        "out": (str, None, "output circuit file (default stdout)"),
    },
    "oracle": {
        "circuit": (str, None, "circuit JSON file"),
        "y": (str, None, "twirl bit string (default all zeros)"),
        "epsilon": _NOISE["epsilon"],
        "joint": ("flag", False, "include full joint tables"),
        "spectrum": (str, None, "write the noisy spectrum as JSON lines here"),
        "out": (str, None, "result JSON file (default stdout)"),
    },
    "spectrum": {
        "circuit": (str, None, "circuit JSON file"),
        "fast": ("flag", False, "use the Clifford+T evaluator instead of the oracle"),
        "noisy": ("flag", False, "apply the noise decay"),
        "l": (int, None, "keep weights below L"),
        "epsilon": _NOISE["epsilon"],
        "out": (str, None, "spectrum JSON-lines file"),
        "json": (str, None, "summary JSON file (default stdout)"),
    },
    "approx": {
        "circuit": (str, None, "Clifford+T circuit file (omit to only plan l)"),
        "y": (str, None, "twirl bit string (default all zeros)"),
        "x": (str, None, "outcome bit string (default all zeros)"),
        "l": (int, None, "truncation weight"),
        "delta": (float, None, "target precision for choosing l"),
        "eta": (float, None, "failure fraction for choosing l"),
        "epsilon": (float, None, "noise rate for choosing l (default from circuit)"),
        "r": (int, None, "measured qubits for choosing l (default from circuit)"),
        "max_terms": (int, 10**7, "Pauli term budget"),
        "max_components": (int, 10**6, "Fourier index budget"),
        "out": (str, None, "result JSON file (default stdout)"),
    },
    "theorem1": {
        "n": (int, 2, "qubits"),
        "depths": ("ints", [2, 3, 4], "comma-separated depths"),
        "samples": (int, 100, "twirl samples per depth"),
        "seed": (int, 0, "master seed"),
        "white_box_set": (str, "HSCNOTT", "gate set"),
        "r": (int, None, "measured wires (default all)"),
        **_NOISE,
        "csv": (str, None, "per-sample CSV file"),
        "out": (str, None, "summary JSON file (default stdout)"),
    },
    "anticoncentration": {
        "n": (int, 2, "qubits"),
        "d": (int, 10, "depth"),
        "samples": (int, 200, "instances"),
        "seed": (int, 0, "master seed"),
        "white_box_set": (str, "HSCNOTT", "gate set"),
        "layout": (str, "brickwork", "brickwork or custom"),
        "alpha": (float, None, "threshold for the pass flag"),
        "csv": (str, None, "per-sample collision CSV"),
        "out": (str, None, "summary JSON file (default stdout)"),
    },
    "stats": {
        "circuit": (str, None, "circuit file (default: generate a Clifford+T instance)"),
        "n": (int, 2, "qubits of the generated instance"),
        "t": (int, 3, "T count of the generated instance"),
        "clifford_depth": (int, 4, "Clifford block length"),
        "r": (int, 1, "measured wires of the generated instance"),
        "seed": (int, 0, "master seed"),
        **_NOISE,
        "ls": ("ints", [1, 2, 3, 4, 5], "comma-separated truncation weights"),
        "delta": (float, None, "also run the tail-fraction check at this precision"),
        "chebyshev_l": (int, 1, "truncation weight for the tail-fraction check"),
        "samples": (int, 200, "sampled y for the tail-fraction check"),
        "csv": (str, None, "sweep CSV file"),
        "out": (str, None, "summary JSON file (default stdout)"),
    },
}


@dataclass
class ExperimentConfig:
    command: str
    params: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"command": self.command, **self.params}

    @classmethod
    def from_json(cls, command: str, data: dict) -> "ExperimentConfig":
        unknown = set(data) - set(PARAMS[command]) - {"command", "threads"}
        if unknown:
            raise ConfigError(f"unknown config keys for {command}: {sorted(unknown)}")
        if data.get("command", command) != command:
            raise ConfigError(f"config is for {data['command']!r}, not {command!r}")
        return cls(command, {k: v for k, v in data.items() if k in PARAMS[command]})


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated int list: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="noisyfourier", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"v{__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, spec in PARAMS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON file of parameters")
        p.add_argument("--threads", type=int, default=1, help="worker threads")
        for key, (typ, _, help_) in spec.items():
            flag = "--" + key.replace("_", "-")
            if typ == "flag":
                p.add_argument(flag, dest=key, action="store_true", default=None, help=help_)
            else:
                conv = _ints if typ == "ints" else typ
                p.add_argument(flag, dest=key, type=conv, default=None, help=help_)
    return parser


def resolve(args: argparse.Namespace) -> ExperimentConfig:
    spec = PARAMS[args.command]
    params = {k: default for k, (_, default, _) in spec.items()}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: not valid JSON ({exc})") from None
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        params.update(ExperimentConfig.from_json(args.command, data).params)
    for key in spec:
        val = getattr(args, key, None)
        if val is not None:
            params[key] = val
    return ExperimentConfig(args.command, params)


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _noise(p: dict, base: NoiseParams | None = None) -> NoiseParams:
    if p.get("epsilon") is not None:
        return NoiseParams(p["epsilon"], p["epsilon"], 0.0)
    if base is not None and not any(p.get(k) for k in ("e1", "e2", "e3")):
        return base
    return NoiseParams(p.get("e1") or 0.0, p.get("e2") or 0.0, p.get("e3") or 0.0)


def _bits(text: str | None, length: int, what: str) -> Bits:
    if text is None:
        return Bits.zeros(length)
    b = Bits.from_str(text)
    if b.length != length:
        raise ConfigError(f"{what} has {b.length} bits, expected {length}")
    return b


def _require(p: dict, key: str) -> str:
    if p.get(key) is None:
        raise ConfigError(f"--{key.replace('_', '-')} is required")
    return p[key]


def _distribution(vec: np.ndarray, r: int) -> dict:
    return {str(Bits(r, x)): float(v) for x, v in enumerate(vec)}


def _write_text(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _write_csv(path: str, columns: list[str], rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)  # RFC 4180: CRLF rows, minimal quoting
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(row[c]) for c in columns])


def _cell(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    return repr(v) if isinstance(v, float) else v


def _result(cfg: ExperimentConfig, metrics: dict, started: float, budgets: dict | None = None) -> dict:
    return {
        "experiment": cfg.command,
        "version": f"v{__version__}",
        "config": cfg.to_json(),
        "metrics": metrics,
        "budgets": budgets or {},
        "wall_clock_s": round(time.perf_counter() - started, 6),
    }


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_gen(cfg: ExperimentConfig, threads: int) -> dict | None:
    p = cfg.params
    noise = _noise(p)
    if p["kind"] == ALL_NOISY:
        gc = GeneratorConfig(p["n"], p["d"], p["seed"], p["white_box_set"], p["layout"], p["r"], noise)
        e = build_fig1a(gc)
    elif p["kind"] == CLIFFORD_PERFECT_T:
        r = 1 if p["r"] is None else p["r"]
        e = build_fig1b(p["n"], p["clifford_depth"], p["t"], p["seed"], r=r, noise=noise)
    else:
        raise ConfigError(f"unknown kind {p['kind']!r}")
    _write_text(p["out"], dumps(e.to_dict()))
    return None


def cmd_oracle(cfg: ExperimentConfig, threads: int) -> dict:
    started = time.perf_counter()
    p = cfg.params
    c, file_noise, _ = load_circuit(_require(p, "circuit"))
    noise = _noise(p, file_noise)
    y = _bits(p["y"], 2 * c.m, "y")
    metrics = {
        "y": str(y),
        "q": _distribution(output_distribution_pure(c, y), c.r),
        "q_noisy": _distribution(output_distribution_noisy(c, y, noise), c.r),
        "noise": noise.to_dict(),
    }
    if p["joint"] or p["spectrum"]:
        q, qn = joint_tables(c, noise, threads=threads)
        if p["joint"]:
            metrics["joint"] = q.q.tolist()
            metrics["joint_noisy"] = qn.q.tolist()
        if p["spectrum"]:
            spec = wht_forward(qn)
            with open(p["spectrum"], "w") as fh:
                write_spectrum_jsonl(spec, fh)
            gap = parseval_gap(qn, spec)
            metrics["parseval_gap"] = gap
            metrics["parseval_pass"] = gap < 1e-12
    return _result(cfg, metrics, started)


def cmd_spectrum(cfg: ExperimentConfig, threads: int) -> dict:
    started = time.perf_counter()
    p = cfg.params
    c, file_noise, e = load_circuit(_require(p, "circuit"))
    noise = _noise(p, file_noise)
    out = _require(p, "out")
    metrics: dict = {}
    if p["fast"]:
        if e is None or e.kind != CLIFFORD_PERFECT_T:
            raise ConfigError("--fast needs a fig1b circuit file")
        spec = SpectrumTable.from_dense(fast_spectrum_dense(e), c.m, c.r)
    else:
        q, _ = joint_tables(c, noise, threads=threads, noisy=False)
        spec = wht_forward(q)
        metrics["parseval_gap"] = parseval_gap(q, spec)
    if p["noisy"]:
        spec = decay_apply(spec, noise.e1, noise.e2, noise.e3)
    if p["l"] is not None:
        spec = truncate_spectrum(spec, p["l"])
    with open(out, "w") as fh:
        write_spectrum_jsonl(spec, fh)
    metrics["entries"] = len(spec)
    metrics["weights"] = sorted(spec.weights())
    return _result(cfg, metrics, started)


def cmd_approx(cfg: ExperimentConfig, threads: int) -> dict:
    started = time.perf_counter()
    p = cfg.params
    e = None
    if p["circuit"] is not None:
        _, file_noise, e = load_circuit(p["circuit"])
        if e is None or e.kind != CLIFFORD_PERFECT_T:
            raise ConfigError("approx needs a fig1b circuit file")
    metrics: dict = {}
    l = p["l"]
    if l is None:
        if p["delta"] is None or p["eta"] is None:
            raise ConfigError("give --l, or both --delta and --eta")
        eps = p["epsilon"] if p["epsilon"] is not None else (noise_eps(e.noise) if e else None)
        r = p["r"] if p["r"] is not None else (e.circuit.r if e else None)
        if eps is None or r is None:
            raise ConfigError("choosing l without a circuit needs --epsilon and --r")
        l = choose_l(eps, p["delta"], p["eta"], r)
        metrics["l_closed_form"] = choose_l_closed_form(eps, p["delta"], p["eta"], r)
    metrics["l"] = l
    if e is None:
        metrics["planned_only"] = True
        return _result(cfg, metrics, started)
    c = e.circuit
    y = _bits(p["y"], 2 * c.m, "y")
    x = _bits(p["x"], c.r, "x")
    metrics["planned_components"] = count_low_weight(c.m, l)
    try:
        value, budget = approximate_output(
            e, y, x, l, max_terms=p["max_terms"], max_components=p["max_components"], threads=threads
        )
    except BudgetExceeded as exc:
        exc.result = _result(cfg, metrics, started, exc.budget.to_dict())
        raise
    metrics.update({"x": str(x), "y": str(y), "pseudo_probability": value})
    return _result(cfg, metrics, started, budget.to_dict())


def cmd_theorem1(cfg: ExperimentConfig, threads: int) -> dict:
    started = time.perf_counter()
    p = cfg.params
    noise = _noise(p)
    rows, summary = theorem1_sweep(
        p["n"], p["depths"], noise, p["samples"], p["seed"], p["white_box_set"], p["r"], threads
    )
    if p["csv"]:
        _write_csv(p["csv"], ["seed", "y", "delta_y", "threshold", "pass"], rows)
    trend, per_depth = summary[0], summary[1:]
    metrics = {
        "eps": noise.eps,
        "monotone_nonincreasing": trend["monotone_nonincreasing"],
        "depths": per_depth,
        "pass": all(s["pass"] for s in per_depth if s["applicable"]),
    }
    return _result(cfg, metrics, started)


def cmd_anticoncentration(cfg: ExperimentConfig, threads: int) -> dict:
    started = time.perf_counter()
    p = cfg.params
    gc = GeneratorConfig(p["n"], p["d"], p["seed"], p["white_box_set"], p["layout"])
    rep = anti_concentration_estimate(gc, p["samples"], p["seed"], p["alpha"])
    if p["csv"]:
        rows = [{"sample": i, "collision": v} for i, v in enumerate(rep.collisions)]
        _write_csv(p["csv"], ["sample", "collision"], rows)
    metrics = {
        "n": rep.n,
        "samples": rep.samples,
        "estimate": rep.estimate,
        "std_error": rep.std_error,
        "haar_value": 2 * 2**rep.n / (2**rep.n + 1),
        "alpha_threshold": rep.alpha_threshold,
        "pass": rep.passed,
    }
    return _result(cfg, metrics, started)


def cmd_stats(cfg: ExperimentConfig, threads: int) -> dict:
    started = time.perf_counter()
    p = cfg.params
    if p["circuit"] is not None:
        c, file_noise, _ = load_circuit(p["circuit"])
        noise = _noise(p, file_noise)
    else:
        noise = _noise(p)
        c = build_fig1b(p["n"], p["clifford_depth"], p["t"], p["seed"], r=p["r"], noise=noise).circuit
    eps = noise_eps(noise)
    spectra = OracleSpectra.compute(c, noise, threads=threads)
    rows = truncation_sweep(spectra, eps, p["ls"])
    if p["csv"]:
        _write_csv(p["csv"], ["l", "delta0", "Delta", "bound", "pass"], rows)
    metrics = {"eps": eps, "m": c.m, "r": c.r, "rows": rows, "pass": all(r["pass"] for r in rows)}
    if p["delta"] is not None:
        metrics["chebyshev"] = chebyshev_check(spectra, p["chebyshev_l"], p["delta"], p["samples"], p["seed"])
    return _result(cfg, metrics, started)


COMMANDS = {
    "gen": cmd_gen,
    "oracle": cmd_oracle,
    "spectrum": cmd_spectrum,
    "approx": cmd_approx,
    "theorem1": cmd_theorem1,
    "anticoncentration": cmd_anticoncentration,
    "stats": cmd_stats,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = resolve(args)
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        result = COMMANDS[cfg.command](cfg, args.threads)
        if result is not None:
            _write_text(cfg.params.get("out") if cfg.command != "spectrum" else cfg.params.get("json"), dumps(result))
        return EXIT_OK
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        report = getattr(exc, "result", None) or {"budgets": exc.budget.to_dict() if exc.budget else {}}
        sys.stderr.write(dumps(report))
        return EXIT_BUDGET
    except CapExceeded as exc:
        print(f"cap exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (ConfigError, ValueError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
