"""Command-line driver.

    nctorus COMMAND [options]
    nctorus --config run.json [options]

Options given on the command line override the config file.  Exit status is
0 on success, 1 on usage or input errors and 2 when a verification fails.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, fields
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import fock, heisenberg, lattice, measure, sonn, twisted
from .cyclotomic import Cyclo
from .lattice import ParseError, SkewMatrix

COMMANDS = ("product", "trace", "derive-split", "center", "subgroup-h", "dioph-scan", "act",
            "orbit-search", "validate-g", "fock-verify", "chern", "measure-mc", "h3")

PATH_KEYS = ("theta", "theta_prime", "a", "b", "delta", "g", "data", "mu", "delta_u", "delta_v")

REQUIRED = {
    "product": ("theta", "a", "b"),
    "trace": ("theta", "a"),
    "derive-split": ("theta", "delta"),
    "center": ("theta", "a"),
    "subgroup-h": ("theta",),
    "dioph-scan": ("theta",),
    "act": ("theta", "g"),
    "orbit-search": ("theta", "theta_prime"),
    "validate-g": ("g",),
    "fock-verify": (),
    "chern": ("theta_prime", "mu"),
    "measure-mc": ("s", "m"),
    "h3": ("delta_u", "delta_v"),
}

DEFAULT_TOLERANCE = 1e-9
U64 = 2**64


class UsageError(Exception):
    pass


class VerificationFailure(Exception):
    pass


@dataclass
class ExperimentConfig:
    command: str | None = None
    theta: str | None = None
    theta_prime: str | None = None
    a: str | None = None
    b: str | None = None
    delta: str | None = None
    g: str | None = None
    data: str | None = None
    mu: str | None = None
    delta_u: str | None = None
    delta_v: str | None = None
    s: int | None = None
    m: list | None = None
    t: int = 0
    n: int | None = None
    samples: int = 100_000
    seed: int | None = None
    workers: int = 1
    radius: int = 200
    shells: int = 8
    window: int = 6
    max_depth: int = 4
    max_denominator: int = 64
    tolerance: float = DEFAULT_TOLERANCE
    out: str | None = None

    def is_stochastic(self) -> bool:
        return self.command == "measure-mc" or (self.command == "fock-verify" and self.data is None)

    def validate(self) -> None:
        if self.command is None:
            raise UsageError("no command given")
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        missing = [k for k in REQUIRED[self.command] if getattr(self, k) is None]
        if missing:
            raise UsageError(f"{self.command} needs: {', '.join(missing)}")
        for k in PATH_KEYS:
            p = getattr(self, k)
            if p is not None and not Path(p).is_file():
                raise UsageError(f"{k}: file not found: {p}")
        if self.is_stochastic() and self.seed is None:
            raise UsageError("seed required")
        if self.seed is not None and not 0 <= self.seed < U64:
            raise UsageError("seed must be an unsigned 64-bit integer")
        if self.command == "fock-verify" and self.data is None and self.n is None:
            raise UsageError("fock-verify needs data or n")
        for k in ("samples", "workers", "radius", "shells", "window", "max_depth", "max_denominator"):
            if getattr(self, k) < 0:
                raise UsageError(f"{k} must be non-negative")
        if not self.tolerance > 0:
            raise UsageError("tolerance must be positive")


_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}
_INT_KEYS = {"s", "t", "n", "samples", "seed", "workers", "radius", "shells", "window",
             "max_depth", "max_denominator"}


def load_config(path) -> ExperimentConfig:
    """Parse a JSON config; unknown keys and type mismatches are errors."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise UsageError(f"{path}: line 1: config must be a JSON object")
    unknown = sorted(set(raw) - set(_FIELD_TYPES))
    if unknown:
        raise UsageError(f"{path}: unknown config key {unknown[0]!r}")
    values = {}
    for k, v in raw.items():
        if v is None:
            continue
        if k in _INT_KEYS and (not isinstance(v, int) or isinstance(v, bool)):
            raise UsageError(f"{path}: {k} must be an integer")
        if k == "tolerance" and not isinstance(v, (int, float)):
            raise UsageError(f"{path}: tolerance must be a number")
        if k in PATH_KEYS or k in ("command", "out"):
            if not isinstance(v, str):
                raise UsageError(f"{path}: {k} must be a string")
            if k in PATH_KEYS or k == "out":
                v = str((path.parent / v)) if not os.path.isabs(v) else v
        if k == "m":
            v = _parse_m(v)
        values[k] = v
    cfg = ExperimentConfig(**values)
    cfg.validate()
    return cfg


def _parse_m(v) -> list[int]:
    if isinstance(v, str):
        try:
            return [int(x) for x in v.split(":")]
        except ValueError:
            raise UsageError(f"bad frequency vector {v!r}; use e.g. 1:0:1") from None
    if isinstance(v, list) and all(isinstance(x, int) and not isinstance(x, bool) for x in v):
        return list(v)
    raise UsageError("m must be a list of integers or a ':'-joined string")


# --- formatting -------------------------------------------------------------

def fmt_num(v):
    """JSON-ready value: exact rationals as 'p/q', floats with 12 significant digits."""
    if isinstance(v, bool) or v is None or isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, Fraction):
        return v.numerator if v.denominator == 1 else str(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if not math.isfinite(v):
            return str(v)
        v = float(f"{v:.12g}")
        return 0.0 if v == 0 else v
    if isinstance(v, (complex, np.complexfloating)):
        return [fmt_num(v.real), fmt_num(v.imag)]
    if isinstance(v, Cyclo):
        parts = v.gaussian_parts()
        if parts is not None:
            return [fmt_num(parts[0]), fmt_num(parts[1])]
        return fmt_num(complex(v))
    if isinstance(v, np.ndarray):
        return [fmt_num(x) for x in v.tolist()]
    if isinstance(v, dict):
        return {str(k): fmt_num(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [fmt_num(x) for x in v]
    raise TypeError(f"cannot format {type(v).__name__}")


def dumps(obj) -> str:
    return json.dumps(fmt_num(obj), indent=2, sort_keys=True) + "\n"


def matrix_csv(rows) -> str:
    out = []
    for r in rows:
        out.append(",".join(lattice.format_scalar(v) if isinstance(v, (int, Fraction)) else f"{float(v):.12g}"
                            for v in r))
    return "\n".join(out) + "\n"


# --- input loading ----------------------------------------------------------

def _read(path: str) -> str:
    return Path(path).read_text()


def _with_file(path: str, fn):
    try:
        return fn(_read(path))
    except ParseError as exc:
        raise UsageError(f"{path}: {exc}") from None
    except KeyError as exc:
        raise UsageError(f"{path}: missing key {exc}") from None
    except (ValueError, TypeError) as exc:
        raise UsageError(f"{path}: {exc}") from None


def load_theta(path: str) -> SkewMatrix:
    return _with_file(path, SkewMatrix.from_text)


def load_element(theta: SkewMatrix, path: str) -> twisted.AlgebraElement:
    return _with_file(path, lambda text: twisted.AlgebraElement.from_text(theta, text))


def load_derivation(theta: SkewMatrix, path: str) -> twisted.DerivationData:
    """Lines 'i j_1 ... j_n re im': coefficient of U_j in delta(U_{e_i}), i = 1..n."""
    def parse(text: str) -> twisted.DerivationData:
        lines = text.splitlines()
        groups = [[""] * len(lines) for _ in range(theta.n)]
        for idx, raw in enumerate(lines):
            ln = raw.split("#", 1)[0].strip()
            if not ln:
                continue
            head, _, rest = ln.partition(" ")
            try:
                i = int(head)
            except ValueError:
                raise ParseError(idx + 1, f"expected generator index, got {head!r}") from None
            if not 1 <= i <= theta.n:
                raise ParseError(idx + 1, f"generator index {i} outside 1..{theta.n}")
            groups[i - 1][idx] = rest
        vals = tuple(twisted.AlgebraElement.from_text(theta, "\n".join(g)) for g in groups)
        return twisted.DerivationData(vals)
    return _with_file(path, parse)


def load_group_element(path: str, n: int | None = None) -> sonn.BlockGroupElement:
    """JSON: a 2n x 2n integer matrix, an orbit word, or {"matrix": ...} / {"word": ..., "n": n}."""
    def parse(text: str) -> sonn.BlockGroupElement:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(exc.lineno, exc.msg) from None
        dim = n
        if isinstance(data, dict):
            dim = data.get("n", dim)
            data = data.get("matrix", data.get("word"))
        if isinstance(data, list) and data and all(isinstance(r, list) for r in data):
            return sonn.BlockGroupElement.from_full(data)
        if isinstance(data, list) and all(isinstance(r, dict) for r in data):
            if dim is None:
                raise ValueError("an orbit word needs n (give theta or an 'n' key)")
            return sonn.OrbitWord.from_json(dim, json.dumps(data)).composed()
        raise ValueError("expected a 2n x 2n matrix or a list of {kind, params}")
    return _with_file(path, parse)


def _exact_matrix(rows):
    return [[fmt_num(v) for v in r] for r in rows]


# --- commands ---------------------------------------------------------------

class Report:
    """Files to write (name -> text) and the text to print."""

    def __init__(self):
        self.files: dict[str, str] = {}
        self.stdout: list[str] = []

    def add(self, name: str, text: str, echo: bool = True) -> None:
        self.files[name] = text
        if echo:
            self.stdout.append(text.rstrip("\n"))


def cmd_product(cfg: ExperimentConfig, rep: Report) -> None:
    theta = load_theta(cfg.theta)
    a, b = load_element(theta, cfg.a), load_element(theta, cfg.b)
    rep.add("product.txt", twisted.multiply(a, b).to_text())


def cmd_trace(cfg, rep):
    theta = load_theta(cfg.theta)
    a = load_element(theta, cfg.a)
    tr = twisted.trace(a)
    rep.add("trace.json", dumps({"trace": tr if isinstance(tr, Cyclo) else complex(tr)}))


def cmd_derive_split(cfg, rep):
    theta = load_theta(cfg.theta)
    delta = load_derivation(theta, cfg.delta)
    try:
        res = twisted.derivation_split(delta)
    except twisted.NotAttributable as exc:
        raise VerificationFailure(str(exc)) from None
    q = [list(g) + [fmt_num(c)] for g, c in sorted(res.q.q.items())]
    rep.add("split.json", dumps({"x": list(res.x), "scaled_x": list(res.scaled_x), "q": q,
                                 "residual": res.residual}))
    if res.residual > cfg.tolerance:
        raise VerificationFailure(f"split residual {res.residual:.3e} exceeds tolerance")


def cmd_center(cfg, rep):
    theta = load_theta(cfg.theta)
    if not theta.exact:
        raise UsageError("center needs an exact rational theta")
    a = load_element(theta, cfg.a)
    central, bad = twisted.center_test(a)
    rep.add("center.json", dumps({"central": central, "offending": [list(g) for g in bad]}))


def cmd_subgroup_h(cfg, rep):
    theta = load_theta(cfg.theta)
    try:
        H = lattice.degenerate_subgroup(theta)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    rep.add("subgroup_h.json", dumps({"n": H.n, "rank": H.rank, "basis": [list(v) for v in H.basis]}))


def cmd_dioph_scan(cfg, rep):
    theta = load_theta(cfg.theta)
    try:
        gr = lattice.diophantine_scan(theta, cfg.radius, shells=cfg.shells)
    except lattice.DegenerateInputError as exc:
        raise UsageError(str(exc)) from None
    rep.add("growth.csv", gr.to_csv())
    rep.add("scan.json", dumps({"slope": gr.slope, "intercept": gr.intercept,
                                "r_squared": gr.r_squared, "verdict": gr.verdict,
                                "threshold": gr.threshold, "notes": gr.notes}))


def cmd_act(cfg, rep):
    theta = load_theta(cfg.theta)
    g = load_group_element(cfg.g, theta.n)
    if g.n != theta.n:
        raise UsageError(f"g is {2 * g.n}x{2 * g.n} but theta has n={theta.n}")
    if not sonn.validate(g):
        raise VerificationFailure("g is not in SO(n,n|Z)")
    try:
        out = sonn.act(g, theta)
    except sonn.ActionUndefined as exc:
        raise UsageError(f"action undefined: {exc}") from None
    rep.add("theta_out.txt", out.to_text())
    rep.add("g.csv", matrix_csv(g.full()), echo=False)


def cmd_orbit_search(cfg, rep):
    theta, target = load_theta(cfg.theta), load_theta(cfg.theta_prime)
    if not (theta.exact and target.exact):
        raise UsageError("orbit search needs exact rational matrices")
    word = sonn.orbit_search(theta, target, cfg.max_depth, cfg.max_denominator)
    if word is None:
        rep.add("word.json", dumps({"found": False, "max_depth": cfg.max_depth,
                                    "note": "no word found within the limits; not a proof of inequivalence"}))
        return
    g = word.composed()
    rep.add("word.json", dumps({"found": True, "length": len(word), "word": json.loads(word.to_json()),
                                "matrix": _exact_matrix(g.full())}), echo=False)
    rep.add("g.csv", matrix_csv(g.full()))


def cmd_validate_g(cfg, rep):
    g = load_group_element(cfg.g, cfg.n)
    rels = sonn.block_relations((g.A, g.B, g.C, g.D))
    rel_ok = all(v == 0 for r in rels for row in r for v in row)
    det = g.det()
    valid = rel_ok and det == 1
    rep.add("validate.json", dumps({"valid": valid, "relations": rel_ok, "det": det}))
    if not valid:
        raise VerificationFailure("g is not in SO(n,n|Z)")


def cmd_fock_verify(cfg, rep):
    if cfg.data is not None:
        data = _with_file(cfg.data, fock.MoritaData.from_json)
    else:
        rng = np.random.Generator(np.random.Philox(cfg.seed))
        data = fock.MoritaData.random(rng, cfg.n)
    gk = []
    for k in (1, 2, 3, 4):
        try:
            g, resid = fock.conjugation_matrix(fock.build_v(k, data), return_residual=True)
        except fock.VerificationError as exc:
            raise VerificationFailure(str(exc)) from None
        gk.append(float(np.max(np.abs(g - fock.displayed_g(k, data)))))
    try:
        g = fock.compose_g(data)
    except fock.VerificationError as exc:
        raise VerificationFailure(str(exc)) from None
    gc = fock.conjugation_matrix(fock.composite_v(data))
    theta_back = fock.recovered_theta(g, data.theta_prime)
    integ = fock.integrality_check(fock.composite_v(data))
    residuals = {
        "g_k": gk,
        "composite_conjugation": float(np.max(np.abs(gc - g))),
        "onn_relations": fock.onn_deviation(g),
        "recovered_theta": float(np.max(np.abs(theta_back.array() - data.theta.array()))),
        "chern_transport": fock.transport_residual(data),
    }
    worst = max(max(gk), *(v for k, v in residuals.items() if k != "g_k"))
    rep.add("fock.json", dumps({"n": data.n, "residuals": residuals, "max_residual": worst,
                                "integral": integ.integral, "certified": integ.certified}))
    rep.add("g.csv", matrix_csv(g), echo=False)
    rep.add("data.json", data.to_json() + "\n", echo=False)
    if worst > cfg.tolerance:
        raise VerificationFailure(f"fock residual {worst:.3e} exceeds tolerance")


def cmd_chern(cfg, rep):
    theta_p = load_theta(cfg.theta_prime)
    mu = _with_file(cfg.mu, lambda text: fock.FockVector.from_json(theta_p.n, text))
    ch = fock.chern(theta_p.to_float(), mu)
    out = {"ch": json.loads(ch.to_json())}
    if cfg.data is not None:
        data = _with_file(cfg.data, fock.MoritaData.from_json)
        if data.n != theta_p.n:
            raise UsageError("data and theta_prime have different n")
        moved = fock.chern_transport(ch, data)
        direct = fock.FockVector(data.n, fock.contraction_exp(data.theta.array(), -1)
                                 @ (fock.composite_v(data).matrix @ mu.coords))
        resid = float(np.max(np.abs(moved.coords - direct.coords)))
        out["transported"] = json.loads(moved.to_json())
        out["transport_residual"] = resid
        if resid > cfg.tolerance:
            rep.add("chern.json", dumps(out))
            raise VerificationFailure(f"transport residual {resid:.3e} exceeds tolerance")
    rep.add("chern.json", dumps(out))


def cmd_measure_mc(cfg, rep):
    try:
        freq = measure.FrequencyVector(cfg.m, cfg.t)
        res = measure.mc_estimate(cfg.s, freq, cfg.samples, cfg.seed, cfg.workers)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    rep.add("measure.csv", measure.CSV_HEADER + "\n" + res.csv_row() + "\n")
    if not res.passed:
        raise VerificationFailure("empirical measure exceeds bound + 3 stderr")


def cmd_h3(cfg, rep):
    du = _with_file(cfg.delta_u, heisenberg.H3Element.from_text)
    dv = _with_file(cfg.delta_v, heisenberg.H3Element.from_text)
    res = heisenberg.h3_derivation_split(du, dv, cfg.window)
    rep.add("h3_split.json", dumps({"z_u": res.z_u.to_text().splitlines(),
                                    "z_v": res.z_v.to_text().splitlines(),
                                    "residual": res.residual, "in_window": res.in_window}))
    rep.add("witness.txt", res.inner_witness.to_text(), echo=False)
    if res.residual > cfg.tolerance:
        raise VerificationFailure(f"h3 split residual {res.residual:.3e}: not inner on this window")


HANDLERS = {
    "product": cmd_product, "trace": cmd_trace, "derive-split": cmd_derive_split,
    "center": cmd_center, "subgroup-h": cmd_subgroup_h, "dioph-scan": cmd_dioph_scan,
    "act": cmd_act, "orbit-search": cmd_orbit_search, "validate-g": cmd_validate_g,
    "fock-verify": cmd_fock_verify, "chern": cmd_chern, "measure-mc": cmd_measure_mc, "h3": cmd_h3,
}


def run(cfg: ExperimentConfig, stdout=None) -> int:
    """Dispatch one command, write its report files, return the exit status."""
    stdout = stdout or sys.stdout
    cfg.validate()
    rep = Report()
    status = 0
    try:
        HANDLERS[cfg.command](cfg, rep)
    except VerificationFailure as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        status = 2
    except AssertionError as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        status = 2
    if cfg.out is not None:
        outdir = Path(cfg.out)
        outdir.mkdir(parents=True, exist_ok=True)
        for name, text in rep.files.items():
            (outdir / name).write_text(text)
    for text in rep.stdout:
        print(text, file=stdout)
    return status


class _Parser(argparse.ArgumentParser):
    # usage errors exit 1; status 2 is reserved for failed verifications
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="nctorus", description="Noncommutative torus toolkit.")
    p.add_argument("command", nargs="?", choices=COMMANDS, help="subcommand (or give it in --config)")
    p.add_argument("--config", help="JSON experiment config")
    p.add_argument("--seed", type=int, help="unsigned 64-bit seed for stochastic commands")
    p.add_argument("--out", help="directory for report files")
    p.add_argument("--tolerance", type=float, help="verification tolerance (default 1e-9)")
    p.add_argument("--max-depth", type=int, dest="max_depth", help="orbit search depth")
    p.add_argument("--max-denominator", type=int, dest="max_denominator", help="orbit search pruning")
    p.add_argument("--radius", type=int, help="diophantine scan radius")
    p.add_argument("--samples", type=int, help="Monte-Carlo sample count")
    inputs = p.add_argument_group("inputs")
    inputs.add_argument("--theta", help="skew matrix file")
    inputs.add_argument("--theta-prime", dest="theta_prime", help="second skew matrix file (target)")
    inputs.add_argument("--a", help="algebra element file")
    inputs.add_argument("--b", help="algebra element file")
    inputs.add_argument("--delta", help="derivation file: lines 'i j_1 .. j_n re im'")
    inputs.add_argument("--g", help="group element JSON (matrix or orbit word)")
    inputs.add_argument("--data", help="Morita data JSON")
    inputs.add_argument("--mu", help="K-theory class JSON")
    inputs.add_argument("--delta-u", dest="delta_u", help="H3 element file, value on U")
    inputs.add_argument("--delta-v", dest="delta_v", help="H3 element file, value on V")
    inputs.add_argument("--s", type=int, help="measure scale s")
    inputs.add_argument("--m", help="frequency vector, e.g. 1:0:1")
    inputs.add_argument("--t", type=int, help="integer shift t")
    inputs.add_argument("--n", type=int, help="dimension for random data")
    inputs.add_argument("--workers", type=int, help="Monte-Carlo worker streams")
    inputs.add_argument("--shells", type=int, help="diophantine scan shells")
    inputs.add_argument("--window", type=int, help="H3 split window")
    return p


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    for f in fields(ExperimentConfig):
        v = getattr(args, f.name, None)
        if v is None:
            continue
        if f.name == "m":
            v = _parse_m(v)
        setattr(cfg, f.name, v)
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code
    try:
        cfg = config_from_args(args)
        return run(cfg)
    except UsageError as exc:
        print(f"nctorus: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
