"""Batch command-line front end.

Subcommands: verify-theorem1, fig3, fig4, bounds, montecarlo, passive.
Every command is deterministic given its arguments (seeds included) and
emits CSV with fixed formatting (12 significant digits, LF line
endings), so outputs are byte-stable across runs.

Options may come from a config file (--config): one ``key = value`` per
line, '#' comments, one section per subcommand.  Command-line flags win
over config values.

Exit codes: 0 success / all checks passed, 1 property failure,
2 usage or I/O error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import sys
from fractions import Fraction

import numpy as np

from . import decoy, detection, keyrates, montecarlo, passive, statbounds, symstate
from .errors import DomainError, ValidationError
from .paulis import BASIS_KETS

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.12g}"


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([c if isinstance(c, str) else _fmt(c) for c in row])
    except OSError as exc:
        raise _UsageError(f"cannot write {path}: {exc}")


class _UsageError(Exception):
    pass


def _parse_floats(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _parse_grid(text: str) -> list[float]:
    """Either a comma list or an inclusive lo:hi:step range."""
    if ":" in text:
        lo, hi, step = (float(t) for t in text.split(":"))
        if step <= 0 or hi < lo:
            raise _UsageError(f"bad grid {text!r}")
        n = int(round((hi - lo) / step))
        return [lo + i * step for i in range(n + 1) if lo + i * step <= hi + step * 1e-9]
    return _parse_floats(text)


def _parse_pairs(text: str) -> list[tuple[float, float]]:
    """Comma-separated eps/delta pairs, e.g. '0.01/0.01,0.03/0.01'."""
    pairs = []
    for tok in text.split(","):
        if not tok.strip():
            continue
        a, b = tok.split("/")
        pairs.append((float(a), float(b)))
    return pairs


def _parse_ints(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _resolve(args: argparse.Namespace, config_path: str | None, section: str, spec: dict):
    """Fill unset options from the config section, then from hard defaults."""
    cfg = configparser.ConfigParser(inline_comment_prefixes=("#",))
    if config_path:
        read = cfg.read(config_path)
        if not read:
            raise _UsageError(f"config file {config_path!r} not readable")
    for dest, (convert, default) in spec.items():
        if getattr(args, dest, None) is not None:
            continue
        if cfg.has_option(section, dest):
            raw = cfg.get(section, dest)
            setattr(args, dest, convert(raw) if convert is not None else raw)
        else:
            setattr(args, dest, default)
    return args


def cmd_verify_theorem1(args) -> int:
    rng = np.random.default_rng(args.seed)
    rows = []
    all_pass = True
    offending = None
    for trial in range(args.trials):
        n = int(rng.integers(1, args.n_max + 1))
        m = int(rng.integers(2, args.m_max + 1))
        state = symstate.random_state(n, rng)
        povm = detection.random_povm(m, rng)
        if args.inject_corruption and trial == 0:
            bad = [e.copy() for e in povm.elements]
            bad[0][0, 0] += 0.05  # break completeness on purpose
            povm = detection.QubitPovm._unchecked(bad)
        report = detection.verify_theorem1(state, povm, args.tol)
        rows.append([trial, n, m, report.max_abs_diff, int(report.passed)])
        if not report.passed:
            all_pass = False
            if offending is None:
                offending = {
                    "trial": trial,
                    "n": n,
                    "m": m,
                    "max_abs_diff": report.max_abs_diff,
                    "state_re": state.dm.real.tolist(),
                    "state_im": state.dm.imag.tolist(),
                    "povm_re": [e.real.tolist() for e in povm.elements],
                    "povm_im": [e.imag.tolist() for e in povm.elements],
                }
    _write_csv(args.out, ["trial", "n", "m", "max_abs_diff", "passed"], rows)
    if not all_pass:
        replay = args.out + ".offending.json"
        with open(replay, "w") as fh:
            json.dump(offending, fh, indent=1)
        print(f"FAIL: equivalence violated; offending instance in {replay}")
        return EXIT_FAILURE
    print(f"PASS: {args.trials} trials, max |p_postprocessed - p_squash| within {args.tol}")
    return EXIT_OK


def cmd_fig3(args) -> int:
    rows = []
    for eps in args.eps:
        for delta in args.delta:
            obs = keyrates.ObservedRates(eps=eps, delta=delta)
            rows.append(
                [
                    eps,
                    delta,
                    keyrates.bb84_rate_discard(obs),
                    keyrates.bb84_rate_random_assign(obs),
                    keyrates.bb84_rate_statpreserve_discard(obs),
                ]
            )
    _write_csv(
        args.out,
        ["eps", "delta", "rate_discard", "rate_random_assign", "rate_statpreserve_discard"],
        rows,
    )
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


def cmd_fig4(args) -> int:
    rows = []
    for eps, delta in args.scenarios:
        for dist in args.distances:
            model = decoy.DecoyChannelModel(
                alpha_db_per_km=args.alpha,
                length_km=dist,
                eta_bob=args.eta_bob,
                eps=eps,
                delta=delta,
            )
            mu_star, uni = decoy.optimize_mu(model, decoy.UNIVERSAL, (args.mu_min, args.mu_max))
            sp = decoy.decoy_key_rate(model, mu_star, decoy.STAT_PRESERVING)
            rows.append([eps, delta, dist, mu_star, uni.rate, sp.rate])
    _write_csv(
        args.out,
        ["eps", "delta", "distance_km", "mu_star", "rate_universal", "rate_stat_preserving"],
        rows,
    )
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


def _read_tally_csv(path: str, signed: bool):
    """Rows of (label, first, second, double) with schema-dependent column names."""
    first_col = "plus_single" if signed else "correct_single"
    second_col = "minus_single" if signed else "error_single"
    out = []
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise _UsageError(f"cannot read {path}: {exc}")
    with fh:
        reader = csv.DictReader(fh)
        for lineno, row in enumerate(reader, start=2):
            try:
                label = row["basis_label"].strip()
                first = float(row[first_col])
                second = float(row[second_col])
                double = float(row["double"])
            except (KeyError, TypeError, ValueError) as exc:
                raise _UsageError(f"{path}:{lineno}: malformed row ({exc})")
            out.append((label, first, second, double))
    if not out:
        raise _UsageError(f"{path}: no tally rows")
    return out


def cmd_bounds(args) -> int:
    signed = args.mode in ("tomography", "chsh")
    tallies = _read_tally_csv(args.input, signed)
    try:
        if args.mode == "qkd":
            rows = _bounds_qkd(tallies, args.key_basis)
            header = [
                "basis", "total", "error_lo", "error_hi",
                "key_error", "key_adjusted_lo", "key_adjusted_hi",
            ]
        elif args.mode == "tomography":
            rows = _bounds_tomography(tallies)
            header = ["label", "lo", "hi"]
        else:
            rows = _bounds_chsh(tallies)
            header = ["label", "lo", "hi"]
    except (DomainError, ValidationError) as exc:
        raise _UsageError(str(exc))
    _write_csv(args.out, header, rows)
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


def _bounds_qkd(tallies, key_basis: str):
    by_label = {}
    for label, corr, err, dbl in tallies:
        by_label[label] = statbounds.EventTally(correct_single=corr, error_single=err, double=dbl)
    if key_basis not in by_label:
        raise _UsageError(f"key basis {key_basis!r} not among tally rows {sorted(by_label)}")
    key_tally = by_label[key_basis]
    key = statbounds.KeyTally(
        single=key_tally.correct_single + key_tally.error_single, double=key_tally.double
    )
    rows = []
    for label, tally in by_label.items():
        interval = statbounds.test_error_bounds(tally)
        if label == key_basis:
            rows.append(
                [label, tally.total, interval.lo, interval.hi,
                 statbounds.key_error_same_basis(tally), "", ""]
            )
        else:
            adj = statbounds.key_error_bounds_other_basis(interval, key)
            rows.append([label, tally.total, interval.lo, interval.hi, "", adj.lo, adj.hi])
    return rows


def _bounds_tomography(tallies):
    by_label = {}
    for label, plus, minus, dbl in tallies:
        tally = statbounds.SignedTally(plus_single=plus, minus_single=minus, double=dbl)
        by_label[label.upper()] = statbounds.stokes_bounds(tally)
    missing = {"X", "Y", "Z"} - set(by_label)
    if missing:
        raise _UsageError(f"tomography mode needs X, Y, Z rows; missing {sorted(missing)}")
    state_set = statbounds.tomography_state_set(by_label["X"], by_label["Y"], by_label["Z"])
    rows = [[w, by_label[w].lo, by_label[w].hi] for w in ("X", "Y", "Z")]
    rows.append(["bloch_norm", state_set.min_bloch_norm, state_set.max_bloch_norm])
    rows.append(["psd_intersects", int(state_set.intersects_psd), int(state_set.intersects_psd)])
    print(
        "state family: center Bloch vector "
        + "(" + ", ".join(_fmt((iv.lo + iv.hi) / 2) for iv in (by_label["X"], by_label["Y"], by_label["Z"])) + ")"
        + f", physical member exists: {state_set.intersects_psd}"
    )
    return rows


def _bounds_chsh(tallies):
    needed = ("A1B1", "A1B2", "A2B1", "A2B2")
    by_label = {}
    for label, plus, minus, dbl in tallies:
        tally = statbounds.SignedTally(plus_single=plus, minus_single=minus, double=dbl)
        by_label[label.upper()] = statbounds.chsh_correlator_bounds(tally)
    missing = set(needed) - set(by_label)
    if missing:
        raise _UsageError(f"chsh mode needs rows {needed}; missing {sorted(missing)}")
    chi = statbounds.chsh_violation_bounds(*(by_label[k] for k in needed))
    fidelity = statbounds.fidelity_lower_bound(chi.lo)
    rows = [[k, by_label[k].lo, by_label[k].hi] for k in needed]
    rows.append(["chi", chi.lo, chi.hi])
    rows.append(["fidelity_lower_bound", fidelity, fidelity])
    print(f"chi in [{_fmt(chi.lo)}, {_fmt(chi.hi)}], fidelity >= {_fmt(fidelity)}")
    return rows


def cmd_montecarlo(args) -> int:
    config = montecarlo.SessionConfig(
        protocol=args.protocol,
        num_signals=args.signals,
        seed=args.seed,
        key_basis=args.key_basis,
        test_fraction=args.test_fraction,
    )
    attack = montecarlo.CopyAttack(p1=args.p1, p2=args.p2)
    result = montecarlo.simulate_session(config, attack)
    report = montecarlo.empirical_report(result)

    rows = [
        [basis, tally.correct_single, tally.error_single, tally.double]
        for basis, tally in result.test_tallies.items()
    ]
    _write_csv(args.out, ["basis_label", "correct_single", "error_single", "double"], rows)

    lines = [
        f"signals={config.num_signals} seed={config.seed} protocol={config.protocol}",
        f"pooled eps_hat={_fmt(report.pooled_eps)} delta_hat={_fmt(report.pooled_delta)}",
        f"all frequencies within 5 sigma: {report.all_within_5_sigma}",
        f"attack error bounds [{_fmt(report.attack_bounds.lo)}, {_fmt(report.attack_bounds.hi)}]"
        f" contain empirical rates: {report.attack_bounds_ok}",
        f"key tally: single={result.key_tally.single} double={result.key_tally.double}",
    ]
    if report.sixstate_rate is not None:
        lines.append(f"six-state rate estimate: {_fmt(report.sixstate_rate)}")
    if report.bb84_rate is not None:
        lines.append(f"bb84 discard rate estimate: {_fmt(report.bb84_rate)}")
    text = "\n".join(lines) + "\n"
    if args.report:
        try:
            with open(args.report, "w", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise _UsageError(f"cannot write {args.report}: {exc}")
    print(text, end="")
    return EXIT_OK


def cmd_passive(args) -> int:
    all_ok = True
    rows = []
    for num_bases in args.num_bases:
        for n in args.photons:
            p = passive.basis_choice_probability(num_bases, n)
            ok = p == Fraction(1, num_bases)
            all_ok &= ok
            rows.append([num_bases, n, str(p), int(ok)])
            print(f"B={num_bases} n={n}: P(A) = {p}  {'ok' if ok else 'MISMATCH'}")
    if args.out:
        _write_csv(args.out, ["num_bases", "photons", "prob", "matches_uniform"], rows)
    return EXIT_OK if all_ok else EXIT_FAILURE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="squashsim",
        description="Multi-photon threshold-detection statistics, key rates, and bounds.",
    )
    parser.add_argument("--config", help="config file (key = value lines, one section per subcommand)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify-theorem1", help="check squash vs post-processing statistics")
    p.add_argument("--trials", type=int)
    p.add_argument("--n-max", dest="n_max", type=int)
    p.add_argument("--m-max", dest="m_max", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--inject-corruption", dest="inject_corruption", action="store_true", default=None,
                   help="debug: corrupt one POVM to confirm the check can fail")

    p = sub.add_parser("fig3", help="BB84 key-rate variants over an (eps, delta) grid")
    p.add_argument("--eps", type=_parse_floats)
    p.add_argument("--delta", type=_parse_grid)
    p.add_argument("--out")

    p = sub.add_parser("fig4", help="decoy key rates vs distance at optimal intensity")
    p.add_argument("--scenarios", type=_parse_pairs, help="eps/delta pairs, e.g. 0.01/0.01,0.03/0.01")
    p.add_argument("--distances", type=_parse_grid)
    p.add_argument("--alpha", type=float)
    p.add_argument("--eta-bob", dest="eta_bob", type=float)
    p.add_argument("--mu-min", dest="mu_min", type=float)
    p.add_argument("--mu-max", dest="mu_max", type=float)
    p.add_argument("--out")

    p = sub.add_parser("bounds", help="interval bounds from a tally CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--mode", choices=("qkd", "tomography", "chsh"))
    p.add_argument("--key-basis", dest="key_basis")
    p.add_argument("--out")

    p = sub.add_parser("montecarlo", help="simulate a session under the copying attack")
    p.add_argument("--protocol", choices=tuple(montecarlo.PROTOCOL_BASES))
    p.add_argument("--signals", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--p1", type=float)
    p.add_argument("--p2", type=float)
    p.add_argument("--key-basis", dest="key_basis")
    p.add_argument("--test-fraction", dest="test_fraction", type=float)
    p.add_argument("--out")
    p.add_argument("--report")

    p = sub.add_parser("passive", help="verify the passive basis-choice identity")
    p.add_argument("--num-bases", dest="num_bases", type=_parse_ints)
    p.add_argument("--photons", type=_parse_ints)
    p.add_argument("--out")
    return parser


_DEFAULTS = {
    "verify-theorem1": {
        "trials": (int, 500),
        "n_max": (int, 6),
        "m_max": (int, 4),
        "tol": (float, 1e-10),
        "seed": (int, 42),
        "out": (None, "theorem1_report.csv"),
        "inject_corruption": (lambda s: s.lower() in ("1", "true", "yes"), False),
    },
    "fig3": {
        "eps": (_parse_floats, [0.01, 0.03, 0.05]),
        "delta": (_parse_grid, _parse_grid("0:0.2:0.005")),
        "out": (None, "fig3.csv"),
    },
    "fig4": {
        "scenarios": (_parse_pairs, [(0.01, 0.01), (0.03, 0.01), (0.01, 0.03)]),
        "distances": (_parse_grid, _parse_grid("0:200:10")),
        "alpha": (float, 0.21),
        "eta_bob": (float, 0.045),
        "mu_min": (float, 1e-4),
        "mu_max": (float, 2.0),
        "out": (None, "fig4.csv"),
    },
    "bounds": {
        "mode": (None, "qkd"),
        "key_basis": (None, "Z"),
        "out": (None, "bounds.csv"),
    },
    "montecarlo": {
        "protocol": (None, "six-state"),
        "signals": (int, 100000),
        "seed": (int, 42),
        "p1": (float, 0.0),
        "p2": (float, 0.0),
        "key_basis": (None, "Z"),
        "test_fraction": (float, 0.5),
        "out": (None, "tallies.csv"),
        "report": (None, None),
    },
    "passive": {
        "num_bases": (_parse_ints, [2, 3, 4]),
        "photons": (_parse_ints, list(range(1, 11))),
        "out": (None, None),
    },
}

_COMMANDS = {
    "verify-theorem1": cmd_verify_theorem1,
    "fig3": cmd_fig3,
    "fig4": cmd_fig4,
    "bounds": cmd_bounds,
    "montecarlo": cmd_montecarlo,
    "passive": cmd_passive,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _resolve(args, args.config, args.command, _DEFAULTS[args.command])
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValidationError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
