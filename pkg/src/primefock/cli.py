"""``primefock`` command line.

Each subcommand reads a JSON scenario (``--scenario``), applies flag
overrides, validates everything up front and writes ``<command>.csv`` and/or
``<command>.json`` into ``--out``.  Exit status: 0 success, 2 invalid
input, 3 a tolerance contract was violated.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .dynamics import Tag, cat_residual, evolve, factorized_cat_check
from .fock import ConfigurationError, FockVector
from .homodyne import GridReachError, cat_port_density, center, count_local_maxima, default_grid, psi
from .qfunction import (
    SeriesCapError,
    overlap_parameter,
    q_ncs,
    q_single,
    resolution_check_single_site,
    s_closed,
    s_dirichlet,
)
from .scenario import (
    Scenario,
    ScenarioError,
    complex_json,
    load_scenario,
    merge,
    parse_complex,
    sites_params,
)
from .states import ParameterError, gen_cs, local_cs, moebius_state, ncs, single_moebius, truncation_defect

EXIT_OK, EXIT_INVALID, EXIT_CONTRACT = 0, 2, 3


def fmt(x: float) -> str:
    return format(float(x), ".17g")


class Output:
    """Writes deterministic CSV/JSON files with a provenance header."""

    def __init__(self, out_dir: Path, scenario: Scenario):
        self.dir = out_dir
        self.scenario = scenario
        self.dir.mkdir(parents=True, exist_ok=True)

    def header(self, defect: Optional[float]) -> list[str]:
        return [
            f"primefock {__version__}",
            f"scenario_sha256 {self.scenario.digest}",
            f"truncation_defect {fmt(defect) if defect is not None else 'n/a'}",
        ]

    def csv(self, name: str, columns: list[str], rows, defect: Optional[float]) -> Path:
        path = self.dir / f"{name}.csv"
        lines = [f"# {h}" for h in self.header(defect)]
        lines.append(",".join(columns))
        for row in rows:
            lines.append(",".join(v if isinstance(v, str) else fmt(v) for v in row))
        path.write_text("\n".join(lines) + "\n")
        return path

    def json(self, name: str, report: dict, defect: Optional[float]) -> Path:
        path = self.dir / f"{name}.json"
        body = {
            "tool": f"primefock {__version__}",
            "scenario_sha256": self.scenario.digest,
            "truncation_defect": defect,
            **report,
        }
        path.write_text(json.dumps(body, sort_keys=True, indent=2) + "\n")
        return path


def _local_alpha(sc: Scenario) -> tuple[int, complex]:
    primes = sc.params.primes or (2,)
    p = primes[0]
    return p, sc.params.alpha(p)


def build_state(sc: Scenario, trunc, params=None) -> FockVector:
    params = params or sc.params
    if sc.family == "local_cs":
        p, alpha = _local_alpha(sc)
        return local_cs(alpha, p, trunc)
    if sc.family == "single_moebius":
        p, alpha = _local_alpha(sc)
        return single_moebius(alpha, p, trunc)
    return {"ncs": ncs, "gen_cs": gen_cs, "moebius": moebius_state}[sc.family](params, trunc)


def _amplitude_rows(v: FockVector, t: Optional[float] = None):
    for occ, amp in v.items():
        label = "*".join(f"{p}^{a}" for p, a in occ) or "1"
        row = [] if t is None else [t]
        row += [label, amp.real, amp.imag, abs(amp) ** 2]
        yield row


def cmd_build(sc: Scenario, out: Output, args) -> int:
    trunc = sc.truncation()
    v = build_state(sc, trunc)
    defect = truncation_defect(v)
    out.csv("build", ["n", "re", "im", "weight"], _amplitude_rows(v), defect)
    out.json(
        "build",
        {
            "family": sc.family,
            "active_primes": list(trunc.active_primes),
            "kmax": list(trunc.kmax),
            "basis_size": trunc.size,
            "nonzero": v.nnz(),
            "norm_squared": 1.0 - defect,
        },
        defect,
    )
    print(f"built {sc.family} on {trunc.size} basis states, defect {defect:.3e}")
    return EXIT_OK


def cmd_evolve(sc: Scenario, out: Output, args) -> int:
    trunc = sc.truncation()
    v = build_state(sc, trunc)
    defect = truncation_defect(v)
    rows = []
    for t in sc.times:
        rows.extend(_amplitude_rows(evolve(sc.hamiltonian, args.sign * t, v), t))
    out.csv("evolve", ["t", "n", "re", "im", "weight"], rows, defect)
    print(f"evolved under {sc.hamiltonian.label()} at {len(sc.times)} times")
    return EXIT_OK


# (family, hamiltonian tag) -> expected outcome
POSITIVE = {
    ("local_cs", Tag.LOCAL_QUADRATIC): "single",
    ("local_cs", Tag.GLOBAL_QUADRATIC): "single",
    ("ncs", Tag.GLOBAL_QUADRATIC): "defect",
    ("moebius", Tag.GEN_GLOBAL_QUADRATIC): "defect",
    ("single_moebius", Tag.SINGLE_SITE_GEN_QUADRATIC): "single",
    ("ncs", Tag.FINITE_LOCAL_QUADRATIC): "factorized",
    ("ncs", Tag.MIXED_BELOW_X): "factorized",
}
NEGATIVE = {("gen_cs", Tag.GEN_GLOBAL_QUADRATIC), ("ncs", Tag.LOCAL_QUADRATIC)}


def cmd_cat_check(sc: Scenario, out: Output, args) -> int:
    tol = sc.tolerances
    kind = sc.hamiltonian
    key = (sc.family, kind.tag)
    trunc = sc.truncation()
    results = []
    ok = True
    for t in sc.times:
        t_eff = args.sign * t
        if POSITIVE.get(key) == "factorized":
            res = factorized_cat_check(kind, sc.params, t_eff, trunc)
        elif sc.family in ("local_cs", "single_moebius"):
            p, alpha = _local_alpha(sc)
            res = cat_residual(kind, sc.family, alpha, t_eff, trunc, prime=p)
        else:
            res = cat_residual(kind, sc.family, sc.params, t_eff, trunc)
        positive_tol = tol["cat_defect_factor"] * res.defect + tol["cat_abs"]
        if key in POSITIVE:
            bound = tol["cat_single_site"] if POSITIVE[key] == "single" else positive_tol
            passed = res.inf <= bound
            verdict = "cat identity holds" if passed else "cat identity VIOLATED"
            expectation = "positive"
        elif key in NEGATIVE:
            bound = tol["negative_factor"] * positive_tol
            passed = res.inf > bound
            verdict = "negative case confirmed" if passed else "negative case NOT confirmed"
            expectation = "negative"
        else:
            bound, passed, verdict, expectation = None, True, "no contract for this pairing", "none"
        ok &= passed
        results.append(
            {
                "t": t,
                "residual_inf": res.inf,
                "residual_l2": res.l2,
                "defect": res.defect,
                "bound": bound,
                "expectation": expectation,
                "pass": passed,
                "verdict": verdict,
            }
        )
        print(f"t={t:g}: residual {res.inf:.3e} ({verdict})")
    defect = max(r["defect"] for r in results)
    out.json(
        "cat-check",
        {"family": sc.family, "hamiltonian": kind.label(), "results": results, "pass": ok},
        defect,
    )
    return EXIT_OK if ok else EXIT_CONTRACT


def _qfunc_points(sc: Scenario, section: dict, problems: list[str]):
    points = section.get("points", [])
    if not points:
        problems.append("qfunc.points: at least one evaluation point is required")
    if sc.family == "local_cs":
        return [parse_complex(pt, f"qfunc.points[{i}]", problems) for i, pt in enumerate(points)]
    return [sites_params(sc.s, pt, f"qfunc.points[{i}]", problems) for i, pt in enumerate(points)]


def cmd_qfunc(sc: Scenario, out: Output, args) -> int:
    section = sc.section.get("qfunc", {})
    problems: list[str] = []
    kind = section.get("kind", "harmonic")
    points = _qfunc_points(sc, section, problems)
    rows = []
    defect = None
    if sc.family == "local_cs":
        if kind not in ("harmonic", "quadratic"):
            problems.append(f"qfunc.kind: single-site kinds are 'harmonic' or 'quadratic', got {kind!r}")
        if problems:
            raise ScenarioError(problems)
        _, alpha0 = _local_alpha(sc)
        for t in sc.times:
            for i, a in enumerate(points):
                rows.append([t, str(i), a.real, a.imag, q_single(alpha0, a, args.sign * t, kind)])
        out.csv("qfunc", ["t", "point", "re", "im", "q_value"], rows, None)
    else:
        if kind not in ("harmonic", "local-quadratic", "global-quadratic"):
            problems.append(f"qfunc.kind: unknown kind {kind!r}")
        if sc.family != "ncs":
            problems.append("qfunc: only the local_cs and ncs families have Q-functions here")
        if problems:
            raise ScenarioError(problems)
        extra = set()
        for pt in points:
            extra |= set(pt.primes)
        trunc = sc.truncation(extra)
        defect = truncation_defect(ncs(sc.params, trunc))
        for t in sc.times:
            for i, pt in enumerate(points):
                rows.append([t, str(i), q_ncs(sc.params, pt, args.sign * t, kind, trunc)])
        out.csv("qfunc", ["t", "point", "q_value"], rows, defect)
    print(f"evaluated {len(rows)} Q-function values")
    return EXIT_OK


def cmd_sfunc(sc: Scenario, out: Output, args) -> int:
    section = sc.section.get("sfunc", {})
    problems: list[str] = []
    other = sites_params(sc.s, section.get("sites", []), "sfunc.sites", problems)
    if problems:
        raise ScenarioError(problems)
    trunc = sc.truncation(other.primes)
    defect = max(truncation_defect(ncs(sc.params, trunc)), truncation_defect(ncs(other, trunc)))
    tol = sc.tolerances["equivalence_rel"] + sc.tolerances["cat_defect_factor"] * defect
    a = overlap_parameter(sc.params, other)
    rows, worst = [], 0.0
    for t in sc.times:
        te = args.sign * t
        glob = s_dirichlet(sc.params, other, te, "global-quadratic", trunc)
        closed = s_closed(a, te)
        loc = s_dirichlet(sc.params, other, te, "local-quadratic", trunc)
        prod = 1.0 + 0j
        for p in trunc.active_primes:
            w = p ** (-2 * sc.s.real) * sc.params.value(p).conjugate() * other.value(p)
            prod *= s_closed(w, te)
        d_glob = abs(glob - closed) / abs(closed)
        d_loc = abs(loc - prod) / abs(prod)
        worst = max(worst, d_glob, d_loc)
        rows.append([t, glob.real, glob.imag, closed.real, closed.imag, loc.real, loc.imag,
                     prod.real, prod.imag, d_glob, d_loc])
    cols = ["t", "global_dirichlet_re", "global_dirichlet_im", "global_closed_re", "global_closed_im",
            "local_dirichlet_re", "local_dirichlet_im", "local_product_re", "local_product_im",
            "delta_global", "delta_local"]
    out.csv("sfunc", cols, rows, defect)
    passed = worst <= tol
    out.json("sfunc", {"overlap_a": complex_json(a), "max_delta": worst, "bound": tol, "pass": passed}, defect)
    print(f"S(t) cross-form max relative delta {worst:.3e} (bound {tol:.3e})")
    return EXIT_OK if passed else EXIT_CONTRACT


def _grid(section: dict, alpha: complex) -> np.ndarray:
    n = int(section.get("n_grid", 2048))
    reach = section.get("reach")
    if reach is None:
        return default_grid(alpha, n)
    return np.linspace(-float(reach), float(reach), n)


def cmd_homodyne(sc: Scenario, out: Output, args) -> int:
    section = sc.section.get("homodyne", {})
    rows, report = [], {"sites": []}
    for p in sc.params.primes:
        alpha = sc.params.alpha(p)
        theta = sc.params.theta(p)
        grid = _grid(section, alpha)
        wave = psi(alpha, theta, grid)
        dens = np.abs(wave) ** 2
        mass = float(np.trapezoid(dens, grid))
        mean = float(np.trapezoid(grid * dens, grid) / mass)
        var = float(np.trapezoid((grid - mean) ** 2 * dens, grid) / mass)
        for x, w, d in zip(grid, wave, dens):
            rows.append([str(p), x, d, w.real, w.imag])
        report["sites"].append(
            {"p": p, "alpha": complex_json(alpha), "theta": theta, "center": center(alpha, theta),
             "mean": mean, "second_moment": var, "mass": mass}
        )
    out.csv("homodyne", ["p", "x", "P", "re_psi", "im_psi"], rows, None)
    out.json("homodyne", report, None)
    print(f"wrote homodyne profiles for {len(report['sites'])} site(s)")
    return EXIT_OK


def cmd_interfere(sc: Scenario, out: Output, args) -> int:
    section = sc.section.get("interfere", {})
    problems: list[str] = []
    eta = float(section.get("eta", 0.99))
    if not 0 <= eta <= 1:
        problems.append(f"interfere.eta: must lie in [0, 1], got {eta}")
    site = section.get("site")
    if site is not None:
        if site not in sc.params.primes:
            problems.append(f"interfere.site: prime {site} has no site parameter")
            alpha = 0j
        else:
            alpha = sc.params.alpha(site)
    else:
        alpha = parse_complex(section.get("alpha", [0.0, 5.0]), "interfere.alpha", problems)
    if problems:
        raise ScenarioError(problems)
    theta_a = float(section.get("theta_a", sc.params.theta(site) if site else 0.0))
    theta_b = float(section.get("theta_b", 0.0))
    t = args.sign * float(section.get("t", 0.0))
    grid = _grid(section, alpha)
    prof = cat_port_density(alpha, eta, theta_a, theta_b, t, grid, check=False)
    norm_err = prof.normalization_error()
    half = float(section.get("central_halfwidth", 3.0))
    fringes = count_local_maxima(prof, -half, half)
    passed = norm_err <= sc.tolerances["normalization"] and prof.quadrature_gap <= sc.tolerances["quadrature_gap"]
    header = Output.header(out, None) + [f"fringes {fringes}"]
    path = out.dir / "interfere.csv"
    path.write_text(prof.to_csv(header))
    out.json(
        "interfere",
        {"alpha": complex_json(alpha), "eta": eta, "theta_a": theta_a, "theta_b": theta_b, "t": t,
         "site": site, "fringes": fringes, "normalization_error": norm_err,
         "quadrature_gap": prof.quadrature_gap, "pass": passed},
        None,
    )
    print(f"P(x): {fringes} fringe maxima, normalization error {norm_err:.2e}")
    return EXIT_OK if passed else EXIT_CONTRACT


def cmd_resolution(sc: Scenario, out: Output, args) -> int:
    section = sc.section.get("resolution", {})
    p = int(section.get("p", 2))
    kmax = int(section.get("kmax", 12))
    n_r, n_mu = int(section.get("n_r", 512)), int(section.get("n_mu", 512))
    r_max = section.get("r_max")
    if n_r < 32 or n_mu < 32:
        raise ScenarioError(["resolution: quadrature sizes must be >= 32"])
    dev = resolution_check_single_site(p, sc.s, r_max, n_r, n_mu, kmax)
    passed = dev <= sc.tolerances["resolution"]
    out.json(
        "resolution-check",
        {"p": p, "kmax": kmax, "n_r": n_r, "n_mu": n_mu, "r_max": r_max, "max_deviation": dev,
         "bound": sc.tolerances["resolution"], "pass": passed},
        None,
    )
    print(f"resolution of identity: max deviation {dev:.3e}")
    return EXIT_OK if passed else EXIT_CONTRACT


COMMANDS = {
    "build": (cmd_build, "build a state and report its truncation defect"),
    "evolve": (cmd_evolve, "amplitude table of the evolved state at each time"),
    "cat-check": (cmd_cat_check, "residual of the cat doubling identity"),
    "qfunc": (cmd_qfunc, "Q-function over a grid of points"),
    "sfunc": (cmd_sfunc, "S(t) in all applicable forms with cross-form deltas"),
    "homodyne": (cmd_homodyne, "homodyne wavefunction profile per site"),
    "interfere": (cmd_interfere, "beam-splitter interference profile P(x)"),
    "resolution-check": (cmd_resolution, "single-site resolution of the identity"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", type=Path, help="JSON scenario file")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    common.add_argument("--sign-convention", choices=("plus", "minus"), default="plus",
                        help="propagate with exp(+iHt) (default) or exp(-iHt)")
    common.add_argument("--defect-target", type=float, help="truncation defect target")
    common.add_argument("--family", help="state family override")
    common.add_argument("--hamiltonian", help="Hamiltonian kind override")
    common.add_argument("--cutoff", type=int, help="prime cutoff x for finite/mixed kinds")
    common.add_argument("--prime", type=int, help="site of the single-site generalized kind")
    common.add_argument("--s", nargs=2, type=float, metavar=("RE", "IM"), help="Dirichlet exponent s")
    common.add_argument("--site", action="append", metavar="P:RE,IM",
                        help="site parameter, repeatable (replaces scenario sites)")
    common.add_argument("--times", nargs="+", type=float, help="evaluation times")
    common.add_argument("--kmax", type=int, help="uniform per-site occupation cap")

    parser = argparse.ArgumentParser(prog="primefock", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"primefock {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=help_text)
    return parser


def _site_flag(text: str) -> dict:
    p, _, value = text.partition(":")
    re_, _, im = value.partition(",")
    return {"p": int(p), "z": [float(re_ or 0), float(im or 0)]}


def scenario_from_args(args) -> Scenario:
    raw: dict = {}
    if args.scenario is not None:
        try:
            raw = json.loads(args.scenario.read_text())
        except (OSError, json.JSONDecodeError) as err:
            raise ScenarioError([f"cannot read scenario {args.scenario}: {err}"]) from None
    over: dict = {}
    if args.family:
        over["family"] = args.family
    if args.hamiltonian or args.cutoff is not None or args.prime is not None:
        ham = raw.get("hamiltonian", {})
        ham = {"kind": ham} if isinstance(ham, str) else dict(ham)
        if args.hamiltonian:
            ham["kind"] = args.hamiltonian
        if args.cutoff is not None:
            ham["cutoff"] = args.cutoff
        if args.prime is not None:
            ham["prime"] = args.prime
        over["hamiltonian"] = ham
    if args.s:
        over["s"] = list(args.s)
    if args.site:
        try:
            over["sites"] = [_site_flag(s) for s in args.site]
        except ValueError:
            raise ScenarioError([f"--site: expected P:RE,IM, got {args.site}"]) from None
    if args.times:
        over["times"] = list(args.times)
    trunc = {}
    if args.defect_target is not None:
        trunc["defect_target"] = args.defect_target
    if args.kmax is not None:
        trunc["kmax"] = args.kmax
    if trunc:
        over["trunc"] = trunc
    return load_scenario(merge(raw, over))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    args.sign = -1 if args.sign_convention == "minus" else 1
    try:
        sc = scenario_from_args(args)
        out = Output(args.out, sc)
        handler, _ = COMMANDS[args.command]
        return handler(sc, out, args)
    except (ScenarioError, ParameterError, ConfigurationError, GridReachError, SeriesCapError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
