"""JSON scenario files for the command line.

Complex numbers are ``[re, im]`` pairs (a bare number is also accepted).
Every precondition is checked up front and all violations are reported
together in one :class:`ScenarioError`.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Any, Optional

from .arithmetic import is_prime
from .dynamics import HamiltonianKind, Tag
from .fock import TruncationSpec
from .states import POISSON_TAIL_TOL, SiteParams, auto_truncation

FAMILIES = ("local_cs", "ncs", "gen_cs", "moebius", "single_moebius")

DEFAULT_TOLERANCES = {
    # positive cat identities: residual <= defect_factor * defect + cat_abs
    "cat_abs": 1e-11,
    "cat_defect_factor": 10.0,
    # single-site identities are exact per amplitude
    "cat_single_site": 1e-12,
    # negative cases must exceed negative_factor * positive tolerance
    "negative_factor": 100.0,
    "equivalence_rel": 1e-8,
    "normalization": 1e-6,
    "quadrature_gap": 1e-10,
    "resolution": 1e-6,
}

DEFAULTS: dict[str, Any] = {
    "s": [1.0, 0.0],
    "family": "ncs",
    "sites": [],
    "hamiltonian": {"kind": "global-quadratic"},
    "times": [0.0],
    "trunc": {"defect_target": 1e-10, "amplitude_floor": 0.0, "max_size": 4_000_000},
    "tolerances": {},
}


class ScenarioError(ValueError):
    """One or more scenario preconditions failed."""

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("invalid scenario:\n" + "\n".join(f"  - {p}" for p in self.problems))


def parse_complex(value, where: str, problems: list[str]) -> complex:
    try:
        if isinstance(value, (list, tuple)):
            if len(value) != 2:
                raise ValueError
            z = complex(float(value[0]), float(value[1]))
        else:
            z = complex(value)
    except (TypeError, ValueError):
        problems.append(f"{where}: expected a number or [re, im] pair, got {value!r}")
        return 0j
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        problems.append(f"{where}: value must be finite")
    return z


def complex_json(z: complex) -> list[float]:
    return [z.real, z.imag]


@dataclass
class Scenario:
    raw: dict
    s: complex
    family: str
    params: SiteParams
    hamiltonian: HamiltonianKind
    times: list[float]
    trunc_cfg: dict
    tolerances: dict
    section: dict = field(default_factory=dict)

    @property
    def digest(self) -> str:
        text = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    def truncation(self, extra_primes=(), family: Optional[str] = None) -> TruncationSpec:
        cfg = self.trunc_cfg
        family = family or self.family
        primes = set(cfg.get("primes") or ()) | set(self.params.primes) | set(extra_primes)
        if not primes:
            primes = {2}
        primes = tuple(sorted(primes))
        floor = float(cfg.get("amplitude_floor", 0.0))
        if cfg.get("kmax") is not None:
            kmax = cfg["kmax"]
            if isinstance(kmax, dict):
                kmax = {int(p): int(k) for p, k in kmax.items()}
            return TruncationSpec(primes, kmax, floor)
        if family == "single_moebius":
            return TruncationSpec(primes, 1, floor)
        target = float(cfg.get("defect_target", 1e-10))
        if family == "local_cs":
            # local_cs refuses caps whose Poisson tail exceeds POISSON_TAIL_TOL
            target = min(target, POISSON_TAIL_TOL)
        return auto_truncation(
            self.params,
            "ncs" if family == "local_cs" else family,
            primes=primes,
            defect_target=target,
            max_size=int(cfg.get("max_size", 4_000_000)),
            amplitude_floor=floor,
        )


def _parse_sites(sites, where: str, problems: list[str]):
    entries, phases = [], []
    if not isinstance(sites, list):
        problems.append(f"{where}: expected a list of sites")
        return entries, phases
    for i, site in enumerate(sites):
        loc = f"{where}[{i}]"
        if not isinstance(site, dict) or "p" not in site:
            problems.append(f"{loc}: each site needs a prime 'p'")
            continue
        p = site["p"]
        if not isinstance(p, int) or not is_prime(p):
            problems.append(f"{loc}: unknown prime {p!r} (site labels must be primes)")
            continue
        value = site.get("z", site.get("zeta", 0))
        entries.append((p, parse_complex(value, f"{loc}.z", problems)))
        if site.get("theta") is not None:
            phases.append((p, float(site["theta"])))
    seen = [p for p, _ in entries]
    dups = sorted({p for p in seen if seen.count(p) > 1})
    if dups:
        problems.append(f"{where}: primes listed more than once: {dups}")
    return entries, phases


def parse_hamiltonian(spec, problems: list[str]) -> HamiltonianKind:
    if isinstance(spec, str):
        spec = {"kind": spec}
    kind = spec.get("kind", "global-quadratic")
    try:
        tag = Tag(kind)
    except ValueError:
        problems.append(f"hamiltonian.kind: unknown kind {kind!r}; expected one of {[t.value for t in Tag]}")
        return HamiltonianKind.global_quadratic()
    cutoff, prime = spec.get("cutoff"), spec.get("prime")
    if tag in (Tag.FINITE_LOCAL_QUADRATIC, Tag.MIXED_BELOW_X) and cutoff is None:
        problems.append(f"hamiltonian: {kind} needs a 'cutoff'")
        return HamiltonianKind.global_quadratic()
    if tag is Tag.SINGLE_SITE_GEN_QUADRATIC:
        if prime is None or not is_prime(int(prime)):
            problems.append(f"hamiltonian: {kind} needs a prime 'prime', got {prime!r}")
            return HamiltonianKind.global_quadratic()
    return HamiltonianKind(tag, cutoff=cutoff, prime=prime)


def sites_params(s: complex, sites, where: str, problems: list[str]) -> Optional[SiteParams]:
    entries, phases = _parse_sites(sites, where, problems)
    try:
        return SiteParams(s, tuple(entries), tuple(phases))
    except ValueError as err:
        problems.append(f"{where}: {err}")
        return None


def merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def load_scenario(raw: dict) -> Scenario:
    """Validate a scenario dictionary (defaults already merged or not)."""
    raw = merge(DEFAULTS, raw)
    problems: list[str] = []

    s = parse_complex(raw["s"], "s", problems)
    if not s.real > 0.5:
        problems.append(f"s: sigma = Re(s) must exceed 1/2 (sigma > 1/2 precondition), got {s.real!r}")

    family = raw["family"]
    if family not in FAMILIES:
        problems.append(f"family: unknown family {family!r}; expected one of {list(FAMILIES)}")

    entries, phases = _parse_sites(raw["sites"], "sites", problems)
    if family in ("local_cs", "single_moebius") and len(entries) > 1:
        problems.append(f"sites: family {family} is single-site, got {len(entries)} sites")
    if family == "gen_cs" and s.real > 0.5:
        for p, z in entries:
            if not abs(z) < p**s.real:
                problems.append(
                    f"sites: |zeta_{p}| = {abs(z):.6g} must be < {p}^sigma = {p ** s.real:.6g} "
                    "(|zeta_p| < p^sigma precondition for gen_cs)"
                )

    ham = parse_hamiltonian(raw["hamiltonian"], problems)

    times = []
    for i, t in enumerate(raw["times"] if isinstance(raw["times"], list) else [raw["times"]]):
        try:
            t = float(t)
            if not math.isfinite(t):
                raise ValueError
            times.append(t)
        except (TypeError, ValueError):
            problems.append(f"times[{i}]: expected a finite real, got {t!r}")
    if not times:
        problems.append("times: at least one time is required")

    trunc_cfg = raw["trunc"]
    for p in trunc_cfg.get("primes") or ():
        if not isinstance(p, int) or not is_prime(p):
            problems.append(f"trunc.primes: unknown prime {p!r}")
    kmax = trunc_cfg.get("kmax")
    if isinstance(kmax, dict):
        active = set(trunc_cfg.get("primes") or ()) | {p for p, _ in entries}
        for p, k in kmax.items():
            if int(p) not in active:
                problems.append(f"trunc.kmax: prime {p} is not an active site")
            if int(k) < 0:
                problems.append(f"trunc.kmax[{p}]: cap must be nonnegative")
        missing = sorted(active - {int(p) for p in kmax})
        if missing:
            problems.append(f"trunc.kmax: no cap for active primes {missing}")
    elif kmax is not None and int(kmax) < 0:
        problems.append("trunc.kmax: cap must be nonnegative")
    if float(trunc_cfg.get("defect_target", 1e-10)) <= 0:
        problems.append("trunc.defect_target must be positive")

    tolerances = dict(DEFAULT_TOLERANCES)
    for key, val in raw.get("tolerances", {}).items():
        if key not in DEFAULT_TOLERANCES:
            problems.append(f"tolerances: unknown key {key!r}")
        else:
            tolerances[key] = float(val)

    if problems:
        raise ScenarioError(problems)
    params = SiteParams(s, tuple(entries), tuple(phases))
    section = {k: v for k, v in raw.items() if k not in DEFAULTS}
    return Scenario(raw, s, family, params, ham, times, trunc_cfg, tolerances, section)
