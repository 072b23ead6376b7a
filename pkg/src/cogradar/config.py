"""TOML experiment configuration, canonical serialization and run manifests.

Schema (every key optional; defaults are the reference scenario)::

    [array]        tx_side = 10, rx_side = 10, spacing_wavelengths = 0.5
    [grid]         l = 20, i = 20, start = -0.5, step = 0.05
    [[targets]]    nu_x, nu_y, snr_db          (one table per target)
    [disturbance]  p = 6, q = 6,
                   rho_x = [[modulus, turn], ...], rho_y = [[modulus, turn], ...],
                   shape = 2.0, sigma_w2 = 1.0, psd_form = "paper", burn_in = 24
    [detector]     p_fa = 1e-5, k_sec = 512, alpha_mode = "ls",
                   relative_loading = 1e-6
    [agent]        alpha = 0.5, gamma = 0.8, epsilon = 0.1, m_max = 10,
                   epsilon_decay = false, epsilon_min = 0.01,
                   reward_bins = "detected"
    [run]          k_pulses = 50, mc_runs = 200, p_t = 1.0, pd_window = 10,
                   calibration_draws = 10000, literal_beam = false

A coefficient pair ``[m, t]`` stands for ``m * exp(-j 2 pi t)``. When
``[targets]`` is absent the four reference targets are used; an empty list
(``targets = []`` at top level) means no targets.
"""

from __future__ import annotations

import hashlib
import json
import re
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .agent import AgentConfig
from .array import ArrayGeometry, SpatialFrequency, make_grid
from .clutter import PAPER_MODULI, PAPER_TURNS, DisturbanceModel
from .errors import ConfigError, DomainError, ValidationError
from .sim import Scenario, Target, paper_scenario

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = [
    "parse_config",
    "parse_config_text",
    "serialize",
    "scenario_to_dict",
    "digest",
    "RunManifest",
    "bundled_config",
]

_REF = paper_scenario()

_SECTIONS = {
    "array": {"tx_side": int, "rx_side": int, "spacing_wavelengths": float},
    "grid": {"l": int, "i": int, "start": float, "step": float},
    "disturbance": {
        "p": int, "q": int, "rho_x": list, "rho_y": list, "shape": float,
        "sigma_w2": float, "psd_form": str, "burn_in": int,
    },
    "detector": {"p_fa": float, "k_sec": int, "alpha_mode": str, "relative_loading": float},
    "agent": {
        "alpha": float, "gamma": float, "epsilon": float, "m_max": int,
        "epsilon_decay": bool, "epsilon_min": float, "reward_bins": str,
    },
    "run": {
        "k_pulses": int, "mc_runs": int, "p_t": float, "pd_window": int,
        "calibration_draws": int, "literal_beam": bool,
    },
}
_TARGET_KEYS = {"nu_x": float, "nu_y": float, "snr_db": float}


def bundled_config(name: str = "paper.cfg") -> Path:
    return Path(__file__).with_name("data") / name


def _line_of(text: str, section: str | None, key: str | None, nth: int = 0) -> int | None:
    """Best-effort line number of the ``nth`` ``key`` inside ``section`` (1-based)."""
    if key is None:
        return None
    current = None
    pat = re.compile(r"^\s*(\"?)" + re.escape(key) + r"\1\s*=")
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        head = re.match(r"^\[\[?\s*([A-Za-z0-9_.\-]+)\s*\]\]?", line)
        if head:
            current = head.group(1)
            if section is not None and current == section and key == section:
                return n
            if section is None and current == key:
                return n
            continue
        if pat.match(raw) and current == section:
            if nth == 0:
                return n
            nth -= 1
    return None


class _Reader:
    def __init__(self, text: str):
        self.text = text

    def fail(self, section, key, message, nth=0):
        raise ConfigError(message, key=key, line=_line_of(self.text, section, key, nth))

    def coerce(self, section, key, value, kind):
        if kind is bool:
            ok = isinstance(value, bool)
        elif kind is int:
            ok = isinstance(value, int) and not isinstance(value, bool)
        elif kind is float:
            ok = isinstance(value, (int, float)) and not isinstance(value, bool)
            value = float(value) if ok else value
        else:
            ok = isinstance(value, kind)
        if not ok:
            self.fail(section, key, f"expected {kind.__name__}, got {type(value).__name__}")
        return value

    def section(self, doc, name):
        raw = doc.get(name, {})
        if not isinstance(raw, dict):
            self.fail(None, name, "must be a table")
        schema = _SECTIONS[name]
        out = {}
        for key, value in raw.items():
            if key not in schema:
                self.fail(name, key, f"unknown key in [{name}]")
            out[key] = self.coerce(name, key, value, schema[key])
        return out


def _pairs(reader, key, value, expected_len):
    pairs = []
    for item in value:
        if (not isinstance(item, list) or len(item) != 2
                or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in item)):
            reader.fail("disturbance", key, "coefficients must be [modulus, turn] pairs")
        pairs.append((float(item[0]), float(item[1])))
    if expected_len is not None and len(pairs) != expected_len:
        reader.fail("disturbance", key, f"expected {expected_len} pairs, got {len(pairs)}")
    return pairs


def parse_config_text(text: str) -> Scenario:
    """Parse a TOML document into a ``Scenario``.

    Raises:
        ConfigError: syntax error, unknown key, wrong type or out-of-range value.
    """
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError(f"invalid TOML: {exc}", line=int(m.group(1)) if m else None) from exc

    reader = _Reader(text)
    for key in doc:
        if key not in _SECTIONS and key != "targets":
            reader.fail(None, key, "unknown section")
    s = {name: reader.section(doc, name) for name in _SECTIONS}

    targets = _REF.targets
    if "targets" in doc:
        raw = doc["targets"]
        if not isinstance(raw, list):
            reader.fail(None, "targets", "targets must be an array of tables")
        targets = []
        for t in raw:
            if not isinstance(t, dict):
                reader.fail(None, "targets", "each target must be a table")
            for key in t:
                if key not in _TARGET_KEYS:
                    reader.fail("targets", key, "unknown key in [[targets]]")
            for key in _TARGET_KEYS:
                if key not in t:
                    reader.fail("targets", "targets", f"target is missing '{key}'")
            vals = {k: reader.coerce("targets", k, t[k], kind) for k, kind in _TARGET_KEYS.items()}
            targets.append(Target(SpatialFrequency(vals["nu_x"], vals["nu_y"]), vals["snr_db"]))

    d = s["disturbance"]
    ref_pairs = list(zip(PAPER_MODULI, PAPER_TURNS))
    px = _pairs(reader, "rho_x", d["rho_x"], d.get("p")) if "rho_x" in d else None
    py = _pairs(reader, "rho_y", d["rho_y"], d.get("q")) if "rho_y" in d else None
    if px is None:
        px = ref_pairs
        if d.get("p", len(px)) != len(px):
            reader.fail("disturbance", "p", "p given without matching rho_x")
    if py is None:
        py = px if "rho_x" in d and "q" not in d else ref_pairs
        if d.get("q", len(py)) != len(py):
            reader.fail("disturbance", "q", "q given without matching rho_y")

    def build(section, key, fn, nth=0):
        try:
            return fn()
        except (ValidationError, DomainError) as exc:
            reader.fail(section, key, str(exc), nth)

    geometry = build("array", "tx_side", lambda: ArrayGeometry(**s["array"]))
    g = s["grid"]
    grid = build("grid", "start", lambda: make_grid(
        g.get("l", _REF.grid.L), g.get("i", _REF.grid.I),
        g.get("start", _REF.grid.start), g.get("step", _REF.grid.step)))
    model = build("disturbance", "rho_x", lambda: DisturbanceModel.from_polar(
        [m for m, _ in px], [t for _, t in px], [m for m, _ in py], [t for _, t in py],
        shape=d.get("shape", 2.0), sigma_w2=d.get("sigma_w2", 1.0),
        psd_form=d.get("psd_form", "paper")))
    for j, t in enumerate(targets):
        build("targets", "nu_x", lambda: grid.locate(t.freq), nth=j)
    a = dict(s["agent"])
    reward_bins = a.pop("reward_bins", _REF.reward_bins)
    agent = build("agent", next(iter(a), "alpha"), lambda: AgentConfig(**a))

    det, run = s["detector"], s["run"]
    fields = dict(
        geometry=geometry, grid=grid, targets=tuple(targets), disturbance=model, agent=agent,
        reward_bins=reward_bins, burn_in=d.get("burn_in"), **det, **run,
    )
    try:
        return Scenario(**fields)
    except ValidationError as exc:
        key = _guess_key(str(exc), det, run)
        section = "detector" if key in det else "run" if key in run else None
        if key == "targets":
            section = None
        raise ConfigError(str(exc), key=key, line=_line_of(text, section, key)) from exc


def _guess_key(message, *sections):
    for sec in sections:
        for key in sec:
            if key in message:
                return key
    if "target" in message:
        return "targets"
    return None


def parse_config(path) -> Scenario:
    """Read and parse a configuration file.

    Raises:
        ConfigError: missing/unreadable file or any schema violation.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    return parse_config_text(text)


def scenario_to_dict(sc: Scenario) -> dict:
    """Canonical nested-dict form of a scenario, in schema order."""
    (mx, tx), (my, ty) = sc.disturbance.polar_pairs()
    dist = {
        "p": sc.disturbance.p,
        "q": sc.disturbance.q,
        "rho_x": [[m, t] for m, t in zip(mx, tx)],
        "rho_y": [[m, t] for m, t in zip(my, ty)],
        "shape": sc.disturbance.shape,
        "sigma_w2": sc.disturbance.sigma_w2,
        "psd_form": sc.disturbance.psd_form,
    }
    if sc.burn_in is not None:
        dist["burn_in"] = sc.burn_in
    agent = asdict(sc.agent)
    agent["reward_bins"] = sc.reward_bins
    return {
        "array": asdict(sc.geometry),
        "grid": {"l": sc.grid.L, "i": sc.grid.I, "start": sc.grid.start, "step": sc.grid.step},
        "targets": [{"nu_x": t.freq.nu_x, "nu_y": t.freq.nu_y, "snr_db": t.snr_db} for t in sc.targets],
        "disturbance": dist,
        "detector": {"p_fa": sc.p_fa, "k_sec": sc.k_sec, "alpha_mode": sc.alpha_mode,
                     "relative_loading": sc.relative_loading},
        "agent": agent,
        "run": {"k_pulses": sc.k_pulses, "mc_runs": sc.mc_runs, "p_t": sc.p_t,
                "pd_window": sc.pd_window, "calibration_draws": sc.calibration_draws,
                "literal_beam": sc.literal_beam},
    }


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        text = format(v, ".17g")
        if not any(c in text for c in ".eEn"):
            text += ".0"
        return text
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    raise TypeError(f"cannot serialize {type(v).__name__}")


def serialize(sc: Scenario) -> str:
    """TOML text that parses back to ``sc``; floats carry 17 significant digits."""
    d = scenario_to_dict(sc)
    lines = []
    if not d["targets"]:
        lines += ["targets = []", ""]
    for name in _SECTIONS:
        lines.append(f"[{name}]")
        lines += [f"{k} = {_fmt(v)}" for k, v in d[name].items()]
        lines.append("")
    for t in d["targets"]:
        lines.append("[[targets]]")
        lines += [f"{k} = {_fmt(v)}" for k, v in t.items()]
        lines.append("")
    return "\n".join(lines)


def digest(sc: Scenario) -> str:
    """SHA-256 of the canonical JSON form."""
    canon = json.dumps(scenario_to_dict(sc), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


@dataclass
class RunManifest:
    digest: str
    seed: int
    version: str
    command: str
    started: str
    finished: str = ""
    outputs: list = field(default_factory=list)
    parameters: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"
