"""Run configuration and its text format.

A configuration file is a flat ``key = value`` list grouped under
``[section]`` headers; ``#`` and ``;`` start comments. Recognised
sections and keys::

    [input]       path, synth (lorenz | logistic | eeg), truth
    [embedding]   tau (int | auto), d (2 | 3 | auto), native, tau_max, d_max
    [windows]     w, n (int | none), stride, w_raw, taus (comma list)
    [search]      start, end
    [signals]     enabled (comma list of S G F RM), s_mode, rm_mode,
                  per_coordinate_variance, p_max
    [permutation] B, alpha, t, rng
    [run]         seed
    [output]      dir

Generator and experiment sections (``[lorenz]``, ``[logistic]``, ``[eeg]``,
``[transition]``, ``[sweep]``, ``[noise]``, ``[bench]``, ``[cusum]``) are
kept as raw strings and converted by the code that consumes them.
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from .errors import UsageError
from .inference import RNG_ALGORITHM

SIGNAL_NAMES = ("S", "G", "F", "RM")
SYNTH_KINDS = ("lorenz", "logistic", "eeg")
EXTRA_SECTIONS = ("lorenz", "logistic", "eeg", "transition", "sweep", "noise", "bench", "cusum")


class ConfigError(UsageError):
    """A configuration file or value that cannot be used."""


def _int(text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"expected an integer, got {text!r}") from None


def _float(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"expected a number, got {text!r}") from None


def _number(text: str):
    try:
        return int(text)
    except ValueError:
        return _float(text)


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def _optional(conv):
    def parse(text: str):
        return None if text.strip().lower() in ("", "none") else conv(text)
    return parse


def _auto_int(text: str):
    return "auto" if text.strip().lower() == "auto" else _int(text)


def _list(conv):
    def parse(text: str) -> tuple:
        return tuple(conv(p.strip()) for p in text.split(",") if p.strip())
    return parse


def _str(text: str) -> str:
    return text.strip()


@dataclass(frozen=True)
class RunConfig:
    """Everything a command needs besides its positional arguments.

    Only the input (a CSV path or a synthetic generator) lacks a default.
    ``extra`` holds the generator and experiment sections verbatim.
    """

    input: str | None = None
    synth: str | None = None
    truth: str | None = None
    tau: int | str = "auto"
    d: int | str = "auto"
    native: bool = False
    tau_max: int = 20
    d_max: int = 3
    w: int = 20
    n: int | None = 20
    stride: int = 1
    w_raw: int | None = None
    taus: tuple = ()
    search_start: int | None = None
    search_end: int | None = None
    signals: tuple = SIGNAL_NAMES
    s_mode: str = "trough"
    rm_mode: str = "signed"
    per_coordinate_variance: bool = False
    p_max: int | None = None
    B: int = 100
    alpha: float = 0.05
    t: int | None = None
    rng: str = RNG_ALGORITHM
    seed: int = 0
    output: str = "out"
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.synth is not None and self.synth not in SYNTH_KINDS:
            raise ConfigError(f"synth must be one of {', '.join(SYNTH_KINDS)}, got {self.synth!r}")
        if self.d != "auto" and self.d not in (2, 3):
            raise ConfigError(f"d must be 2, 3 or auto, got {self.d!r}")
        if self.tau != "auto" and self.tau < 1:
            raise ConfigError("tau must be positive")
        if self.w < 1 or self.stride < 1:
            raise ConfigError("w and stride must be positive")
        if self.n is not None and self.n < 2:
            raise ConfigError("n must be at least 2")
        bad = [s for s in self.signals if s not in SIGNAL_NAMES]
        if bad or not self.signals:
            raise ConfigError(f"signals must be a nonempty subset of {', '.join(SIGNAL_NAMES)}")
        if self.s_mode not in ("trough", "peak"):
            raise ConfigError("s_mode must be trough or peak")
        if self.rm_mode not in ("signed", "abs"):
            raise ConfigError("rm_mode must be signed or abs")
        if self.B < 1 or not 0 < self.alpha < 1:
            raise ConfigError("B must be positive and alpha in (0, 1)")
        if self.rng != RNG_ALGORITHM:
            raise ConfigError(f"only the {RNG_ALGORITHM} generator is available, got {self.rng!r}")

    @property
    def search_window(self):
        if self.search_start is None and self.search_end is None:
            return None
        if self.search_start is None or self.search_end is None:
            raise ConfigError("search window needs both start and end")
        return (self.search_start, self.search_end)

    def section(self, name: str) -> dict:
        return dict(self.extra.get(name, {}))

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)


# (section, key) -> (field name, converter)
_KEYS = {
    ("input", "path"): ("input", _optional(_str)),
    ("input", "synth"): ("synth", _optional(_str)),
    ("input", "truth"): ("truth", _optional(_str)),
    ("embedding", "tau"): ("tau", _auto_int),
    ("embedding", "d"): ("d", _auto_int),
    ("embedding", "native"): ("native", _bool),
    ("embedding", "tau_max"): ("tau_max", _int),
    ("embedding", "d_max"): ("d_max", _int),
    ("windows", "w"): ("w", _int),
    ("windows", "n"): ("n", _optional(_int)),
    ("windows", "stride"): ("stride", _int),
    ("windows", "w_raw"): ("w_raw", _optional(_int)),
    ("windows", "taus"): ("taus", _list(_int)),
    ("search", "start"): ("search_start", _optional(_int)),
    ("search", "end"): ("search_end", _optional(_int)),
    ("signals", "enabled"): ("signals", _list(_str)),
    ("signals", "s_mode"): ("s_mode", _str),
    ("signals", "rm_mode"): ("rm_mode", _str),
    ("signals", "per_coordinate_variance"): ("per_coordinate_variance", _bool),
    ("signals", "p_max"): ("p_max", _optional(_int)),
    ("permutation", "b"): ("B", _int),
    ("permutation", "alpha"): ("alpha", _float),
    ("permutation", "t"): ("t", _optional(_int)),
    ("permutation", "rng"): ("rng", _str),
    ("run", "seed"): ("seed", _int),
    ("output", "dir"): ("output", _str),
}


def parse_config(text: str, source: str = "<config>", base_dir: Path | None = None) -> RunConfig:
    """Parse configuration text.

    Relative ``path`` and ``truth`` entries are resolved against
    ``base_dir`` when given.
    """
    parser = configparser.ConfigParser(
        inline_comment_prefixes=("#", ";"), interpolation=None, default_section="__defaults__"
    )
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    values, extra = {}, {}
    for sect in parser.sections():
        name = sect.strip().lower()
        if name in EXTRA_SECTIONS:
            extra[name] = {k: v.strip() for k, v in parser.items(sect)}
            continue
        for key, raw in parser.items(sect):
            spec = _KEYS.get((name, key))
            if spec is None:
                raise ConfigError(f"{source}: unknown key {key!r} in section [{sect}]")
            fname, conv = spec
            try:
                values[fname] = conv(raw)
            except ConfigError as exc:
                raise ConfigError(f"{source}: [{sect}] {key}: {exc}") from None
    if base_dir is not None:
        for fname in ("input", "truth"):
            if values.get(fname) and not Path(values[fname]).is_absolute():
                values[fname] = str((base_dir / values[fname]).resolve())
    return RunConfig(extra=extra, **values)


def load_config(path) -> RunConfig:
    """Read a configuration file; relative data paths resolve against its folder."""
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    return parse_config(p.read_text(), source=str(p), base_dir=p.parent)


def convert_fields(cls, raw: dict, section: str):
    """Instantiate dataclass ``cls`` from string values named after its fields.

    Tuple-valued fields accept comma lists.
    """
    known = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, text in raw.items():
        if key not in known:
            raise ConfigError(f"[{section}]: unknown key {key!r}")
        default = known[key].default
        if isinstance(default, bool):
            kwargs[key] = _bool(text)
        elif isinstance(default, int) and not isinstance(default, bool):
            kwargs[key] = _int(text)
        elif isinstance(default, float):
            kwargs[key] = _float(text)
        elif isinstance(default, tuple) or default is None and "," in text:
            kwargs[key] = _list(_number)(text)
        elif default is None:
            kwargs[key] = _optional(_number)(text)
        else:
            kwargs[key] = _str(text)
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}]: {exc}") from None
