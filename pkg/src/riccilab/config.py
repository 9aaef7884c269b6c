"""Flat sectioned key=value run configuration.

The format is deliberately small: ``[section]`` headers, ``key = value``
entries, ``#`` or ``;`` comments.  Unknown sections or keys are hard
errors with the offending line number, because silent config drift would
invalidate inequality verdicts.  List-valued keys (brackets, factors,
values) take semicolon-separated entries and may be repeated to
accumulate.

Overrides of the form ``section.key=value`` are applied after the file
parses and validated against the same schema.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .constants import ConstantPrimitives
from .flow import FlowConfig
from .sobolev import FAMILY_NAMES, GallotConstant

__all__ = ["ConfigError", "RunConfig", "load_config", "parse_text"]


class ConfigError(ValueError):
    def __init__(self, message: str, source: str = "<config>", line: int | None = None):
        self.source = source
        self.line = line
        where = f"{source}:{line}: " if line is not None else f"{source}: "
        super().__init__(where + message)


@dataclass(frozen=True)
class _Field:
    kind: str            # float|int|str|enum|entries|floats|optfloat
    default: object = None
    choices: tuple[str, ...] = ()
    listlike: bool = False


_SCHEMA: dict[str, dict[str, _Field]] = {
    "model": {
        "kind": _Field("enum", None, ("lie_group_quotient", "product_of_space_forms")),
        "dim": _Field("int", None),
        "covolume": _Field("float", 1.0),
        "brackets": _Field("entries", (), listlike=True),
        "factors": _Field("entries", (), listlike=True),
    },
    "flow": {
        "gamma": _Field("float", 1.0),
        "t_end": _Field("optfloat", None),
        "rel_tol": _Field("float", 1e-9),
        "abs_tol": _Field("float", 1e-12),
        "max_rm": _Field("optfloat", None),
        "record_every": _Field("optfloat", None),
        "cs0": _Field("float", 1.0),
    },
    "constants": {
        "n": _Field("int", None),
        "c_n": _Field("float", 1.0),
        "a_n": _Field("float", 1.0),
        "c3": _Field("float", 1.0),
        "gallot_c0": _Field("float", 1.0),
        "gallot_growth": _Field("enum", "exp_sqrt", ("constant", "exp_sqrt")),
        "gromov_ruh_eps": _Field("float", 1.0),
        "vol0": _Field("float", 1.0),
        "rm_n2_0": _Field("float", 0.0),
        "t_prime": _Field("float", 1.0),
        "moser_k": _Field("int", 64),
    },
    "sobolev": {
        "family": _Field("enum", "eigenfunction", FAMILY_NAMES),
        "grid": _Field("int", 512),
        "a_const": _Field("float", 1.0),
        "b_const": _Field("float", 1.0),
        "kappa": _Field("float", 0.0),
    },
    "output": {
        "dir": _Field("str", None),
        "format": _Field("enum", "csv", ("csv", "json")),
        "stride": _Field("int", 1),
        "seed": _Field("int", 0),
    },
    "sweep": {
        "parameter": _Field("str", None),
        "values": _Field("floats", (), listlike=True),
    },
}


@dataclass
class RunConfig:
    model_spec: dict | None
    flow: FlowConfig
    primitives: ConstantPrimitives
    constants_n: int | None
    vol0: float
    rm_n2_0: float
    t_prime: float
    moser_k: int
    family: str
    grid: int
    a_const: float
    b_const: float
    kappa: float
    out_dir: str | None
    out_format: str
    stride: int
    seed: int
    sweep_parameter: str | None
    sweep_values: tuple[float, ...]
    sections: frozenset[str] = field(default_factory=frozenset)

    def require_section(self, name: str) -> None:
        if name not in self.sections:
            raise ConfigError(f"missing required [{name}] block")


def parse_text(text: str, source: str = "<config>") -> dict[str, dict[str, tuple[str, int]]]:
    """Raw parse to {section: {key: (value text, line number)}}."""
    out: dict[str, dict[str, tuple[str, int]]] = {}
    section: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith(";"):
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError("malformed section header", source, lineno)
            section = line[1:-1].strip()
            if section not in _SCHEMA:
                raise ConfigError(f"unknown section [{section}]", source, lineno)
            out.setdefault(section, {})
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", source, lineno)
        if section is None:
            raise ConfigError("key before any [section] header", source, lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        spec = _SCHEMA[section].get(key)
        if spec is None:
            raise ConfigError(f"unknown key {key!r} in [{section}]", source, lineno)
        if key in out[section]:
            if not spec.listlike:
                raise ConfigError(f"duplicate key {key!r} in [{section}]", source, lineno)
            prev, _ = out[section][key]
            value = prev + ";" + value
        out[section][key] = (value, lineno)
    return out


def _coerce(section: str, key: str, text: str, source: str, line: int | None):
    spec = _SCHEMA[section][key]
    try:
        if spec.kind == "float":
            return float(text)
        if spec.kind == "optfloat":
            return None if text.lower() in ("auto", "none") else float(text)
        if spec.kind == "int":
            return int(text)
        if spec.kind == "str":
            return text
        if spec.kind == "enum":
            val = text.strip()
            if val not in spec.choices:
                raise ValueError(f"must be one of {list(spec.choices)}")
            return val
        if spec.kind == "entries":
            entries = []
            for chunk in text.replace(",", ";").split(";"):
                chunk = chunk.strip()
                if chunk:
                    entries.append(chunk.split())
            return tuple(tuple(tok for tok in e) for e in entries)
        if spec.kind == "floats":
            vals = []
            for chunk in text.replace(",", ";").replace(";", " ").split():
                vals.append(float(chunk))
            return tuple(vals)
    except ValueError as exc:
        raise ConfigError(f"bad value for {section}.{key}: {exc}", source, line) from None
    raise AssertionError(f"unhandled field kind {spec.kind}")


def _apply_overrides(raw: dict, overrides: tuple[str, ...], source: str) -> None:
    for i, item in enumerate(overrides):
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form section.key=value",
                              f"override#{i + 1}")
        dotted, value = item.split("=", 1)
        if "." not in dotted:
            raise ConfigError(f"override key {dotted!r} needs a section prefix",
                              f"override#{i + 1}")
        section, key = dotted.strip().split(".", 1)
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]", f"override#{i + 1}")
        if key not in _SCHEMA[section]:
            raise ConfigError(f"unknown key {key!r} in [{section}]", f"override#{i + 1}")
        raw.setdefault(section, {})[key] = (value.strip(), -i - 1)


def _get(raw: dict, section: str, key: str, source: str):
    spec = _SCHEMA[section][key]
    if section in raw and key in raw[section]:
        text, line = raw[section][key]
        return _coerce(section, key, text, source, line if line > 0 else None)
    return spec.default


def load_config(path: str | Path | None, overrides: tuple[str, ...] = (),
                text: str | None = None) -> RunConfig:
    """Parse, apply overrides, and build the typed run configuration."""
    source = str(path) if path is not None else "<config>"
    if text is None:
        if path is None:
            raise ConfigError("no configuration given")
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file not found: {p}")
        text = p.read_text()
    raw = parse_text(text, source)
    _apply_overrides(raw, tuple(overrides), source)
    g = lambda s, k: _get(raw, s, k, source)

    model_spec = None
    if "model" in raw:
        kind = g("model", "kind")
        if kind is None:
            line = min(v[1] for v in raw["model"].values()) if raw["model"] else None
            raise ConfigError("model.kind is required", source, line)
        model_spec = {"kind": kind}
        if kind == "lie_group_quotient":
            if g("model", "dim") is None:
                raise ConfigError("model.dim is required for quotient models", source)
            model_spec["dim"] = g("model", "dim")
            model_spec["covolume"] = g("model", "covolume")
            model_spec["brackets"] = [
                [int(e[0]), int(e[1]), int(e[2]), float(e[3])] if len(e) == 4
                else _bad_entry(source, e, "brackets")
                for e in g("model", "brackets")]
        else:
            model_spec["factors"] = [
                [e[0], int(e[1]), float(e[2])] if len(e) == 3
                else _bad_entry(source, e, "factors")
                for e in g("model", "factors")]

    try:
        flow = FlowConfig(
            gamma=g("flow", "gamma"), t_end=g("flow", "t_end"),
            rel_tol=g("flow", "rel_tol"), abs_tol=g("flow", "abs_tol"),
            max_rm=g("flow", "max_rm"), record_every=g("flow", "record_every"),
            cs0=g("flow", "cs0"), c_n=g("constants", "c_n"))
        primitives = ConstantPrimitives(
            c_n=g("constants", "c_n"), a_n=g("constants", "a_n"),
            c3=g("constants", "c3"),
            gallot=GallotConstant(c0=g("constants", "gallot_c0"),
                                  growth=g("constants", "gallot_growth")),
            gromov_ruh_eps=g("constants", "gromov_ruh_eps"))
    except ValueError as exc:
        raise ConfigError(str(exc), source) from None

    return RunConfig(
        model_spec=model_spec,
        flow=flow,
        primitives=primitives,
        constants_n=g("constants", "n"),
        vol0=g("constants", "vol0"),
        rm_n2_0=g("constants", "rm_n2_0"),
        t_prime=g("constants", "t_prime"),
        moser_k=g("constants", "moser_k"),
        family=g("sobolev", "family"),
        grid=g("sobolev", "grid"),
        a_const=g("sobolev", "a_const"),
        b_const=g("sobolev", "b_const"),
        kappa=g("sobolev", "kappa"),
        out_dir=g("output", "dir"),
        out_format=g("output", "format"),
        stride=g("output", "stride"),
        seed=g("output", "seed"),
        sweep_parameter=g("sweep", "parameter"),
        sweep_values=tuple(g("sweep", "values")),
        sections=frozenset(raw.keys()),
    )


def _bad_entry(source: str, entry, key: str):
    raise ConfigError(f"malformed model.{key} entry {' '.join(entry)!r}", source)
