"""Command-line experiment runner.

Usage::

    python -m gafzeros --config exp.yaml [--seed N] [--shards K] [--out DIR]

The YAML config names an experiment ``kind``, a ``generator`` and the
parameters of that kind.  Results go to ``DIR/report.json`` (a
deterministic function of config, seed and shard count), wall-clock
timings to ``DIR/timing.json``, and sampled points, when requested, to
``DIR/points.csv`` or ``DIR/points.jsonl``.  The report is also printed to
stdout.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path
from typing import Any, Literal, Optional

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from . import experiments as ex
from .core import PointSet, RngStream

__all__ = ["GeneratorConfig", "ExperimentConfig", "Report", "ConfigError", "run",
           "emit_points", "read_points", "load_config", "main"]

KINDS = ("sample", "intensity", "paircorr", "wick", "clt", "overcrowd", "invariance",
         "deviation-slope")


class ConfigError(ValueError):
    """Invalid configuration; ``errors`` lists ``{"loc": "a.b", "msg": ...}`` items."""

    def __init__(self, errors: list):
        self.errors = errors
        super().__init__("; ".join(f"{e['loc']}: {e['msg']}" for e in errors))


class GeneratorConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    family: Literal[ex.FAMILIES]  # type: ignore[valid-type]
    domain: Literal["plane", "sphere", "disk"] = "plane"
    L: float = Field(1, gt=0)
    n: int = Field(1, ge=1)
    alpha: float = Field(1.0, gt=0)
    N: Optional[int] = Field(None, ge=1)
    window: Optional[float] = Field(None, gt=0)
    method: Literal["det", "linearization"] = "det"
    eps: float = Field(1e-9, gt=0, lt=1)
    rate: float = Field(1.0, gt=0)

    def to_spec(self) -> ex.GeneratorSpec:
        d = self.model_dump()
        if d["L"] == int(d["L"]):
            d["L"] = int(d["L"])
        return ex.GeneratorSpec(**d)


class InvarianceTriple(BaseModel):
    model_config = ConfigDict(extra="forbid")

    generator: GeneratorConfig
    map: dict = Field(default_factory=dict)
    region: dict


class ExperimentConfig(BaseModel):
    """Schema of an experiment file; flags override ``seed``, ``shards`` and ``out``."""

    model_config = ConfigDict(extra="forbid")

    kind: Literal[KINDS]  # type: ignore[valid-type]
    generator: Optional[GeneratorConfig] = None
    M: int = Field(1, ge=1)
    seed: int = Field(0, ge=0, lt=1 << 64)
    shards: int = Field(1, ge=1)
    out: Optional[str] = None
    format: Literal["csv", "jsonl"] = "csv"
    r: Optional[float] = Field(None, gt=0)
    m_max: int = Field(5, ge=0)
    edges: Optional[list[float]] = None
    window: Optional[float] = Field(None, gt=0)
    erosion: Optional[float] = Field(0.0, ge=0)
    q: str = "zeta"
    P: int = Field(2, ge=0)
    antithetic: bool = False
    L_list: Optional[list[float]] = None
    phi: str = "smoothstep:1.0"
    kappa: Optional[float] = None
    alpha: float = 2.0
    gamma: float = 1.0
    r_list: Optional[list[float]] = None
    tilt_sigma: Optional[float] = Field(None, gt=0, le=1)
    tilt_M: int = Field(2_000_000, ge=2)
    triples: Optional[list[InvarianceTriple]] = None

    @field_validator("edges")
    @classmethod
    def _increasing(cls, v):
        if v is not None and (len(v) < 2 or any(b <= a for a, b in zip(v, v[1:]))):
            raise ValueError("edges must be strictly increasing with at least two entries")
        return v

    def check_kind(self) -> None:
        needs = {"sample": ["generator"], "intensity": ["generator", "edges"],
                 "paircorr": ["generator", "edges"], "wick": [], "clt": ["L_list"],
                 "overcrowd": ["generator", "r"], "invariance": ["triples"],
                 "deviation-slope": ["generator", "r_list"]}[self.kind]
        missing = [{"loc": f, "msg": f"required for kind={self.kind}"} for f in needs
                   if getattr(self, f) is None]
        if missing:
            raise ConfigError(missing)
        try:
            if self.generator is not None:
                self.generator.to_spec()
            for i, t in enumerate(self.triples or []):
                try:
                    t.generator.to_spec()
                except ValueError as e:
                    raise ConfigError([{"loc": f"triples.{i}.generator", "msg": str(e)}])
            if self.kind == "wick":
                ex.named_poly(self.q)
            if self.kind == "clt":
                ex.named_bump(self.phi)
        except ConfigError:
            raise
        except ValueError as e:
            loc = {"wick": "q", "clt": "phi"}.get(self.kind, "generator")
            raise ConfigError([{"loc": loc, "msg": str(e)}]) from None


def load_config(source: Any, **overrides) -> ExperimentConfig:
    """Validate a config from a dict, a YAML string or a path; raise ConfigError."""
    if isinstance(source, (str, Path)) and Path(source).exists():
        data = yaml.safe_load(Path(source).read_text())
    elif isinstance(source, str):
        data = yaml.safe_load(source)
    else:
        data = dict(source)
    if not isinstance(data, dict):
        raise ConfigError([{"loc": "", "msg": "config must be a mapping"}])
    data.update({k: v for k, v in overrides.items() if v is not None})
    try:
        cfg = ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError([{"loc": ".".join(str(p) for p in err["loc"]), "msg": err["msg"]}
                           for err in e.errors()]) from None
    cfg.check_kind()
    return cfg


# ------------------------------------------------------------------ output

def _fmt(x: float) -> str:
    return format(float(x) + 0.0, ".17g")


def emit_points(samples: list, path, format: str = "csv") -> None:
    """Write point sets as CSV rows or one JSON object per line.

    CSV columns are ``sample_id,re,im,multiplicity,at_infinity`` with floats
    to 17 significant digits; JSONL lines hold domain, points, multiplicity,
    at_infinity and meta.  Files are UTF-8 with LF line endings.
    """
    path = Path(path)
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            if format == "csv":
                fh.write("sample_id,re,im,multiplicity,at_infinity\n")
                for i, ps in enumerate(samples):
                    for z, m, inf in zip(ps.points, ps.multiplicity, ps.at_infinity):
                        fh.write(f"{i},{_fmt(z.real)},{_fmt(z.imag)},{int(m)},"
                                 f"{'true' if inf else 'false'}\n")
            elif format == "jsonl":
                for ps in samples:
                    rec = {"domain": ps.domain.value,
                           "points": [[float(z.real), float(z.imag)] for z in ps.points],
                           "multiplicity": ps.multiplicity.tolist(),
                           "at_infinity": ps.at_infinity.tolist(),
                           "meta": _clean(ps.meta)}
                    fh.write(json.dumps(rec, sort_keys=True) + "\n")
            else:
                raise ValueError(f"unknown format {format!r}")
    except OSError as e:
        raise RuntimeError(json.dumps({"error": "io", "path": str(path), "msg": str(e)})) from e


def read_points(path, format: Optional[str] = None) -> list:
    """Read back a file written by :func:`emit_points`.

    CSV files carry no domain or meta; their point sets are planar with
    empty meta (sphere files are detected from ``at_infinity`` entries).
    """
    path = Path(path)
    format = format or path.suffix.lstrip(".")
    out = []
    with open(path, encoding="utf-8") as fh:
        if format == "jsonl":
            for line in fh:
                rec = json.loads(line)
                pts = np.array([complex(a, b) for a, b in rec["points"]], dtype=complex)
                out.append(PointSet(rec["domain"], pts, rec["multiplicity"],
                                    rec["at_infinity"], rec["meta"]))
            return out
        rows = {}
        next(fh)
        for line in fh:
            sid, re, im, m, inf = line.rstrip("\n").split(",")
            rows.setdefault(int(sid), []).append((complex(float(re), float(im)), int(m),
                                                   inf == "true"))
        for sid in sorted(rows):
            z, m, inf = zip(*rows[sid])
            dom = "sphere" if any(inf) else "plane"
            out.append(PointSet(dom, np.array(z), np.array(m), np.array(inf)))
    return out


def _clean(obj):
    """Plain JSON types; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, (complex, np.complexfloating)):
        return [_clean(obj.real), _clean(obj.imag)]
    return obj


# ------------------------------------------------------------------ running

class Report(BaseModel):
    """Result of one run: config echo, metrics with verdicts, shard seeds, timings."""

    config: dict
    metrics: list
    shards: list
    outputs: list
    wall_clock_s: float

    def deterministic_json(self) -> str:
        body = {"config": self.config, "metrics": self.metrics, "shards": self.shards,
                "outputs": self.outputs}
        return json.dumps(_clean(body), indent=2, sort_keys=True) + "\n"


def _dispatch(cfg: ExperimentConfig, stream: RngStream, out_dir: Optional[Path]):
    gspec = cfg.generator.to_spec() if cfg.generator else None
    outputs = []
    block = ex.BLOCK_SIZE
    if cfg.kind == "sample":
        samples = ex.sample_points(gspec, stream, cfg.M, cfg.shards)
        if out_dir is not None:
            name = f"points.{cfg.format}"
            emit_points(samples, out_dir / name, cfg.format)
            outputs.append(name)
        metric = {"metric": "sample", "generator": ex.build_generator(gspec).name,
                  "M": cfg.M, "points_total": int(sum(len(ps) for ps in samples))}
    elif cfg.kind == "intensity":
        metric = ex.intensity_experiment(gspec, stream, cfg.M, cfg.edges, cfg.shards)
    elif cfg.kind == "paircorr":
        metric = ex.paircorr_experiment(gspec, stream, cfg.M, cfg.edges, cfg.window,
                                        cfg.erosion, cfg.shards)
    elif cfg.kind == "wick":
        metric = ex.wick_experiment(cfg.q, cfg.P, stream, cfg.M, cfg.antithetic)
    elif cfg.kind == "clt":
        metric = ex.clt_run(cfg.L_list, cfg.phi, stream, cfg.M, kappa=cfg.kappa,
                            shards=cfg.shards)
    elif cfg.kind == "overcrowd":
        block = 100000
        metric = ex.overcrowding_run(gspec, stream, cfg.M, cfg.r, cfg.m_max, cfg.shards,
                                     cfg.tilt_sigma, cfg.tilt_M)
    elif cfg.kind == "deviation-slope":
        block = 100000
        metric = ex.deviation_slope_run(gspec, stream, cfg.M, cfg.r_list, cfg.alpha,
                                        cfg.gamma, cfg.shards)
    else:
        triples = [(t.generator.to_spec(), t.map, t.region) for t in cfg.triples]
        metric = ex.invariance_run(triples, stream, cfg.M, cfg.shards)
    return [metric], outputs, block


def run(config, seed: Optional[int] = None, shards: Optional[int] = None,
        out: Optional[str] = None) -> Report:
    """Validate ``config``, run it and write ``report.json`` (plus points) to ``out``."""
    cfg = config if isinstance(config, ExperimentConfig) else load_config(config)
    upd = {k: v for k, v in {"seed": seed, "shards": shards, "out": out}.items()
           if v is not None}
    if upd:
        cfg = load_config(cfg.model_dump(), **upd)
    out_dir = Path(cfg.out) if cfg.out else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    stream = RngStream(cfg.seed)
    t0 = time.perf_counter()
    try:
        metrics, outputs, block = _dispatch(cfg, stream, out_dir)
    except Exception as e:
        raise RuntimeError(f"kind={cfg.kind} seed={cfg.seed} generator="
                           f"{cfg.generator.model_dump() if cfg.generator else None}: "
                           f"{type(e).__name__}: {e}") from e
    wall = time.perf_counter() - t0
    plan = ex.shard_plan(stream, cfg.M, cfg.shards, block)
    echo = cfg.model_dump(exclude={"out"})
    report = Report(config=_clean(echo), metrics=_clean(metrics), shards=plan,
                    outputs=outputs + (["report.json"] if out_dir else []), wall_clock_s=wall)
    if out_dir is not None:
        (out_dir / "report.json").write_text(report.deterministic_json(), encoding="utf-8")
        (out_dir / "timing.json").write_text(json.dumps({"wall_clock_s": wall}) + "\n",
                                             encoding="utf-8")
    return report


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="gafzeros",
                                     description="Run a zero-set or point-process experiment.")
    parser.add_argument("--config", required=True, help="YAML experiment file")
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument("--shards", type=int, help="override the shard count")
    parser.add_argument("--out", help="output directory")
    args = parser.parse_args(argv)
    try:
        report = run(load_config(args.config, seed=args.seed, shards=args.shards,
                                 out=args.out))
    except ConfigError as e:
        print(json.dumps({"error": "invalid config", "details": e.errors}), file=sys.stderr)
        return 2
    body = json.loads(report.deterministic_json())
    body["wall_clock_s"] = report.wall_clock_s
    print(json.dumps(body, indent=2, sort_keys=True))
    verdicts = [m.get("verdict") for m in report.metrics]
    return 1 if "fail" in verdicts else 0


if __name__ == "__main__":
    sys.exit(main())
