"""Scenario configuration, experiment execution, persistence and plot data.

Exit codes: 0 on success, 2 for an invalid configuration, 3 for a numerical
divergence (the message carries the last valid time).
"""
from __future__ import annotations

import csv
import hashlib
import json
import os
import sys
import time
import warnings
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path
from typing import Literal, Optional

import click
import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from . import spectral_core as sc
from .dirichlet_neumann import dn_oracle, dn_series
from .energy_suite import LEMMAS, drift_experiment, sample_blocks, support_violations, symbol_bound_sampler, worst_ratio
from .errors import CFLError, ConfigurationError, DivergenceError, DomainError
from .evolution import IntegratorConfig, WaveState, hamiltonian, integrate, linear_period
from .scattering import (
    PacketConfig, convergence_monitor, decay_exponent, dyadic_times, packet_state, record_from_profile, run_packet,
)

KINDS = ("conserve", "decay", "scatter", "drift", "dn_validate", "symbols")
EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED = 0, 2, 3


# ---------------------------------------------------------------------------
# configuration


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class LatticeSpec(_Strict):
    L: float = Field(gt=0)
    N: int = Field(gt=0)

    @field_validator("N")
    @classmethod
    def _even(cls, v):
        if v % 2:
            raise ValueError("N must be even")
        return v


class InitialSpec(_Strict):
    k0: float = Field(gt=0, description="carrier (packet centre) frequency")
    width: Optional[float] = Field(default=None, gt=0, description="Gaussian envelope width; null gives a pure mode")
    eps: float = Field(gt=0, description="amplitude of h")
    seed: int = Field(default=0, ge=0)


class IntegratorSpec(_Strict):
    dt: float = Field(gt=0)
    scheme: Literal["ETDRK4", "IFRK4"] = "ETDRK4"
    dealias: float = Field(default=1.0, gt=0, le=1)


class ScenarioConfig(_Strict):
    kind: Literal["conserve", "decay", "scatter", "drift", "dn_validate", "symbols"]
    lattice: LatticeSpec
    initial: InitialSpec
    integrator: IntegratorSpec
    dn_mode: Literal["series2", "series3", "oracle"] = "series3"
    t_end: Optional[float] = Field(default=None, gt=0)
    snapshot_schedule: list[float] = []
    output: str

    @field_validator("snapshot_schedule")
    @classmethod
    def _increasing(cls, v):
        if any(t <= 0 for t in v) or any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("schedule must be positive and strictly increasing")
        return v

    @model_validator(mode="after")
    def _schedule_within_run(self):
        if self.t_end is not None and self.snapshot_schedule and self.snapshot_schedule[-1] > self.t_end:
            raise ValueError("snapshot times must not exceed t_end")
        return self

    @property
    def xi_max(self) -> float:
        i = self.initial
        return i.k0 if i.width is None else i.k0 + 3.0 / i.width

    @property
    def wrap_time(self) -> float:
        return self.lattice.L / (3 * np.sqrt(self.xi_max))

    def frequency_lattice(self) -> sc.FrequencyLattice:
        return sc.FrequencyLattice(self.lattice.L, self.lattice.N)

    def integrator_config(self, nonlinear: bool = True) -> IntegratorConfig:
        g = self.integrator
        return IntegratorConfig(dt=g.dt, scheme=g.scheme, dealias=g.dealias, dn_mode=self.dn_mode,
                                snapshot_schedule=tuple(self.snapshot_schedule), nonlinear=nonlinear)

    def packet_config(self, nonlinear: bool = True) -> PacketConfig:
        i = self.initial
        if i.width is None:
            raise ConfigurationError("decay and scatter scenarios need an envelope width")
        return PacketConfig(L=self.lattice.L, N=self.lattice.N, eps=i.eps, k0=i.k0, width=i.width,
                            dt=self.integrator.dt, t_end=self.t_end, nonlinear=nonlinear,
                            scheme=self.integrator.scheme, dn_mode=self.dn_mode)

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.model_dump(), sort_keys=True).encode()).hexdigest()


def _field_messages(err: ValidationError) -> list[str]:
    return [f"{'.'.join(str(p) for p in e['loc']) or '<root>'}: {e['msg']}" for e in err.errors()]


def load_config(path) -> ScenarioConfig:
    """Parse and validate a YAML scenario; raises ConfigurationError with field-level messages."""
    try:
        raw = yaml.safe_load(Path(path).read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigurationError(f"cannot read {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigurationError(f"{path}: top level must be a mapping")
    try:
        return ScenarioConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigurationError("; ".join(_field_messages(exc))) from exc


# ---------------------------------------------------------------------------
# persistence


def write_snapshot(directory: Path, name: str, f: sc.SpectralField, t: float) -> Path:
    """Little-endian complex128 coefficients plus a JSON sidecar."""
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"{name}.bin"
    f.coeffs.astype("<c16").tofile(path)
    side = {"lattice": {"L": f.lattice.L, "N": f.lattice.N}, "t": t, "real": bool(f.real), "dtype": "<c16"}
    (directory / f"{name}.json").write_text(json.dumps(side, indent=1))
    return path


def read_snapshot(path) -> tuple[sc.SpectralField, float]:
    path = Path(path)
    side = json.loads(path.with_suffix(".json").read_text())
    lat = sc.FrequencyLattice(side["lattice"]["L"], side["lattice"]["N"])
    c = np.fromfile(path, dtype=side["dtype"]).astype(complex)
    return sc.SpectralField(lat, c, side["real"]), side["t"]


def write_csv(path: Path, header: list[str], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])


def _check(name, value, threshold, ok) -> dict:
    return {"name": name, "value": value, "threshold": threshold, "verdict": "PASS" if ok else "FAIL"}


# ---------------------------------------------------------------------------
# experiments


def _initial_state(cfg: ScenarioConfig) -> WaveState:
    if cfg.initial.width is not None:
        return packet_state(cfg.packet_config())
    lat, i = cfg.frequency_lattice(), cfg.initial
    return WaveState(0.0, sc.from_function(lambda x: i.eps * np.cos(i.k0 * x), lat), lat.zeros())


def _snapshot_writer(out: Path):
    def cb(sn):
        write_snapshot(out / "snapshots", f"U_t{sn.t:012.4f}", sn.U, sn.t)
    return cb


def exp_conserve(cfg: ScenarioConfig, out: Path) -> list:
    s0 = _initial_state(cfg)
    T = cfg.t_end if cfg.t_end is not None else 100 * linear_period(cfg.initial.k0)
    H0 = hamiltonian(s0, cfg.dn_mode)
    rows = []
    writer = _snapshot_writer(out)

    def cb(sn):
        rows.append((sn.t, sn.norms.H))
        writer(sn)

    s1 = integrate(s0, cfg.integrator_config(), t_end=T, callback=cb)
    drift = abs(hamiltonian(s1, cfg.dn_mode) - H0) / H0
    write_csv(out / "tables" / "hamiltonian.csv", ["t", "H_norm"], rows)
    return [_check("hamiltonian_drift", drift, 1e-6, drift <= 1e-6)]


def dn_scan(cfg: ScenarioConfig, levels=(1.0, 0.5, 0.25)) -> tuple[np.ndarray, np.ndarray]:
    """Series (order 3) against the boundary-integral oracle, with phi scaled like h."""
    lat, i = cfg.frequency_lattice(), cfg.initial
    eps = i.eps * np.asarray(levels)
    errs = []
    for e in eps:
        h = sc.from_function(lambda x: e * np.cos(i.k0 * x), lat)
        phi = sc.from_function(lambda x: e * np.sin(i.k0 * x), lat)
        errs.append(sc.sup_norm(dn_series(h, phi, 3).total() - dn_oracle(h, phi)))
    return eps, np.array(errs)


def fit_exponent(x, y) -> float:
    return float(np.polyfit(np.log(x), np.log(np.maximum(y, 1e-300)), 1)[0])


def exp_dn_validate(cfg: ScenarioConfig, out: Path) -> list:
    eps, errs = dn_scan(cfg)
    order = fit_exponent(eps, errs)
    write_csv(out / "tables" / "dn_validate.csv", ["eps", "sup_error"], zip(eps, errs))
    return [_check("dn_order", order, 3.6, order >= 3.6),
            _check("dn_abs_error_smallest", float(errs[-1]), 1e-7, errs[-1] <= 1e-7)]


def _packet(cfg: ScenarioConfig, out: Path, nonlinear: bool = True):
    pc = cfg.packet_config(nonlinear)
    run = run_packet(pc, keep=cfg.snapshot_schedule)
    if nonlinear:
        for t, U in run.snapshots.items():
            write_snapshot(out / "snapshots", f"U_t{t:012.4f}", U, t)
        write_csv(out / "tables" / "decay.csv", ["t", "sup_U"], zip(run.times, run.sup_U))
    return pc, run


def scattering_checks(pc: PacketConfig, run, linear_run=None, out: Path | None = None) -> list:
    T = run.times[-1]
    rec = record_from_profile(run.profile_v, dyadic_times(pc.t0, T))
    rep = convergence_monitor(rec)
    if out is not None:
        write_csv(out / "tables" / "drift.csv", ["t_start", "t_end", "corrected", "uncorrected"],
                  zip(rec.dyadic_times[:-1], rec.dyadic_times[1:], rec.drift_corrected, rec.drift_uncorrected))
    checks = [_check("corrected_over_uncorrected_final", rep.final_ratio, 0.2, rep.final_ratio <= 0.2)]
    if linear_run is not None:
        lrec = record_from_profile(linear_run.profile_U, dyadic_times(pc.t0, linear_run.times[-1]))
        worst = float(max(lrec.drift_corrected.max(), lrec.drift_uncorrected.max()))
        checks.append(_check("linear_drifts", worst, 1e-10, worst <= 1e-10))
    return checks


def decay_check(pc: PacketConfig, run) -> dict:
    p = decay_exponent(run.times, run.sup_U, 20.0, pc.wrap_time() / 2)
    return _check("decay_exponent", p, [-0.6, -0.4], -0.6 <= p <= -0.4)


def exp_decay(cfg: ScenarioConfig, out: Path) -> list:
    pc, run = _packet(cfg, out)
    return [decay_check(pc, run)]


def exp_scatter(cfg: ScenarioConfig, out: Path) -> list:
    pc, run = _packet(cfg, out)
    _, lin = _packet(cfg, out, nonlinear=False)
    return [decay_check(pc, run)] + scattering_checks(pc, run, lin, out)


def exp_drift(cfg: ScenarioConfig, out: Path) -> list:
    i = cfg.initial
    lat = cfg.frequency_lattice()
    T = cfg.t_end if cfg.t_end is not None else 50.0

    def shape(e):
        c = lat.L / 2
        w = i.width if i.width is not None else lat.L / 8

        def env(x):
            return e * np.exp(-((x - c) / w) ** 2)

        return WaveState(0.0, sc.from_function(lambda x: env(x) * np.cos(i.k0 * (x - c)), lat),
                         sc.from_function(lambda x: env(x) * np.sin(i.k0 * (x - c)), lat))

    rep = drift_experiment(shape, i.eps * np.array([1.0, 0.5, 0.25]), cfg.integrator_config(), T)
    write_csv(out / "tables" / "energy_drift.csv", ["eps", "drift_total", "drift_E2"],
              zip(rep.eps, rep.drift_total, rep.drift_E2))
    return [_check("corrected_drift_exponent", rep.exponent_total, 3.5, rep.exponent_total >= 3.5),
            _check("uncorrected_drift_exponent", rep.exponent_E2, [2.5, 3.4], 2.5 <= rep.exponent_E2 <= 3.4)]


def symbol_study(seed: int = 0, trials: int = 6, M: int = 64) -> dict:
    """Worst calibrated ratio per lemma at resolutions M and 2M."""
    out = {}
    for lemma in LEMMAS:
        blocks = sample_blocks(lemma, trials, seed)
        r1 = symbol_bound_sampler(lemma, blocks=blocks, M=M)
        r2 = symbol_bound_sampler(lemma, blocks=blocks, M=2 * M)
        out[lemma] = (worst_ratio(r1), worst_ratio(r2), r1 + r2)
    return out


def exp_symbols(cfg: ScenarioConfig, out: Path) -> list:
    checks, rows = [], []
    for lemma, (w1, w2, reps) in symbol_study(cfg.initial.seed).items():
        change = abs(w2 / w1 - 1)
        checks.append(_check(f"{lemma}_stability", change, 0.2, change <= 0.2))
        rows += [(r.lemma, r.symbol, *r.block, r.proxy, r.bound, r.ratio) for r in reps]
    outside = {"boundm_N": [(0, -3, 0), (0, -5, 0), (1, 0, 1)], "boundb": [(-16, 0, -16), (1, 1, 18)]}
    bad = sum(support_violations(k, v) for k, v in outside.items())
    checks.append(_check("support_violations", bad, 0, bad == 0))
    write_csv(out / "tables" / "symbol_bounds.csv",
              ["lemma", "symbol", "k", "k1", "k2", "proxy", "bound", "ratio"], rows)
    return checks


EXPERIMENTS = {"conserve": exp_conserve, "decay": exp_decay, "scatter": exp_scatter, "drift": exp_drift,
               "dn_validate": exp_dn_validate, "symbols": exp_symbols}


THREADS_ENV = "CAPWAVES_THREADS"


def thread_count() -> int:
    """Thread count from the environment (default 1); recorded in the manifest."""
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n < 1:
        raise ConfigurationError(f"{THREADS_ENV}: expected a positive integer, got {raw!r}")
    return n


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        from . import __version__
        return __version__


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def run_scenario(config_path) -> dict:
    """Execute the configured experiment and write tables, snapshots and the manifest."""
    cfg = load_config(config_path)
    threads = thread_count()
    out = Path(cfg.output)
    start = time.time()
    checks = EXPERIMENTS[cfg.kind](cfg, out)
    end = time.time()
    manifest = {
        "config_hash": cfg.digest(), "code_version": _version(), "kind": cfg.kind,
        "config": cfg.model_dump(), "wrap_time": cfg.wrap_time, "threads": threads,
        "start": datetime.fromtimestamp(start, timezone.utc).isoformat(),
        "end": datetime.fromtimestamp(end, timezone.utc).isoformat(),
        "checks": [{k: _jsonable(v) for k, v in c.items()} for c in checks],
    }
    out.mkdir(parents=True, exist_ok=True)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1))
    return manifest


# ---------------------------------------------------------------------------
# plot data

INDEX_SCHEMA = {"type": "object", "required": ["run", "files"],
                "properties": {"run": {"type": "string"},
                               "files": {"type": "array", "items": {
                                   "type": "object", "required": ["path", "columns"],
                                   "properties": {"path": {"type": "string"},
                                                  "columns": {"type": "object"}}}}}}

COLUMNS = {
    "decay.csv": {"t": "time", "sup_U": "sup norm of U"},
    "drift.csv": {"t_start": "time", "t_end": "time", "corrected": "weighted sup of g drift",
                  "uncorrected": "weighted sup of profile drift"},
    "hamiltonian.csv": {"t": "time", "H_norm": "H^N norm of U"},
    "dn_validate.csv": {"eps": "amplitude", "sup_error": "sup |series - oracle|"},
    "energy_drift.csv": {"eps": "amplitude", "drift_total": "|E(T) - E(0)|", "drift_E2": "|E2(T) - E2(0)|"},
    "symbol_bounds.csv": {"lemma": "id", "symbol": "id", "k": "dyadic", "k1": "dyadic", "k2": "dyadic",
                          "proxy": "block norm proxy", "bound": "dyadic bound", "ratio": "proxy / bound"},
}


def emit_plotdata(run_dir) -> Path:
    """CSV tables for plotting plus index.json describing their columns."""
    run_dir = Path(run_dir)
    manifest = json.loads((run_dir / "manifest.json").read_text())
    plot = run_dir / "plotdata"
    plot.mkdir(exist_ok=True)
    files = []
    for tab in sorted((run_dir / "tables").glob("*.csv")) if (run_dir / "tables").exists() else []:
        target = plot / tab.name
        target.write_text(tab.read_text())
        files.append({"path": tab.name, "columns": COLUMNS.get(tab.name, {})})
    snaps = sorted((run_dir / "snapshots").glob("*.bin")) if (run_dir / "snapshots").exists() else []
    expected = manifest["config"]["snapshot_schedule"]
    if len(snaps) < len(expected):
        warnings.warn(f"only {len(snaps)} of {len(expected)} scheduled snapshots found; plot data is partial",
                      RuntimeWarning, stacklevel=2)
    for p in snaps:
        f, t = read_snapshot(p)
        name = f"spectrum_{p.stem}.csv"
        write_csv(plot / name, ["xi", "abs_coeff"], zip(f.lattice.xi, np.abs(f.coeffs)))
        files.append({"path": name, "columns": {"xi": "frequency", "abs_coeff": f"|U^| at t={t}"}})
    index = {"run": manifest["config_hash"], "files": files}
    (plot / "index.json").write_text(json.dumps(index, indent=1))
    return plot


# ---------------------------------------------------------------------------
# command line


@click.group()
def main():
    """Capillary water-wave experiments."""


@main.command("validate")
@click.argument("config", type=click.Path())
def validate_cmd(config):
    """Check a scenario file without running it."""
    try:
        cfg = load_config(config)
    except ConfigurationError as exc:
        click.echo(f"invalid config: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    click.echo(f"ok: {cfg.kind}, wrap time {cfg.wrap_time:.6g}")


@main.command("run")
@click.argument("config", type=click.Path())
def run_cmd(config):
    """Run a scenario and write its manifest."""
    try:
        manifest = run_scenario(config)
    except ConfigurationError as exc:
        click.echo(f"invalid config: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except (DomainError, CFLError, DivergenceError) as exc:
        click.echo(f"diverged: {exc}", err=True)
        sys.exit(EXIT_DIVERGED)
    for c in manifest["checks"]:
        click.echo(f"{c['verdict']} {c['name']} = {c['value']}")


@main.command("plotdata")
@click.argument("rundir", type=click.Path(exists=True, file_okay=False))
def plotdata_cmd(rundir):
    """Emit CSV plot data and a JSON index for a finished run."""
    path = emit_plotdata(rundir)
    click.echo(str(path))
