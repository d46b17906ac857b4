"""Command-line entry point: run configuration, CSV/JSON/SVG serialization.

Commands
    steady       solve one parameter point, print and save the solution set
    integrate    time-evolve an initial state, save the sampled trajectory
    arc          solution branches along a constant-intensity drive arc
    grid         stable/total solution counts on a drive-amplitude grid
    scan         repeat an arc over a list of atom numbers
    hysteresis   quasi-static up-down angle sweep with history dependence

Configuration comes from an optional flat key = value file (TOML subset:
numbers, booleans, quoted strings, [lists]; # comments) plus command-line
flags; flags override the file. Every run writes a manifest.json with the
fully resolved configuration, derived quantities, warnings, and a sha256
checksum per output file. Numbers in CSV files carry 17 significant digits
so repeated runs are byte-identical. Exit codes: 0 success, 1 some node
failed but the run completed, 2 configuration error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from .dynamics import NonConvergence, hysteresis_sweep, integrate, phi_loop
from .errors import BistabError, ConfigError, InvalidParameterError
from .model import STATE_LABELS, MeanFieldState, SystemParams, cooperativity
from .observables import observable_record
from .steady_state import find_all_roots, multistart_oracle
from .sweep import (
    arc_sweep,
    bistable_interval_width,
    finite_size_scan,
    phase_diagram_grid,
    resolve_workers,
)

PARAM_KEYS = tuple(f.name for f in fields(SystemParams))
# symmetric shorthand: one value fans out to both modes
SYMMETRIC_KEYS = {
    "gamma": ("gamma1", "gamma2"),
    "Gamma": ("Gamma1", "Gamma2"),
    "kappa": ("kappa1", "kappa2"),
    "delta_A": ("delta_A1", "delta_A2"),
    "delta_C": ("delta_C1", "delta_C2"),
    "eta": ("eta1", "eta2"),
}

GENERAL_OPTION_DEFAULTS = {
    "out_dir": ".",
    "plot": False,
    "threads": 0,  # 0 = BISTAB_THREADS or all cores
}
COMMAND_OPTION_DEFAULTS = {
    "steady": {"verify_starts": 0, "seed": 0},
    "integrate": {"t_end": 100.0, "n_samples": 201, "rel_tol": 1e-10,
                  "abs_tol": 1e-10, "ground_split": 0.5},
    "arc": {"radius": 1.13, "n_phi": 721, "convention": "from-vertical"},
    "grid": {"eta1_max": 5.0, "eta2_max": 5.0, "resolution": 101},
    "scan": {"N_list": [5e3, 1e4, 1e5, 1e6], "radius": 0.29, "n_phi": 721,
             "convention": "from-vertical"},
    "hysteresis": {"radius": 1.13, "n_steps": 181,
                   "convention": "from-vertical", "settle_eps": 1e-9,
                   "t_max": 1e5, "rel_tol": 1e-10, "abs_tol": 1e-10},
}
COMMANDS = tuple(COMMAND_OPTION_DEFAULTS)

ARC_COLUMNS = ("phi_rad", "eta1", "eta2", "branch_id", "stable", "T1", "T2",
               "ng1", "ng2", "ne1", "ne2", "x1", "x2", "re_alpha1",
               "im_alpha1", "re_alpha2", "im_alpha2", "residual")
GRID_COLUMNS = ("eta1", "eta2", "n_total", "n_stable", "marginal")
STEADY_COLUMNS = ("branch_id", "stable", "marginal", "x1", "x2", "T1", "T2",
                  "ng1", "ng2", "ne1", "ne2", "re_alpha1", "im_alpha1",
                  "re_alpha2", "im_alpha2", "spectrum_max_real", "residual")
TRAJECTORY_COLUMNS = ("t",) + STATE_LABELS + ("total_population",)
SCAN_SUMMARY_COLUMNS = ("N", "bistable_width_rad", "max_stable_purity")


def fmt(value) -> str:
    """CSV cell: 17 significant digits for floats, plain ints, 1/0 booleans."""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.17g}"


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved run: command, physical parameters, options."""

    command: str
    params: SystemParams
    options: dict

    def __eq__(self, other):
        return (isinstance(other, RunConfig) and self.command == other.command
                and self.params == other.params and self.options == other.options)


# === config parsing =======================================================


def _parse_value(raw: str, key: str):
    raw = raw.strip()
    if raw in ("true", "false"):
        return raw == "true"
    if raw.startswith('"') and raw.endswith('"') and len(raw) >= 2:
        return raw[1:-1]
    if raw.startswith("[") and raw.endswith("]"):
        inner = raw[1:-1].strip()
        if not inner:
            return []
        return [_parse_value(item, key) for item in inner.split(",")]
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse value {raw!r}", key=key) from None


def _strip_comment(line: str) -> str:
    out = []
    in_str = False
    for ch in line:
        if ch == '"':
            in_str = not in_str
        if ch == "#" and not in_str:
            break
        out.append(ch)
    return "".join(out)


def read_config_file(path) -> dict:
    """Flat key = value file to a dict; unknown keys are caught later."""
    text = Path(path).read_text(encoding="utf-8")
    kv = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw_line).strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(
                f"line {lineno}: expected key = value, got {raw_line!r}"
            )
        key, _, raw = line.partition("=")
        key = key.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in kv:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}", key=key)
        kv[key] = _parse_value(raw, key)
    return kv


def _coerce_option(command: str, key: str, value):
    default = COMMAND_OPTION_DEFAULTS[command].get(
        key, GENERAL_OPTION_DEFAULTS.get(key))
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{key}: expected a boolean, got {value!r}", key=key)
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key}: expected an integer, got {value!r}", key=key)
        if float(value) != int(value):
            raise ConfigError(f"{key}: expected an integer, got {value!r}", key=key)
        return int(value)
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key}: expected a number, got {value!r}", key=key)
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{key}: expected a string, got {value!r}", key=key)
        return value
    if isinstance(default, list):
        if not isinstance(value, list) or not value or \
                any(isinstance(v, (bool, str)) for v in value):
            raise ConfigError(f"{key}: expected a list of numbers, got {value!r}",
                              key=key)
        return [float(v) for v in value]
    raise ConfigError(f"{key}: unsupported option", key=key)


def parse_config(command: str, file_values: dict | None = None,
                 overrides: dict | None = None) -> RunConfig:
    """Merge defaults <- config file <- flag overrides into a RunConfig.

    Raises ConfigError naming the offending key on unknown keys or type
    mismatches, InvalidParameterError on inadmissible physics.
    """
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    allowed_options = set(GENERAL_OPTION_DEFAULTS) | \
        set(COMMAND_OPTION_DEFAULTS[command])
    param_values = {}
    options = {**GENERAL_OPTION_DEFAULTS, **COMMAND_OPTION_DEFAULTS[command]}

    for source in (file_values or {}, overrides or {}):
        for key, value in source.items():
            if value is None:
                continue
            if key in SYMMETRIC_KEYS:
                for target in SYMMETRIC_KEYS[key]:
                    param_values[target] = value
            elif key in PARAM_KEYS:
                param_values[key] = value
            elif key in allowed_options:
                options[key] = _coerce_option(command, key, value)
            else:
                raise ConfigError(f"unknown key {key!r}", key=key)

    try:
        params = SystemParams(**param_values)
    except InvalidParameterError as err:
        raise ConfigError(str(err)) from err
    params.require_valid()
    return RunConfig(command=command, params=params, options=dict(options))


def manifest_to_config(manifest: dict) -> RunConfig:
    """Rebuild the RunConfig a manifest was produced from (round-trip)."""
    params = SystemParams(**manifest["params"])
    return RunConfig(command=manifest["command"], params=params,
                     options=dict(manifest["options"]))


# === output helpers =======================================================


def write_csv(path: Path, columns, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(fmt(cell) for cell in row) + "\n")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _solution_row(phi: float, params: SystemParams, branch_id: int, sol) -> tuple:
    obs = observable_record(sol.state, params)
    st = sol.state
    return (phi, params.eta1, params.eta2, branch_id, sol.stable,
            obs.T1, obs.T2, st.ng1, st.ng2, st.ne1, st.ne2,
            sol.x1, sol.x2, st.alpha1.real, st.alpha1.imag,
            st.alpha2.real, st.alpha2.imag, sol.residual_norm)


def _arc_rows(arc):
    """CSV rows for an arc, ordered by (angle, x1), branch ids attached."""
    owner = {}
    for b_id, br in enumerate(arc.branches):
        for pos, k in enumerate(br.phi_indices):
            owner[(int(k), id(br.solutions[pos]))] = b_id
    rows = []
    for k, sol_set in enumerate(arc.solution_sets):
        phi = float(arc.angles[k])
        for sol in sol_set.solutions:
            b_id = owner.get((k, id(sol)), -1)
            rows.append(_solution_row(phi, sol_set.params, b_id, sol))
    return rows


def _sweep_record_row(rec) -> tuple:
    obs, st = rec.observables, rec.state
    return (rec.control, rec.eta1, rec.eta2, rec.branch_id, rec.stable,
            obs.T1, obs.T2, st.ng1, st.ng2, st.ne1, st.ne2,
            st.inversion1, st.inversion2, st.alpha1.real, st.alpha1.imag,
            st.alpha2.real, st.alpha2.imag, rec.residual_norm)


# === plotting (convenience only; acceptance rests on the CSVs) ============


def _mpl():
    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "bistab"
    import matplotlib.pyplot as plt

    return plt


def _save_svg(fig, path: Path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})


def _plot_branches(ax, arc, mode: int):
    for br in arc.branches:
        phis = arc.angles[br.phi_indices]
        ts = [observable_record(s.state, arc.solution_sets[k].params).T1
              if mode == 1 else
              observable_record(s.state, arc.solution_sets[k].params).T2
              for k, s in zip(br.phi_indices, br.solutions)]
        stable = np.array([s.stable for s in br.solutions])
        # split into runs of constant stability: solid stable, dashed not
        start = 0
        for i in range(1, len(ts) + 1):
            if i == len(ts) or stable[i] != stable[start]:
                style = "-" if stable[start] else "--"
                ax.plot(phis[start:i], ts[start:i], style, color="C0"
                        if stable[start] else "C3", linewidth=1.2)
                start = i
    ax.set_xlabel("phi [rad]")
    ax.set_ylabel(f"T{mode}")


def plot_arc(arc, path: Path) -> None:
    plt = _mpl()
    fig, axes = plt.subplots(1, 2, figsize=(9.0, 3.6))
    _plot_branches(axes[0], arc, 1)
    _plot_branches(axes[1], arc, 2)
    fig.suptitle(f"radius = {arc.radius:g}, N = {arc.params_base.N:g} "
                 f"(solid stable, dashed unstable)")
    fig.tight_layout()
    _save_svg(fig, path)
    plt.close(fig)


def plot_grid(diagram, path: Path) -> None:
    plt = _mpl()
    fig, ax = plt.subplots(figsize=(5.2, 4.4))
    mesh = ax.pcolormesh(diagram.eta1_axis, diagram.eta2_axis,
                         diagram.total_counts.T, shading="nearest",
                         cmap="viridis")
    fig.colorbar(mesh, ax=ax, label="total solutions")
    ax.set_xlabel("eta1")
    ax.set_ylabel("eta2")
    fig.tight_layout()
    _save_svg(fig, path)
    plt.close(fig)


def plot_scan(arcs, path: Path) -> None:
    plt = _mpl()
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for idx, arc in enumerate(arcs):
        color = f"C{idx % 10}"
        for br in arc.branches:
            phis = arc.angles[br.phi_indices]
            ts = [observable_record(s.state, arc.solution_sets[k].params).T1
                  for k, s in zip(br.phi_indices, br.solutions)]
            stable = [s.stable for s in br.solutions]
            start = 0
            for i in range(1, len(ts) + 1):
                if i == len(ts) or stable[i] != stable[start]:
                    ax.plot(phis[start:i], ts[start:i],
                            "-" if stable[start] else "--", color=color,
                            linewidth=1.0)
                    start = i
        ax.plot([], [], "-", color=color, label=f"N = {arc.params_base.N:g}")
    ax.set_xlabel("phi [rad]")
    ax.set_ylabel("T1")
    ax.legend()
    fig.tight_layout()
    _save_svg(fig, path)
    plt.close(fig)


def plot_hysteresis(records, path: Path) -> None:
    plt = _mpl()
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    n_up = (len(records) + 1) // 2
    phis = [r.control for r in records]
    t1 = [r.observables.T1 for r in records]
    ax.plot(phis[:n_up], t1[:n_up], "-o", markersize=2.5, label="forward")
    ax.plot(phis[n_up - 1:], t1[n_up - 1:], "-s", markersize=2.5,
            label="backward")
    ax.set_xlabel("phi [rad]")
    ax.set_ylabel("T1")
    ax.legend()
    fig.tight_layout()
    _save_svg(fig, path)
    plt.close(fig)


def plot_trajectory(traj, path: Path) -> None:
    plt = _mpl()
    fig, axes = plt.subplots(1, 2, figsize=(9.0, 3.6))
    t = traj.times
    axes[0].plot(t, np.abs(traj.states[:, 0] + 1j * traj.states[:, 1]) ** 2,
                 label="|alpha1|^2")
    axes[0].plot(t, np.abs(traj.states[:, 2] + 1j * traj.states[:, 3]) ** 2,
                 label="|alpha2|^2")
    axes[0].set_xlabel("t [1/gamma]")
    axes[0].legend()
    for idx, name in zip(range(8, 12), ("ne1", "ng1", "ne2", "ng2")):
        axes[1].plot(t, traj.states[:, idx], label=name)
    axes[1].set_xlabel("t [1/gamma]")
    axes[1].legend()
    fig.tight_layout()
    _save_svg(fig, path)
    plt.close(fig)


# === command runners ======================================================


class _Run:
    """Mutable run context: output collection, warnings, failures."""

    def __init__(self, config: RunConfig):
        self.config = config
        self.out_dir = Path(config.options["out_dir"])
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.outputs = []
        self.warnings = []
        self.failed = False

    def emit_csv(self, name: str, columns, rows) -> Path:
        path = self.out_dir / name
        write_csv(path, columns, rows)
        self.outputs.append(path)
        return path

    def emit_plot(self, name: str, plot_fn, *args) -> None:
        if not self.config.options["plot"]:
            return
        path = self.out_dir / name
        plot_fn(*args, path)
        self.outputs.append(path)

    def warn(self, message: str, failure: bool = False) -> None:
        self.warnings.append(message)
        if failure:
            self.failed = True


def _run_steady(run: _Run) -> None:
    cfg = run.config
    sols = find_all_roots(cfg.params)
    rows = []
    for b_id, sol in enumerate(sols.solutions):
        obs = observable_record(sol.state, cfg.params)
        st = sol.state
        rows.append((b_id, sol.stable, sol.marginal, sol.x1, sol.x2,
                     obs.T1, obs.T2, st.ng1, st.ng2, st.ne1, st.ne2,
                     st.alpha1.real, st.alpha1.imag, st.alpha2.real,
                     st.alpha2.imag, sol.spectrum_max_real,
                     sol.residual_norm))
    run.emit_csv("steady.csv", STEADY_COLUMNS, rows)
    if sols.n_marginal:
        run.warn(f"{sols.n_marginal} marginal classification(s)")
    print(f"eta = ({cfg.params.eta1:g}, {cfg.params.eta2:g}): "
          f"{sols.n_total} solution(s), {sols.n_stable} stable "
          f"[pattern {sols.branch_pattern()}]")
    for b_id, sol in enumerate(sols.solutions):
        tag = "M" if sol.marginal else ("S" if sol.stable else "U")
        print(f"  #{b_id} [{tag}] x1 = {sol.x1:+.6f}  x2 = {sol.x2:+.6f}  "
              f"max Re lambda = {sol.spectrum_max_real:+.3e}")
    n_starts = cfg.options["verify_starts"]
    if n_starts > 0:
        oracle = multistart_oracle(cfg.params, n_starts, cfg.options["seed"])
        missed = []
        for sol in oracle.solutions:
            dists = [np.max(np.abs(sol.state.to_vector()
                                   - s.state.to_vector()))
                     for s in sols.solutions]
            if not dists or min(dists) > 1e-6:
                missed.append(sol.x1)
        if missed:
            run.warn(f"multistart found {len(missed)} solution(s) the "
                     f"polynomial missed at x1 = {missed}", failure=True)
        else:
            print(f"  multistart oracle ({n_starts} starts): consistent")


def _run_integrate(run: _Run) -> None:
    cfg = run.config
    opts = cfg.options
    state0 = MeanFieldState.empty(opts["ground_split"])
    t_eval = np.linspace(0.0, opts["t_end"], opts["n_samples"])
    traj = integrate(state0, cfg.params, opts["t_end"],
                     rel_tol=opts["rel_tol"], abs_tol=opts["abs_tol"],
                     t_eval=t_eval)
    rows = [(traj.times[i], *traj.states[i],
             traj.states[i, 8:12].sum()) for i in range(traj.times.size)]
    run.emit_csv("trajectory.csv", TRAJECTORY_COLUMNS, rows)
    run.emit_plot("trajectory.svg", plot_trajectory, traj)
    print(f"integrated to t = {opts['t_end']:g} "
          f"({traj.n_accepted} accepted / {traj.n_rejected} rejected steps, "
          f"population drift {traj.population_drift():.3e})")


def _run_arc(run: _Run) -> None:
    cfg = run.config
    opts = cfg.options
    arc = arc_sweep(cfg.params, opts["radius"], opts["n_phi"],
                    opts["convention"], n_workers=opts["threads"] or None)
    run.emit_csv("arc.csv", ARC_COLUMNS, _arc_rows(arc))
    run.emit_plot("arc.svg", plot_arc, arc)
    n_marginal = sum(s.n_marginal for s in arc.solution_sets)
    if n_marginal:
        run.warn(f"{n_marginal} marginal classification(s) along the arc")
    if arc.ambiguities:
        run.warn(f"{len(arc.ambiguities)} branch-connection near-tie(s)")
    width = bistable_interval_width(arc)
    print(f"arc radius {opts['radius']:g}: {len(arc.branches)} branch(es), "
          f"multivalued over {width:.4f} rad")


def _run_grid(run: _Run) -> None:
    cfg = run.config
    opts = cfg.options
    diagram = phase_diagram_grid(cfg.params, opts["eta1_max"],
                                 opts["eta2_max"], opts["resolution"],
                                 n_workers=opts["threads"] or None)
    rows = []
    res = opts["resolution"]
    for i in range(res):
        for j in range(res):
            if diagram.degenerate_mask[i, j]:
                continue  # the undriven origin has no isolated solutions
            rows.append((diagram.eta1_axis[i], diagram.eta2_axis[j],
                         diagram.total_counts[i, j], diagram.counts[i, j],
                         diagram.marginal_mask[i, j]))
    run.emit_csv("grid.csv", GRID_COLUMNS, rows)
    run.emit_plot("grid.svg", plot_grid, diagram)
    for i, j, msg in diagram.failures:
        run.warn(f"node ({diagram.eta1_axis[i]:g}, {diagram.eta2_axis[j]:g}) "
                 f"{msg}", failure=True)
    n_marginal = int(diagram.marginal_mask.sum())
    if n_marginal:
        run.warn(f"{n_marginal} marginal node(s)")
    totals = diagram.occurring_totals()
    print(f"grid {res}x{res}: total counts {sorted(int(t) for t in totals)}")


def _run_scan(run: _Run) -> None:
    cfg = run.config
    opts = cfg.options
    summary = []
    arcs = []
    for N in opts["N_list"]:
        arc = finite_size_scan(cfg.params, [N], opts["radius"],
                               opts["n_phi"], opts["convention"],
                               n_workers=opts["threads"] or None)[0]
        arcs.append(arc)
        run.emit_csv(f"scan_N{int(N)}.csv", ARC_COLUMNS, _arc_rows(arc))
        stable_purity = [
            s.state.ne1 + s.state.ne2
            for sol_set in arc.solution_sets for s in sol_set.solutions
            if s.stable
        ]
        width = bistable_interval_width(arc)
        summary.append((N, width, max(stable_purity) if stable_purity else 0.0))
        print(f"N = {N:g}: bistable width {width:.4f} rad, "
              f"max stable purity proxy {summary[-1][2]:.3e}")
    run.emit_csv("scan_summary.csv", SCAN_SUMMARY_COLUMNS, summary)
    run.emit_plot("scan.svg", plot_scan, arcs)


def _run_hysteresis(run: _Run) -> None:
    cfg = run.config
    opts = cfg.options
    records = hysteresis_sweep(
        cfg.params, opts["radius"], n_steps=opts["n_steps"],
        convention=opts["convention"], eps=opts["settle_eps"],
        t_max=opts["t_max"], rel_tol=opts["rel_tol"],
        abs_tol=opts["abs_tol"],
    )
    run.emit_csv("hysteresis.csv", ARC_COLUMNS,
                 [_sweep_record_row(r) for r in records])
    run.emit_plot("hysteresis.svg", plot_hysteresis, records)
    n_bad = sum(1 for r in records if not r.converged)
    if n_bad:
        run.warn(f"{n_bad} sweep point(s) did not settle", failure=True)
    n_up = (len(records) + 1) // 2
    fwd = {r.control: r.observables.T1 for r in records[:n_up]}
    bwd = {r.control: r.observables.T1 for r in records[n_up - 1:]}
    gap = max(abs(fwd[phi] - bwd[phi]) for phi in fwd)
    print(f"hysteresis radius {opts['radius']:g}: "
          f"max |T1_forward - T1_backward| = {gap:.6f}")


_RUNNERS = {
    "steady": _run_steady,
    "integrate": _run_integrate,
    "arc": _run_arc,
    "grid": _run_grid,
    "scan": _run_scan,
    "hysteresis": _run_hysteresis,
}


def run(config: RunConfig) -> int:
    """Execute a resolved configuration; returns the process exit code."""
    start = time.perf_counter()
    ctx = _Run(config)
    _RUNNERS[config.command](ctx)
    wall = time.perf_counter() - start

    manifest = {
        "tool": "bistab",
        "version": __version__,
        "command": config.command,
        "params": {name: getattr(config.params, name) for name in PARAM_KEYS},
        "options": config.options,
        "derived": {
            "g1": config.params.g1,
            "g2": config.params.g2,
            "cooperativity1": cooperativity(config.params, 1),
            "cooperativity2": cooperativity(config.params, 2),
            "workers": resolve_workers(config.options["threads"] or None),
        },
        "warnings": ctx.warnings,
        "wall_time_s": wall,
        "outputs": [{"path": p.name, "sha256": _sha256(p)}
                    for p in ctx.outputs],
    }
    manifest_path = ctx.out_dir / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n",
                             encoding="utf-8")
    for w in ctx.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return 1 if ctx.failed else 0


# === argument parsing =====================================================


def _add_param_flags(parser: argparse.ArgumentParser) -> None:
    for key in SYMMETRIC_KEYS:
        parser.add_argument(f"--{key.replace('_', '-')}", type=float,
                            dest=key, help=f"sets {key}1 and {key}2")
    for key in PARAM_KEYS:
        flag = f"--{key.replace('_', '-')}"
        parser.add_argument(flag, type=float, dest=key)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bistab",
        description="steady states, stability and sweeps of a driven "
                    "two-mode four-level cavity mean-field model",
    )
    parser.add_argument("--version", action="version",
                        version=f"bistab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, default=None,
                        help="flat key = value configuration file")
    common.add_argument("--out-dir", type=str, dest="out_dir", default=None)
    common.add_argument("--plot", action="store_const", const=True,
                        dest="plot", default=None,
                        help="also write SVG figures")
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads (0 = BISTAB_THREADS or cores)")
    _add_param_flags(common)

    p = sub.add_parser("steady", parents=[common],
                       help="solve one parameter point")
    p.add_argument("--verify-starts", type=int, dest="verify_starts",
                   default=None,
                   help="cross-check with a multistart hunt of this size")
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("integrate", parents=[common],
                       help="time-evolve from the split dark state")
    p.add_argument("--t-end", type=float, dest="t_end", default=None)
    p.add_argument("--n-samples", type=int, dest="n_samples", default=None)
    p.add_argument("--rel-tol", type=float, dest="rel_tol", default=None)
    p.add_argument("--abs-tol", type=float, dest="abs_tol", default=None)
    p.add_argument("--ground-split", type=float, dest="ground_split",
                   default=None)

    p = sub.add_parser("arc", parents=[common],
                       help="branches along a constant-intensity arc")
    p.add_argument("--radius", type=float, default=None)
    p.add_argument("--n-phi", type=int, dest="n_phi", default=None)
    p.add_argument("--convention", choices=("from-vertical", "from-axis1"),
                   default=None)

    p = sub.add_parser("grid", parents=[common],
                       help="solution counts on a drive grid")
    p.add_argument("--eta1-max", type=float, dest="eta1_max", default=None)
    p.add_argument("--eta2-max", type=float, dest="eta2_max", default=None)
    p.add_argument("--max", type=float, dest="grid_max", default=None,
                   help="sets both grid maxima")
    p.add_argument("--res", type=int, dest="resolution", default=None)

    p = sub.add_parser("scan", parents=[common],
                       help="arc sweep repeated over atom numbers")
    p.add_argument("--N-list", type=str, dest="N_list_raw", default=None,
                   help="comma-separated atom numbers, e.g. 5e3,1e4,1e5")
    p.add_argument("--radius", type=float, default=None)
    p.add_argument("--n-phi", type=int, dest="n_phi", default=None)
    p.add_argument("--convention", choices=("from-vertical", "from-axis1"),
                   default=None)

    p = sub.add_parser("hysteresis", parents=[common],
                       help="quasi-static up-down angle sweep")
    p.add_argument("--radius", type=float, default=None)
    p.add_argument("--n-steps", type=int, dest="n_steps", default=None)
    p.add_argument("--convention", choices=("from-vertical", "from-axis1"),
                   default=None)
    p.add_argument("--settle-eps", type=float, dest="settle_eps", default=None)
    p.add_argument("--t-max", type=float, dest="t_max", default=None)
    p.add_argument("--rel-tol", type=float, dest="rel_tol", default=None)
    p.add_argument("--abs-tol", type=float, dest="abs_tol", default=None)

    return parser


def _overrides_from_args(args: argparse.Namespace) -> dict:
    skip = {"command", "config", "N_list_raw", "grid_max"}
    overrides = {k: v for k, v in vars(args).items()
                 if k not in skip and v is not None}
    if getattr(args, "grid_max", None) is not None:
        overrides["eta1_max"] = args.grid_max
        overrides["eta2_max"] = args.grid_max
    if getattr(args, "N_list_raw", None) is not None:
        try:
            overrides["N_list"] = [float(tok) for tok in
                                   args.N_list_raw.split(",") if tok.strip()]
        except ValueError:
            raise ConfigError(
                f"N_list: cannot parse {args.N_list_raw!r}", key="N_list"
            ) from None
    return overrides


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        file_values = read_config_file(args.config) if args.config else None
        config = parse_config(args.command, file_values,
                              _overrides_from_args(args))
    except (ConfigError, InvalidParameterError, OSError) as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return 2
    try:
        return run(config)
    except BistabError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
