"""Command-line entry point.

Reads a JSON experiment config (or a bundled preset), dispatches one of the
experiment families and writes CSV artifacts plus a run manifest, with
optional SVG plots.  Runs are deterministic: the same config and seed yield
byte-identical CSVs.

Exit codes: 0 success, 1 runtime failure, 2 config schema violation,
3 domain invariant violation.

Config schema (JSON object; unknown keys are rejected)::

    experiment   "crb-sweep" | "kappa" | "caf" | "ccdf" | "mc"
    seed         unsigned integer (optional, default 0; --seed overrides)
    scenario     length_m, loss_db_per_km, source_position_m,
                 snr_ref_db?, noise_floor_db?, light_speed_mps?
    waveform     pn_degree, pn_taps?, pn_seed_state?, sample_rate_hz?,
                 oversampling?, rolloff?, filter_span?, carrier_hz?
                 (required for caf / ccdf / mc)
    crb_sweep    n_samples [..], losses_db_per_km [..], n_positions?, ts_s?
    kappa        losses_db_per_km [..], n_positions?
    caf          noise?, matched_filter?, doppler_half_bins?, lag_margin?
    ccdf         caf keys plus exclusion_lag_cells?, exclusion_doppler_cells?,
                 n_thresholds?
    mc           trials

CSV schemas::

    crb-sweep  position_m, n_samples, loss_db_per_km, crb_s2, crb_m2, applicable_flag
    kappa      position_m, loss_db_per_km, kappa_mag, kappa_sq
    caf        lag_s, doppler_hz, amplitude
    ccdf       threshold_norm, ccdf
    mc         trial, truth_m, estimate_m, delta_tau_hat_s
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__, caf, channel, crb, positioning, presets, signal

EXPERIMENTS = ("crb-sweep", "kappa", "caf", "ccdf", "mc")


class ConfigError(Exception):
    """Config file does not satisfy the documented schema."""


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int
    scenario: channel.FiberScenario
    waveform: signal.WaveformSpec | None
    params: dict
    raw: dict


# ---------------------------------------------------------------------------
# Schema validation


def _check_keys(section: dict, allowed: set[str], required: set[str], path: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"{path}: unknown field(s) {sorted(unknown)}")
    missing = required - set(section)
    if missing:
        raise ConfigError(f"{path}: missing required field(s) {sorted(missing)}")


def _number(section: dict, key: str, path: str, default=None) -> float:
    if key not in section:
        if default is None:
            raise ConfigError(f"{path}.{key}: missing required number")
        return default
    v = section[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}.{key}: expected a number, got {type(v).__name__}")
    return float(v)


def _integer(section: dict, key: str, path: str, default=None) -> int:
    if key not in section:
        if default is None:
            raise ConfigError(f"{path}.{key}: missing required integer")
        return default
    v = section[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{path}.{key}: expected an integer, got {type(v).__name__}")
    return v


def _boolean(section: dict, key: str, path: str, default: bool) -> bool:
    v = section.get(key, default)
    if not isinstance(v, bool):
        raise ConfigError(f"{path}.{key}: expected a boolean, got {type(v).__name__}")
    return v


def _number_list(section: dict, key: str, path: str) -> list[float]:
    if key not in section:
        raise ConfigError(f"{path}.{key}: missing required list")
    v = section[key]
    if not isinstance(v, list) or not v:
        raise ConfigError(f"{path}.{key}: expected a non-empty list of numbers")
    out = []
    for i, item in enumerate(v):
        if isinstance(item, bool) or not isinstance(item, (int, float)):
            raise ConfigError(f"{path}.{key}[{i}]: expected a number")
        out.append(float(item))
    return out


def _parse_scenario(raw: dict) -> channel.FiberScenario:
    path = "scenario"
    _check_keys(
        raw,
        {
            "length_m",
            "loss_db_per_km",
            "source_position_m",
            "snr_ref_db",
            "noise_floor_db",
            "light_speed_mps",
        },
        {"length_m", "loss_db_per_km", "source_position_m"},
        path,
    )
    return channel.FiberScenario(
        length_m=_number(raw, "length_m", path),
        loss_db_per_km=_number(raw, "loss_db_per_km", path),
        source_position_m=_number(raw, "source_position_m", path),
        snr_ref_db=_number(raw, "snr_ref_db", path, default=10.0),
        noise_floor_db=_number(raw, "noise_floor_db", path, default=0.0),
        light_speed_mps=_number(raw, "light_speed_mps", path, default=channel.FIBER_LIGHT_SPEED),
    )


def _parse_waveform(raw: dict) -> signal.WaveformSpec:
    path = "waveform"
    _check_keys(
        raw,
        {
            "pn_degree",
            "pn_taps",
            "pn_seed_state",
            "sample_rate_hz",
            "oversampling",
            "rolloff",
            "filter_span",
            "carrier_hz",
        },
        {"pn_degree"},
        path,
    )
    taps = raw.get("pn_taps")
    if taps is not None:
        if not isinstance(taps, list) or not all(
            isinstance(t, int) and not isinstance(t, bool) for t in taps
        ):
            raise ConfigError(f"{path}.pn_taps: expected a list of integers")
        taps = frozenset(taps)
    pn = signal.PnSpec(
        degree=_integer(raw, "pn_degree", path),
        taps=taps,
        seed_state=_integer(raw, "pn_seed_state", path, default=1),
    )
    return signal.WaveformSpec(
        pn=pn,
        sample_rate=_number(raw, "sample_rate_hz", path, default=16_000.0),
        oversampling=_integer(raw, "oversampling", path, default=4),
        rolloff=_number(raw, "rolloff", path, default=0.31),
        filter_span=_integer(raw, "filter_span", path, default=8),
        carrier_hz=_number(raw, "carrier_hz", path, default=0.0),
    )


_PARAM_SECTIONS = {
    "crb-sweep": "crb_sweep",
    "kappa": "kappa",
    "caf": "caf",
    "ccdf": "ccdf",
    "mc": "mc",
}

_CAF_KEYS = {"noise", "matched_filter", "doppler_half_bins", "lag_margin"}


def _parse_params(experiment: str, raw: dict) -> dict:
    section_name = _PARAM_SECTIONS[experiment]
    section = raw.get(section_name, {})
    if not isinstance(section, dict):
        raise ConfigError(f"{section_name}: expected an object")
    path = section_name
    if experiment == "crb-sweep":
        _check_keys(
            section,
            {"n_samples", "losses_db_per_km", "n_positions", "ts_s"},
            {"n_samples", "losses_db_per_km"},
            path,
        )
        n_samples = section["n_samples"]
        if not isinstance(n_samples, list) or not all(
            isinstance(n, int) and not isinstance(n, bool) and n >= 1 for n in n_samples
        ):
            raise ConfigError(f"{path}.n_samples: expected a list of positive integers")
        return {
            "n_samples": list(n_samples),
            "losses_db_per_km": _number_list(section, "losses_db_per_km", path),
            "n_positions": _integer(section, "n_positions", path, default=121),
            "ts_s": _number(section, "ts_s", path, default=1.0),
        }
    if experiment == "kappa":
        _check_keys(section, {"losses_db_per_km", "n_positions"}, {"losses_db_per_km"}, path)
        return {
            "losses_db_per_km": _number_list(section, "losses_db_per_km", path),
            "n_positions": _integer(section, "n_positions", path, default=121),
        }
    if experiment in ("caf", "ccdf"):
        allowed = set(_CAF_KEYS)
        if experiment == "ccdf":
            allowed |= {"exclusion_lag_cells", "exclusion_doppler_cells", "n_thresholds"}
        _check_keys(section, allowed, set(), path)
        params = {
            "noise": _boolean(section, "noise", path, default=True),
            "matched_filter": _boolean(section, "matched_filter", path, default=True),
            "doppler_half_bins": _integer(section, "doppler_half_bins", path, default=2),
            "lag_margin": _integer(section, "lag_margin", path, default=2),
        }
        if experiment == "ccdf":
            params.update(
                exclusion_lag_cells=_integer(section, "exclusion_lag_cells", path, default=4),
                exclusion_doppler_cells=_integer(
                    section, "exclusion_doppler_cells", path, default=1
                ),
                n_thresholds=_integer(section, "n_thresholds", path, default=201),
            )
        return params
    # mc
    _check_keys(section, {"trials"}, {"trials"}, path)
    trials = _integer(section, "trials", path)
    if trials < 1:
        raise ConfigError(f"{path}.trials: must be >= 1")
    return {"trials": trials}


def parse_config(raw: dict) -> ExperimentConfig:
    """Validate a raw config document and build the domain objects."""
    if not isinstance(raw, dict):
        raise ConfigError("top level: expected a JSON object")
    allowed = {"experiment", "seed", "scenario", "waveform"} | set(_PARAM_SECTIONS.values())
    _check_keys(raw, allowed, {"experiment", "scenario"}, "top level")
    experiment = raw["experiment"]
    if experiment not in EXPERIMENTS:
        raise ConfigError(
            f"experiment: {experiment!r} is not one of {', '.join(EXPERIMENTS)}"
        )
    seed = _integer(raw, "seed", "top level", default=0)
    if seed < 0:
        raise ConfigError("seed: must be a nonnegative integer")
    if not isinstance(raw["scenario"], dict):
        raise ConfigError("scenario: expected an object")
    scenario = _parse_scenario(raw["scenario"])
    waveform = None
    if experiment in ("caf", "ccdf", "mc"):
        if "waveform" not in raw:
            raise ConfigError(f"waveform: required for the {experiment} experiment")
        if not isinstance(raw["waveform"], dict):
            raise ConfigError("waveform: expected an object")
        waveform = _parse_waveform(raw["waveform"])
    elif "waveform" in raw:
        if not isinstance(raw["waveform"], dict):
            raise ConfigError("waveform: expected an object")
        waveform = _parse_waveform(raw["waveform"])
    params = _parse_params(experiment, raw)
    return ExperimentConfig(
        experiment=experiment,
        seed=seed,
        scenario=scenario,
        waveform=waveform,
        params=params,
        raw=raw,
    )


# ---------------------------------------------------------------------------
# Experiment runners


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".12g")


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _run_crb_sweep(cfg: ExperimentConfig):
    p = cfg.params
    positions = np.linspace(0.0, cfg.scenario.length_m, p["n_positions"])
    rows = []
    for loss in p["losses_db_per_km"]:
        scenario = replace(cfg.scenario, loss_db_per_km=loss, source_position_m=0.0)
        for n in p["n_samples"]:
            curve = crb.crb_position_sweep(scenario, n, positions, ts=p["ts_s"])
            for i, pos in enumerate(curve.positions_m):
                rows.append(
                    (pos, n, loss, curve.crb_s2[i], curve.crb_m2[i], bool(curve.applicable[i]))
                )
    header = ["position_m", "n_samples", "loss_db_per_km", "crb_s2", "crb_m2", "applicable_flag"]
    return header, rows, {}


def _run_kappa(cfg: ExperimentConfig):
    p = cfg.params
    positions = np.linspace(0.0, cfg.scenario.length_m, p["n_positions"])
    rows = []
    for loss in p["losses_db_per_km"]:
        for pos in positions:
            scenario = replace(
                cfg.scenario, loss_db_per_km=loss, source_position_m=float(pos)
            )
            mag, _ = channel.kappa_of_position(scenario)
            rows.append((pos, loss, mag, mag**2))
    header = ["position_m", "loss_db_per_km", "kappa_mag", "kappa_sq"]
    return header, rows, {}


def _surface_for(cfg: ExperimentConfig) -> caf.CafSurface:
    p = cfg.params
    chips = signal.gen_mseq(cfg.waveform.pn)
    wave = signal.shape_pulse(chips, cfg.waveform)
    pair = channel.propagate(
        wave,
        cfg.scenario,
        cfg.seed,
        noise=p["noise"],
        carrier_hz=cfg.waveform.carrier_hz,
    )
    u1, u2 = pair.u1, pair.u2
    if p["matched_filter"]:
        u1 = signal.matched_filter(u1, cfg.waveform)
        u2 = signal.matched_filter(u2, cfg.waveform)
    grid = caf.CafGrid.for_scenario(
        cfg.scenario,
        u1.sample_rate,
        u1.k_samples,
        doppler_half_bins=p["doppler_half_bins"],
        lag_margin=p["lag_margin"],
    )
    return caf.caf_discrete(u1, u2, grid)


def _run_caf(cfg: ExperimentConfig):
    surface = _surface_for(cfg)
    rows = []
    lag_s = surface.lag_seconds
    for i in range(lag_s.size):
        for j, nu in enumerate(surface.grid.doppler_hz):
            rows.append((lag_s[i], nu, surface.amplitudes[i, j]))
    header = ["lag_s", "doppler_hz", "amplitude"]
    return header, rows, {"surface": surface}


def _run_ccdf(cfg: ExperimentConfig):
    p = cfg.params
    surface = _surface_for(cfg)
    thresholds = np.linspace(0.0, 1.0, p["n_thresholds"])
    thr, values = caf.ccdf(
        surface,
        exclusion_radius=(p["exclusion_lag_cells"], p["exclusion_doppler_cells"]),
        thresholds=thresholds,
    )
    rows = [(t, v) for t, v in zip(thr, values)]
    header = ["threshold_norm", "ccdf"]
    return header, rows, {}


def _run_mc(cfg: ExperimentConfig):
    report = positioning.monte_carlo(
        cfg.scenario, cfg.waveform, cfg.params["trials"], cfg.seed
    )
    rows = [
        (t, rec.truth_m, rec.estimate.position_m, rec.estimate.delta_tau_s)
        for t, rec in enumerate(report.records)
    ]
    header = ["trial", "truth_m", "estimate_m", "delta_tau_hat_s"]
    return header, rows, {"report": report}


_RUNNERS = {
    "crb-sweep": _run_crb_sweep,
    "kappa": _run_kappa,
    "caf": _run_caf,
    "ccdf": _run_ccdf,
    "mc": _run_mc,
}

_CSV_NAMES = {
    "crb-sweep": "crb_sweep.csv",
    "kappa": "kappa.csv",
    "caf": "caf.csv",
    "ccdf": "ccdf.csv",
    "mc": "mc.csv",
}


# ---------------------------------------------------------------------------
# Plotting (optional, static SVG only)


def _plot(cfg: ExperimentConfig, rows, extras, path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 5))
    data = np.array([[float(v) for v in row] for row in rows])
    if cfg.experiment == "crb-sweep":
        for loss in sorted({r[2] for r in rows}):
            for n in sorted({r[1] for r in rows}):
                sel = (data[:, 2] == loss) & (data[:, 1] == n)
                ax.semilogy(
                    data[sel, 0] / 1000.0, data[sel, 3], label=f"N={int(n)}, {loss} dB/km"
                )
        ax.set_xlabel("source position [km]")
        ax.set_ylabel("delay CRB [s^2]")
        ax.legend()
    elif cfg.experiment == "kappa":
        for loss in sorted({r[1] for r in rows}):
            sel = data[:, 1] == loss
            ax.plot(data[sel, 0] / 1000.0, data[sel, 3], label=f"{loss} dB/km")
        ax.set_xlabel("source position [km]")
        ax.set_ylabel("|kappa|^2")
        ax.legend()
    elif cfg.experiment == "caf":
        surface = extras["surface"]
        mesh = ax.pcolormesh(
            surface.grid.doppler_hz,
            surface.lag_seconds * 1e3,
            surface.amplitudes,
            shading="nearest",
        )
        fig.colorbar(mesh, ax=ax, label="amplitude")
        ax.set_xlabel("Doppler [Hz]")
        ax.set_ylabel("delay [ms]")
    elif cfg.experiment == "ccdf":
        ax.semilogy(data[:, 0], np.maximum(data[:, 1], 1e-12))
        ax.set_xlabel("threshold (peak-normalized)")
        ax.set_ylabel("CCDF")
    else:  # mc
        ax.hist(data[:, 2] / 1000.0, bins=40)
        ax.axvline(extras["report"].records[0].truth_m / 1000.0, color="k", linestyle="--")
        ax.set_xlabel("estimated position [km]")
        ax.set_ylabel("trials")
    ax.set_title(cfg.experiment)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


# ---------------------------------------------------------------------------
# Entry points


def run(config: dict, out_dir: Path, svg: bool = False) -> list[Path]:
    """Run one experiment config; returns the written artifact paths."""
    cfg = parse_config(config)
    out_dir.mkdir(parents=True, exist_ok=True)
    header, rows, extras = _RUNNERS[cfg.experiment](cfg)
    outputs = []
    csv_path = out_dir / _CSV_NAMES[cfg.experiment]
    _write_csv(csv_path, header, rows)
    outputs.append(csv_path)
    if svg:
        svg_path = csv_path.with_suffix(".svg")
        _plot(cfg, rows, extras, svg_path)
        outputs.append(svg_path)

    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    manifest = {
        "tool_version": __version__,
        "experiment": cfg.experiment,
        "seed": cfg.seed,
        "config_sha256": hashlib.sha256(canonical.encode()).hexdigest(),
        "outputs": [p.name for p in outputs],
    }
    manifest_path = out_dir / "run_manifest.json"
    with open(manifest_path, "w", newline="\n") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")
    outputs.append(manifest_path)
    return outputs


def load_config_file(path: str) -> dict:
    try:
        with open(path, "r") as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="fiberloc",
        description="Dual-bistatic fiber acoustic localization experiments",
    )
    parser.add_argument("config", nargs="?", help="path to a JSON experiment config")
    parser.add_argument("--preset", help="run a bundled config instead of a file")
    parser.add_argument("--list-presets", action="store_true", help="print preset names and exit")
    parser.add_argument("--out", default="fiberloc_out", help="output directory (default: %(default)s)")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--svg", action="store_true", help="also emit SVG plots")
    args = parser.parse_args(argv)

    if args.list_presets:
        for name in presets.list_presets():
            print(name)
        return 0

    try:
        if args.preset is not None and args.config is not None:
            raise ConfigError("pass either a config file or --preset, not both")
        if args.preset is not None:
            try:
                config = presets.get_preset(args.preset)
            except KeyError as exc:
                raise ConfigError(str(exc.args[0])) from exc
        elif args.config is not None:
            config = load_config_file(args.config)
        else:
            raise ConfigError("a config file or --preset is required")
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed must be nonnegative")
            if not isinstance(config, dict):
                raise ConfigError("top level: expected a JSON object")
            config["seed"] = args.seed
        outputs = run(config, Path(args.out), svg=args.svg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # pragma: no cover - defensive
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 1

    for path in outputs:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
