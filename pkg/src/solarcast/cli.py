"""Command line front end: ``solarcast <subcommand> [--config FILE] [flags]``.

Exit status: 0 success, 2 missing input, 3 validation failure,
4 numerical divergence. Each run writes ``<output>.manifest.json`` next to
its primary output; passing that file back via ``--config`` replays the run.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from datetime import date
from pathlib import Path

import numpy as np

from . import evaluation, pipeline
from .clearsky import clearsky_series, read_clearsky_csv, write_clearsky_csv
from .config import load_config, write_manifest
from .errors import ConfigurationError, MissingInputError, SolarcastError
from .features import load_dataset, save_dataset
from .ingest import (FIELD_NAMES, format_timestamp, from_epoch_minutes, load_range,
                     parse_timestamp, read_csv, records_to_arrays, to_epoch_minutes,
                     write_csv)
from .rnn import load_checkpoint
from .training import TrainReport, predict, train

log = logging.getLogger("solarcast")

# flag dest -> (section, key)
FLAG_MAP = {
    "site": ("site", "id"), "lat": ("site", "latitude"), "lon": ("site", "longitude"),
    "elev": ("site", "elevation"),
    "input_dir": ("paths", "input_dir"), "years": ("ingest", "years"),
    "include_qc": ("ingest", "include_qc"),
    "start": ("clearsky", "start"), "end": ("clearsky", "end"), "step": ("clearsky", "step_minutes"),
    "obs": ("paths", "obs"), "clearsky_csv": ("paths", "clearsky"),
    "seq_len": ("features", "seq_len"), "horizons": ("features", "horizons"),
    "train_years": ("features", "train_years"), "test_years": ("features", "test_years"),
    "stride": ("features", "stride"), "ghi_floor": ("features", "ghi_floor"),
    "kt_max": ("features", "kt_max"), "gap_max": ("features", "gap_max"),
    "synthetic": ("synthetic", "enabled"), "synthetic_seed": ("synthetic", "seed"),
    "dataset": ("paths", "dataset"), "mode": ("train", "mode"), "epochs": ("train", "epochs"),
    "batch": ("train", "batch_size"), "lr": ("train", "learning_rate"),
    "seed": ("train", "seed"), "hidden": ("train", "hidden_dim"),
    "checkpoint_every": ("train", "checkpoint_every"),
    "checkpoint": ("paths", "checkpoint"), "report": ("paths", "train_report"),
    "baseline": ("evaluate", "baseline"), "unit": ("evaluate", "unit"),
    "out_table": ("paths", "eval_table"), "out_csv": ("paths", "eval_csv"),
    "train_report": ("paths", "train_report"), "out_dir": ("paths", "report_dir"),
}

# per subcommand, where "--out" lands in the config
OUT_TARGET = {
    "ingest": ("paths", "obs"), "clearsky": ("paths", "clearsky"),
    "features": ("paths", "dataset"), "predict": ("paths", "predictions"),
}


def _parse_step(text):
    text = text.strip().lower()
    for suffix in ("min", "m"):
        if text.endswith(suffix):
            text = text[: -len(suffix)]
            break
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"step must look like '1min', got {text!r}") from None


def _add_site(p):
    p.add_argument("--site")
    p.add_argument("--lat", type=float)
    p.add_argument("--lon", type=float)
    p.add_argument("--elev", type=float)


def build_parser():
    parser = argparse.ArgumentParser(prog="solarcast", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="TOML/JSON config or a previous run's manifest")
        return p

    p = command("ingest", "parse station daily files into canonical CSV")
    _add_site(p)
    p.add_argument("--in", dest="input_dir")
    p.add_argument("--years")
    p.add_argument("--out")
    p.add_argument("--include-qc", action="store_const", const=True, default=None)

    p = command("clearsky", "compute Bird clear-sky irradiance for a time span")
    _add_site(p)
    p.add_argument("--from", dest="start")
    p.add_argument("--to", dest="end")
    p.add_argument("--step", type=_parse_step)
    p.add_argument("--obs", help="observation CSV; its station pressure feeds the model")
    p.add_argument("--out")

    p = command("features", "build the windowed, normalised dataset")
    p.add_argument("--obs")
    p.add_argument("--clearsky", dest="clearsky_csv")
    p.add_argument("--seq-len", type=int)
    p.add_argument("--horizons")
    p.add_argument("--train-years")
    p.add_argument("--test-years")
    p.add_argument("--stride", type=int)
    p.add_argument("--ghi-floor", type=float)
    p.add_argument("--kt-max", type=float)
    p.add_argument("--gap-max", type=int)
    p.add_argument("--synthetic", action="store_const", const=True, default=None,
                   help="use the bundled seeded generator instead of --obs/--clearsky")
    p.add_argument("--synthetic-seed", type=int)
    _add_site(p)
    p.add_argument("--out")

    p = command("train", "train the recurrent network")
    p.add_argument("--dataset")
    p.add_argument("--mode", help="fixed:H or multi:H1,H2,...")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--hidden", type=int)
    p.add_argument("--checkpoint-every", type=int)
    p.add_argument("--checkpoint")
    p.add_argument("--report")

    p = command("evaluate", "score a checkpoint on the test split")
    p.add_argument("--checkpoint")
    p.add_argument("--dataset")
    p.add_argument("--baseline", action="store_const", const=True, default=None)
    p.add_argument("--no-baseline", dest="baseline", action="store_const", const=False)
    p.add_argument("--unit", choices=("norm", "kt", "wm2"))
    p.add_argument("--site")
    p.add_argument("--out-table")
    p.add_argument("--out-csv")

    p = command("predict", "write per-sample forecasts for the test split")
    p.add_argument("--checkpoint")
    p.add_argument("--dataset")
    p.add_argument("--out")

    p = command("report", "plot-ready CSVs: loss curves and daily means")
    p.add_argument("--train-report")
    p.add_argument("--obs")
    p.add_argument("--clearsky", dest="clearsky_csv")
    p.add_argument("--out-dir")
    return parser


def merged_config(args):
    config = load_config(args.config)
    for dest, (section, key) in FLAG_MAP.items():
        if hasattr(args, dest):
            config.set(section, key, getattr(args, dest))
    config.explicit_years = any(getattr(args, k, None) is not None
                                for k in ("train_years", "test_years"))
    if getattr(args, "out", None) is not None:
        config.set(*OUT_TARGET[args.command], args.out)
    return config


def _need(config, key, what):
    value = config["paths"][key]
    if not value:
        raise ConfigurationError(f"no {what} path given (paths.{key})")
    return Path(value)


def _existing(config, key, what):
    path = _need(config, key, what)
    if not path.exists():
        raise MissingInputError(f"{what} {path} does not exist")
    return path


def _out(path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


# -- subcommands -----------------------------------------------------------

def cmd_ingest(config):
    src = _need(config, "input_dir", "input directory")
    if not src.is_dir():
        raise MissingInputError(f"input directory {src} does not exist")
    out = _out(_need(config, "obs", "output CSV"))
    records = load_range(src, config.site(), config["ingest"]["years"])
    write_csv(records, out, include_qc=config["ingest"]["include_qc"])
    log.info("wrote %d records to %s", len(records), out)
    return [src], [out]


def cmd_clearsky(config):
    c = config["clearsky"]
    site, atmos = config.site(), config.atmos()
    out = _out(_need(config, "clearsky", "output CSV"))
    inputs = []
    pressure = None
    if config["paths"]["obs"]:
        obs = _existing(config, "obs", "observation CSV")
        inputs.append(obs)
        records = read_csv(obs)
        minutes, values = records_to_arrays(records)
        pressure = values[:, FIELD_NAMES.index("pressure")]
    if c["start"] and c["end"]:
        start = to_epoch_minutes(parse_timestamp(c["start"]))
        end = to_epoch_minutes(parse_timestamp(c["end"]))
        if end < start:
            raise ConfigurationError("clearsky end precedes start")
        grid = np.arange(start, end + 1, c["step_minutes"], dtype=np.int64)
        if pressure is not None:
            pressure = np.interp(grid, minutes, np.where(np.isnan(pressure), atmos.pressure, pressure))
        minutes = grid
    elif pressure is None:
        raise ConfigurationError("clearsky needs --from/--to or --obs")
    ghi, direct, diffuse = clearsky_series(minutes, site, atmos, pressure)
    write_clearsky_csv(out, minutes, ghi, direct, diffuse)
    return inputs, [out]


def cmd_features(config):
    fc = config.feature_config()
    f = config["features"]
    out = _out(_need(config, "dataset", "dataset output"))
    syn = config["synthetic"]
    if syn["enabled"]:
        if getattr(config, "explicit_years", False):
            raise ConfigurationError(
                "--train-years/--test-years do not apply to --synthetic; the split follows "
                "synthetic.train_start/test_start")
        split = pipeline.synthetic_split(
            config.site(), fc, seed=syn["seed"],
            train_start=date.fromisoformat(syn["train_start"]), train_days=syn["train_days"],
            test_start=date.fromisoformat(syn["test_start"]), test_days=syn["test_days"],
            atmos=config.atmos())
        inputs = []
    else:
        obs = _existing(config, "obs", "observation CSV")
        cs_path = _existing(config, "clearsky", "clear-sky CSV")
        cs_minutes, cs_ghi, _, _ = read_clearsky_csv(cs_path)
        split = pipeline.split_from_records(read_csv(obs), cs_minutes, cs_ghi, fc,
                                            f["train_years"], f["test_years"])
        split.meta.update(site_id=config["site"]["id"])
        inputs = [obs, cs_path]
    save_dataset(out, split, {"config": config.to_dict()})
    log.info("dataset: %d train / %d test samples", len(split.train), len(split.test))
    return inputs, [out]


def cmd_train(config):
    dataset = _existing(config, "dataset", "dataset")
    ckpt = _out(_need(config, "checkpoint", "checkpoint output"))
    report_path = _out(_need(config, "train_report", "training report output"))
    split = load_dataset(dataset)
    tc = config.train_config()
    params, report = train(tc, split, checkpoint_path=ckpt)
    report.write_csv(report_path)
    log.info("trained %d epochs in %.1fs; final train MSE %.6g", tc.epochs, report.wall_time,
             report.train_mse[-1] if report.train_mse else float("nan"))
    return [dataset], [ckpt, report_path]


def _load_model(config):
    ckpt = _existing(config, "checkpoint", "checkpoint")
    dataset = _existing(config, "dataset", "dataset")
    params, dims = load_checkpoint(ckpt)
    split = load_dataset(dataset)
    horizons = config.train_config().horizons
    if len(horizons) != dims.output_dim:
        raise ConfigurationError(
            f"train.mode has {len(horizons)} horizons but the checkpoint has {dims.output_dim} outputs")
    return ckpt, dataset, params, split, horizons


def cmd_evaluate(config):
    ckpt, dataset, params, split, horizons = _load_model(config)
    table_path = _out(_need(config, "eval_table", "table output"))
    csv_path = _out(_need(config, "eval_csv", "CSV output"))
    test = split.test.select_horizons(horizons)
    site = config["site"]["id"]
    kt_max = split.meta.get("kt_max", config["features"]["kt_max"])
    report = evaluation.evaluate(params, test, split.norm, site_id=site,
                                 test_years=split.test_years, kt_max=kt_max)
    baselines = None
    if config["evaluate"]["baseline"]:
        baselines = [evaluation.persistence_baseline(test, split.norm, site_id=site,
                                                     test_years=split.test_years)]
    text, csv_text = evaluation.render_tables([report], baselines, unit=config["evaluate"]["unit"])
    table_path.write_text(text)
    csv_path.write_text(csv_text)
    sys.stdout.write(text)
    return [ckpt, dataset], [csv_path, table_path]


def cmd_predict(config):
    ckpt, dataset, params, split, horizons = _load_model(config)
    out = _out(_need(config, "predictions", "predictions output"))
    test = split.test.select_horizons(horizons)
    stats = split.norm.select(horizons)
    kt_max = split.meta.get("kt_max", config["features"]["kt_max"])
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("anchor_time", "horizon_h", "kt_forecast", "ghi_forecast", "kt_observed",
                    "ghi_clear"))
        for i in range(len(test)):
            kt, ghi = predict(params, test.inputs[i], stats, test.clearsky[i], kt_max)
            stamp = format_timestamp(from_epoch_minutes(test.anchors[i]))
            for k, h in enumerate(horizons):
                w.writerow((stamp, h, repr(float(kt[k])), repr(float(ghi[k])),
                            repr(float(test.kt_targets[i, k])), repr(float(test.clearsky[i, k]))))
    return [ckpt, dataset], [out]


def cmd_report(config):
    out_dir = Path(_need(config, "report_dir", "report output directory"))
    out_dir.mkdir(parents=True, exist_ok=True)
    inputs, outputs = [], []
    if config["paths"]["train_report"]:
        src = _existing(config, "train_report", "training report")
        rep = TrainReport.read_csv(src)
        dest = out_dir / "loss_curve.csv"
        with open(dest, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("epoch", "train_mse", "test_mse", "train_rmse", "test_rmse"))
            for e, (a, b) in enumerate(zip(rep.train_mse, rep.test_mse), start=1):
                w.writerow((e, repr(a), "" if np.isnan(b) else repr(b), repr(float(np.sqrt(a))),
                            "" if np.isnan(b) else repr(float(np.sqrt(b)))))
        inputs.append(src)
        outputs.append(dest)
    if config["paths"]["obs"]:
        obs = _existing(config, "obs", "observation CSV")
        minutes, values = records_to_arrays(read_csv(obs))
        dw = values[:, FIELD_NAMES.index("dw_solar")]
        if config["paths"]["clearsky"]:
            cs_path = _existing(config, "clearsky", "clear-sky CSV")
            from .features import align_clearsky
            cs_m, cs_g, _, _ = read_clearsky_csv(cs_path)
            cs = align_clearsky(minutes, cs_m, cs_g)
            inputs.append(cs_path)
        else:
            cs = clearsky_series(minutes, config.site(), config.atmos(),
                                 values[:, FIELD_NAMES.index("pressure")])[0]
        days, obs_mean, cs_mean = pipeline.daily_means(minutes, dw, cs)
        dest = out_dir / "daily_means.csv"
        with open(dest, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("date", "dw_solar_mean", "ghi_clear_mean"))
            for d, a, b in zip(days, obs_mean, cs_mean):
                w.writerow((str(np.datetime64(int(d), "D")), repr(float(a)), repr(float(b))))
        inputs.append(obs)
        outputs.append(dest)
    if not outputs:
        raise ConfigurationError("report needs --train-report and/or --obs")
    return inputs, outputs


COMMANDS = {
    "ingest": cmd_ingest, "clearsky": cmd_clearsky, "features": cmd_features,
    "train": cmd_train, "evaluate": cmd_evaluate, "predict": cmd_predict, "report": cmd_report,
}


def run(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = merged_config(args)
        inputs, outputs = COMMANDS[args.command](config)
        write_manifest(Path(str(outputs[0]) + ".manifest.json"), args.command, config,
                       inputs, outputs)
    except SolarcastError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"error: missing input: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: invalid value: {exc}", file=sys.stderr)
        return 3
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
