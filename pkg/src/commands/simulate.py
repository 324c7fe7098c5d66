# simulate.py
import os

from commands.common import prepare_output
from logic.RunConfig import RunConfig
from logic.Simulator import Scenario, SimConfig, generate, save_dataset


def sim_config(cfg: RunConfig) -> SimConfig:
    return SimConfig(
        n_samples=cfg.n,
        p_signal=cfg.p,
        p_noise=cfg.noise,
        snr_target=cfg.snr,
        scenario=Scenario(cfg.scenario),
        seed=cfg.seed,
        calib_sample_size=cfg.calib_sample_size,
    )


def run(cfg: RunConfig) -> str:
    """dataset.csv と truth.json を書き出す。"""
    out_dir = prepare_output(cfg)
    dataset = generate(sim_config(cfg))
    csv_path = os.path.join(out_dir, "dataset.csv")
    save_dataset(dataset, csv_path, os.path.join(out_dir, "truth.json"))
    return (
        f"simulate: {len(dataset.cohort)} rows, "
        f"snr {dataset.achieved_snr:.3f} -> {csv_path}"
    )
