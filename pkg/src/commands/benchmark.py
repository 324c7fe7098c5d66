# benchmark.py
from commands.common import prepare_output
from commands.simulate import sim_config
from logic.Benchmark import (
    SIMULATION_HIDDEN,
    SIMULATION_TRAIN,
    MethodConfig,
    Study,
    run_benchmark,
    run_study,
)
from logic.RunConfig import RunConfig, parse_cells, parse_floats, parse_ints
from logic.Simulator import (
    GridMode,
    GridSpec,
    Scenario,
    experiment_grid,
    reference_grid,
)
from ui.ReportView import ReportView


def grid_spec(cfg: RunConfig) -> GridSpec:
    if cfg.reference_grid:
        return reference_grid(Scenario(cfg.scenario), cfg.seed)
    return GridSpec(
        snr=parse_floats(cfg.grid_snr or ""),
        noise=parse_ints(cfg.grid_noise or ""),
        cells=parse_cells(cfg.grid_cells or ""),
        scenario=Scenario(cfg.scenario),
        base_n=cfg.n,
        base_p=cfg.p,
        base_snr=cfg.snr,
        mode=GridMode(cfg.grid_mode),
        seed=cfg.seed,
        calib_sample_size=cfg.calib_sample_size,
    )


def inner_method(cfg: RunConfig) -> MethodConfig:
    return MethodConfig(
        name="inner",
        hidden=cfg.hidden(SIMULATION_HIDDEN),
        dropout_rates=cfg.dropout_rates(),
        scheme=cfg.init_scheme(),
        train=cfg.train_config(SIMULATION_TRAIN),
    )


def run(cfg: RunConfig) -> str:
    """
    シミュレーションのベンチマーク (INNER とロジスティックモデル) か、
    --study 指定時は感度分析を実行する。
    """
    out_dir = prepare_output(cfg)
    inner = inner_method(cfg)

    if cfg.study is not None:
        report = run_study(
            Study(cfg.study),
            sim_config(cfg),
            inner,
            reps=cfg.reps,
            seed=cfg.seed,
            n_jobs=cfg.threads,
        )
        ReportView(report.to_dict(), "study").render(out_dir)
        spread = "NA" if report.spread is None else f"{report.spread:.4f}"
        return (
            f"benchmark: {report.study.value} study, "
            f"{len(report.cell.methods)} settings, spread {spread}"
        )

    spec = grid_spec(cfg)
    configs = experiment_grid(spec) if not spec.is_empty else [sim_config(cfg)]
    logistic = MethodConfig("logistic", (), train=inner.train)
    report = run_benchmark(
        configs, [inner, logistic], cfg.reps, cfg.seed, cfg.threads
    )
    ReportView(report.to_dict(), "benchmark").render(out_dir)
    failures = sum(len(c.failures) for c in report.cells)
    return (
        f"benchmark: {len(report.cells)} cells x {cfg.reps} reps, "
        f"{failures} failures"
    )
