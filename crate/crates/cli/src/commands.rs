//! The experiment recipes behind each subcommand. Every command resolves its
//! inputs, writes the run manifest, then writes artifacts; sweeps record
//! per-cell failures as status rows instead of aborting.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use isoprune_core::init::{init_network, critical_scale, InitScheme, InitSpec};
use isoprune_core::isometry::{spectrum, JacobianSpectrum};
use isoprune_core::meanfield::{meanfield_solve, MeanFieldSolution, DEFAULT_NODES};
use isoprune_core::network::{NetworkConfig, NetworkFile, NetworkParams, PruneMask};
use isoprune_core::pgm::write_mask_layers;
use isoprune_core::saliency::{
    connection_sensitivity, kappa_for_budget, select_topk, PruneReport, SaliencyMap,
};
use isoprune_core::trainer::{train, TrainResult};

use crate::config::{parse_net, Config};
use crate::dataio::{resolve_data, stage_rng, streams, DataBundle};
use crate::error::{CliError, Result};
use crate::manifest::{DataProvenance, RunManifest, MANIFEST_FILE};
use crate::output::{fmt_f64, write_csv, write_json};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Prune,
    Train,
    SweepGamma,
    CompareInit,
    Spectrum,
    Meanfield,
    Sculpt,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Prune => "prune",
            CommandKind::Train => "train",
            CommandKind::SweepGamma => "sweep-gamma",
            CommandKind::CompareInit => "compare-init",
            CommandKind::Spectrum => "spectrum",
            CommandKind::Meanfield => "meanfield",
            CommandKind::Sculpt => "sculpt",
        }
    }

    pub fn from_name(name: &str) -> Option<CommandKind> {
        match name {
            "prune" => Some(CommandKind::Prune),
            "train" => Some(CommandKind::Train),
            "sweep-gamma" => Some(CommandKind::SweepGamma),
            "compare-init" => Some(CommandKind::CompareInit),
            "spectrum" => Some(CommandKind::Spectrum),
            "meanfield" => Some(CommandKind::Meanfield),
            "sculpt" => Some(CommandKind::Sculpt),
            _ => None,
        }
    }
}

/// Runs one command into `out`, returning whether every cell succeeded.
pub fn run_command(kind: CommandKind, config: &Config, out: &Path) -> Result<bool> {
    fs::create_dir_all(out)?;
    match kind {
        CommandKind::Prune => cmd_prune(config, out),
        CommandKind::Train => cmd_train(config, out),
        CommandKind::SweepGamma => cmd_sweep_gamma(config, out),
        CommandKind::CompareInit => cmd_compare_init(config, out),
        CommandKind::Spectrum => cmd_spectrum(config, out),
        CommandKind::Meanfield => cmd_meanfield(config, out),
        CommandKind::Sculpt => cmd_sculpt(config, out),
    }
}

fn init_with_diagnostics(
    config: &Config,
    net: &NetworkConfig,
    seed: u64,
) -> Result<(NetworkParams, Option<MeanFieldSolution>)> {
    let spec = config.init_spec(seed)?;
    let diagnostics = match spec.scheme {
        InitScheme::Orthogonal => Some(critical_scale(net, config.sigma_b)?),
        _ => None,
    };
    let params = init_network(net, &spec)?;
    Ok((params, diagnostics))
}

fn prune_at_init(
    config: &Config,
    net: &NetworkConfig,
    params: &NetworkParams,
    data: &DataBundle,
) -> Result<(SaliencyMap, PruneReport)> {
    let saliency = connection_sensitivity(
        net,
        params,
        &data.train,
        config.loss_kind()?,
        config.saliency_batch,
    )?;
    let report = select_topk(&saliency, config.kappa)?;
    Ok((saliency, report))
}

fn mask_output_names(depth: usize) -> Vec<String> {
    (1..=depth).map(|l| format!("mask_layer{l}.pgm")).collect()
}

#[derive(Serialize)]
struct PruneSummary<'a> {
    loss: &'a str,
    kappa_bar: f64,
    total_weights: usize,
    retained_weights: usize,
    disconnected: bool,
    per_layer_pruned: &'a [f64],
}

#[derive(Serialize)]
struct LayerSaliency {
    layer: usize,
    rows: usize,
    cols: usize,
    mean: f64,
    max: f64,
    sum: f64,
}

#[derive(Serialize)]
struct SaliencySummary<'a> {
    loss: &'a str,
    total_weights: usize,
    layers: Vec<LayerSaliency>,
}

fn saliency_summary<'a>(loss: &'a str, saliency: &SaliencyMap) -> SaliencySummary<'a> {
    let layers = saliency
        .scores
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let sum: f64 = m.data().iter().sum();
            let max = m.data().iter().copied().fold(0.0f64, f64::max);
            LayerSaliency {
                layer: i + 1,
                rows: m.rows(),
                cols: m.cols(),
                mean: sum / m.data().len() as f64,
                max,
                sum,
            }
        })
        .collect();
    SaliencySummary {
        loss,
        total_weights: saliency.total_weights(),
        layers,
    }
}

fn write_prune_artifacts(
    out: &Path,
    config: &Config,
    saliency: &SaliencyMap,
    report: &PruneReport,
) -> Result<()> {
    write_json(
        &out.join("prune_report.json"),
        &PruneSummary {
            loss: &config.loss,
            kappa_bar: report.kappa_bar,
            total_weights: report.total_weights,
            retained_weights: report.retained_weights,
            disconnected: report.disconnected,
            per_layer_pruned: &report.per_layer_pruned,
        },
    )?;
    write_json(
        &out.join("saliency_summary.json"),
        &saliency_summary(&config.loss, saliency),
    )?;
    let rows: Vec<Vec<String>> = report
        .mask
        .layers
        .iter()
        .zip(&report.per_layer_pruned)
        .enumerate()
        .map(|(i, (m, frac))| {
            let total = m.data().len();
            let retained = m.data().iter().filter(|&&x| x == 1.0).count();
            vec![
                (i + 1).to_string(),
                m.rows().to_string(),
                m.cols().to_string(),
                total.to_string(),
                retained.to_string(),
                fmt_f64(*frac),
            ]
        })
        .collect();
    write_csv(
        &out.join("sparsity.csv"),
        &["layer", "rows", "cols", "total", "retained", "pruned_fraction"],
        &rows,
    )?;
    write_mask_layers(out, "mask", &report.mask)?;
    Ok(())
}

fn cmd_prune(config: &Config, out: &Path) -> Result<bool> {
    let net = config.network()?;
    let data = resolve_data(config, net.input_dim(), net.output_dim())?;
    let init_seed = stage_rng(config.seed, streams::INIT).seed();
    let (params, diagnostics) = init_with_diagnostics(config, &net, init_seed)?;

    let mut outputs = vec![
        "prune_report.json".to_string(),
        "saliency_summary.json".to_string(),
        "sparsity.csv".to_string(),
    ];
    outputs.extend(mask_output_names(net.depth()));
    RunManifest::new(
        CommandKind::Prune.name(),
        config,
        data.provenance.clone(),
        diagnostics,
        outputs,
    )
    .save(out)?;

    let (saliency, report) = prune_at_init(config, &net, &params, &data)?;
    write_prune_artifacts(out, config, &saliency, &report)?;
    println!(
        "pruned {} of {} weights (kappa={}), disconnected={}",
        report.total_weights - report.retained_weights,
        report.total_weights,
        fmt_f64(report.kappa_bar),
        report.disconnected
    );
    Ok(true)
}

#[derive(Serialize)]
struct TrainSummary {
    best_error_pct: f64,
    final_error_pct: f64,
    final_loss: f64,
    iterations: usize,
    pruned: bool,
    reinitialized: bool,
    disconnected: Option<bool>,
}

fn write_train_artifacts(
    out: &Path,
    config: &Config,
    net: &NetworkConfig,
    result: &TrainResult,
    mask: Option<&PruneMask>,
    disconnected: Option<bool>,
) -> Result<()> {
    write_json(
        &out.join("result.json"),
        &TrainSummary {
            best_error_pct: result.best_error_pct,
            final_error_pct: result.final_error_pct,
            final_loss: result.final_loss,
            iterations: config.max_iters,
            pruned: mask.is_some(),
            reinitialized: config.reinit,
            disconnected,
        },
    )?;
    let rows: Vec<Vec<String>> = result
        .error_curve
        .iter()
        .map(|&(it, err)| vec![it.to_string(), fmt_f64(err)])
        .collect();
    write_csv(&out.join("curve.csv"), &["iteration", "error_pct"], &rows)?;
    let mut file = NetworkFile::new(net.clone(), result.params.clone(), mask.cloned());
    file.meta.insert("trained_by".to_string(), "isoprune train".to_string());
    file.meta.insert("seed".to_string(), config.seed.to_string());
    isoprune_core::network::save_network(&out.join("network.json"), &file)?;
    Ok(())
}

fn cmd_train(config: &Config, out: &Path) -> Result<bool> {
    let net = config.network()?;
    let data = resolve_data(config, net.input_dim(), net.output_dim())?;
    let init_seed = stage_rng(config.seed, streams::INIT).seed();
    let (params, diagnostics) = init_with_diagnostics(config, &net, init_seed)?;
    let pruned = config.kappa > 0.0;

    let mut outputs = vec![
        "result.json".to_string(),
        "curve.csv".to_string(),
        "network.json".to_string(),
    ];
    if pruned {
        outputs.extend([
            "prune_report.json".to_string(),
            "saliency_summary.json".to_string(),
            "sparsity.csv".to_string(),
        ]);
        outputs.extend(mask_output_names(net.depth()));
    }
    RunManifest::new(
        CommandKind::Train.name(),
        config,
        data.provenance.clone(),
        diagnostics,
        outputs,
    )
    .save(out)?;

    let pruned_state = if pruned {
        let (saliency, report) = prune_at_init(config, &net, &params, &data)?;
        write_prune_artifacts(out, config, &saliency, &report)?;
        Some(report)
    } else {
        None
    };
    let mask = pruned_state.as_ref().map(|r| &r.mask);
    let start_params = if config.reinit {
        let mut spec = InitSpec::new(
            config.reinit_scheme()?,
            stage_rng(config.seed, streams::REINIT).seed(),
        );
        spec.sigma_b = config.sigma_b;
        init_network(&net, &spec)?
    } else {
        params
    };
    let result = train(
        &net,
        start_params,
        mask,
        &data.train,
        &data.eval,
        &config.train_config(),
        stage_rng(config.seed, streams::TRAIN),
    )?;
    write_train_artifacts(
        out,
        config,
        &net,
        &result,
        mask,
        pruned_state.as_ref().map(|r| r.disconnected),
    )?;
    println!(
        "trained {} iterations: best error {}%, final error {}%",
        config.max_iters,
        fmt_f64(result.best_error_pct),
        fmt_f64(result.final_error_pct)
    );
    Ok(true)
}

/// One sweep or comparison cell: everything measured for a single
/// configuration, or the error that stopped it.
struct CellOutcome {
    error_pct: Option<f64>,
    cn_dense: Option<f64>,
    cn_sparse: Option<f64>,
    disconnected: Option<bool>,
    status: String,
}

impl CellOutcome {
    fn from_result(result: std::result::Result<CellOutcome, CliError>) -> CellOutcome {
        result.unwrap_or_else(|e| CellOutcome {
            error_pct: None,
            cn_dense: None,
            cn_sparse: None,
            disconnected: None,
            status: format!("error: {e}"),
        })
    }

    fn ok(&self) -> bool {
        self.status == "ok"
    }

    fn opt_fields(&self) -> [String; 4] {
        [
            crate::output::fmt_opt(self.error_pct),
            crate::output::fmt_opt(self.cn_dense),
            crate::output::fmt_opt(self.cn_sparse),
            self.disconnected.map(|d| d.to_string()).unwrap_or_default(),
        ]
    }
}

/// Shared prune-measure-train cell used by the sweep and comparison grids.
///
/// Measures dense and sparse condition numbers at the original
/// initialization, then trains from either that initialization or a fresh
/// one (`reinit_spec`).
fn run_cell(
    config: &Config,
    net: &NetworkConfig,
    init_spec: &InitSpec,
    reinit_spec: Option<&InitSpec>,
    data: &DataBundle,
    cell_seed: u64,
) -> Result<CellOutcome> {
    let params = init_network(net, init_spec)?;
    let (_, report) = prune_at_init(config, net, &params, data)?;
    let dense = spectrum(net, &params, None, &data.eval.inputs, config.spectrum_examples)?;
    let sparse = spectrum(
        net,
        &params,
        Some(&report.mask),
        &data.eval.inputs,
        config.spectrum_examples,
    )?;
    let start = match reinit_spec {
        Some(spec) => init_network(net, spec)?,
        None => params,
    };
    let result = train(
        net,
        start,
        Some(&report.mask),
        &data.train,
        &data.eval,
        &config.train_config(),
        stage_rng(cell_seed, streams::TRAIN),
    )?;
    Ok(CellOutcome {
        error_pct: Some(result.best_error_pct),
        cn_dense: Some(dense.condition_number),
        cn_sparse: Some(sparse.condition_number),
        disconnected: Some(report.disconnected),
        status: "ok".to_string(),
    })
}

fn cmd_sweep_gamma(config: &Config, out: &Path) -> Result<bool> {
    let base_widths = parse_net(&config.net)?;
    let input_dim = base_widths[0];
    let n_classes = *base_widths.last().unwrap();
    let data = resolve_data(config, input_dim, n_classes)?;
    let act = config.nonlinearity()?;

    RunManifest::new(
        CommandKind::SweepGamma.name(),
        config,
        data.provenance.clone(),
        None,
        vec!["sweep.csv".to_string()],
    )
    .save(out)?;

    let mut rows = Vec::new();
    let mut all_ok = true;
    for (ki, &k) in config.depths.iter().enumerate() {
        for (gi, &gamma) in config.gammas.iter().enumerate() {
            let cell_index = (ki * config.gammas.len() + gi) as u64;
            let cell_seed = stage_rng(config.seed, streams::CELL + cell_index).seed();
            let outcome = CellOutcome::from_result((|| {
                let net = NetworkConfig::new(
                    config.grid_widths(k, input_dim, n_classes),
                    act,
                )
                .map_err(CliError::Core)?;
                let mut init_spec = InitSpec::new(
                    InitScheme::ScaledGaussian { gamma },
                    stage_rng(cell_seed, streams::INIT).seed(),
                );
                init_spec.sigma_b = config.sigma_b;
                let mut reinit_spec = InitSpec::new(
                    config.reinit_scheme()?,
                    stage_rng(cell_seed, streams::REINIT).seed(),
                );
                reinit_spec.sigma_b = config.sigma_b;
                run_cell(config, &net, &init_spec, Some(&reinit_spec), &data, cell_seed)
            })());
            all_ok &= outcome.ok();
            let [error_pct, cn_dense, cn_sparse, disconnected] = outcome.opt_fields();
            rows.push(vec![
                act.name().to_string(),
                k.to_string(),
                fmt_f64(gamma),
                cell_seed.to_string(),
                outcome.status,
                error_pct,
                cn_dense,
                cn_sparse,
                disconnected,
            ]);
        }
    }
    write_csv(
        &out.join("sweep.csv"),
        &[
            "nonlinearity",
            "depth",
            "gamma",
            "seed",
            "status",
            "error_pct",
            "cn_dense",
            "cn_sparse",
            "disconnected",
        ],
        &rows,
    )?;
    println!(
        "sweep: {} cells ({} depths x {} gammas), all_ok={all_ok}",
        rows.len(),
        config.depths.len(),
        config.gammas.len()
    );
    Ok(all_ok)
}

const COMPARE_SCHEMES: [&str; 4] = ["vs_lecun", "vs_glorot", "vs_he", "orthogonal"];
const COMPARE_LOSSES: [&str; 2] = ["gt", "uniform"];

fn cmd_compare_init(config: &Config, out: &Path) -> Result<bool> {
    let net = config.network()?;
    let data = resolve_data(config, net.input_dim(), net.output_dim())?;

    RunManifest::new(
        CommandKind::CompareInit.name(),
        config,
        data.provenance.clone(),
        None,
        vec!["compare.csv".to_string()],
    )
    .save(out)?;

    let mut rows = Vec::new();
    let mut all_ok = true;
    let mut cell_index = 0u64;
    for scheme_name in COMPARE_SCHEMES {
        for loss_name in COMPARE_LOSSES {
            for _ in 0..config.n_seeds {
                let cell_seed = stage_rng(config.seed, streams::CELL + cell_index).seed();
                cell_index += 1;
                let outcome = CellOutcome::from_result((|| {
                    let mut cell_config = config.clone();
                    cell_config.init = scheme_name.to_string();
                    cell_config.loss = loss_name.to_string();
                    let mut init_spec = cell_config
                        .init_spec(stage_rng(cell_seed, streams::INIT).seed())?;
                    init_spec.sigma_b = config.sigma_b;
                    run_cell(&cell_config, &net, &init_spec, None, &data, cell_seed)
                })());
                all_ok &= outcome.ok();
                let [error_pct, cn_dense, cn_sparse, disconnected] = outcome.opt_fields();
                rows.push(vec![
                    scheme_name.to_string(),
                    loss_name.to_string(),
                    cell_seed.to_string(),
                    outcome.status,
                    cn_dense,
                    cn_sparse,
                    error_pct,
                    disconnected,
                ]);
            }
        }
    }
    write_csv(
        &out.join("compare.csv"),
        &[
            "scheme",
            "loss",
            "seed",
            "status",
            "cn_dense",
            "cn_sparse",
            "error_pct",
            "disconnected",
        ],
        &rows,
    )?;
    println!("compare-init: {} rows, all_ok={all_ok}", rows.len());
    Ok(all_ok)
}

fn spectrum_row(config: &Config, net: &NetworkConfig, phase: &str, s: &JacobianSpectrum) -> Vec<String> {
    let gamma = if config.init == "scaled_gaussian" {
        fmt_f64(config.gamma)
    } else {
        String::new()
    };
    vec![
        config.init.clone(),
        gamma,
        net.depth().to_string(),
        net.nonlinearity.name().to_string(),
        phase.to_string(),
        fmt_f64(s.mean),
        fmt_f64(s.std),
        fmt_f64(s.condition_number),
        s.n_examples.to_string(),
        config.seed.to_string(),
    ]
}

fn cmd_spectrum(config: &Config, out: &Path) -> Result<bool> {
    let net = config.network()?;
    let data = resolve_data(config, net.input_dim(), net.output_dim())?;
    let init_seed = stage_rng(config.seed, streams::INIT).seed();
    let (params, diagnostics) = init_with_diagnostics(config, &net, init_seed)?;

    RunManifest::new(
        CommandKind::Spectrum.name(),
        config,
        data.provenance.clone(),
        diagnostics,
        vec!["spectrum.csv".to_string()],
    )
    .save(out)?;

    let mut rows = Vec::new();
    let dense = spectrum(&net, &params, None, &data.eval.inputs, config.spectrum_examples)?;
    rows.push(spectrum_row(config, &net, "dense", &dense));
    if config.kappa > 0.0 {
        let (_, report) = prune_at_init(config, &net, &params, &data)?;
        let sparse = spectrum(
            &net,
            &params,
            Some(&report.mask),
            &data.eval.inputs,
            config.spectrum_examples,
        )?;
        rows.push(spectrum_row(config, &net, "sparse", &sparse));
    }
    write_csv(
        &out.join("spectrum.csv"),
        &[
            "scheme",
            "gamma",
            "depth",
            "nonlinearity",
            "phase",
            "mean",
            "std",
            "cn",
            "n_examples",
            "seed",
        ],
        &rows,
    )?;
    println!("spectrum: cn_dense={}", fmt_f64(dense.condition_number));
    Ok(true)
}

fn cmd_meanfield(config: &Config, out: &Path) -> Result<bool> {
    let solution = meanfield_solve(config.nonlinearity()?, config.sigma_b, DEFAULT_NODES)?;
    RunManifest::new(
        CommandKind::Meanfield.name(),
        config,
        DataProvenance::none(),
        Some(solution.clone()),
        vec!["meanfield.json".to_string()],
    )
    .save(out)?;
    write_json(&out.join("meanfield.json"), &solution)?;
    println!(
        "meanfield {} sigma_b={}: sigma_w={} q*={}",
        config.act,
        fmt_f64(config.sigma_b),
        fmt_f64(solution.sigma_w),
        fmt_f64(solution.q_star)
    );
    Ok(true)
}

#[derive(Serialize)]
struct SculptSummary<'a> {
    base_net: &'a str,
    big_net: &'a str,
    base_weights: usize,
    big_weights: usize,
    kappa_bar: f64,
    retained_weights: usize,
    disconnected: bool,
    best_error_pct: f64,
    final_error_pct: f64,
}

fn cmd_sculpt(config: &Config, out: &Path) -> Result<bool> {
    let base = config.network()?;
    let big = config.big_network()?;
    if base.input_dim() != big.input_dim() || base.output_dim() != big.output_dim() {
        return Err(CliError::Flag {
            field: "big_net",
            detail: "base and big networks must share input and output widths".to_string(),
        });
    }
    let weight_count = |net: &NetworkConfig| -> usize {
        (1..=net.depth())
            .map(|l| {
                let (fan_in, fan_out) = net.layer_dims(l);
                fan_in * fan_out
            })
            .sum()
    };
    let base_weights = weight_count(&base);
    let kappa = kappa_for_budget(&big, base_weights)?;
    let mut cell_config = config.clone();
    cell_config.kappa = kappa;

    let data = resolve_data(config, big.input_dim(), big.output_dim())?;
    let init_seed = stage_rng(config.seed, streams::INIT).seed();
    let (params, diagnostics) = init_with_diagnostics(config, &big, init_seed)?;

    let mut outputs = vec![
        "sculpt_report.json".to_string(),
        "curve.csv".to_string(),
    ];
    outputs.extend(mask_output_names(big.depth()));
    RunManifest::new(
        CommandKind::Sculpt.name(),
        config,
        data.provenance.clone(),
        diagnostics,
        outputs,
    )
    .save(out)?;

    let (_, report) = prune_at_init(&cell_config, &big, &params, &data)?;
    write_mask_layers(out, "mask", &report.mask)?;
    let result = train(
        &big,
        params,
        Some(&report.mask),
        &data.train,
        &data.eval,
        &config.train_config(),
        stage_rng(config.seed, streams::TRAIN),
    )?;
    write_json(
        &out.join("sculpt_report.json"),
        &SculptSummary {
            base_net: &config.net,
            big_net: config.big_net.as_deref().unwrap_or_default(),
            base_weights,
            big_weights: weight_count(&big),
            kappa_bar: kappa,
            retained_weights: report.retained_weights,
            disconnected: report.disconnected,
            best_error_pct: result.best_error_pct,
            final_error_pct: result.final_error_pct,
        },
    )?;
    let rows: Vec<Vec<String>> = result
        .error_curve
        .iter()
        .map(|&(it, err)| vec![it.to_string(), fmt_f64(err)])
        .collect();
    write_csv(&out.join("curve.csv"), &["iteration", "error_pct"], &rows)?;
    println!(
        "sculpt: kappa={} retained {} of {} weights, best error {}%",
        fmt_f64(kappa),
        report.retained_weights,
        weight_count(&big),
        fmt_f64(result.best_error_pct)
    );
    Ok(true)
}

/// Re-executes a manifest into a fresh directory and byte-compares every
/// output file, printing one line per file.
pub fn cmd_report(manifest_path: &Path, out: Option<&Path>) -> Result<bool> {
    let original = RunManifest::load(manifest_path)?;
    let orig_dir = manifest_path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."));
    let replay_dir = match out {
        Some(dir) => dir.to_path_buf(),
        None => {
            let name = orig_dir
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| "run".to_string());
            orig_dir.with_file_name(format!("{name}-replay"))
        }
    };
    let kind = CommandKind::from_name(&original.command).ok_or_else(|| CliError::Manifest {
        path: manifest_path.to_path_buf(),
        detail: format!("unknown command {:?}", original.command),
    })?;
    original.config.validate()?;
    run_command(kind, &original.config, &replay_dir)?;

    let mut all_match = true;
    for name in &original.outputs {
        let a = fs::read(orig_dir.join(name));
        let b = fs::read(replay_dir.join(name));
        let same = matches!((&a, &b), (Ok(x), Ok(y)) if x == y);
        all_match &= same;
        println!("{} {name}", if same { "ok      " } else { "MISMATCH" });
    }
    let replayed = RunManifest::load(&replay_dir.join(MANIFEST_FILE))?;
    let manifest_same = original.matches_ignoring_timestamp(&replayed);
    all_match &= manifest_same;
    println!(
        "{} {MANIFEST_FILE} (ignoring timestamp)",
        if manifest_same { "ok      " } else { "MISMATCH" }
    );
    Ok(all_match)
}
