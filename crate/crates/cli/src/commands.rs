//! Subcommand implementations. Each returns the text to print on stdout.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use ulacov::harness::{
    compare_modes, rate_sweep, run_experiment, write_report, CompareConfig, Design, ExperimentConfig,
    RateSweepConfig,
};
use ulacov::oracles::{ar1_lambda_max, Ar1Spec, AR1_MAX_DIM};
use ulacov::planner::{plan, PlanRequest};
use ulacov::potentials::{Constants, PotentialSpec};
use ulacov::sampler::Mode;
use ulacov::{Error, Result};

use crate::config::RunConfig;

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

pub struct PlanArgs {
    pub mode: Mode,
    pub alpha: f64,
    pub beta: f64,
    pub dim: usize,
    pub eps: f64,
    pub delta: f64,
    pub eta: Option<f64>,
    pub relax: Option<f64>,
}

pub fn cmd_plan(a: &PlanArgs) -> Result<String> {
    let mut req = PlanRequest::new(Constants::new(a.alpha, a.beta, a.dim)?, a.eps, a.delta);
    if let Some(eta) = a.eta {
        req = req.with_eta(eta);
    }
    let mut p = plan(a.mode, &req)?;
    if let Some(g) = a.relax {
        p = p.relaxed(g)?;
    }
    for w in &p.warnings {
        log::warn!("{w}");
    }
    to_json(&p)
}

/// Flag overrides shared by the config-driven subcommands.
#[derive(Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub replications: Option<u64>,
    pub out_dir: Option<PathBuf>,
}

impl Overrides {
    fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(r) = self.replications {
            cfg.replications = r;
        }
        cfg.validate()
    }
}

fn experiment_config(cfg: &RunConfig, relax: Option<f64>) -> Result<ExperimentConfig> {
    let potential = PotentialSpec::try_from(cfg.potential.clone())?;
    let mut exp = match (&cfg.plan, &cfg.chain) {
        (Some(section), None) => {
            let mut req = PlanRequest::new(potential.certified_constants(), section.epsilon, section.delta);
            if let Some(eta) = section.eta {
                req = req.with_eta(eta);
            }
            let mut p = plan(section.mode, &req)?;
            for w in &p.warnings {
                log::warn!("{w}");
            }
            // the flag replaces the configured factor
            if let Some(g) = relax.or(section.relax) {
                p = p.relaxed(g)?;
            }
            ExperimentConfig::from_plan(&p, cfg.replications, cfg.seed)
        }
        (None, Some(chain)) => {
            if relax.is_some() {
                return Err(Error::Config("--relax needs a `plan` section".into()));
            }
            let mut design = Design::new(chain.mode, chain.eta, chain.burn_in, chain.count);
            design.init = chain.init.clone();
            let exp = ExperimentConfig::new(design, cfg.replications, cfg.seed);
            match chain.epsilon {
                Some(e) => exp.with_epsilon(e),
                None => exp,
            }
        }
        _ => return Err(Error::Config("config needs a `plan` or a `chain` section".into())),
    };
    exp = exp
        .with_cap(cfg.max_gradient_evals)
        .with_wall_time(cfg.record_wall_time);
    if let Some(r) = &cfg.reference_covariance {
        exp = exp.with_reference(r.clone());
    }
    Ok(exp)
}

pub fn cmd_run(config: &Path, relax: Option<f64>, o: &Overrides) -> Result<String> {
    let mut cfg = RunConfig::load(config)?;
    o.apply(&mut cfg)?;
    let potential = PotentialSpec::try_from(cfg.potential.clone())?;
    let exp = experiment_config(&cfg, relax)?;
    let report = run_experiment(&potential, &exp)?;
    let dir = cfg.output_dir(o.out_dir.as_deref());
    write_report(
        &report,
        Some(&dir.join(&cfg.outputs.csv)),
        Some(&dir.join(&cfg.outputs.summary)),
    )?;
    to_json(&report.summary)
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), text)?;
    Ok(())
}

pub fn cmd_rate_sweep(config: &Path, o: &Overrides) -> Result<String> {
    let mut cfg = RunConfig::load(config)?;
    o.apply(&mut cfg)?;
    let section = cfg
        .sweep
        .clone()
        .ok_or_else(|| Error::Config("rate-sweep needs a `sweep` section".into()))?;
    let potential = PotentialSpec::try_from(cfg.potential.clone())?;
    let report = rate_sweep(
        &potential,
        &RateSweepConfig {
            eta: section.eta,
            burn_in: section.burn_in,
            n_grid: section.n_grid,
            replications: cfg.replications,
            base_seed: cfg.seed,
            max_gradient_evals: cfg.max_gradient_evals,
        },
    )?;
    let mut table = String::from(
        "n,median_err_var,median_second_moment_dev,median_mean_term,rate_scale,empirical_constant\n",
    );
    for r in &report.rows {
        table.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.n, r.median_err_var, r.median_second_moment_dev, r.median_mean_term, r.rate_scale, r.empirical_constant
        ));
    }
    let json = to_json(&report)?;
    let dir = cfg.output_dir(o.out_dir.as_deref());
    write_text(&dir, "rate_sweep.csv", &table)?;
    write_text(&dir, "rate_sweep.json", &(json.clone() + "\n"))?;
    Ok(json)
}

pub fn cmd_compare(config: &Path, gamma: Option<f64>, o: &Overrides) -> Result<String> {
    let mut cfg = RunConfig::load(config)?;
    o.apply(&mut cfg)?;
    let section = cfg
        .compare
        .clone()
        .ok_or_else(|| Error::Config("compare needs a `compare` section".into()))?;
    let potential = PotentialSpec::try_from(cfg.potential.clone())?;
    let report = compare_modes(
        &potential,
        &CompareConfig {
            epsilon: section.epsilon,
            delta: section.delta,
            gamma: gamma.unwrap_or(section.gamma),
            replications: cfg.replications,
            base_seed: cfg.seed,
            max_gradient_evals: cfg.max_gradient_evals,
        },
        cfg.reference_covariance.as_ref(),
    )?;
    let json = to_json(&report)?;
    write_text(&cfg.output_dir(o.out_dir.as_deref()), "compare.json", &(json.clone() + "\n"))?;
    Ok(json)
}

/// Block lengths `1, 2, 4, …` up to `nmax`, ending at `nmax` itself.
pub fn ar1_grid(nmax: usize) -> Vec<usize> {
    let mut grid: Vec<usize> = std::iter::successors(Some(1usize), |n| n.checked_mul(2))
        .take_while(|&n| n <= nmax)
        .collect();
    if grid.last() != Some(&nmax) {
        grid.push(nmax);
    }
    grid
}

pub fn cmd_ar1(alpha: f64, eta: f64, nmax: usize) -> Result<String> {
    if nmax == 0 || nmax > AR1_MAX_DIM {
        return Err(Error::Config(format!("nmax must lie in [1, {AR1_MAX_DIM}], got {nmax}")));
    }
    // validates alpha and eta before any eigensolve
    Ar1Spec::from_ula(alpha, eta, 1).map_err(|e| Error::Config(e.to_string()))?;
    let limit = 2.0 / (alpha * alpha * eta);
    let mut out = String::from("n,lambda_max,limit\n");
    for n in ar1_grid(nmax) {
        let lambda = ar1_lambda_max(&Ar1Spec::from_ula(alpha, eta, n)?)?;
        out.push_str(&format!("{n},{lambda},{limit}\n"));
    }
    Ok(out)
}
