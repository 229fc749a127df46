//! The five subcommands.

use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use toroskew::inference::symmetry_test_with_fits;
use toroskew::mixture::{fit_mixture, mixture_symmetry_test};
use toroskew::skew::{find_modes_with, DEFAULT_MODE_GRID, DEFAULT_REFINE_TOL};
use toroskew::{
    find_modes, fit_mle, sample, select_model, shape_summary, Family, FamilyParams, FitOptions, MixtureModel,
    MixtureOptions, ModelScore, SkewModel, TorusPoint,
};

use crate::config::{Command, RunConfig};
use crate::dataset::{ingest_csv, Dataset};
use crate::error::CliError;
use crate::output::{draws_csv, fmt_num, points_csv, write_atomic};
use crate::report::{error_record, fit_record, render_table, selection_record, symmetry_record, to_jsonl, Fitted};

/// Families compared by `--compare`, each fitted symmetric and skewed.
pub const COMPARE_FAMILIES: [Family; 3] = [Family::Sine, Family::Cosine, Family::WrappedCauchy];

/// Significance level for the asterisk in the table.
pub const MARK_LEVEL: f64 = 0.01;

/// Run one command. Reports go to `stdout`; notes and, when the report is
/// on stdout, the human table go to `stderr`.
pub fn run(cfg: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    match cfg.command {
        Command::Sample => cmd_sample(cfg, stdout),
        Command::Grid => cmd_grid(cfg, stdout),
        Command::Moments => cmd_moments(cfg, stdout),
        Command::Fit => cmd_fit(cfg, stdout, stderr),
        Command::TestSymmetry => cmd_test_symmetry(cfg, stdout, stderr),
    }
}

fn io(e: std::io::Error) -> CliError {
    CliError::Data(format!("cannot write output: {e}"))
}

/// Write to `--out` atomically, or to stdout.
fn emit(cfg: &RunConfig, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match &cfg.out {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => stdout.write_all(text.as_bytes()).map_err(io),
    }
}

/// A fully specified model: from `--model-file`, or from the parameter flags.
pub fn model_spec(cfg: &RunConfig) -> Result<MixtureModel, CliError> {
    match &cfg.model_file {
        Some(p) => load_model_file(p),
        None => {
            if cfg.mixture > 1 {
                return Err(CliError::Usage("mixtures must be given with --model-file".into()));
            }
            Ok(MixtureModel::single(model_from_flags(cfg)?))
        }
    }
}

/// Accepts a fit record (its `fitted` model is used), a mixture
/// `{components, weights}` or a single `{mu, theta, lambda}` model.
pub fn load_model_file(path: &Path) -> Result<MixtureModel, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read model file {}: {e}", path.display())))?;
    let bad = |e: String| CliError::Usage(format!("model file {}: {e}", path.display()));
    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    let mut v: Value = serde_json::from_str(&text)
        .or_else(|_| serde_json::from_str(first))
        .map_err(|e| bad(e.to_string()))?;
    if let Some(f) = v.get("fitted") {
        v = f.clone();
    }
    if v.get("components").is_some() {
        serde_json::from_value(v).map_err(|e| bad(e.to_string()))
    } else {
        serde_json::from_value::<SkewModel>(v).map(MixtureModel::single).map_err(|e| bad(e.to_string()))
    }
}

fn model_from_flags(cfg: &RunConfig) -> Result<SkewModel, CliError> {
    let family = cfg.family;
    let d = cfg
        .dim
        .or(cfg.mu.as_ref().map(Vec::len))
        .or(cfg.lambda.as_ref().map(Vec::len))
        .or(match family {
            Family::Uniform => None,
            Family::WrappedCauchy => Some(2),
            _ => cfg.kappa.as_ref().map(Vec::len),
        })
        .unwrap_or(2);
    let theta = match family {
        Family::Uniform => FamilyParams::uniform(d)?,
        _ => {
            let kappa = cfg.kappa.clone().ok_or_else(|| CliError::Usage(format!("--kappa is required for the {family} family")))?;
            let n_dep = family.theta_len(d).saturating_sub(d);
            let dep = cfg.dep.clone().unwrap_or_else(|| vec![0.0; n_dep]);
            FamilyParams::new(family, d, kappa, dep)?
        }
    };
    let mu = TorusPoint::new(cfg.mu.clone().unwrap_or_else(|| vec![0.0; d]));
    let lambda = cfg.lambda.clone().unwrap_or_else(|| vec![0.0; d]);
    Ok(SkewModel::new(mu, theta, lambda)?)
}

/// `n` draws from a mixture: labels first, then each component's draws in
/// label order, all from one seeded stream.
pub fn sample_mixture<R: Rng>(mix: &MixtureModel, n: usize, rng: &mut R) -> Result<Vec<TorusPoint>, CliError> {
    if mix.n_components() == 1 {
        return Ok(sample(&mix.components()[0], n, rng)?);
    }
    let cum: Vec<f64> = mix
        .weights()
        .iter()
        .scan(0.0, |acc, w| {
            *acc += w;
            Some(*acc)
        })
        .collect();
    let labels: Vec<usize> = (0..n)
        .map(|_| {
            let u: f64 = rng.gen::<f64>() * cum[cum.len() - 1];
            cum.iter().position(|c| u < *c).unwrap_or(cum.len() - 1)
        })
        .collect();
    let mut per: Vec<std::vec::IntoIter<TorusPoint>> = Vec::with_capacity(mix.n_components());
    for (k, c) in mix.components().iter().enumerate() {
        let nk = labels.iter().filter(|l| **l == k).count();
        per.push(sample(c, nk, rng)?.into_iter());
    }
    Ok(labels.iter().map(|&k| per[k].next().expect("one draw per label")).collect())
}

fn cmd_sample(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<(), CliError> {
    let mix = model_spec(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let draws = sample_mixture(&mix, cfg.n, &mut rng)?;
    emit(cfg, &draws_csv(mix.dim(), &draws), stdout)
}

/// Path of the mode list written next to a grid file.
pub fn modes_path(out: &Path) -> PathBuf {
    out.with_extension("modes.csv")
}

fn cmd_grid(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<(), CliError> {
    let mix = model_spec(cfg)?;
    if mix.dim() != 2 {
        return Err(CliError::Usage(format!("grid needs a bivariate model, got dimension {}", mix.dim())));
    }
    let out = cfg.out.as_ref().ok_or_else(|| CliError::Usage("grid needs --out for the grid file".into()))?;
    let dens: Vec<_> = mix.components().iter().map(|c| c.density()).collect::<Result<_, _>>()?;
    let ln_w: Vec<f64> = mix.weights().iter().map(|w| w.ln()).collect();
    let log_density = |x: &[f64]| {
        let terms: Vec<f64> = dens.iter().zip(&ln_w).map(|(d, w)| w + d.log_density(x)).collect();
        let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if m == f64::NEG_INFINITY {
            m
        } else {
            m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
        }
    };
    let r = cfg.resolution;
    let h = 2.0 * PI / r as f64;
    let rows = (0..r).flat_map(|i| {
        let x1 = -PI + i as f64 * h;
        (0..r).map(move |j| (x1, -PI + j as f64 * h))
    });
    let rows: Vec<Vec<f64>> = rows.map(|(a, b)| vec![a, b, log_density(&[a, b]).exp()]).collect();
    write_atomic(out, points_csv(&["x1".into(), "x2".into(), "density".into()], rows).as_bytes())?;

    let modes = if mix.n_components() == 1 {
        find_modes(&mix.components()[0], DEFAULT_MODE_GRID, DEFAULT_REFINE_TOL)?
    } else {
        find_modes_with(log_density, DEFAULT_MODE_GRID, DEFAULT_REFINE_TOL)?
    };
    let mode_rows = modes.iter().map(|m| vec![m.location[0], m.location[1], m.density]);
    let mp = modes_path(out);
    write_atomic(&mp, points_csv(&["x1".into(), "x2".into(), "density".into()], mode_rows).as_bytes())?;
    writeln!(stdout, "wrote {} ({r}x{r} grid) and {} ({} modes)", out.display(), mp.display(), modes.len()).map_err(io)
}

fn cmd_moments(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<(), CliError> {
    let mix = model_spec(cfg)?;
    if mix.n_components() != 1 {
        return Err(CliError::Usage("moments needs a single-component model".into()));
    }
    let s = shape_summary(&mix.components()[0])?;
    let mut text = serde_json::to_string_pretty(&s).expect("summaries serialize");
    text.push('\n');
    emit(cfg, &text, stdout)
}

fn fit_options(cfg: &RunConfig) -> FitOptions {
    FitOptions { n_starts: cfg.starts, tol: cfg.tol, seed: cfg.seed, ..FitOptions::default() }
}

fn mixture_options(cfg: &RunConfig) -> MixtureOptions {
    MixtureOptions { n_init: cfg.n_init, tol: cfg.tol, n_starts: cfg.starts, seed: cfg.seed, ..MixtureOptions::default() }
}

fn load_data(cfg: &RunConfig) -> Result<Dataset, CliError> {
    let input = cfg.input.as_ref().ok_or_else(|| CliError::Usage("an input CSV is required".into()))?;
    ingest_csv(input, cfg.unit, cfg.columns.as_deref(), cfg.group_by.as_deref())
}

/// Data subsets to fit: one per label with `--group-by`, else the whole file.
fn subsets(data: &Dataset) -> Vec<(Option<String>, Vec<TorusPoint>)> {
    if data.labels.is_some() {
        data.groups().into_iter().map(|(g, p)| (Some(g), p)).collect()
    } else {
        vec![(None, data.angles.clone())]
    }
}

fn fit_one(cfg: &RunConfig, family: Family, skewed: bool, data: &[TorusPoint]) -> Result<Fitted, CliError> {
    if cfg.mixture == 1 {
        Ok(Fitted::from_fit(fit_mle(family, skewed, data, &fit_options(cfg))?, data.len()))
    } else {
        Ok(Fitted::from_mixture(fit_mixture(family, skewed, cfg.mixture, data, &mixture_options(cfg))?))
    }
}

/// Outcome of fitting one family both ways.
struct PairOutcome {
    records: Vec<Value>,
    scores: Vec<(String, ModelScore)>,
    failures: usize,
}

/// Fit `family` symmetric and skewed with the likelihood-ratio test between
/// them. If the joint run fails, each variant is fitted on its own so that
/// one failure does not hide the other.
fn fit_pair(cfg: &RunConfig, group: Option<&str>, family: Family, data: &[TorusPoint]) -> PairOutcome {
    let k = cfg.mixture;
    let joint = if k == 1 {
        symmetry_test_with_fits(family, data, &fit_options(cfg))
            .map(|(t, s, a)| (t, Fitted::from_fit(s, data.len()), Fitted::from_fit(a, data.len())))
    } else {
        mixture_symmetry_test(family, k, data, &mixture_options(cfg))
            .map(|(t, s, a)| (t, Fitted::from_mixture(s), Fitted::from_mixture(a)))
    };
    match joint {
        Ok((t, sym, skew)) => {
            let rejected = t.rejects(MARK_LEVEL);
            PairOutcome {
                records: vec![
                    fit_record(group, &sym, None),
                    fit_record(group, &skew, Some(rejected)),
                    symmetry_record(group, family, k, &t),
                ],
                scores: vec![(sym.code(), sym.score.clone()), (skew.code(), skew.score.clone())],
                failures: 0,
            }
        }
        Err(e) => {
            log::warn!("symmetry test for {family} failed ({e}); fitting variants separately");
            let mut out = PairOutcome { records: vec![], scores: vec![], failures: 0 };
            for skewed in [false, true] {
                match fit_one(cfg, family, skewed, data) {
                    Ok(f) => {
                        out.records.push(fit_record(group, &f, None));
                        out.scores.push((f.code(), f.score.clone()));
                    }
                    Err(e) => {
                        out.records.push(error_record(group, &family.code(skewed), &e.to_string()));
                        out.failures += 1;
                    }
                }
            }
            out
        }
    }
}

/// Write the JSON lines and the table. With `--out` the records go to the
/// file and the table to stdout; otherwise records to stdout, table to stderr.
fn emit_report(cfg: &RunConfig, records: &[Value], stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let jsonl = to_jsonl(records);
    let table = render_table(records);
    match &cfg.out {
        Some(p) => {
            write_atomic(p, jsonl.as_bytes())?;
            stdout.write_all(table.as_bytes()).map_err(io)
        }
        None => {
            stdout.write_all(jsonl.as_bytes()).map_err(io)?;
            stderr.write_all(table.as_bytes()).map_err(io)
        }
    }
}

fn cmd_fit(cfg: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let data = load_data(cfg)?;
    if cfg.compare && data.dim() != 2 {
        return Err(CliError::Usage(format!("--compare needs bivariate data, got {} columns", data.dim())));
    }
    let mut records = vec![];
    let (mut attempted, mut failed) = (0, 0);
    for (group, pts) in subsets(&data) {
        let g = group.as_deref();
        let mut scores = vec![];
        if cfg.compare {
            for family in COMPARE_FAMILIES {
                let out = fit_pair(cfg, g, family, &pts);
                attempted += 2;
                failed += out.failures;
                records.extend(out.records);
                scores.extend(out.scores);
            }
        } else {
            attempted += 1;
            match fit_one(cfg, cfg.family, cfg.skewed, &pts) {
                Ok(f) => {
                    records.push(fit_record(g, &f, None));
                    scores.push((f.code(), f.score.clone()));
                }
                Err(e) => {
                    records.push(error_record(g, &cfg.family.code(cfg.skewed), &e.to_string()));
                    failed += 1;
                }
            }
        }
        if scores.len() > 1 || (g.is_some() && !scores.is_empty()) {
            records.push(selection_record(g, &select_model(&scores)?));
        }
    }
    emit_report(cfg, &records, stdout, stderr)?;
    if failed == attempted {
        let why = records.iter().find_map(|r| r["error"].as_str()).unwrap_or("all fits failed");
        return Err(CliError::Numerical(format!("no model could be fitted: {why}")));
    }
    Ok(())
}

fn cmd_test_symmetry(cfg: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let data = load_data(cfg)?;
    let mut records = vec![];
    for (group, pts) in subsets(&data) {
        let out = fit_pair(cfg, group.as_deref(), cfg.family, &pts);
        if out.failures > 0 || !out.records.iter().any(|r| r["record"] == "symmetry_test") {
            let why = out.records.iter().find_map(|r| r["error"].as_str()).unwrap_or("fits did not complete");
            return Err(CliError::Numerical(format!("symmetry test failed: {why}")));
        }
        records.extend(out.records);
    }
    emit_report(cfg, &records, stdout, stderr)?;
    for r in records.iter().filter(|r| r["record"] == "symmetry_test") {
        let p = r["p_value"].as_f64().unwrap_or(f64::NAN);
        writeln!(stderr, "p-value {}", fmt_num(p)).map_err(io)?;
    }
    Ok(())
}
