//! Fit report: one JSON record per line, and a text table built from the
//! same data.
//!
//! Record kinds (field `record`):
//!
//! * `fit`: `model` code, `family`, `skewed`, `k_components`, `n`,
//!   `components` (each with `mu`, then `kappa` and `r` or `dep` for
//!   non-uniform bases, `lambda` when skewed, `weight` when `K > 1`),
//!   `log_lik`, `k_params`, `aic`, `bic`, `converged`, optional `boundary`
//!   and `std_errors`, `symmetry_rejected` (at 0.01, when tested), and
//!   `fitted` (the model in the `--model-file` format).
//! * `fit_error`: `model`, `error`.
//! * `symmetry_test`: `family`, `k_components`, `statistic`, `df`, `p_value`,
//!   `reject_at`, `log_lik_symmetric`, `log_lik_skewed`.
//! * `selection`: `best_aic`, `best_bic`, `disagree`, `by_aic`, `by_bic`.
//!
//! Every record carries `group` (null without `--group-by`).

use serde_json::{json, Map, Value};
use toroskew::mixture::{mixture_param_count, MixtureFit};
use toroskew::{Family, FitResult, MixtureModel, ModelScore, Ranking, SkewModel, SymmetryTestResult};

/// A fitted candidate, single or mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct Fitted {
    pub family: Family,
    pub skewed: bool,
    pub model: MixtureModel,
    pub score: ModelScore,
    pub converged: bool,
    pub boundary: Option<bool>,
    pub std_errors: Option<Vec<(String, f64)>>,
}

impl Fitted {
    pub fn code(&self) -> String {
        self.family.code(self.skewed)
    }

    pub fn from_fit(f: FitResult, n: usize) -> Self {
        let d = f.model.dim();
        let std_errors = f.std_errors().map(|se| f.param_names.iter().cloned().zip(se).collect());
        let k = mixture_param_count(f.model.family(), d, f.skewed, 1);
        Fitted {
            family: f.model.family(),
            skewed: f.skewed,
            score: ModelScore::new(f.log_lik, k, n),
            model: MixtureModel::single(f.model),
            converged: f.converged,
            boundary: Some(f.boundary),
            std_errors,
        }
    }

    pub fn from_mixture(f: MixtureFit) -> Self {
        Fitted {
            family: f.model.family(),
            skewed: f.skewed,
            model: f.model,
            score: f.score,
            converged: f.converged,
            boundary: None,
            std_errors: None,
        }
    }
}

fn component_json(m: &SkewModel, weight: Option<f64>, skewed: bool) -> Value {
    let mut c = Map::new();
    if let Some(w) = weight {
        c.insert("weight".into(), json!(w));
    }
    c.insert("mu".into(), json!(m.mu().as_slice()));
    let th = m.theta();
    if m.family() != Family::Uniform {
        c.insert("kappa".into(), json!(th.kappa()));
        if m.dim() == 2 {
            c.insert("r".into(), json!(th.dep()[0]));
        } else if !th.dep().is_empty() {
            c.insert("dep".into(), json!(th.dep()));
        }
    }
    if skewed {
        c.insert("lambda".into(), json!(m.lambda()));
    }
    Value::Object(c)
}

pub fn fit_record(group: Option<&str>, f: &Fitted, symmetry_rejected: Option<bool>) -> Value {
    let k = f.model.n_components();
    let comps: Vec<Value> = f
        .model
        .components()
        .iter()
        .zip(f.model.weights())
        .map(|(c, w)| component_json(c, (k > 1).then_some(*w), f.skewed))
        .collect();
    let fitted = if k == 1 {
        serde_json::to_value(&f.model.components()[0])
    } else {
        serde_json::to_value(&f.model)
    }
    .expect("models serialize");
    let mut r = json!({
        "record": "fit",
        "group": group,
        "model": f.code(),
        "family": f.family.to_string(),
        "skewed": f.skewed,
        "k_components": k,
        "n": f.score.n,
        "components": comps,
        "log_lik": f.score.log_lik,
        "k_params": f.score.k_params,
        "aic": f.score.aic,
        "bic": f.score.bic,
        "converged": f.converged,
        "symmetry_rejected": symmetry_rejected,
        "fitted": fitted,
    });
    if let Some(b) = f.boundary {
        r["boundary"] = json!(b);
    }
    if let Some(se) = &f.std_errors {
        let m: Map<String, Value> = se.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
        r["std_errors"] = Value::Object(m);
    }
    r
}

pub fn error_record(group: Option<&str>, code: &str, err: &str) -> Value {
    json!({ "record": "fit_error", "group": group, "model": code, "error": err })
}

pub fn symmetry_record(group: Option<&str>, family: Family, k: usize, t: &SymmetryTestResult) -> Value {
    let reject: Map<String, Value> = t.reject_at.iter().map(|(a, r)| (a.to_string(), json!(r))).collect();
    json!({
        "record": "symmetry_test",
        "group": group,
        "family": family.to_string(),
        "k_components": k,
        "statistic": t.statistic,
        "df": t.df,
        "p_value": t.p_value,
        "reject_at": reject,
        "log_lik_symmetric": t.log_lik_symmetric,
        "log_lik_skewed": t.log_lik_skewed,
    })
}

pub fn selection_record(group: Option<&str>, r: &Ranking) -> Value {
    json!({
        "record": "selection",
        "group": group,
        "best_aic": r.best_aic,
        "best_bic": r.best_bic,
        "disagree": r.disagree,
        "by_aic": r.by_aic,
        "by_bic": r.by_bic,
    })
}

pub fn to_jsonl(records: &[Value]) -> String {
    let mut s = String::new();
    for r in records {
        s.push_str(&serde_json::to_string(r).expect("records serialize"));
        s.push('\n');
    }
    s
}

fn list(v: &Value) -> String {
    match v {
        Value::Array(a) => a.iter().map(list).collect::<Vec<_>>().join(","),
        Value::Number(x) => format!("{:.3}", x.as_f64().unwrap_or(f64::NAN)),
        Value::Null => "-".into(),
        other => other.to_string(),
    }
}

/// Text table with one line per component, in the record order.
pub fn render_table(records: &[Value]) -> String {
    let mut out = format!(
        "{:<8} {:<8} {:>6} {:<16} {:<16} {:>7} {:<16} {:>11} {:>11} {:>11}\n",
        "group", "model", "p", "mu", "kappa", "r", "lambda", "LL", "AIC", "BIC"
    );
    for r in records {
        let group = r["group"].as_str().unwrap_or("-");
        match r["record"].as_str() {
            Some("fit") => {
                let star = if r["symmetry_rejected"] == json!(true) { "*" } else { "" };
                let name = format!("{}{star}", r["model"].as_str().unwrap_or("?"));
                for (i, c) in r["components"].as_array().into_iter().flatten().enumerate() {
                    let p = c.get("weight").map_or("1".to_string(), |w| format!("{:.3}", w.as_f64().unwrap_or(f64::NAN)));
                    let dep = c.get("r").or_else(|| c.get("dep")).map_or("-".to_string(), list);
                    let tail = if i == 0 {
                        format!(
                            "{:>11.1} {:>11.1} {:>11.1}",
                            r["log_lik"].as_f64().unwrap_or(f64::NAN),
                            r["aic"].as_f64().unwrap_or(f64::NAN),
                            r["bic"].as_f64().unwrap_or(f64::NAN)
                        )
                    } else {
                        String::new()
                    };
                    out.push_str(&format!(
                        "{:<8} {:<8} {:>6} {:<16} {:<16} {:>7} {:<16} {}\n",
                        group,
                        if i == 0 { name.as_str() } else { "" },
                        p,
                        list(&c["mu"]),
                        c.get("kappa").map_or("-".to_string(), list),
                        dep,
                        c.get("lambda").map_or("-".to_string(), list),
                        tail
                    ));
                }
            }
            Some("fit_error") => out.push_str(&format!(
                "{:<8} {:<8} failed: {}\n",
                group,
                r["model"].as_str().unwrap_or("?"),
                r["error"].as_str().unwrap_or("")
            )),
            Some("symmetry_test") => out.push_str(&format!(
                "{:<8} symmetry ({}): statistic {:.3}, df {}, p-value {:.4}\n",
                group,
                r["family"].as_str().unwrap_or("?"),
                r["statistic"].as_f64().unwrap_or(f64::NAN),
                r["df"],
                r["p_value"].as_f64().unwrap_or(f64::NAN)
            )),
            Some("selection") => out.push_str(&format!(
                "{:<8} best by AIC: {}, best by BIC: {}{}\n",
                group,
                r["best_aic"].as_str().unwrap_or("?"),
                r["best_bic"].as_str().unwrap_or("?"),
                if r["disagree"] == json!(true) { " (criteria disagree)" } else { "" }
            )),
            _ => {}
        }
    }
    out
}
