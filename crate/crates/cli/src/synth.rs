use std::fmt::Write as _;

use cf_arith::{check_cp_membership, BigInt, BigRational, Growth, RotationNumber};
use serde_json::{json, Value};

use crate::config::{AlphaSpec, RunConfig};
use crate::output::OutDir;
use crate::{CliError, Outcome};

/// Synthesized `α` with its JSON description and convergent table.
#[derive(Debug)]
pub struct SynthOutput {
    pub alpha: RotationNumber,
    pub json: Value,
    pub table: String,
}

/// CSV of `k, a_k, p_k, q_k` and, with a growth function, `P(q_{k−1})` and whether `q_k > P(q_{k−1})`.
pub fn convergent_table(rn: &RotationNumber, growth: Option<&dyn Growth>) -> String {
    let mut s = String::from("k,a_k,p_k,q_k");
    if growth.is_some() {
        s.push_str(",P(q_{k-1}),q_k>P(q_{k-1})");
    }
    s.push('\n');
    for c in rn.convergents() {
        let _ = write!(s, "{},{},{},{}", c.n, rn.quotients().a(c.n), c.p, c.q);
        if let Some(p) = growth {
            if c.n == 0 {
                s.push_str(",,");
            } else {
                let prev = rn.q(c.n - 1).expect("previous convergent");
                let bound = p.eval(&prev);
                let _ = write!(s, ",{},{}", bound, BigRational::from_integer(c.q.clone()) > bound);
            }
        }
        s.push('\n');
    }
    s
}

pub fn alpha_json(rn: &RotationNumber) -> Value {
    let terms: Vec<String> = rn.quotients().terms().iter().map(|a| a.to_string()).collect();
    json!({
        "quotients": terms,
        "depth": rn.depth(),
        "representative": rn.representative().to_string(),
        "value": rn.to_f64(),
    })
}

pub fn synth_alpha(cfg: &RunConfig) -> Result<SynthOutput, CliError> {
    let (alpha, growth) = cfg.alpha()?;
    let window = match &cfg.alpha {
        AlphaSpec::Synthesize(s) => s.n.unwrap_or(cfg.n),
        AlphaSpec::Quotients(_) => cfg.n,
    };
    let convergents: Vec<Value> = alpha
        .convergents()
        .iter()
        .map(|c| json!({ "k": c.n, "a": alpha.quotients().a(c.n).to_string(), "p": c.p.to_string(), "q": c.q.to_string() }))
        .collect();
    let mut out = json!({ "alpha": alpha_json(&alpha), "window": window, "convergents": convergents });
    if let Some(p) = growth.as_deref() {
        let mut verdicts = Vec::new();
        for k in (3..=alpha.depth().saturating_sub(2)).step_by(2) {
            verdicts.push(json!({ "n": k, "member": check_cp_membership(&alpha, p, k)? }));
        }
        out["growth"] = json!(p.spec());
        out["member"] = json!(check_cp_membership(&alpha, p, window).ok());
        out["memberships"] = Value::Array(verdicts);
    }
    let table = convergent_table(&alpha, growth.as_deref());
    Ok(SynthOutput { alpha, json: out, table })
}

pub fn cmd_synth_alpha(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let s = synth_alpha(cfg)?;
    let mut dir = OutDir::create(&cfg.out_dir())?;
    dir.json("alpha.json", &s.json)?;
    dir.text("convergents.csv", &s.table)?;
    let q_window = s.alpha.q(cfg.n + 1).unwrap_or_else(|_| BigInt::from(0));
    let mut summary = format!("α = {} ({} quotients), q_{{n+1}} = {}\n", s.alpha.to_f64(), s.alpha.depth(), q_window);
    if let Some(m) = s.json.get("member").and_then(Value::as_bool) {
        let _ = writeln!(summary, "membership at n = {}: {}", s.json["window"], m);
    }
    summary.push_str(&s.table);
    Ok(Outcome { pass: true, files: dir.into_files(), summary })
}
