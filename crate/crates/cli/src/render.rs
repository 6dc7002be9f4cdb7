use std::fmt::Write as _;

use rulerisk::{Cohort, FittedPipeline, PatientRecord, Prediction, Stratum};
use serde::Serialize;

/// One rule line of a patient report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuleLine {
    pub feature: String,
    /// The input value behind the rule; `None` when it was imputed.
    pub value: Option<String>,
    pub rule: String,
    pub output: u8,
    pub acceptance: f64,
}

pub fn rule_lines(pipeline: &FittedPipeline, record: &PatientRecord, prediction: &Prediction) -> Vec<RuleLine> {
    let texts = pipeline.rule_descriptions();
    prediction
        .per_rule
        .iter()
        .zip(&pipeline.rule_columns)
        .zip(texts)
        .map(|((outcome, &col), rule)| {
            let encoded = &pipeline.encoded_schema.features[col];
            let source = encoded.dummy_of.as_deref().unwrap_or(&encoded.name);
            let j = pipeline.schema.index_of(source).expect("rule features come from the schema");
            let value = record.values[j].map(|v| pipeline.schema.features[j].render_value(v));
            RuleLine { feature: outcome.feature.clone(), value, rule, output: u8::from(outcome.output), acceptance: outcome.acceptance }
        })
        .collect()
}

fn stratum_name(s: Stratum) -> &'static str {
    match s {
        Stratum::Low => "low risk",
        Stratum::High => "high risk",
    }
}

/// Per-patient tables: risk factor, value, rule, rule output, acceptance,
/// then risk, reliability and stratum as percentages.
pub fn predictions_text(pipeline: &FittedPipeline, cohort: &Cohort, predictions: &[Prediction]) -> String {
    let mut s = String::new();
    for (i, (record, p)) in cohort.records.iter().zip(predictions).enumerate() {
        let _ = writeln!(s, "Patient {}", i + 1);
        let _ = writeln!(s, "  {:<16} {:>10}  {:<24} {:<12} {:>10}", "Risk factor", "Value", "Rule", "Rule output", "Acceptance");
        for line in rule_lines(pipeline, record, p) {
            let value = line.value.unwrap_or_else(|| "imputed".into());
            let output = if line.output == 1 { "death" } else { "survival" };
            let _ = writeln!(
                s,
                "  {:<16} {:>10}  {:<24} {:<12} {:>9.2}%",
                line.feature,
                value,
                line.rule,
                output,
                100.0 * line.acceptance
            );
        }
        let _ = writeln!(s, "  Predicted mortality risk: {:.2}%", 100.0 * p.risk);
        let _ = writeln!(s, "  Predicted reliability: {:.2}%", 100.0 * p.reliability);
        let _ = writeln!(s, "  Stratification: {}", stratum_name(p.stratum));
        if !p.imputed.is_empty() {
            let _ = writeln!(s, "  Imputed: {}", p.imputed.join(", "));
        }
        s.push('\n');
    }
    s
}

#[derive(Serialize)]
struct PatientJson<'a> {
    patient: usize,
    per_rule: Vec<RuleLine>,
    score_t: f64,
    score_s: f64,
    risk: f64,
    reliability: f64,
    stratum: Stratum,
    imputed: &'a [String],
}

pub fn predictions_json(pipeline: &FittedPipeline, cohort: &Cohort, predictions: &[Prediction]) -> String {
    let rows: Vec<PatientJson> = cohort
        .records
        .iter()
        .zip(predictions)
        .enumerate()
        .map(|(i, (r, p))| PatientJson {
            patient: i + 1,
            per_rule: rule_lines(pipeline, r, p),
            score_t: p.score_t,
            score_s: p.score_s,
            risk: p.risk,
            reliability: p.reliability,
            stratum: p.stratum,
            imputed: &p.imputed,
        })
        .collect();
    serde_json::to_string_pretty(&rows).expect("predictions serialize")
}
