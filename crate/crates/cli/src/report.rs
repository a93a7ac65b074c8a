//! Human-readable run summary. Every number is read back from a
//! machine-readable artifact and printed losslessly, so the report never
//! carries report-only values.

use std::path::{Path, PathBuf};

use crate::artifacts::{
    read_json, InnovationSummary, RevenueSummary, ValuationSummary, INNOVATION_JSON, MANIFEST_JSON,
    REPORT_MD, REVENUE_JSON, VALUATION_JSON,
};
use crate::pipeline::{PipelineError, RunManifest};

/// Render `report.md` from a completed run's artifacts in `out`.
pub fn emit_report(out: &Path) -> Result<PathBuf, PipelineError> {
    let manifest: RunManifest = read_json(&out.join(MANIFEST_JSON))
        .map_err(|e| PipelineError::Report(format!("manifest: {e}")))?;
    if !manifest.is_complete() {
        return Err(PipelineError::Report(match &manifest.failed_stage {
            Some(stage) => format!("run is marked failed at stage `{stage}`"),
            None => format!(
                "manifest lists {} of {} stages",
                manifest.stages.len(),
                crate::pipeline::STAGE_NAMES.len()
            ),
        }));
    }
    let valuation: ValuationSummary = read_json(&out.join(VALUATION_JSON))
        .map_err(|e| PipelineError::Report(e.to_string()))?;
    let innovation: InnovationSummary = read_json(&out.join(INNOVATION_JSON))
        .map_err(|e| PipelineError::Report(e.to_string()))?;
    let revenue: RevenueSummary =
        read_json(&out.join(REVENUE_JSON)).map_err(|e| PipelineError::Report(e.to_string()))?;

    let mut md = String::new();
    md.push_str("# Valuation report\n\n");
    md.push_str(&format!(
        "- tool version: {}\n- config hash: `{}`\n- master seed: {}\n- scenarios: {}\n\n",
        manifest.tool_version, manifest.config_hash, manifest.master_seed, valuation.n_scenarios
    ));

    let rejected = !innovation.top.report.autocorr.cannot_reject
        || !innovation.all.report.autocorr.cannot_reject;
    if rejected {
        md.push_str("## WARNING: innovation diagnostics rejected\n\n");
        md.push_str(
            "The inter-event independence test fell outside its confidence band; \
             the Poisson innovation model may not describe the release process, \
             and the simulated scenarios inherit that risk.\n\n",
        );
    }

    md.push_str("## Innovation diagnostics\n\n");
    md.push_str("| metric | top pool | all games |\n|---|---|---|\n");
    let top = &innovation.top.report;
    let all = &innovation.all.report;
    md.push_str(&format!(
        "| games in log | {} | {} |\n",
        innovation.top.n_games, innovation.all.n_games
    ));
    md.push_str(&format!(
        "| rate (events/day) | {} | {} |\n",
        top.fit.lambda, all.fit.lambda
    ));
    md.push_str(&format!(
        "| independence (within +/-{} band) | {} | {} |\n",
        top.autocorr.ci_halfwidth,
        verdict(top.autocorr.cannot_reject),
        verdict(all.autocorr.cannot_reject)
    ));
    md.push_str(&format!(
        "| exponential Q-Q max gap (fraction of mean) | {} | {} |\n",
        top.qq.max_gap_frac_of_mean, all.qq.max_gap_frac_of_mean
    ));
    md.push_str(&format!(
        "| exponential CDF max gap | {} | {} |\n",
        top.qq.max_cdf_gap, all.qq.max_cdf_gap
    ));
    md.push_str(&format!(
        "\nSimulation rate: {} events/day (source: {}).\n\n",
        innovation.lambda_used, innovation.lambda_source
    ));

    md.push_str("## Historical profit margins\n\n");
    md.push_str("| year | revenue (USD) | net income (USD) | margin |\n|---|---|---|---|\n");
    for row in &revenue.margin_table {
        md.push_str(&format!(
            "| {} | {} | {} | {}% |\n",
            row.year, row.revenue, row.net_income, row.margin_pct
        ));
    }
    md.push('\n');

    md.push_str("## Valuation\n\n");
    md.push_str(&format!(
        "Assumptions: profit margin {}, discount rate {}, {} shares outstanding, {}-year horizon.\n\n",
        valuation.profit_margin,
        valuation.discount_rate,
        valuation.shares_outstanding,
        valuation.horizon_years
    ));
    md.push_str(
        "| scenario | valuation mean (USD) | 95% interval (USD) | per share (USD) | per share 95% |\n|---|---|---|---|---|\n",
    );
    for s in &valuation.scenarios {
        md.push_str(&format!(
            "| {} | {} | [{}; {}] | {} | [{}; {}] |\n",
            s.label.as_str(),
            s.mean,
            s.ci95.0,
            s.ci95.1,
            s.per_share_mean,
            s.per_share_ci95.0,
            s.per_share_ci95.1
        ));
    }
    md.push('\n');

    let path = out.join(REPORT_MD);
    std::fs::write(&path, md).map_err(|e| PipelineError::Report(e.to_string()))?;
    Ok(path)
}

fn verdict(cannot_reject: bool) -> &'static str {
    if cannot_reject {
        "cannot reject"
    } else {
        "reject"
    }
}
