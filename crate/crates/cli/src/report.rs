//! Markdown tables and figure series, formatted from stage artifacts.
//!
//! Every number here is copied (reformatted to three decimals) from an
//! artifact an earlier stage computed — the report does no analysis of its
//! own, so each cell can be traced back to `gt_precision_summary.csv`,
//! `component_summary.csv`, `aggregates.csv`, `cycles.tsv`, or `table4.csv`.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};

use crate::config::RunConfig;
use crate::pipeline::{read_cycles_artifact, write_manifest, Artifacts};

fn md_seed_comment(cfg: &RunConfig) -> String {
    format!("<!-- rng_seed={} -->\n", cfg.rng_seed)
}

fn seed_comment(cfg: &RunConfig) -> String {
    format!("# rng_seed={}\n", cfg.rng_seed)
}

/// Data rows of a `# `-commented CSV artifact, split into fields.
fn csv_rows(path: &Path) -> Result<Vec<Vec<String>>> {
    if !path.exists() {
        bail!("missing artifact {}", path.display());
    }
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut rows = Vec::new();
    let mut saw_header = false;
    for raw in text.lines() {
        let line = raw.trim_end();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !saw_header {
            saw_header = true;
            continue;
        }
        rows.push(line.split(',').map(str::to_string).collect());
    }
    Ok(rows)
}

fn fmt3(field: &str) -> Result<String> {
    if field.is_empty() {
        return Ok(String::new());
    }
    let value: f64 = field
        .parse()
        .map_err(|_| anyhow!("expected a number, found {field:?}"))?;
    Ok(format!("{value:.3}"))
}

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let name = path
        .file_name()
        .ok_or_else(|| anyhow!("artifact path {} has no file name", path.display()))?;
    let tmp = path.with_file_name(format!("{}.tmp", name.to_string_lossy()));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn table2(cfg: &RunConfig, art: &Artifacts, out: &Path) -> Result<()> {
    let rows = csv_rows(&art.gt_summary())?;
    let mut body = md_seed_comment(cfg);
    body.push_str("# Ground-truth precision\n\n");
    body.push_str("Five-point summary of per-query precision at each rank.\n\n");
    body.push_str("| rank | min | 25% | 50% | 75% | max |\n");
    body.push_str("|---|---|---|---|---|---|\n");
    for &r in &cfg.r_set {
        let label = format!("top-{r}");
        let row = rows
            .iter()
            .find(|row| row.first().map(String::as_str) == Some(label.as_str()))
            .ok_or_else(|| anyhow!("gt_precision_summary.csv has no {label} row"))?;
        body.push_str(&format!(
            "| {} | {} | {} | {} | {} | {} |\n",
            label,
            fmt3(&row[1])?,
            fmt3(&row[2])?,
            fmt3(&row[3])?,
            fmt3(&row[4])?,
            fmt3(&row[5])?,
        ));
    }
    write_atomic(out, &body)
}

fn table3(cfg: &RunConfig, art: &Artifacts, out: &Path) -> Result<()> {
    let rows = csv_rows(&art.component_summary())?;
    let labels = [
        ("pct_size", "largest component share of graph"),
        ("pct_query", "query articles inside largest component"),
        ("pct_articles", "articles among component nodes"),
        ("pct_categories", "categories among component nodes"),
        ("expansion_ratio", "expansion ratio inside component"),
    ];
    let mut body = md_seed_comment(cfg);
    body.push_str("# Query-graph components\n\n");
    body.push_str("Five-point summary of per-query largest-component metrics.\n\n");
    body.push_str("| metric | min | 25% | 50% | 75% | max |\n");
    body.push_str("|---|---|---|---|---|---|\n");
    for (key, label) in labels {
        let row = rows
            .iter()
            .find(|row| row.first().map(String::as_str) == Some(key))
            .ok_or_else(|| anyhow!("component_summary.csv has no {key} row"))?;
        body.push_str(&format!(
            "| {} | {} | {} | {} | {} | {} |\n",
            label,
            fmt3(&row[1])?,
            fmt3(&row[2])?,
            fmt3(&row[3])?,
            fmt3(&row[4])?,
            fmt3(&row[5])?,
        ));
    }
    write_atomic(out, &body)
}

fn table4(cfg: &RunConfig, art: &Artifacts, out: &Path, no_cycles: bool) -> Result<()> {
    let rows = csv_rows(&art.table4())?;
    let rank_cols: Vec<(u32, usize)> = [(1u32, 1usize), (5, 2), (10, 3), (15, 4)]
        .into_iter()
        .filter(|(r, _)| cfg.r_set.contains(r))
        .collect();
    let mut body = md_seed_comment(cfg);
    body.push_str("# Expansion configurations\n\n");
    body.push_str("Precision averaged over queries, per feature configuration.\n\n");
    body.push_str("| features |");
    for (r, _) in &rank_cols {
        body.push_str(&format!(" p@{r} |"));
    }
    body.push('\n');
    body.push_str("|---|");
    for _ in &rank_cols {
        body.push_str("---|");
    }
    body.push('\n');
    let mut notes = Vec::new();
    for row in &rows {
        if row.len() < 6 {
            bail!("table4.csv row has {} fields, expected 6", row.len());
        }
        body.push_str(&format!("| {} |", row[0]));
        for (_, col) in &rank_cols {
            body.push_str(&format!(" {} |", fmt3(&row[*col])?));
        }
        body.push('\n');
        if !row[5].is_empty() {
            notes.push(format!(
                "- {}: no cycles for {}\n",
                row[0],
                row[5].replace(' ', ", ")
            ));
        }
    }
    if no_cycles {
        body.push_str("\n_no cycles enumerated_\n");
    }
    if !notes.is_empty() {
        body.push('\n');
        for note in notes {
            body.push_str(&note);
        }
    }
    write_atomic(out, &body)
}

/// One by-length series projected out of `aggregates.csv`.
fn length_series(
    cfg: &RunConfig,
    art: &Artifacts,
    out: &Path,
    header: &str,
    column: usize,
    no_cycles: bool,
) -> Result<()> {
    let rows = csv_rows(&art.aggregates())?;
    let mut body = seed_comment(cfg);
    body.push_str(header);
    body.push('\n');
    if no_cycles {
        body.push_str("# no cycles\n");
    }
    for row in &rows {
        let value = row.get(column).map(String::as_str).unwrap_or("");
        let formatted = if column == 1 {
            value.to_string()
        } else {
            fmt3(value)?
        };
        body.push_str(&format!("{},{}\n", row[0], formatted));
    }
    write_atomic(out, &body)
}

pub fn generate(cfg: &RunConfig) -> Result<()> {
    let art = Artifacts::new(&cfg.out_dir);
    write_manifest(cfg)?;
    let report = art.report_dir();
    let figs = report.join("figs");

    let cycles = read_cycles_artifact(&art.cycles()).context("missing analyze output")?;
    let no_cycles = cycles.is_empty();

    table2(cfg, &art, &report.join("table2.md"))?;
    table3(cfg, &art, &report.join("table3.md"))?;
    table4(cfg, &art, &report.join("table4.md"), no_cycles)?;

    length_series(cfg, &art, &figs.join("cycle_counts_by_length.csv"), "length,count", 1, no_cycles)?;
    length_series(
        cfg,
        &art,
        &figs.join("contribution_by_length.csv"),
        "length,mean_contribution",
        2,
        no_cycles,
    )?;
    length_series(
        cfg,
        &art,
        &figs.join("category_ratio_by_length.csv"),
        "length,mean_category_ratio",
        3,
        no_cycles,
    )?;
    length_series(
        cfg,
        &art,
        &figs.join("density_by_length.csv"),
        "length,mean_extra_edge_density",
        4,
        no_cycles,
    )?;

    let mut scatter = seed_comment(cfg);
    scatter.push_str("query_id,length,extra_edge_density,contribution\n");
    if no_cycles {
        scatter.push_str("# no cycles\n");
    }
    for record in &cycles {
        scatter.push_str(&format!(
            "{},{},{:.3},{:.3}\n",
            record.query_id, record.cycle.length, record.cycle.extra_edge_density, record.contribution
        ));
    }
    write_atomic(&figs.join("density_vs_contribution.csv"), &scatter)?;

    eprintln!("[cyclex] report: written to {}", report.display());
    Ok(())
}
