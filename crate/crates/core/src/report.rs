//! Side-by-side coefficient tables.
//!
//! Layout, one column per model:
//!
//! * a coefficient line (`-2.068**`), significance marked with `**`,
//!   exact zeros in bold (`**0.000**`);
//! * a standard-error line below it, `(0.105)`;
//! * blank cells where a model has no such covariate;
//! * `α` and `λ` footer rows.

use std::io::Write;

use crate::data::format_float;
use crate::error::Result;
use crate::inference::CoefficientTable;

pub const SIGNIFICANCE_MARK: &str = "**";

/// One model column of the table.
#[derive(Debug, Clone, Copy)]
pub struct ModelColumn<'a> {
    pub label: &'a str,
    pub table: &'a CoefficientTable,
}

fn covariate_order(models: &[ModelColumn<'_>]) -> Vec<String> {
    let mut names: Vec<String> = Vec::new();
    for m in models {
        for row in &m.table.rows {
            if !names.contains(&row.name) {
                names.push(row.name.clone());
            }
        }
    }
    names
}

pub fn format_estimate(estimate: f64, significant: bool, zero: bool) -> String {
    if zero {
        "**0.000**".to_string()
    } else if significant {
        format!("{estimate:.3}{SIGNIFICANCE_MARK}")
    } else {
        format!("{estimate:.3}")
    }
}

pub fn format_se(se: f64) -> String {
    format!("({se:.3})")
}

pub fn format_alpha(alpha: f64) -> String {
    format!("{alpha:.4}")
}

/// Two significant digits in plain decimal form, e.g. `0.00055`.
pub fn format_lambda(lambda: f64) -> String {
    let rounded: f64 = format!("{lambda:.1e}").parse().unwrap_or(lambda);
    format!("{rounded}")
}

/// Renders the table as Markdown.
pub fn render_markdown(models: &[ModelColumn<'_>]) -> String {
    let mut grid: Vec<Vec<String>> = Vec::new();
    let mut header = vec![String::new()];
    header.extend(models.iter().map(|m| m.label.to_string()));
    grid.push(header);

    for name in covariate_order(models) {
        let mut est = vec![name.clone()];
        let mut se = vec![String::new()];
        for m in models {
            match m.table.row(&name) {
                Some(r) => {
                    est.push(format_estimate(r.estimate, r.significant, r.zero));
                    se.push(format_se(r.se));
                }
                None => {
                    est.push(String::new());
                    se.push(String::new());
                }
            }
        }
        grid.push(est);
        grid.push(se);
    }
    let mut alpha = vec!["α".to_string()];
    alpha.extend(models.iter().map(|m| format_alpha(m.table.alpha)));
    grid.push(alpha);
    let mut lambda = vec!["λ".to_string()];
    lambda.extend(models.iter().map(|m| format_lambda(m.table.lambda)));
    grid.push(lambda);

    let cols = models.len() + 1;
    let widths: Vec<usize> = (0..cols)
        .map(|c| grid.iter().map(|row| row[c].chars().count()).max().unwrap_or(0).max(3))
        .collect();
    let line = |row: &[String]| -> String {
        let cells: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(cell, w)| format!("{cell}{}", " ".repeat(w - cell.chars().count())))
            .collect();
        format!("| {} |\n", cells.join(" | "))
    };

    let mut out = line(&grid[0]);
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    out.push_str(&format!("|-{}-|\n", rule.join("-|-")));
    for row in &grid[1..] {
        out.push_str(&line(row));
    }
    out.push_str("\nStandard errors in parentheses.\n");
    out.push_str(&format!("{SIGNIFICANCE_MARK} p < 0.05\n"));
    out.push_str("Zero coefficients in bold.\n");
    out
}

/// Long-format CSV: `model,covariate,estimate,se,ci_low,ci_high,significant,zero`,
/// followed by `alpha` and `lambda` rows per model.
pub fn write_table_csv<W: Write>(writer: W, models: &[ModelColumn<'_>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["model", "covariate", "estimate", "se", "ci_low", "ci_high", "significant", "zero"])?;
    for m in models {
        for r in &m.table.rows {
            w.write_record([
                m.label,
                &r.name,
                &format_float(r.estimate),
                &format_float(r.se),
                &format_float(r.ci_low),
                &format_float(r.ci_high),
                if r.significant { "1" } else { "0" },
                if r.zero { "1" } else { "0" },
            ])?;
        }
        w.write_record([m.label, "alpha", &format_float(m.table.alpha), "", "", "", "", ""])?;
        w.write_record([m.label, "lambda", &format_float(m.table.lambda), "", "", "", "", ""])?;
    }
    w.flush()?;
    Ok(())
}
