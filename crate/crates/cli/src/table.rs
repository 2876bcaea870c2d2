//! Result tables: csv or aligned text, with `#` comment lines for the run
//! parameters, timings and checks.

use crate::config::{ExperimentConfig, Format, Refinement};
use crate::experiment::{columns, Column, RunOutput};

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub comments: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// Four significant digits; fixed notation between 1e-4 and 1e4.
pub fn format_sig4(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0.000".into();
    }
    let mut e = x.abs().log10().floor() as i32;
    // rounding may carry into the next decade
    if (x.abs() / 10f64.powi(e - 3)).round() >= 10000.0 {
        e += 1;
    }
    if (-4..4).contains(&e) {
        format!("{:.*}", (3 - e) as usize, x)
    } else {
        format!("{x:.3e}")
    }
}

pub fn format_hmin(h: f64) -> String {
    format!("{h:.1e}")
}

fn kappa_header(c: Column) -> String {
    format!("kappa_{}", c.name())
}

pub fn build_table(cfg: &ExperimentConfig, out: &RunOutput) -> Table {
    let cols = columns(cfg);
    let local = cfg.refinement == Refinement::CornerLocal;
    let pcg_cols: Vec<Column> = cols.iter().copied().filter(|c| *c != Column::Jacobi).collect();

    let mut header = vec!["dofs".to_string()];
    if local {
        header.push("h_min".into());
    }
    header.extend(cols.iter().map(|c| kappa_header(*c)));
    if cfg.pcg {
        header.extend(pcg_cols.iter().map(|c| format!("iters_{}", c.name())));
    }

    let mut comments = vec![
        format!(
            "problem={} refinement={} levels={} variant={} ell={}",
            cfg.problem.name(),
            cfg.refinement.name(),
            cfg.levels,
            cfg.variant.name(),
            cfg.ell
        ),
        format!(
            "alpha={} beta1_pwc={} beta1_cpl={} beta2={} s={}",
            cfg.alpha, cfg.beta1_pwc, cfg.beta1_cpl, cfg.beta2, cfg.s
        ),
        format!(
            "quadrature={} seed={} lanczos_tol={:e} max_iter={}",
            cfg.quadrature.name(),
            cfg.seed,
            cfg.lanczos_tol,
            cfg.max_iter.map_or("auto".to_string(), |m| m.to_string())
        ),
    ];

    let mut rows = Vec::new();
    for r in &out.rows {
        let mut row = vec![r.dofs.to_string()];
        if local {
            row.push(format_hmin(r.h_min));
        }
        for c in &cols {
            row.push(r.kappa(*c).map_or("-".into(), format_sig4));
        }
        if cfg.pcg {
            for c in &pcg_cols {
                row.push(r.pcg_iterations(*c).map_or("-".into(), |i| i.to_string()));
            }
        }
        rows.push(row);

        for (c, e) in &r.kappa {
            if !e.converged {
                comments.push(format!(
                    "warning level={} column={} lanczos not converged after {} steps",
                    r.level,
                    c.name(),
                    e.iterations
                ));
            }
        }
        for (c, p) in &r.pcg {
            if !p.converged {
                comments.push(format!(
                    "warning level={} column={} pcg not converged after {} iterations",
                    r.level,
                    c.name(),
                    p.iterations
                ));
            }
        }
        for x in &r.cross_checks {
            comments.push(format!(
                "check level={} column={} lanczos={} dense={} gap={:.1e}",
                r.level,
                x.column.name(),
                format_sig4(x.lanczos),
                format_sig4(x.dense),
                x.relative_gap()
            ));
        }
        for x in &r.apply_checks {
            comments.push(format!(
                "check level={} column={} apply_defect={:.1e}",
                r.level,
                x.column.name(),
                x.defect
            ));
        }
    }
    for r in &out.rows {
        let t = r.timings;
        comments.push(format!(
            "timing level={} assembly={:.3}s precond={:.3}s lanczos={:.3}s checks={:.3}s",
            r.level, t.assembly, t.precond, t.lanczos, t.checks
        ));
    }
    if let Some(f) = &out.failure {
        comments.push(format!("error level={} {}", f.level, f.error));
    }
    Table { comments, header, rows }
}

pub fn render(table: &Table, format: Format) -> String {
    let mut s = String::new();
    for c in &table.comments {
        s.push_str("# ");
        s.push_str(c);
        s.push('\n');
    }
    match format {
        Format::Csv => {
            s.push_str(&table.header.join(","));
            s.push('\n');
            for r in &table.rows {
                s.push_str(&r.join(","));
                s.push('\n');
            }
        }
        Format::Text => {
            let widths: Vec<usize> = (0..table.header.len())
                .map(|j| {
                    table
                        .rows
                        .iter()
                        .map(|r| r[j].len())
                        .chain([table.header[j].len()])
                        .max()
                        .unwrap_or(0)
                })
                .collect();
            let line = |cells: &[String]| -> String {
                let parts: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
                parts.join("  ")
            };
            s.push_str(&line(&table.header));
            s.push('\n');
            for r in &table.rows {
                s.push_str(&line(r));
                s.push('\n');
            }
        }
    }
    s
}
