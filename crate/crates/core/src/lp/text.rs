//! Line-oriented LP text format. See `docs/lp_format.md` for the grammar.

use std::collections::HashMap;
use std::fmt::Write;

use super::{LpProblem, Objective, RowSense};
use crate::error::{Error, Result};

fn fmt_num(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v:?}")
    }
}

fn clean_name(name: &str) -> String {
    name.chars().map(|c| if c.is_whitespace() || c == '=' { '_' } else { c }).collect()
}

pub fn write_lp_text(p: &LpProblem) -> String {
    let mut out = String::new();
    out.push_str("cuopt-lp 1\n");
    let sense = match p.objective {
        Objective::Min => "min",
        Objective::Max => "max",
    };
    let _ = writeln!(out, "objective {sense}");
    let names: Vec<String> = p.col_names.iter().map(|n| clean_name(n)).collect();
    for j in 0..p.num_cols() {
        let _ = writeln!(
            out,
            "column {} {} {} {}",
            names[j],
            fmt_num(p.lower[j]),
            fmt_num(p.upper[j]),
            fmt_num(p.cost[j])
        );
    }
    for (i, row) in p.rows.iter().enumerate() {
        let sense = match row.sense {
            RowSense::Le => "le",
            RowSense::Ge => "ge",
            RowSense::Eq => "eq",
        };
        let _ = write!(out, "row r{} {} {}", i, sense, fmt_num(row.rhs));
        for (j, a) in &row.coeffs {
            let _ = write!(out, " {}={}", names[*j], fmt_num(*a));
        }
        out.push('\n');
    }
    out.push_str("end\n");
    out
}

fn parse_num(tok: &str, line: usize) -> Result<f64> {
    match tok {
        "inf" | "+inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => tok
            .parse::<f64>()
            .map_err(|_| Error::InvalidInstance(format!("line {line}: bad number '{tok}'"))),
    }
}

pub fn parse_lp_text(text: &str) -> Result<LpProblem> {
    let bad = |line: usize, msg: &str| Error::InvalidInstance(format!("line {line}: {msg}"));
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| {
        !l.is_empty() && !l.starts_with('#')
    });
    match lines.next() {
        Some((_, "cuopt-lp 1")) => {}
        Some((n, _)) => return Err(bad(n, "expected header 'cuopt-lp 1'")),
        None => return Err(bad(0, "empty input")),
    }
    let mut problem: Option<LpProblem> = None;
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut ended = false;
    for (n, line) in lines {
        if ended {
            return Err(bad(n, "content after 'end'"));
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks[0] {
            "objective" => {
                let sense = match toks.get(1) {
                    Some(&"min") => Objective::Min,
                    Some(&"max") => Objective::Max,
                    _ => return Err(bad(n, "objective must be min or max")),
                };
                if problem.is_some() {
                    return Err(bad(n, "duplicate objective line"));
                }
                problem = Some(LpProblem::new(sense));
            }
            "column" => {
                let p = problem.as_mut().ok_or_else(|| bad(n, "column before objective"))?;
                if toks.len() != 5 {
                    return Err(bad(n, "column needs: name lower upper cost"));
                }
                let j = p.add_named_var(toks[1], parse_num(toks[2], n)?, parse_num(toks[3], n)?, parse_num(toks[4], n)?);
                if index.insert(toks[1].to_string(), j).is_some() {
                    return Err(bad(n, "duplicate column name"));
                }
            }
            "row" => {
                let p = problem.as_mut().ok_or_else(|| bad(n, "row before objective"))?;
                if toks.len() < 4 {
                    return Err(bad(n, "row needs: name sense rhs [col=coef ...]"));
                }
                let sense = match toks[2] {
                    "le" => RowSense::Le,
                    "ge" => RowSense::Ge,
                    "eq" => RowSense::Eq,
                    _ => return Err(bad(n, "row sense must be le, ge or eq")),
                };
                let rhs = parse_num(toks[3], n)?;
                let mut coeffs = Vec::new();
                for t in &toks[4..] {
                    let (name, val) = t.split_once('=').ok_or_else(|| bad(n, "expected col=coef"))?;
                    let j = *index.get(name).ok_or_else(|| bad(n, "unknown column"))?;
                    coeffs.push((j, parse_num(val, n)?));
                }
                p.add_row(coeffs, sense, rhs);
            }
            "end" => ended = true,
            other => return Err(bad(n, &format!("unknown keyword '{other}'"))),
        }
    }
    if !ended {
        return Err(bad(0, "missing 'end'"));
    }
    let p = problem.ok_or_else(|| bad(0, "missing objective line"))?;
    p.validate()?;
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut p = LpProblem::new(Objective::Max);
        let x = p.add_named_var("x", 0.0, f64::INFINITY, 1.5);
        let y = p.add_named_var("y", f64::NEG_INFINITY, 2.0, -0.1);
        p.add_row(vec![(x, 1.0), (y, 1e-12)], RowSense::Le, 3.0);
        p.add_row(vec![(y, -2.0)], RowSense::Eq, 0.25);
        let text = write_lp_text(&p);
        let q = parse_lp_text(&text).unwrap();
        assert_eq!(p, q);
        assert_eq!(write_lp_text(&q), text);
    }

    #[test]
    fn rejects_unknown_column() {
        let t = "cuopt-lp 1\nobjective min\ncolumn a 0 inf 1\nrow r0 ge 1 b=1\nend\n";
        assert!(parse_lp_text(t).is_err());
    }
}
