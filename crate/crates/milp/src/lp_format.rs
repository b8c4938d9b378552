//! CPLEX-style LP text. Every variable is listed in the `Bounds` section in
//! column order, so a parse reproduces the original column layout.

use std::collections::{HashMap, HashSet};
use std::fmt::Write;

use crate::error::MilpError;
use crate::model::{LinearProgram, Row, RowSense, Sense, VarKind};

fn valid_name(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    s.chars().all(|c| c.is_ascii_alphanumeric() || "_.[],()".contains(c))
        && !matches!(
            s.to_ascii_lowercase().as_str(),
            "free" | "inf" | "infinity" | "end" | "bounds" | "binaries" | "binary"
        )
}

fn unique_names(names: &[String], prefix: &str) -> Vec<String> {
    let mut seen = HashSet::new();
    names
        .iter()
        .enumerate()
        .map(|(k, n)| {
            let name = if valid_name(n) && !seen.contains(n) && !n.starts_with(prefix) {
                n.clone()
            } else {
                format!("{prefix}{k}")
            };
            seen.insert(name.clone());
            name
        })
        .collect()
}

fn num(v: f64) -> String {
    if v == f64::INFINITY {
        "+inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v}")
    }
}

fn terms(out: &mut String, coeffs: &[(usize, f64)], names: &[String]) {
    for &(j, a) in coeffs {
        let sign = if a.is_sign_negative() { '-' } else { '+' };
        let _ = write!(out, " {sign} {} {}", num(a.abs()), names[j]);
    }
    if coeffs.is_empty() {
        out.push_str(" 0");
    }
}

/// Renders `lp` as LP text. Output depends only on the problem data.
pub fn write_lp_text(lp: &LinearProgram) -> String {
    let vars = unique_names(&lp.var_names, "x");
    let row_names: Vec<String> = lp.rows.iter().map(|r| r.name.clone()).collect();
    let rows = unique_names(&row_names, "r");
    let mut out = String::new();
    let _ = writeln!(out, "\\ Problem: {}", lp.name.replace('\n', " "));
    out.push_str(match lp.sense {
        Sense::Minimize => "Minimize\n",
        Sense::Maximize => "Maximize\n",
    });
    let obj: Vec<(usize, f64)> = lp
        .objective
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != 0.0)
        .map(|(j, c)| (j, *c))
        .collect();
    out.push_str(" obj:");
    terms(&mut out, &obj, &vars);
    out.push('\n');
    out.push_str("Subject To\n");
    for (row, name) in lp.rows.iter().zip(&rows) {
        let _ = write!(out, " {name}:");
        terms(&mut out, &row.coeffs, &vars);
        let op = match row.sense {
            RowSense::Le => "<=",
            RowSense::Ge => ">=",
            RowSense::Eq => "=",
        };
        let _ = writeln!(out, " {op} {}", num(row.rhs));
    }
    out.push_str("Bounds\n");
    for (j, name) in vars.iter().enumerate() {
        let (l, u) = (lp.lower[j], lp.upper[j]);
        if l == f64::NEG_INFINITY && u == f64::INFINITY {
            let _ = writeln!(out, " {name} free");
        } else {
            let _ = writeln!(out, " {} <= {name} <= {}", num(l), num(u));
        }
    }
    let bins: Vec<&String> = lp.binaries().map(|j| &vars[j]).collect();
    if !bins.is_empty() {
        out.push_str("Binaries\n");
        for b in bins {
            let _ = writeln!(out, " {b}");
        }
    }
    out.push_str("End\n");
    out
}

fn parse_num(tok: &str, line: usize) -> Result<f64, MilpError> {
    match tok {
        "+inf" | "inf" | "+infinity" | "infinity" => Ok(f64::INFINITY),
        "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
        _ => tok.parse().map_err(|_| MilpError::Parse {
            line,
            msg: format!("bad number `{tok}`"),
        }),
    }
}

/// Parses `sign coeff name` triples into `(name, value)` pairs.
fn parse_terms(tokens: &[&str], line: usize) -> Result<Vec<(String, f64)>, MilpError> {
    if tokens == ["0"] {
        return Ok(Vec::new());
    }
    if tokens.len() % 3 != 0 {
        return Err(MilpError::Parse {
            line,
            msg: "expected `sign coefficient name` triples".into(),
        });
    }
    tokens
        .chunks(3)
        .map(|t| {
            let sign = match t[0] {
                "+" => 1.0,
                "-" => -1.0,
                other => {
                    return Err(MilpError::Parse {
                        line,
                        msg: format!("bad sign `{other}`"),
                    })
                }
            };
            Ok((t[2].to_string(), sign * parse_num(t[1], line)?))
        })
        .collect()
}

#[derive(PartialEq)]
enum Section {
    Head,
    Objective,
    Constraints,
    Bounds,
    Binaries,
    Done,
}

/// Parses text produced by [`write_lp_text`].
pub fn parse_lp_text(text: &str) -> Result<LinearProgram, MilpError> {
    let mut name = String::from("lp");
    let mut sense = Sense::Minimize;
    let mut obj_terms = Vec::new();
    let mut raw_rows: Vec<(String, Vec<(String, f64)>, RowSense, f64, usize)> = Vec::new();
    let mut vars: Vec<(String, f64, f64)> = Vec::new();
    let mut binaries = Vec::new();
    let mut section = Section::Head;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let trimmed = raw.trim();
        if let Some(rest) = trimmed.strip_prefix("\\ Problem:") {
            name = rest.trim().to_string();
            continue;
        }
        if trimmed.is_empty() || trimmed.starts_with('\\') {
            continue;
        }
        match trimmed {
            "Minimize" => {
                sense = Sense::Minimize;
                section = Section::Objective;
                continue;
            }
            "Maximize" => {
                sense = Sense::Maximize;
                section = Section::Objective;
                continue;
            }
            "Subject To" => {
                section = Section::Constraints;
                continue;
            }
            "Bounds" => {
                section = Section::Bounds;
                continue;
            }
            "Binaries" => {
                section = Section::Binaries;
                continue;
            }
            "End" => {
                section = Section::Done;
                continue;
            }
            _ => {}
        }
        let toks: Vec<&str> = trimmed.split_whitespace().collect();
        match section {
            Section::Objective => {
                let body = toks.strip_prefix(&["obj:"]).unwrap_or(&toks);
                obj_terms = parse_terms(body, line)?;
            }
            Section::Constraints => {
                let label = toks[0].strip_suffix(':').ok_or(MilpError::Parse {
                    line,
                    msg: "constraint needs a `name:` label".into(),
                })?;
                if toks.len() < 3 {
                    return Err(MilpError::Parse {
                        line,
                        msg: "truncated constraint".into(),
                    });
                }
                let op = toks[toks.len() - 2];
                let sense = match op {
                    "<=" => RowSense::Le,
                    ">=" => RowSense::Ge,
                    "=" => RowSense::Eq,
                    other => {
                        return Err(MilpError::Parse {
                            line,
                            msg: format!("bad operator `{other}`"),
                        })
                    }
                };
                let rhs = parse_num(toks[toks.len() - 1], line)?;
                let body = parse_terms(&toks[1..toks.len() - 2], line)?;
                raw_rows.push((label.to_string(), body, sense, rhs, line));
            }
            Section::Bounds => match toks.as_slice() {
                [v, "free"] => vars.push((v.to_string(), f64::NEG_INFINITY, f64::INFINITY)),
                [l, "<=", v, "<=", u] => vars.push((v.to_string(), parse_num(l, line)?, parse_num(u, line)?)),
                _ => {
                    return Err(MilpError::Parse {
                        line,
                        msg: "unrecognised bound".into(),
                    })
                }
            },
            Section::Binaries => binaries.extend(toks.iter().map(|t| t.to_string())),
            Section::Head | Section::Done => {
                return Err(MilpError::Parse {
                    line,
                    msg: "content outside a section".into(),
                })
            }
        }
    }
    let index: HashMap<&str, usize> = vars.iter().enumerate().map(|(j, v)| (v.0.as_str(), j)).collect();
    let lookup = |n: &str, line: usize| {
        index.get(n).copied().ok_or(MilpError::Parse {
            line,
            msg: format!("variable `{n}` missing from Bounds"),
        })
    };
    let mut lp = LinearProgram::new(sense).with_name(name);
    for (v, l, u) in &vars {
        lp.add_var(v.clone(), *l, *u, 0.0);
    }
    for (v, c) in obj_terms {
        let j = lookup(&v, 0)?;
        lp.objective[j] += c;
    }
    for b in binaries {
        let j = lookup(&b, 0)?;
        lp.kinds[j] = VarKind::Binary;
    }
    for (label, body, sense, rhs, line) in raw_rows {
        let coeffs = body
            .into_iter()
            .map(|(v, a)| Ok((lookup(&v, line)?, a)))
            .collect::<Result<Vec<_>, MilpError>>()?;
        lp.push_row(Row::new(label, coeffs, sense, rhs));
    }
    Ok(lp)
}
