use std::collections::HashMap;
use std::fmt::Write as _;

use super::model::{Constraint, MilpModel, Objective, RowRole, Sense, VarRole, Variable};
use crate::netmodel::CellId;
use crate::{Error, Result};

fn num(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:.16e}")
    }
}

fn render_terms(out: &mut String, terms: &[(usize, f64)], vars: &[Variable]) {
    for (k, &(v, c)) in terms.iter().enumerate() {
        let name = &vars[v].name;
        let (sign, mag) = if c < 0.0 { ("-", -c) } else { ("+", c) };
        match (k, sign) {
            (0, "+") => {}
            (0, _) => out.push_str("- "),
            _ => {
                out.push(' ');
                out.push_str(sign);
                out.push(' ');
            }
        }
        if mag != 1.0 {
            out.push_str(&num(mag));
            out.push(' ');
        }
        out.push_str(name);
    }
}

/// Renders the model in CPLEX LP format. Output is deterministic.
pub fn export_lp(model: &MilpModel) -> String {
    let vars = &model.variables;
    let mut out = String::from("Minimize\n obj: ");
    render_terms(&mut out, &model.cost, vars);
    out.push_str("\nSubject To\n");
    for row in &model.constraints {
        render_terms(&mut out, &row.terms, vars);
        let _ = writeln!(out, " {} {}", row.sense.symbol(), num(row.rhs));
    }
    out.push_str("Bounds\n");
    for v in vars.iter().filter(|v| !v.binary) {
        if v.upper.is_finite() {
            let _ = writeln!(out, " {} <= {} <= {}", num(v.lower), v.name, num(v.upper));
        } else {
            let _ = writeln!(out, " {} >= {}", v.name, num(v.lower));
        }
    }
    out.push_str("Binaries\n");
    for v in vars.iter().filter(|v| v.binary) {
        let _ = writeln!(out, " {}", v.name);
    }
    out.push_str("End\n");
    out
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::LpParse {
        line,
        msg: msg.into(),
    }
}

fn role_of(name: &str, line: usize) -> Result<VarRole> {
    let parts: Vec<&str> = name.split('_').collect();
    let idx = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| perr(line, format!("bad variable name {name}")))
    };
    match parts.as_slice() {
        ["t"] => Ok(VarRole::Epigraph),
        ["x", i] => Ok(VarRole::Load { cell: idx(i)? }),
        ["w", j, l] => Ok(VarRole::Interference {
            ue: idx(j)?,
            option: idx(l)?,
        }),
        ["k", j, l] => Ok(VarRole::Choice {
            ue: idx(j)?,
            option: idx(l)?,
        }),
        _ => Err(perr(line, format!("unknown variable {name}"))),
    }
}

/// Parses `coef name` sequences such as `x_0 - 2.5e-1 w_0_1 + k_0_0`.
fn parse_terms(text: &str, line: usize) -> Result<Vec<(String, f64)>> {
    let mut terms = Vec::new();
    let mut sign = 1.0;
    let mut coef: Option<f64> = None;
    for tok in text.split_whitespace() {
        match tok {
            "+" => sign = 1.0,
            "-" => sign = -1.0,
            _ => {
                if let Ok(v) = tok.parse::<f64>() {
                    if coef.is_some() {
                        return Err(perr(line, "two coefficients in a row"));
                    }
                    coef = Some(v);
                } else {
                    terms.push((tok.to_string(), sign * coef.take().unwrap_or(1.0)));
                    sign = 1.0;
                }
            }
        }
    }
    if coef.is_some() {
        return Err(perr(line, "dangling coefficient"));
    }
    Ok(terms)
}

struct RawRow {
    line: usize,
    terms: Vec<(String, f64)>,
    sense: Sense,
    rhs: f64,
}

/// Reads LP text produced by [`export_lp`] back into a model.
///
/// Row roles are recovered from the row shapes, so the reader only accepts
/// models of this family.
pub fn parse_lp(text: &str) -> Result<MilpModel> {
    #[derive(PartialEq)]
    enum Section {
        Start,
        Objective,
        Rows,
        Bounds,
        Binaries,
        End,
    }
    let mut section = Section::Start;
    let mut cost_terms: Vec<(String, f64)> = Vec::new();
    let mut rows: Vec<RawRow> = Vec::new();
    let mut bounds: HashMap<String, (f64, f64)> = HashMap::new();
    let mut binaries: Vec<String> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let l = raw.trim();
        if l.is_empty() || l.starts_with('\\') {
            continue;
        }
        match l {
            "Minimize" => {
                section = Section::Objective;
                continue;
            }
            "Subject To" => {
                section = Section::Rows;
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
                section = Section::End;
                continue;
            }
            _ => {}
        }
        match section {
            Section::Start | Section::End => return Err(perr(line, "text outside a section")),
            Section::Objective => {
                let body = l.split_once(':').map_or(l, |(_, b)| b);
                cost_terms.extend(parse_terms(body, line)?);
            }
            Section::Rows => {
                let (lhs, sense, rhs) = ["<=", ">=", "="]
                    .iter()
                    .find_map(|op| l.split_once(op).map(|(a, b)| (a, *op, b)))
                    .ok_or_else(|| perr(line, "row without a relation"))?;
                let sense = match sense {
                    "<=" => Sense::Le,
                    ">=" => Sense::Ge,
                    _ => Sense::Eq,
                };
                let rhs = rhs
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| perr(line, "bad right-hand side"))?;
                rows.push(RawRow {
                    line,
                    terms: parse_terms(lhs, line)?,
                    sense,
                    rhs,
                });
            }
            Section::Bounds => {
                let toks: Vec<&str> = l.split_whitespace().collect();
                let parse = |s: &str| {
                    s.parse::<f64>()
                        .map_err(|_| perr(line, format!("bad bound {s}")))
                };
                match toks.as_slice() {
                    [lo, "<=", name, "<=", hi] => {
                        bounds.insert(name.to_string(), (parse(lo)?, parse(hi)?));
                    }
                    [name, ">=", lo] => {
                        bounds.insert(name.to_string(), (parse(lo)?, f64::INFINITY));
                    }
                    _ => return Err(perr(line, "unsupported bound")),
                }
            }
            Section::Binaries => binaries.extend(l.split_whitespace().map(str::to_string)),
        }
    }
    if section != Section::End {
        return Err(perr(text.lines().count(), "missing End"));
    }

    // Variable layout follows the naming scheme.
    let mut n_cells = 0;
    let mut n_opts: Vec<usize> = Vec::new();
    let mut has_t = false;
    let all_names = bounds.keys().chain(binaries.iter());
    for name in all_names {
        match role_of(name, 0)? {
            VarRole::Load { cell } => n_cells = n_cells.max(cell + 1),
            VarRole::Interference { ue, option } | VarRole::Choice { ue, option } => {
                if n_opts.len() <= ue {
                    n_opts.resize(ue + 1, 0);
                }
                n_opts[ue] = n_opts[ue].max(option + 1);
            }
            VarRole::Epigraph => has_t = true,
        }
    }
    let mut variables: Vec<Variable> = Vec::new();
    let mut push = |name: String, binary: bool| -> Result<()> {
        let role = role_of(&name, 0)?;
        let (lower, upper) = if binary {
            if !binaries.contains(&name) {
                return Err(perr(0, format!("{name} is not declared binary")));
            }
            (0.0, 1.0)
        } else {
            *bounds
                .get(&name)
                .ok_or_else(|| perr(0, format!("missing bound for {name}")))?
        };
        variables.push(Variable {
            name,
            role,
            lower,
            upper,
            binary,
        });
        Ok(())
    };
    for i in 0..n_cells {
        push(format!("x_{i}"), false)?;
    }
    for (j, &c) in n_opts.iter().enumerate() {
        for l in 0..c {
            push(format!("w_{j}_{l}"), false)?;
            push(format!("k_{j}_{l}"), true)?;
        }
    }
    if has_t {
        push("t".into(), false)?;
    }
    let index: HashMap<&str, usize> = variables
        .iter()
        .enumerate()
        .map(|(k, v)| (v.name.as_str(), k))
        .collect();
    let resolve = |terms: &[(String, f64)], line: usize| -> Result<Vec<(usize, f64)>> {
        terms
            .iter()
            .map(|(n, c)| {
                index
                    .get(n.as_str())
                    .map(|&v| (v, *c))
                    .ok_or_else(|| perr(line, format!("undeclared variable {n}")))
            })
            .collect()
    };

    let mut options: Vec<Vec<Vec<CellId>>> = n_opts.iter().map(|&c| vec![Vec::new(); c]).collect();
    let mut constraints = Vec::with_capacity(rows.len());
    let mut link_seen = vec![Vec::new(); n_opts.len()];
    for (j, &c) in n_opts.iter().enumerate() {
        link_seen[j] = vec![false; c];
    }
    let mut lb = false;
    for row in &rows {
        let terms = resolve(&row.terms, row.line)?;
        let first = variables[terms
            .first()
            .ok_or_else(|| perr(row.line, "empty row"))?
            .0]
            .role;
        let role = match (row.sense, first) {
            (Sense::Eq, VarRole::Load { cell }) => {
                for &(v, _) in &terms[1..] {
                    if let VarRole::Choice { ue, option } = variables[v].role {
                        options[ue][option].push(cell);
                    }
                }
                RowRole::LoadDefinition { cell }
            }
            (Sense::Eq, VarRole::Choice { ue, .. }) => RowRole::Selection { ue },
            (Sense::Ge, VarRole::Interference { ue, option }) => {
                if link_seen[ue][option] {
                    lb = true;
                    RowRole::InterferenceFloor { ue, option }
                } else {
                    link_seen[ue][option] = true;
                    RowRole::InterferenceLink { ue, option }
                }
            }
            (Sense::Ge, VarRole::Epigraph) => {
                let cell = terms
                    .iter()
                    .find_map(|&(v, _)| match variables[v].role {
                        VarRole::Load { cell } => Some(cell),
                        _ => None,
                    })
                    .ok_or_else(|| perr(row.line, "epigraph row without a load"))?;
                RowRole::Epigraph { cell }
            }
            _ => return Err(perr(row.line, "row does not belong to this model family")),
        };
        constraints.push(Constraint {
            terms,
            sense: row.sense,
            rhs: row.rhs,
            role,
        });
    }
    let cost = resolve(&cost_terms, 0)?;
    let objective = if has_t {
        Objective::MaxLoad
    } else {
        Objective::SumLoad
    };
    Ok(MilpModel::assemble(
        objective,
        n_cells,
        options,
        variables,
        constraints,
        cost,
        lb,
    ))
}
