//! CPLEX LP text format writer and a reader for the subset it writes.

use std::fmt::Write as _;

use super::{Constraint, MilpModel, Sense, VarKind, Variable};
use crate::error::{ParcError, Result};

const TERMS_PER_LINE: usize = 4;

/// 17 significant digits, enough to round-trip any `f64`.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_terms(out: &mut String, m: &MilpModel, terms: &[(usize, f64)]) {
    for (k, &(v, a)) in terms.iter().enumerate() {
        if k > 0 && k % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let sign = if a.is_sign_negative() { '-' } else { '+' };
        let _ = write!(out, " {sign} {} {}", num(a.abs()), m.variables[v].name);
    }
}

fn write_bound(out: &mut String, v: &Variable) {
    let name = &v.name;
    let _ = match (v.lower.is_finite(), v.upper.is_finite()) {
        (true, true) => writeln!(out, " {} <= {name} <= {}", num(v.lower), num(v.upper)),
        (true, false) => writeln!(out, " {name} >= {}", num(v.lower)),
        (false, true) => writeln!(out, " -inf <= {name} <= {}", num(v.upper)),
        (false, false) => writeln!(out, " {name} free"),
    };
}

/// Renders `milp` in CPLEX LP format. Every variable appears in `Bounds`
/// in declaration order, so reading the text back restores the model.
pub fn export_lp(milp: &MilpModel) -> String {
    let mut out = String::from("\\ PARC tracking model\nMinimize\n obj:");
    write_terms(&mut out, milp, &milp.objective);
    out.push_str("\nSubject To\n");
    for c in &milp.constraints {
        let _ = write!(out, " {}:", c.name);
        write_terms(&mut out, milp, &c.terms);
        let _ = writeln!(out, " {} {}", c.sense.symbol(), num(c.rhs));
    }
    out.push_str("Bounds\n");
    for v in &milp.variables {
        write_bound(&mut out, v);
    }
    let binaries: Vec<&str> = milp
        .variables
        .iter()
        .filter(|v| v.kind == VarKind::Binary)
        .map(|v| v.name.as_str())
        .collect();
    if !binaries.is_empty() {
        out.push_str("Binaries\n");
        for chunk in binaries.chunks(8) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
    }
    out.push_str("End\n");
    out
}

fn lp_err<T>(line: usize, msg: impl Into<String>) -> Result<T> {
    Err(ParcError::LpFormat { line, msg: msg.into() })
}

fn parse_num(tok: &str, line: usize) -> Result<f64> {
    match tok.to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" | "+infinity" => Ok(f64::INFINITY),
        "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
        _ => tok
            .parse()
            .or_else(|_| lp_err(line, format!("expected a number, found {tok:?}"))),
    }
}

fn is_number(tok: &str) -> bool {
    tok.parse::<f64>().is_ok() || matches!(tok.to_ascii_lowercase().as_str(), "inf" | "+inf" | "-inf")
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Preamble,
    Objective,
    Constraints,
    Bounds,
    Binaries,
    End,
}

/// `(line, token)` pairs of one section.
type Tokens = Vec<(usize, String)>;

fn is_sense(tok: &str) -> bool {
    matches!(tok, "<=" | ">=" | "=" | "<" | ">" | "=<" | "=>")
}

/// A row is complete once a sense is followed by a number.
fn row_is_complete(toks: &[(usize, String)]) -> bool {
    toks.iter()
        .position(|t| is_sense(&t.1))
        .is_some_and(|p| toks[p + 1..].iter().any(|t| is_number(&t.1)))
}

/// Linear expression `[+-] [coef] name ...` to `(name, coefficient)` pairs.
fn parse_terms(toks: &[(usize, String)]) -> Result<Vec<(String, f64)>> {
    let mut terms = Vec::new();
    let mut k = 0;
    while k < toks.len() {
        let mut sign = 1.0;
        while k < toks.len() && (toks[k].1 == "+" || toks[k].1 == "-") {
            if toks[k].1 == "-" {
                sign = -sign;
            }
            k += 1;
        }
        let Some((line, tok)) = toks.get(k) else {
            return lp_err(toks.last().map_or(0, |t| t.0), "dangling sign");
        };
        let (coef, name_at) = if is_number(tok) {
            (parse_num(tok, *line)?, k + 1)
        } else {
            (1.0, k)
        };
        let Some((line, name)) = toks.get(name_at) else {
            return lp_err(*line, "coefficient without variable");
        };
        if is_number(name) || name == "+" || name == "-" {
            return lp_err(*line, format!("expected a variable name, found {name:?}"));
        }
        terms.push((name.clone(), sign * coef));
        k = name_at + 1;
    }
    Ok(terms)
}

/// Reads LP text as written by [`export_lp`]. Variables are declared in the
/// order of the `Bounds` section, then in order of first use.
pub fn parse_lp(text: &str) -> Result<MilpModel> {
    let mut section = Section::Preamble;
    let mut objective: Tokens = Vec::new();
    let mut constraints: Vec<Tokens> = Vec::new();
    let mut bounds: Vec<Tokens> = Vec::new();
    let mut binaries: Tokens = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('\\').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let lower = line.to_ascii_lowercase();
        let header = match lower.as_str() {
            "minimize" | "minimise" | "min" => Some(Section::Objective),
            "maximize" | "maximise" | "max" => return lp_err(line_no, "only minimization is supported"),
            "subject to" | "such that" | "st" | "s.t." => Some(Section::Constraints),
            "bounds" => Some(Section::Bounds),
            "binaries" | "binary" | "bin" => Some(Section::Binaries),
            "end" => Some(Section::End),
            _ => None,
        };
        if let Some(h) = header {
            section = h;
            continue;
        }
        // keep "name:" separate from what follows
        let spaced = line.replace(':', ": ").replace("<=", " <= ").replace(">=", " >= ");
        let spaced = spaced.replace("< =", "<=").replace("> =", ">=");
        let mut toks: Tokens = Vec::new();
        for t in spaced.split_whitespace() {
            // "-x" is a sign and a name; "-3" and "-inf" are numbers
            match t.get(..1).map(|s| (s, &t[1..])) {
                Some((sign @ ("+" | "-"), rest)) if !rest.is_empty() && !is_number(t) => {
                    toks.push((line_no, sign.to_string()));
                    toks.push((line_no, rest.to_string()));
                }
                _ => toks.push((line_no, t.to_string())),
            }
        }
        match section {
            Section::Preamble => return lp_err(line_no, "content before the objective section"),
            Section::Objective => objective.extend(toks),
            Section::Constraints => {
                let starts_new = toks[0].1.ends_with(':')
                    || constraints.last().map_or(true, |prev| row_is_complete(prev));
                if starts_new {
                    constraints.push(toks);
                } else {
                    constraints.last_mut().expect("nonempty").extend(toks);
                }
            }
            Section::Bounds => bounds.push(toks),
            Section::Binaries => binaries.extend(toks),
            Section::End => return lp_err(line_no, "content after End"),
        }
    }

    let mut m = MilpModel::default();
    for b in &bounds {
        let line = b[0].0;
        let t: Vec<&str> = b.iter().map(|x| x.1.as_str()).collect();
        let (name, lower, upper) = match t.as_slice() {
            [lo, "<=", name, "<=", hi] => (*name, parse_num(lo, line)?, parse_num(hi, line)?),
            [name, ">=", lo] => (*name, parse_num(lo, line)?, f64::INFINITY),
            [name, "<=", hi] => (*name, 0.0, parse_num(hi, line)?),
            [name, "=", v] => (*name, parse_num(v, line)?, parse_num(v, line)?),
            [name, free] if free.eq_ignore_ascii_case("free") => (*name, f64::NEG_INFINITY, f64::INFINITY),
            _ => return lp_err(line, "unrecognized bound"),
        };
        if m.var_index(name).is_some() {
            return lp_err(line, format!("variable {name} bounded twice"));
        }
        m.variables.push(Variable {
            name: name.to_string(),
            kind: VarKind::Continuous,
            lower,
            upper,
        });
    }
    let index = |m: &mut MilpModel, name: &str| -> usize {
        m.var_index(name).unwrap_or_else(|| {
            m.variables.push(Variable {
                name: name.to_string(),
                kind: VarKind::Continuous,
                lower: 0.0,
                upper: f64::INFINITY,
            });
            m.variables.len() - 1
        })
    };

    let obj_toks: &[(usize, String)] = match objective.first() {
        Some((_, t)) if t.ends_with(':') => &objective[1..],
        _ => &objective[..],
    };
    for (name, a) in parse_terms(obj_toks)? {
        let v = index(&mut m, &name);
        m.objective.push((v, a));
    }
    for toks in &constraints {
        let line = toks[0].0;
        let (name, body) = if toks[0].1.ends_with(':') {
            (toks[0].1.trim_end_matches(':').to_string(), &toks[1..])
        } else {
            (format!("c{}", m.constraints.len() + 1), &toks[..])
        };
        let Some(pos) = body.iter().position(|t| is_sense(&t.1)) else {
            return lp_err(line, format!("constraint {name} has no sense"));
        };
        let sense = match body[pos].1.as_str() {
            "<=" | "<" | "=<" => Sense::Le,
            ">=" | ">" | "=>" => Sense::Ge,
            _ => Sense::Eq,
        };
        let rhs_toks = &body[pos + 1..];
        let rhs = match rhs_toks {
            [(l, v)] => parse_num(v, *l)?,
            [(l, s), (_, v)] if s == "-" || s == "+" => {
                let v = parse_num(v, *l)?;
                if s == "-" {
                    -v
                } else {
                    v
                }
            }
            _ => return lp_err(line, format!("constraint {name} needs a constant right-hand side")),
        };
        let mut terms = Vec::new();
        for (var, a) in parse_terms(&body[..pos])? {
            terms.push((index(&mut m, &var), a));
        }
        m.constraints.push(Constraint { name, terms, sense, rhs });
    }
    for (line, name) in &binaries {
        let Some(v) = m.var_index(name) else {
            return lp_err(*line, format!("binary {name} is not used"));
        };
        let var = &mut m.variables[v];
        var.kind = VarKind::Binary;
        if !bounds.iter().any(|b| b.iter().any(|t| &t.1 == name)) {
            var.lower = 0.0;
            var.upper = 1.0;
        }
    }
    m.validate()?;
    Ok(m)
}
