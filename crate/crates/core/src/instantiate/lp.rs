use std::fmt::Write;

use super::{ConcreteModel, LinearExpr};
use crate::model::{Sense, VarType};

/// Writes the model in CPLEX LP format (ASCII, `\n` line endings).
pub fn emit_lp(model: &ConcreteModel) -> String {
    let names: Vec<String> = model.variables.iter().map(|v| v.lp_name()).collect();
    let mut out = String::new();
    out.push_str(match model.sense {
        Sense::Max => "Maximize\n",
        Sense::Min => "Minimize\n",
    });
    let _ = writeln!(out, "obj: {}", terms(&model.objective, &names, true));

    out.push_str("Subject To\n");
    for c in &model.constraints {
        let _ = writeln!(
            out,
            "{}: {} {} {}",
            c.name,
            terms(&c.lhs, &names, false),
            c.relation.symbol(),
            num(c.rhs)
        );
    }

    let continuous_or_integer: Vec<&str> = model
        .variables
        .iter()
        .filter(|v| v.vartype != VarType::Binary)
        .map(|v| names[v.column_id].as_str())
        .collect();
    if !continuous_or_integer.is_empty() {
        out.push_str("Bounds\n");
        for n in &continuous_or_integer {
            let _ = writeln!(out, "{n} >= 0");
        }
    }
    section(&mut out, "Generals", model, &names, VarType::Integer);
    section(&mut out, "Binaries", model, &names, VarType::Binary);
    out.push_str("End\n");
    out
}

fn section(out: &mut String, title: &str, model: &ConcreteModel, names: &[String], kind: VarType) {
    let members: Vec<&str> = model
        .variables
        .iter()
        .filter(|v| v.vartype == kind)
        .map(|v| names[v.column_id].as_str())
        .collect();
    if members.is_empty() {
        return;
    }
    out.push_str(title);
    out.push('\n');
    out.push_str(&members.join(" "));
    out.push('\n');
}

fn num(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else {
        format!("{v}")
    }
}

fn terms(expr: &LinearExpr, names: &[String], with_constant: bool) -> String {
    let mut out = String::new();
    for (&col, &c) in &expr.coefficients {
        let mag = c.abs();
        let coef = if mag == 1.0 {
            String::new()
        } else {
            format!("{} ", num(mag))
        };
        if out.is_empty() {
            if c < 0.0 {
                out.push_str("- ");
            }
        } else {
            out.push_str(if c < 0.0 { " - " } else { " + " });
        }
        out.push_str(&coef);
        out.push_str(&names[col]);
    }
    if with_constant && expr.constant != 0.0 {
        let sign = if expr.constant < 0.0 { "-" } else { "+" };
        if out.is_empty() {
            out = num(expr.constant);
        } else {
            let _ = write!(out, " {sign} {}", num(expr.constant.abs()));
        }
    }
    if out.is_empty() {
        // LP format needs at least one term
        match names.first() {
            Some(n) => out = format!("0 {n}"),
            None => out = "0".into(),
        }
    }
    out
}
