use super::{Expr, FormulaAst};

/// Canonical text for one formula: explicit `*`, merged sums, minimal parens.
pub fn print_formula(ast: &FormulaAst) -> String {
    match ast {
        FormulaAst::Expr(e) => print_expr(e),
        FormulaAst::Compare(chain) => {
            let mut out = print_expr(&chain.operands[0]);
            for (rel, rhs) in chain.relations.iter().zip(&chain.operands[1..]) {
                out.push(' ');
                out.push_str(rel.symbol());
                out.push(' ');
                out.push_str(&print_expr(rhs));
            }
            out
        }
    }
}

/// Joins several segments back into one comma-separated function string.
pub fn print_formulas(asts: &[FormulaAst]) -> String {
    asts.iter().map(print_formula).collect::<Vec<_>>().join(", ")
}

pub fn print_expr(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(e, Prec::Additive, true, &mut out);
    out
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Prec {
    Additive = 0,
    Multiplicative = 1,
    Unary = 2,
    Atom = 3,
}

fn prec_of(e: &Expr) -> Prec {
    match e {
        Expr::Add(..) | Expr::Sub(..) => Prec::Additive,
        // a sum's body extends as far as a multiplicative term does
        Expr::Mul(..) | Expr::Div(..) | Expr::Sum { .. } => Prec::Multiplicative,
        Expr::Neg(_) => Prec::Unary,
        Expr::Number(_) | Expr::Ref { .. } => Prec::Atom,
    }
}

/// `min` is the loosest precedence allowed without parentheses; `tail` is
/// false when more multiplicative factors follow in the same term, in which
/// case a trailing `<sum>` would swallow them.
fn write_expr(e: &Expr, min: Prec, tail: bool, out: &mut String) {
    let needs_parens = prec_of(e) < min || (!tail && ends_with_sum(e));
    if needs_parens {
        out.push('(');
        write_bare(e, true, out);
        out.push(')');
    } else {
        write_bare(e, tail, out);
    }
}

fn ends_with_sum(e: &Expr) -> bool {
    match e {
        Expr::Sum { .. } => true,
        Expr::Mul(_, b) | Expr::Div(_, b) => ends_with_sum(b),
        Expr::Neg(a) => ends_with_sum(a),
        _ => false,
    }
}

fn write_bare(e: &Expr, tail: bool, out: &mut String) {
    match e {
        Expr::Number(v) => out.push_str(&format_number(*v)),
        Expr::Ref { name, subscripts } => {
            out.push_str(name);
            if !subscripts.is_empty() {
                out.push_str("_{");
                out.push_str(&subscripts.join(","));
                out.push('}');
            }
        }
        Expr::Add(a, b) | Expr::Sub(a, b) => {
            write_expr(a, Prec::Additive, true, out);
            out.push_str(if matches!(e, Expr::Add(..)) { " + " } else { " - " });
            write_expr(b, Prec::Multiplicative, true, out);
        }
        Expr::Mul(a, b) | Expr::Div(a, b) => {
            write_expr(a, Prec::Multiplicative, false, out);
            out.push_str(if matches!(e, Expr::Mul(..)) { " * " } else { " / " });
            if tail && matches!(**b, Expr::Sum { .. }) {
                write_bare(b, true, out);
            } else {
                write_expr(b, Prec::Unary, tail, out);
            }
        }
        Expr::Neg(a) => {
            out.push('-');
            write_expr(a, Prec::Unary, tail, out);
        }
        Expr::Sum { domain, body } => {
            out.push_str("<sum>_{");
            out.push_str(&domain.binding_list());
            out.push_str("} ");
            // a body that is itself a sum would be merged on re-parse
            if matches!(**body, Expr::Sum { .. }) {
                out.push('(');
                write_bare(body, true, out);
                out.push(')');
            } else {
                write_expr(body, Prec::Multiplicative, true, out);
            }
        }
    }
}

fn format_number(v: f64) -> String {
    // Display is the shortest string that round-trips
    format!("{v}")
}
