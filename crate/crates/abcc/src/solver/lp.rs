//! LP-format writer.
//!
//! Emits the sections Maximize / Subject To / Bounds / Generals / Binaries /
//! End with variables in declaration order. Coefficients are decimals with
//! up to 12 significant digits; a row with no terms is rendered as
//! `0 <first-variable> ...` so the document stays parseable.

use num::{BigRational, Signed};

use crate::mip::{MipModel, VarKind};
use crate::numfmt::decimal_significant;

const COEFF_DIGITS: usize = 12;

fn push_coeff(out: &mut String, first: bool, coeff: &BigRational) {
    if first {
        if coeff.is_negative() {
            out.push_str("- ");
        }
    } else if coeff.is_negative() {
        out.push_str(" - ");
    } else {
        out.push_str(" + ");
    }
    out.push_str(&decimal_significant(&coeff.abs(), COEFF_DIGITS));
    out.push(' ');
}

fn push_terms(out: &mut String, model: &MipModel, terms: &[(usize, BigRational)]) {
    if terms.is_empty() {
        if let Some(first) = model.vars().first() {
            out.push_str("0 ");
            out.push_str(&first.name);
        }
        return;
    }
    for (i, (var, coeff)) in terms.iter().enumerate() {
        push_coeff(out, i == 0, coeff);
        out.push_str(&model.var(*var).name);
    }
}

/// Renders the model as an LP document.
pub fn export_lp(model: &MipModel) -> String {
    let mut out = String::new();
    out.push_str("Maximize\n");
    if !model.vars().is_empty() {
        out.push_str(" obj: ");
        push_terms(&mut out, model, model.objective());
        out.push('\n');
    }
    out.push_str("Subject To\n");
    for (i, row) in model.constraints().iter().enumerate() {
        out.push_str(&format!(" c{i}: "));
        push_terms(&mut out, model, &row.terms);
        out.push(' ');
        out.push_str(row.op.symbol());
        out.push(' ');
        out.push_str(&decimal_significant(&row.rhs, COEFF_DIGITS));
        out.push('\n');
    }
    out.push_str("Bounds\n");
    for var in model.vars() {
        out.push_str(&format!(
            " {} <= {} <= {}\n",
            decimal_significant(&var.lower, COEFF_DIGITS),
            var.name,
            decimal_significant(&var.upper, COEFF_DIGITS),
        ));
    }
    out.push_str("Generals\n");
    for var in model.vars() {
        if var.kind == VarKind::Integer {
            out.push_str(&format!(" {}\n", var.name));
        }
    }
    out.push_str("Binaries\n");
    for var in model.vars() {
        if var.kind == VarKind::Binary {
            out.push_str(&format!(" {}\n", var.name));
        }
    }
    out.push_str("End\n");
    out
}
