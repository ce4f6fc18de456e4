//! Renderers for polynomials, decompositions and ledgers.
//!
//! Every renderer walks ordered containers only, so equal inputs give
//! byte-identical output.

use fermisum::qseries::LaurentPolyQ;
use num_traits::{One, Signed};
use serde_json::{json, Value};

/// A polynomial in `q` as LaTeX, lowest exponent first.
pub fn latex_poly(p: &LaurentPolyQ) -> String {
    if p.is_zero() {
        return "0".into();
    }
    let mut out = String::new();
    for (i, (e, c)) in p.terms().enumerate() {
        let mag = c.abs();
        if i == 0 {
            if c.is_negative() {
                out.push('-');
            }
        } else {
            out.push_str(if c.is_negative() { " - " } else { " + " });
        }
        let mono = match e {
            0 => String::new(),
            1 => "q".into(),
            _ => format!("q^{{{e}}}"),
        };
        if mono.is_empty() {
            out.push_str(&mag.to_string());
        } else if mag.is_one() {
            out.push_str(&mono);
        } else {
            out.push_str(&format!("{mag}{mono}"));
        }
    }
    out
}

/// `V(λ)` with `λ` written in fundamental weights, as LaTeX.
pub fn latex_weight(lambda: &[i64]) -> String {
    let parts: Vec<String> = lambda
        .iter()
        .enumerate()
        .filter(|(_, &x)| x != 0)
        .map(|(a, &x)| match x {
            1 => format!("\\Lambda_{}", a + 1),
            _ => format!("{x}\\Lambda_{}", a + 1),
        })
        .collect();
    if parts.is_empty() {
        "V(0)".into()
    } else {
        format!("V({})", parts.join(" + "))
    }
}

/// `V(λ)` with `λ` written in fundamental weights, as plain text.
pub fn text_weight(lambda: &[i64]) -> String {
    let parts: Vec<String> = lambda
        .iter()
        .enumerate()
        .filter(|(_, &x)| x != 0)
        .map(|(a, &x)| match x {
            1 => format!("Λ{}", a + 1),
            _ => format!("{x}Λ{}", a + 1),
        })
        .collect();
    if parts.is_empty() {
        "V(0)".into()
    } else {
        format!("V({})", parts.join("+"))
    }
}

/// `Σ_λ p_λ(q) V(λ)` as a LaTeX `align*` block with one summand per line.
pub fn latex_decomposition(heading: &str, rows: &[(Vec<i64>, LaurentPolyQ)]) -> String {
    let mut out = String::from("\\begin{align*}\n");
    for (i, (lam, p)) in rows.iter().enumerate() {
        let coef = if p.is_one_monomial() {
            String::new()
        } else if p.len() == 1 {
            format!("{}\\,", latex_poly(p))
        } else {
            format!("({})\\,", latex_poly(p))
        };
        let lead = if i == 0 { format!("{heading} &= ") } else { "&+ ".into() };
        let end = if i + 1 == rows.len() { "" } else { " \\\\" };
        out.push_str(&format!("{lead}{coef}{}{end}\n", latex_weight(lam)));
    }
    if rows.is_empty() {
        out.push_str(&format!("{heading} &= 0\n"));
    }
    out.push_str("\\end{align*}\n");
    out
}

/// Polynomial payload with both the coefficient map and a readable form.
pub fn poly_json(p: &LaurentPolyQ) -> Value {
    json!({ "terms": p.to_json(), "text": p.to_string(), "at_q_1": p.eval_at_one().to_string() })
}

/// Writes rows as CSV with a header.
pub fn csv_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

/// `exponent,coefficient` rows of a polynomial.
pub fn poly_rows(p: &LaurentPolyQ) -> Vec<Vec<String>> {
    p.terms().map(|(e, c)| vec![e.to_string(), c.to_string()]).collect()
}

trait MonomialTest {
    fn is_one_monomial(&self) -> bool;
}

impl MonomialTest for LaurentPolyQ {
    fn is_one_monomial(&self) -> bool {
        self.len() == 1 && self.coeff(0).is_one()
    }
}
