use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// One row of a margins table: estimate against bound at `(t, ξ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginRow {
    pub check: String,
    pub t: f64,
    pub xi: Vec<f64>,
    pub estimate: f64,
    pub std_error: f64,
    pub bound: f64,
    /// `bound − estimate`
    pub margin: f64,
    /// `margin ≥ −3σ`
    pub within: bool,
}

/// CSV with header `check,t,xi,estimate,std_error,bound,margin,within`;
/// multi-dimensional frequencies are joined with `;`.
pub fn write_margins_csv<W: Write>(rows: &[MarginRow], mut w: W) -> Result<()> {
    writeln!(w, "check,t,xi,estimate,std_error,bound,margin,within")?;
    for r in rows {
        let xi: Vec<String> = r.xi.iter().map(|v| v.to_string()).collect();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.check,
            r.t,
            xi.join(";"),
            r.estimate,
            r.std_error,
            r.bound,
            r.margin,
            r.within
        )?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_rows() {
        let row = MarginRow {
            check: "char_bound".into(),
            t: 0.5,
            xi: vec![1.0, 2.0],
            estimate: 0.25,
            std_error: 0.01,
            bound: 0.5,
            margin: 0.25,
            within: true,
        };
        let mut out = Vec::new();
        write_margins_csv(&[row], &mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "check,t,xi,estimate,std_error,bound,margin,within\nchar_bound,0.5,1;2,0.25,0.01,0.5,0.25,true\n"
        );
    }
}
