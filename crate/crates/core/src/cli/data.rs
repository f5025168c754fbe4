//! Plain-text data files.
//!
//! ```text
//! # comment
//! d k
//! b tau v_11 ... v_1k ... v_dk     (one row per observation)
//! ```
//!
//! `b` is `1` (below or at the threshold) or `-1`; the design matrix is
//! row-major. Blank lines and anything after `#` are ignored.

use crate::error::{Error, Result};
use crate::expfam::{Bit, CensoredDataset, Observation, ObservationDesign};

fn invalid(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::InvalidInput(format!("data line {line}: {msg}"))
}

pub fn parse_data(text: &str) -> Result<CensoredDataset> {
    let mut shape: Option<(usize, usize)> = None;
    let mut observations = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let Some((d, k)) = shape else {
            let [d, k] = fields[..] else {
                return Err(invalid(line_no, "expected header `d k`"));
            };
            let parse = |s: &str| s.parse::<usize>().map_err(|e| invalid(line_no, format!("'{s}': {e}")));
            shape = Some((parse(d)?, parse(k)?));
            continue;
        };
        if fields.len() != 2 + d * k {
            return Err(invalid(
                line_no,
                format!(
                    "expected {} fields (b, tau, {} design entries), found {}",
                    2 + d * k,
                    d * k,
                    fields.len()
                ),
            ));
        }
        let bit = fields[0]
            .parse::<i64>()
            .map_err(|e| invalid(line_no, format!("bit '{}': {e}", fields[0])))
            .and_then(|b| Bit::from_sign(b).map_err(|e| invalid(line_no, e)))?;
        let nums = fields[1..]
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| invalid(line_no, format!("'{s}': {e}"))))
            .collect::<Result<Vec<_>>>()?;
        let design = ObservationDesign::new(d, k, &nums[1..], nums[0]).map_err(|e| invalid(line_no, e))?;
        observations.push(Observation { bit, design });
    }
    if shape.is_none() {
        return Err(Error::InvalidInput("data file is empty".into()));
    }
    CensoredDataset::new(observations)
}
