use std::io::BufRead;

use super::{binarize, LabeledDataset, RawDataset, RawSample};
use crate::error::{Error, Result};

/// Parses `<label> <index>:<value> ...` lines.
///
/// Labels are sign-mapped (positive to +1, zero or negative to -1), indices
/// are 1-based in the text and 0-based in the result. Repeated indices within
/// a line collapse to one entry, the last value wins. Blank lines and `#`
/// comments are ignored, as are `qid:` tokens.
///
/// `D` is `max index + 1` unless `universe_size` overrides it.
pub fn parse_svmlight<R: BufRead>(reader: R, universe_size: Option<u64>) -> Result<RawDataset> {
    let mut samples = Vec::new();
    let mut labels = Vec::new();
    let mut max_index: Option<u32> = None;

    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let content = match line.find('#') {
            Some(pos) => &line[..pos],
            None => &line[..],
        };
        let mut tokens = content.split_whitespace();
        let Some(label_tok) = tokens.next() else {
            continue;
        };
        let label: f64 = label_tok.parse().map_err(|_| Error::Parse {
            line: lineno,
            message: format!("label {label_tok:?} is not a number"),
        })?;
        if label.is_nan() {
            return Err(Error::Parse {
                line: lineno,
                message: "label is NaN".into(),
            });
        }
        labels.push(if label > 0.0 { 1i8 } else { -1 });

        let mut features = Vec::new();
        for tok in tokens {
            if tok.starts_with("qid:") {
                continue;
            }
            let (idx, val) = tok.split_once(':').ok_or_else(|| Error::Parse {
                line: lineno,
                message: format!("expected <index>:<value>, found {tok:?}"),
            })?;
            let idx: i64 = idx.parse().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("index {idx:?} is not an integer"),
            })?;
            if idx <= 0 || idx > u32::MAX as i64 {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("index {idx} out of range (indices are 1-based)"),
                });
            }
            let val: f64 = val.parse().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("value {val:?} is not a number"),
            })?;
            features.push(((idx - 1) as u32, val));
        }
        // stable sort keeps file order among duplicates, so the last one wins
        features.sort_by_key(|&(i, _)| i);
        let mut deduped: Vec<(u32, f64)> = Vec::with_capacity(features.len());
        for (i, v) in features {
            match deduped.last_mut() {
                Some(last) if last.0 == i => last.1 = v,
                _ => deduped.push((i, v)),
            }
        }
        if let Some(&(i, _)) = deduped.last() {
            max_index = Some(max_index.map_or(i, |m| m.max(i)));
        }
        samples.push(RawSample { features: deduped });
    }

    if samples.is_empty() {
        return Err(Error::NoSamples);
    }
    let observed = max_index.map_or(1, |m| m as u64 + 1);
    let universe_size = match universe_size {
        Some(d) if d < observed => {
            return Err(Error::invalid(format!(
                "universe size {d} is smaller than the largest index + 1 ({observed})"
            )))
        }
        Some(d) => d,
        None => observed,
    };
    Ok(RawDataset {
        samples,
        labels,
        universe_size,
    })
}

/// `parse_svmlight` followed by `binarize`.
pub fn load_svmlight<R: BufRead>(reader: R, universe_size: Option<u64>) -> Result<LabeledDataset> {
    binarize(&parse_svmlight(reader, universe_size)?)
}
