//! Parsers for the small grammar shared by `--n`, `--A`, and `--B`:
//! comma-separated positive integers and inclusive `a..b` ranges.

use mclab_core::{Error, Result};

/// Parses `"4,8,16"`, `"4..128"`, or a mix of both; ranges are
/// inclusive. The result is sorted and deduplicated.
pub fn parse_index_list(text: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        if let Some((lo, hi)) = part.split_once("..") {
            let lo = parse_one(lo)?;
            let hi = parse_one(hi)?;
            if hi < lo {
                return Err(Error::Parse(format!("empty range {lo}..{hi}")));
            }
            out.extend(lo..=hi);
        } else {
            out.push(parse_one(part)?);
        }
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

fn parse_one(text: &str) -> Result<usize> {
    let text = text.trim();
    text.parse::<usize>()
        .map_err(|_| Error::Parse(format!("expected a positive integer, got {text:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists_ranges_and_mixes_parse() {
        assert_eq!(parse_index_list("4,8,16").unwrap(), vec![4, 8, 16]);
        assert_eq!(parse_index_list("4..7").unwrap(), vec![4, 5, 6, 7]);
        assert_eq!(
            parse_index_list("8..10, 4, 64").unwrap(),
            vec![4, 8, 9, 10, 64]
        );
        assert_eq!(parse_index_list("5,5,5").unwrap(), vec![5]);
    }

    #[test]
    fn garbage_is_rejected() {
        assert!(parse_index_list("").is_err());
        assert!(parse_index_list("4..").is_err());
        assert!(parse_index_list("7..4").is_err());
        assert!(parse_index_list("four").is_err());
        assert!(parse_index_list("4;8").is_err());
    }
}
