/// Parses budget lists such as `1,2,4`, `1-100` or `1-10,20,50-52`.
pub fn parse_budgets(spec: &str) -> Result<Vec<usize>, String> {
    let mut out = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let num = |s: &str| {
            s.trim()
                .parse::<usize>()
                .ok()
                .filter(|&b| b > 0)
                .ok_or_else(|| format!("invalid budget `{s}`"))
        };
        match part.split_once('-') {
            Some((lo, hi)) => {
                let (lo, hi) = (num(lo)?, num(hi)?);
                if lo > hi {
                    return Err(format!("empty range `{part}`"));
                }
                out.extend(lo..=hi);
            }
            None => out.push(num(part)?),
        }
    }
    if out.is_empty() {
        return Err("no budgets given".into());
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists_and_ranges() {
        assert_eq!(parse_budgets("1,2,4").unwrap(), vec![1, 2, 4]);
        assert_eq!(parse_budgets("3-5").unwrap(), vec![3, 4, 5]);
        assert_eq!(parse_budgets("8, 1-2,2").unwrap(), vec![1, 2, 8]);
        for bad in ["", "0", "5-2", "x", "1-"] {
            assert!(parse_budgets(bad).is_err(), "{bad}");
        }
    }
}
