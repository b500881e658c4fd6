//! Per-token loss weights that up-weight numeric vocabulary tokens.

use std::collections::BTreeSet;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scale factors offered by the CLI.
pub const SCALE_PRESETS: [f64; 4] = [1.5, 2.0, 2.5, 3.5];

/// Which tokens count as numeric.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NumericTokenSpec {
    /// Plain base-10 digit strings (no sign, no leading zero) in `min..=max`.
    ValueRange {
        min: u64,
        max: u64,
    },
    ExplicitSet(BTreeSet<String>),
}

impl NumericTokenSpec {
    pub fn range(min: u64, max: u64) -> Result<Self> {
        if min > max {
            return Err(Error::InvalidConfig(format!("numeric range {min}-{max} is empty")));
        }
        Ok(NumericTokenSpec::ValueRange { min, max })
    }

    pub fn set<I: IntoIterator<Item = S>, S: Into<String>>(tokens: I) -> Result<Self> {
        let set: BTreeSet<String> = tokens.into_iter().map(Into::into).collect();
        if set.is_empty() {
            return Err(Error::InvalidConfig("numeric token set is empty".into()));
        }
        Ok(NumericTokenSpec::ExplicitSet(set))
    }

    pub fn is_numeric(&self, token: &str) -> bool {
        match self {
            NumericTokenSpec::ValueRange { min, max } => {
                let plain = !token.is_empty()
                    && token.bytes().all(|b| b.is_ascii_digit())
                    && (token == "0" || !token.starts_with('0'));
                plain && token.parse::<u64>().is_ok_and(|v| (*min..=*max).contains(&v))
            }
            NumericTokenSpec::ExplicitSet(set) => set.contains(token),
        }
    }
}

/// Parses `range:MIN-MAX` (or bare `MIN-MAX`) and `set:a,b,c`.
impl FromStr for NumericTokenSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("invalid numeric token spec `{s}`"));
        if let Some(list) = s.strip_prefix("set:") {
            return NumericTokenSpec::set(list.split(',').map(str::trim).filter(|t| !t.is_empty()));
        }
        let body = s.strip_prefix("range:").unwrap_or(s);
        let (lo, hi) = body.split_once('-').ok_or_else(bad)?;
        NumericTokenSpec::range(
            lo.trim().parse().map_err(|_| bad())?,
            hi.trim().parse().map_err(|_| bad())?,
        )
    }
}

/// `scale` at numeric positions, `1.0` elsewhere.
pub fn numeric_weight_mask<S: AsRef<str>>(tokens: &[S], spec: &NumericTokenSpec, scale: f64) -> Result<Vec<f64>> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::InvalidConfig(format!("scale {scale} must be positive")));
    }
    Ok(tokens
        .iter()
        .map(|t| if spec.is_numeric(t.as_ref()) { scale } else { 1.0 })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let wide = NumericTokenSpec::range(1, 1000).unwrap();
        assert_eq!(
            numeric_weight_mask(&["A", "12", "circle"], &wide, 2.0).unwrap(),
            vec![1.0, 2.0, 1.0]
        );
        assert_eq!(
            numeric_weight_mask(&["A", "12", "circle"], &wide, 1.0).unwrap(),
            vec![1.0; 3]
        );
        let narrow = NumericTokenSpec::range(1, 10).unwrap();
        assert_eq!(numeric_weight_mask(&["12"], &narrow, 2.0).unwrap(), vec![1.0]);
    }

    #[test]
    fn signs_and_leading_zeros_are_not_numeric() {
        let spec = NumericTokenSpec::range(0, 1000).unwrap();
        for t in ["-1", "+1", "01", "007", "1.5", " 1", "", "1e3", "１"] {
            assert!(!spec.is_numeric(t), "{t:?}");
        }
        assert!(spec.is_numeric("0"));
        assert!(!spec.is_numeric("99999999999999999999999"));
    }

    #[test]
    fn explicit_sets() {
        let spec = NumericTokenSpec::set(["▁1", "▁2"]).unwrap();
        assert_eq!(
            numeric_weight_mask(&["▁1", "1", "▁2"], &spec, 3.5).unwrap(),
            vec![3.5, 1.0, 3.5]
        );
        assert!(NumericTokenSpec::set(Vec::<String>::new()).is_err());
    }

    #[test]
    fn parsing_specs() {
        assert_eq!(
            "1-1000".parse::<NumericTokenSpec>().unwrap(),
            NumericTokenSpec::range(1, 1000).unwrap()
        );
        assert_eq!(
            "range:1-10".parse::<NumericTokenSpec>().unwrap(),
            NumericTokenSpec::range(1, 10).unwrap()
        );
        assert_eq!(
            "set:a, b".parse::<NumericTokenSpec>().unwrap(),
            NumericTokenSpec::set(["a", "b"]).unwrap()
        );
        assert!("10-1".parse::<NumericTokenSpec>().is_err());
        assert!("x".parse::<NumericTokenSpec>().is_err());
    }

    #[test]
    fn rejects_non_positive_scale() {
        let spec = NumericTokenSpec::range(1, 10).unwrap();
        assert!(numeric_weight_mask(&["1"], &spec, 0.0).is_err());
        assert!(numeric_weight_mask(&["1"], &spec, f64::NAN).is_err());
    }

    proptest! {
        #[test]
        fn flagged_positions_do_not_depend_on_scale(
            tokens in prop::collection::vec("[0-9a-z]{0,4}", 0..20),
            a in 0.1f64..10.0,
            b in 0.1f64..10.0,
        ) {
            let spec = NumericTokenSpec::range(1, 1000).unwrap();
            let ma = numeric_weight_mask(&tokens, &spec, a).unwrap();
            let mb = numeric_weight_mask(&tokens, &spec, b).unwrap();
            prop_assert_eq!(ma.len(), tokens.len());
            for (i, t) in tokens.iter().enumerate() {
                let flagged = spec.is_numeric(t);
                prop_assert_eq!(ma[i], if flagged { a } else { 1.0 });
                prop_assert_eq!(mb[i], if flagged { b } else { 1.0 });
            }
        }
    }
}
