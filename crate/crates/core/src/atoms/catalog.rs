//! String names for atom laws, as used in config files.
//!
//! Grammar (`base=` always consumes the rest of the name, so bases nest):
//!
//! ```text
//! rademacher | complex-bernoulli | gaussian | complex-gaussian
//! three-point[:kurtosis=K]
//! gauss-divisible:t=T:base=NAME
//! truncated:K=R:base=NAME
//! complex:NAME
//! match4[:t=T]:base=NAME
//! match3:base=NAME
//! ```

use std::str::FromStr;

use serde::Serialize;

use super::{
    complexify, gauss_divisible_match, solve_third_order_match, truncate_standardize,
    AtomDistribution,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub description: &'static str,
}

/// The named atom laws and constructors.
pub fn catalog() -> Vec<CatalogEntry> {
    let e = |name, description| CatalogEntry { name, description };
    vec![
        e("rademacher", "uniform on {-1, +1}"),
        e("complex-bernoulli", "uniform on {±1 ± i}/√2, iid real and imaginary parts"),
        e("three-point", "{-√3, 0, √3} with probabilities {1/6, 2/3, 1/6}"),
        e("three-point:kurtosis=K", "{-√K, 0, √K} with probabilities {1/2K, 1-1/K, 1/2K}"),
        e("gaussian", "standard real Gaussian"),
        e("complex-gaussian", "standard circular complex Gaussian (Wishart ensemble)"),
        e("gauss-divisible:t=T:base=NAME", "(1-t)^{1/2} base + t^{1/2} Gaussian of the base's field"),
        e("truncated:K=R:base=NAME", "base conditioned on |x| <= R, re-standardized"),
        e("complex:NAME", "iid real and imaginary parts, each distributed as NAME/√2"),
        e("match4[:t=T]:base=NAME", "Gauss-divisible law matching NAME to fourth order"),
        e("match3:base=NAME", "bounded discrete law matching NAME to third order"),
    ]
}

impl FromStr for AtomDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse(s.trim())
    }
}

impl AtomDistribution {
    /// Resolves a catalog name.
    pub fn from_name(name: &str) -> Result<Self> {
        name.parse()
    }
}

fn parse(name: &str) -> Result<AtomDistribution> {
    let unknown = || Error::UnknownAtom(name.to_string());
    let (head, rest) = match name.split_once(':') {
        Some((h, r)) => (h, Some(r)),
        None => (name, None),
    };
    let dist = match (head, rest) {
        ("rademacher", None) => AtomDistribution::rademacher(),
        ("complex-bernoulli", None) => AtomDistribution::complex_bernoulli(),
        ("gaussian" | "real-gaussian", None) => AtomDistribution::standard_real_gaussian(),
        ("complex-gaussian" | "wishart", None) => AtomDistribution::standard_complex_gaussian(),
        ("three-point", None) => AtomDistribution::three_point(3.0)?,
        ("three-point", Some(r)) => {
            let (params, base) = split_params(r, name)?;
            if base.is_some() {
                return Err(unknown());
            }
            let k = required(&params, "kurtosis", name)?;
            AtomDistribution::three_point(k)?
        }
        ("gauss-divisible", Some(r)) => {
            let (params, base) = split_params(r, name)?;
            let t = required(&params, "t", name)?;
            let base = parse(base.ok_or_else(unknown)?)?;
            AtomDistribution::gauss_divisible(base, t)?
        }
        ("truncated", Some(r)) => {
            let (params, base) = split_params(r, name)?;
            let k = required(&params, "K", name)?;
            let base = parse(base.ok_or_else(unknown)?)?;
            truncate_standardize(&base, k)?
        }
        ("complex", Some(r)) => {
            let base = parse(r.strip_prefix("base=").unwrap_or(r))?;
            complexify(&base)?
        }
        ("match4", Some(r)) => {
            let (params, base) = split_params(r, name)?;
            let t = optional(&params, "t", name)?;
            let base = parse(base.ok_or_else(unknown)?)?;
            gauss_divisible_match(&base, t)?
        }
        ("match3", Some(r)) => {
            let (params, base) = split_params(r, name)?;
            if !params.is_empty() {
                return Err(unknown());
            }
            let base = parse(base.ok_or_else(unknown)?)?;
            solve_third_order_match(&base.moment_table(3)?)?.law
        }
        _ => return Err(unknown()),
    };
    Ok(dist.with_name(name))
}

/// Splits `k=v:k=v:base=REST` into parameters and the nested base name.
fn split_params<'a>(s: &'a str, full: &str) -> Result<(Vec<(&'a str, &'a str)>, Option<&'a str>)> {
    let mut params = Vec::new();
    let mut rest = s;
    loop {
        if let Some(base) = rest.strip_prefix("base=") {
            return Ok((params, Some(base)));
        }
        let (item, tail) = match rest.split_once(':') {
            Some((i, t)) => (i, Some(t)),
            None => (rest, None),
        };
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::UnknownAtom(full.to_string()))?;
        params.push((k, v));
        match tail {
            Some(t) => rest = t,
            None => return Ok((params, None)),
        }
    }
}

fn optional(params: &[(&str, &str)], key: &str, full: &str) -> Result<Option<f64>> {
    for (k, _) in params {
        if *k != key {
            return Err(Error::UnknownAtom(format!("{full} (unexpected parameter '{k}')")));
        }
    }
    params
        .iter()
        .find(|(k, _)| *k == key)
        .map(|(_, v)| {
            v.parse::<f64>().map_err(|_| {
                Error::InvalidArgument(format!("'{key}' in '{full}' is not a number: '{v}'"))
            })
        })
        .transpose()
}

fn required(params: &[(&str, &str)], key: &str, full: &str) -> Result<f64> {
    optional(params, key, full)?
        .ok_or_else(|| Error::InvalidArgument(format!("'{full}' is missing '{key}='")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atoms::{match_order, AtomKind};

    #[test]
    fn catalog_has_at_least_six_names() {
        assert!(catalog().len() >= 6);
    }

    #[test]
    fn plain_names() {
        for n in ["rademacher", "complex-bernoulli", "gaussian", "complex-gaussian", "three-point"] {
            let d = AtomDistribution::from_name(n).unwrap();
            assert_eq!(d.name(), n);
        }
        assert!(matches!(
            AtomDistribution::from_name("cauchy"),
            Err(Error::UnknownAtom(_))
        ));
    }

    #[test]
    fn nested_names() {
        let d = AtomDistribution::from_name("gauss-divisible:t=0.5:base=rademacher").unwrap();
        assert!(matches!(d.kind(), AtomKind::GaussDivisible { t, .. } if *t == 0.5));
        let d = AtomDistribution::from_name("truncated:K=5:base=gaussian").unwrap();
        assert!(matches!(d.kind(), AtomKind::Truncated(_)));
        let d = AtomDistribution::from_name(
            "truncated:K=4:base=gauss-divisible:t=0.25:base=complex:three-point",
        )
        .unwrap();
        assert!(!d.is_real());
        let c = AtomDistribution::from_name("complex:rademacher").unwrap();
        assert!(match_order(&c, &AtomDistribution::complex_bernoulli(), 6).unwrap().matched);
        let m = AtomDistribution::from_name("match4:t=0.1:base=three-point").unwrap();
        assert!(match_order(&m, &AtomDistribution::three_point(3.0).unwrap(), 4).unwrap().matched);
        let m = AtomDistribution::from_name("match3:base=complex-gaussian").unwrap();
        assert!(match_order(&m, &AtomDistribution::standard_complex_gaussian(), 3).unwrap().matched);
    }

    #[test]
    fn malformed_names() {
        assert!(AtomDistribution::from_name("gauss-divisible:t=0.5").is_err());
        assert!(AtomDistribution::from_name("gauss-divisible:t=abc:base=gaussian").is_err());
        assert!(AtomDistribution::from_name("truncated:R=5:base=gaussian").is_err());
        assert!(AtomDistribution::from_name("gauss-divisible:t=1.5:base=gaussian").is_err());
        assert!(AtomDistribution::from_name("match4:base=rademacher").is_err());
    }
}
