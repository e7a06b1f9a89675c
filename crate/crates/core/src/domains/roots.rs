//! Plain-text cache of Bessel derivative zeros.
//!
//! One record per line: `kind m k root`, with `kind` either `disk` (zeros of
//! `J_m'`) or `ball` (roots of `tan x = x`, `m = 0`). A `scan m limit` line
//! records how far the zeros of `J_m'` are known to be complete.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::bessel::{bessel_j_prime_zeros, spherical_j0_prime_zero};
use crate::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RootCache {
    disk: BTreeMap<usize, Vec<f64>>,
    disk_limit: BTreeMap<usize, f64>,
    ball: BTreeMap<usize, f64>,
}

impl RootCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// The `k`-th nonzero root of `tan x = x`, computed on a miss.
    pub fn ball_root(&mut self, k: usize) -> Result<f64> {
        if let Some(x) = self.ball.get(&k) {
            return Ok(*x);
        }
        let x = spherical_j0_prime_zero(k)?;
        self.ball.insert(k, x);
        Ok(x)
    }

    /// All positive zeros of `J_m'` below `limit`.
    pub fn disk_roots(&mut self, m: usize, limit: f64) -> Result<Vec<f64>> {
        let known = self.disk_limit.get(&m).copied().unwrap_or(0.0);
        if known < limit {
            let roots = bessel_j_prime_zeros(m, limit)?;
            self.disk.insert(m, roots);
            self.disk_limit.insert(m, limit);
        }
        Ok(self.disk[&m]
            .iter()
            .copied()
            .filter(|x| *x < limit)
            .collect())
    }

    pub fn len(&self) -> usize {
        self.ball.len() + self.disk.values().map(Vec::len).sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (m, limit) in &self.disk_limit {
            writeln!(out, "scan {m} {limit:.16e}").unwrap();
        }
        for (m, roots) in &self.disk {
            for (i, x) in roots.iter().enumerate() {
                writeln!(out, "disk {m} {} {x:.16e}", i + 1).unwrap();
            }
        }
        for (k, x) in &self.ball {
            writeln!(out, "ball 0 {k} {x:.16e}").unwrap();
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cache = RootCache::new();
        let mut disk: BTreeMap<usize, BTreeMap<usize, f64>> = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = || Error::Format(format!("root cache line {}: {line:?}", lineno + 1));
            let fields: Vec<&str> = line.split_whitespace().collect();
            let num = |i: usize| {
                fields
                    .get(i)
                    .and_then(|s| s.parse::<usize>().ok())
                    .ok_or_else(bad)
            };
            let real = |i: usize| {
                fields
                    .get(i)
                    .and_then(|s| s.parse::<f64>().ok())
                    .ok_or_else(bad)
            };
            match fields.first().copied() {
                Some("scan") if fields.len() == 3 => {
                    cache.disk_limit.insert(num(1)?, real(2)?);
                }
                Some("disk") if fields.len() == 4 => {
                    disk.entry(num(1)?).or_default().insert(num(2)?, real(3)?);
                }
                Some("ball") if fields.len() == 4 => {
                    cache.ball.insert(num(2)?, real(3)?);
                }
                _ => return Err(bad()),
            }
        }
        for (m, roots) in disk {
            // a gap in k would silently misnumber modes
            if roots.keys().copied().ne(1..=roots.len()) {
                return Err(Error::Format(format!(
                    "root cache: incomplete zero list for m = {m}"
                )));
            }
            cache.disk.insert(m, roots.into_values().collect());
        }
        // limits without their zeros are unusable
        cache.disk_limit.retain(|m, _| cache.disk.contains_key(m));
        Ok(cache)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip_preserves_bits() {
        let mut cache = RootCache::new();
        cache.ball_root(3).unwrap();
        cache.disk_roots(2, 15.0).unwrap();
        let back = RootCache::parse(&cache.to_text()).unwrap();
        assert_eq!(back, cache);
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(RootCache::parse("disk 1 x 3.0").is_err());
        assert!(RootCache::parse("disk 1 2 5.3\nscan 1 6.0").is_err());
        assert!(RootCache::parse("# comment\n\nball 0 1 4.493409457909064").is_ok());
    }

    #[test]
    fn narrower_queries_reuse_the_scan() {
        let mut cache = RootCache::new();
        let wide = cache.disk_roots(0, 20.0).unwrap();
        let narrow = cache.disk_roots(0, 8.0).unwrap();
        assert_eq!(narrow, wide[..2].to_vec());
    }
}
