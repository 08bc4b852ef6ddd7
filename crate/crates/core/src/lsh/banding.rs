use serde::{Deserialize, Serialize};
use xxhash_rust::xxh3::xxh3_64;

use crate::error::{Error, Result};
use crate::fingerprint::MinHashSignature;

/// Split of a signature into `bands` slices of `rows` values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BandingScheme {
    pub bands: usize,
    pub rows: usize,
}

impl Default for BandingScheme {
    /// 8 bands of 16 rows over a 128-value signature.
    fn default() -> Self {
        Self { bands: 8, rows: 16 }
    }
}

impl BandingScheme {
    pub fn new(bands: usize, rows: usize) -> Result<Self> {
        if bands == 0 || rows == 0 {
            return Err(Error::Banding(format!("{bands} bands × {rows} rows")));
        }
        Ok(Self { bands, rows })
    }

    pub fn signature_len(&self) -> usize {
        self.bands * self.rows
    }

    pub fn check(&self, signature_len: usize) -> Result<()> {
        if self.bands == 0 || self.rows == 0 || self.signature_len() != signature_len {
            return Err(Error::Banding(format!(
                "{} bands × {} rows does not cover a signature of length {signature_len}",
                self.bands, self.rows
            )));
        }
        Ok(())
    }

    /// Similarity at which the S-curve is steepest, `(1/bands)^(1/rows)`.
    pub fn threshold(&self) -> f64 {
        (1.0 / self.bands as f64).powf(1.0 / self.rows as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BandKey {
    pub band_index: usize,
    pub key: u64,
}

pub(crate) fn band_hash(rows: &[u64]) -> u64 {
    let mut bytes = Vec::with_capacity(rows.len() * 8);
    for v in rows {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    xxh3_64(&bytes)
}

/// One key per band; key `i` hashes rows `[i·rows, (i+1)·rows)` only.
pub fn band_keys(sig: &MinHashSignature, scheme: BandingScheme) -> Result<Vec<BandKey>> {
    scheme.check(sig.len())?;
    Ok(sig
        .values
        .chunks_exact(scheme.rows)
        .enumerate()
        .map(|(band_index, rows)| BandKey {
            band_index,
            key: band_hash(rows),
        })
        .collect())
}

/// Probability that a pair with per-position agreement `s` shares at least one band.
pub fn collision_probability(s: f64, scheme: BandingScheme) -> f64 {
    let s = s.clamp(0.0, 1.0);
    1.0 - (1.0 - s.powi(scheme.rows as i32)).powi(scheme.bands as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig(values: Vec<u64>) -> MinHashSignature {
        MinHashSignature { values, seed: 0 }
    }

    #[test]
    fn default_scheme_gives_eight_keys() {
        let keys = band_keys(&sig((0..128).collect()), BandingScheme::default()).unwrap();
        assert_eq!(keys.len(), 8);
        assert!(keys.iter().enumerate().all(|(i, k)| k.band_index == i));
    }

    #[test]
    fn band_locality() {
        let a = sig((0..128).collect());
        let mut b = a.clone();
        b.values[0] = 999_999;
        let ka = band_keys(&a, BandingScheme::default()).unwrap();
        let kb = band_keys(&b, BandingScheme::default()).unwrap();
        assert_ne!(ka[0], kb[0]);
        assert_eq!(ka[1..], kb[1..]);
        assert_eq!(ka, band_keys(&a.clone(), BandingScheme::default()).unwrap());
    }

    #[test]
    fn incompatible_scheme() {
        assert!(band_keys(&sig(vec![0; 100]), BandingScheme::default()).is_err());
        assert!(BandingScheme::new(0, 16).is_err());
    }

    #[test]
    fn s_curve_closed_form() {
        let scheme = BandingScheme::default();
        assert_eq!(collision_probability(0.0, scheme), 0.0);
        assert_eq!(collision_probability(1.0, scheme), 1.0);
        // 1 - (1 - 0.85^16)^8, evaluated independently: 0.4610...
        let p = collision_probability(0.85, scheme);
        assert!((p - 0.461).abs() < 5e-4, "{p}");
        // (1/8)^(1/16) = 0.8780...
        assert!((scheme.threshold() - 0.878).abs() < 5e-4);
    }
}
