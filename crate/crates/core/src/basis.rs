//! Spin configurations and their indexing by excitation sector.
//!
//! A configuration of an `n`-site chain is stored as a bitmask where site 1
//! (index 0) is the most significant bit, so ascending binary value is the
//! same as ascending mask value.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

/// Highest excitation number kept in the model.
pub const MAX_EXCITATIONS: u32 = 2;

/// Number of sites in the extended receiver.
pub const ER_SITES: usize = 4;

/// Extended-receiver basis, in the fixed order the generator indices refer to.
pub const ER_ORDER: [u64; 11] = [
    0b0000, 0b0001, 0b0010, 0b0011, 0b0100, 0b0101, 0b0110, 0b1000, 0b1001, 0b1010, 0b1100,
];

/// Position of a 4-bit extended-receiver state within [`ER_ORDER`].
pub fn er_index(tail: u64) -> Option<usize> {
    ER_ORDER.iter().position(|&s| s == tail)
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Configuration {
    n_sites: usize,
    mask: u64,
}

impl Configuration {
    pub fn from_mask(n_sites: usize, mask: u64) -> Result<Self> {
        if n_sites == 0 || n_sites > 63 {
            return Err(Error::Parameter(format!("n_sites = {n_sites} outside 1..=63")));
        }
        if mask >> n_sites != 0 {
            return Err(Error::Parameter(format!("mask {mask:#b} wider than {n_sites} sites")));
        }
        Ok(Self { n_sites, mask })
    }

    /// Build from a list of excited sites (0-based, site 1 of the chain is 0).
    pub fn from_sites(n_sites: usize, sites: &[usize]) -> Result<Self> {
        let mut mask = 0u64;
        for &s in sites {
            if s >= n_sites {
                return Err(Error::Parameter(format!("site {s} out of range for {n_sites} sites")));
            }
            mask |= 1 << (n_sites - 1 - s);
        }
        Self::from_mask(n_sites, mask)
    }

    /// Parse a string of `0`/`1` characters, site 1 first.
    pub fn parse(bits: &str) -> Result<Self> {
        let mut mask = 0u64;
        for ch in bits.chars() {
            mask = (mask << 1)
                | match ch {
                    '0' => 0,
                    '1' => 1,
                    _ => return Err(Error::Parameter(format!("bad bit {ch:?} in {bits:?}"))),
                };
        }
        Self::from_mask(bits.len(), mask)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    pub fn excitations(&self) -> u32 {
        self.mask.count_ones()
    }

    pub fn is_excited(&self, site: usize) -> bool {
        site < self.n_sites && (self.mask >> (self.n_sites - 1 - site)) & 1 == 1
    }

    /// Excited sites in increasing order.
    pub fn sites(&self) -> Vec<usize> {
        (0..self.n_sites).filter(|&s| self.is_excited(s)).collect()
    }

    pub fn bits(&self) -> Vec<bool> {
        (0..self.n_sites).map(|s| self.is_excited(s)).collect()
    }

    /// Split into the leading `n_sites - tail_len` sites and the trailing `tail_len` sites.
    pub fn split_tail(&self, tail_len: usize) -> Result<(Configuration, Configuration)> {
        if tail_len == 0 || tail_len > self.n_sites {
            return Err(Error::Parameter(format!(
                "tail length {tail_len} invalid for {} sites",
                self.n_sites
            )));
        }
        let tail = Configuration { n_sites: tail_len, mask: self.mask & ((1 << tail_len) - 1) };
        let head = Configuration { n_sites: self.n_sites - tail_len, mask: self.mask >> tail_len };
        Ok((head, tail))
    }

    /// Inverse of [`Configuration::split_tail`]. An empty head is represented by `n_sites == 0`.
    pub fn concat(head: &Configuration, tail: &Configuration) -> Configuration {
        Configuration {
            n_sites: head.n_sites + tail.n_sites,
            mask: (head.mask << tail.n_sites) | tail.mask,
        }
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.bits() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{self}>")
    }
}

/// All `n_sites`-bit configurations with exactly `k` excitations, ascending.
pub fn enumerate_sector(n_sites: usize, k: u32) -> Result<Vec<Configuration>> {
    if n_sites < 2 || n_sites > 63 {
        return Err(Error::Parameter(format!("n_sites = {n_sites} outside 2..=63")));
    }
    if k > MAX_EXCITATIONS || k as usize > n_sites {
        return Err(Error::Parameter(format!("excitation count {k} invalid for {n_sites} sites")));
    }
    let mut masks: Vec<u64> = match k {
        0 => vec![0],
        1 => (0..n_sites).map(|b| 1u64 << b).collect(),
        _ => (0..n_sites)
            .flat_map(|hi| (0..hi).map(move |lo| (1u64 << hi) | (1u64 << lo)))
            .collect(),
    };
    masks.sort_unstable();
    Ok(masks.into_iter().map(|mask| Configuration { n_sites, mask }).collect())
}

/// Sector bases of a chain plus reverse lookup.
#[derive(Clone, Debug)]
pub struct BasisCatalog {
    n_sites: usize,
    sectors: [Vec<Configuration>; 3],
    index: HashMap<u64, (usize, usize)>,
}

impl BasisCatalog {
    pub fn new(n_sites: usize) -> Result<Self> {
        let sectors = [
            enumerate_sector(n_sites, 0)?,
            enumerate_sector(n_sites, 1)?,
            enumerate_sector(n_sites, 2)?,
        ];
        let index = sectors
            .iter()
            .enumerate()
            .flat_map(|(k, sec)| sec.iter().enumerate().map(move |(o, c)| (c.mask, (k, o))))
            .collect();
        Ok(Self { n_sites, sectors, index })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn sector(&self, k: usize) -> &[Configuration] {
        &self.sectors[k]
    }

    pub fn sector_dims(&self) -> [usize; 3] {
        [self.sectors[0].len(), self.sectors[1].len(), self.sectors[2].len()]
    }

    /// The extended-receiver basis as 4-bit configurations.
    pub fn er_order(&self) -> Vec<Configuration> {
        ER_ORDER.iter().map(|&mask| Configuration { n_sites: ER_SITES, mask }).collect()
    }

    /// Sector and offset of a configuration.
    pub fn index_of(&self, config: &Configuration) -> Result<(usize, usize)> {
        if config.n_sites != self.n_sites {
            return Err(Error::Parameter(format!(
                "configuration has {} sites, catalog has {}",
                config.n_sites, self.n_sites
            )));
        }
        self.index_of_mask(config.mask)
    }

    pub fn index_of_mask(&self, mask: u64) -> Result<(usize, usize)> {
        self.index
            .get(&mask)
            .copied()
            .ok_or(Error::OutOfSubspace { excitations: mask.count_ones() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binom(n: usize, k: usize) -> usize {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn vacuum_sector() {
        let s = enumerate_sector(4, 0).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].to_string(), "0000");
    }

    #[test]
    fn four_site_sectors_concatenate_to_er_order() {
        let mut all: Vec<_> = (0..=2).flat_map(|k| enumerate_sector(4, k).unwrap()).collect();
        all.sort_by_key(|c| c.mask());
        let listed: Vec<String> = all.iter().map(|c| c.to_string()).collect();
        assert_eq!(
            listed,
            [
                "0000", "0001", "0010", "0011", "0100", "0101", "0110", "1000", "1001", "1010",
                "1100"
            ]
        );
        let cat = BasisCatalog::new(4).unwrap();
        assert_eq!(cat.er_order(), all);
        assert_eq!(cat.er_order()[0].excitations(), 0);
    }

    #[test]
    fn five_site_two_excitations() {
        let s = enumerate_sector(5, 2).unwrap();
        assert_eq!(s.len(), 10);
        assert_eq!(s[0].to_string(), "00011");
        assert_eq!(s[9].to_string(), "11000");
    }

    #[test]
    fn sector_sizes_and_strict_order() {
        for n in 2..=12 {
            for k in 0..=2u32 {
                let s = enumerate_sector(n, k).unwrap();
                assert_eq!(s.len(), binom(n, k as usize));
                assert!(s.windows(2).all(|w| w[0].mask() < w[1].mask()));
                assert!(s.iter().all(|c| c.excitations() == k));
            }
        }
    }

    #[test]
    fn rejects_bad_sector_requests() {
        assert!(enumerate_sector(4, 3).is_err());
        assert!(enumerate_sector(1, 0).is_err());
    }

    #[test]
    fn index_of_examples() {
        let cat = BasisCatalog::new(42).unwrap();
        let vac = Configuration::from_mask(42, 0).unwrap();
        assert_eq!(cat.index_of(&vac).unwrap(), (0, 0));
        let first = Configuration::from_sites(42, &[0]).unwrap();
        assert_eq!(cat.index_of(&first).unwrap(), (1, 41));
        let three = Configuration::from_sites(42, &[0, 1, 2]).unwrap();
        assert!(matches!(cat.index_of(&three), Err(Error::OutOfSubspace { excitations: 3 })));
    }

    #[test]
    fn index_round_trip_exhaustive() {
        for n in 2..=10 {
            let cat = BasisCatalog::new(n).unwrap();
            let mut total = 0;
            for k in 0..3 {
                for (o, c) in cat.sector(k).iter().enumerate() {
                    assert_eq!(cat.index_of(c).unwrap(), (k, o));
                    total += 1;
                }
            }
            assert_eq!(total, 1 + n + n * (n - 1) / 2);
            if n == 6 {
                assert_eq!(total, 22);
            }
        }
    }

    #[test]
    fn split_tail_examples() {
        let (h, t) = Configuration::parse("000011").unwrap().split_tail(4).unwrap();
        assert_eq!((h.to_string(), t.to_string()), ("00".into(), "0011".into()));
        let (h, t) = Configuration::parse("100001").unwrap().split_tail(4).unwrap();
        assert_eq!((h.to_string(), t.to_string()), ("10".into(), "0001".into()));
    }

    #[test]
    fn split_concat_round_trip() {
        let cat = BasisCatalog::new(6).unwrap();
        for k in 0..3 {
            for c in cat.sector(k) {
                let (h, t) = c.split_tail(4).unwrap();
                assert_eq!(h.n_sites() + t.n_sites(), 6);
                assert_eq!(Configuration::concat(&h, &t), *c);
                assert_eq!(format!("{h}{t}"), c.to_string());
            }
        }
    }

    #[test]
    fn er_index_positions() {
        assert_eq!(er_index(0b0000), Some(0));
        assert_eq!(er_index(0b1100), Some(10));
        assert_eq!(er_index(0b0111), None);
    }
}
