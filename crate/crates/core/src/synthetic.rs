//! Planted-structure fixtures: activation dumps whose expert units, and hence
//! network communities, are known in advance.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::activation::{ActivationDump, DumpError};
use crate::country::CountryCode;
use crate::corpus::{NEGATIVES_PER_CONCEPT, POSITIVES_PER_CONCEPT};
use crate::metrics::AdjacencyMap;

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedSpec {
    pub blocks: usize,
    pub block_size: usize,
    pub layers: usize,
    /// Units per block that separate that block's concepts perfectly.
    pub planted_per_block: usize,
    /// Pure-noise units, summed over all layers.
    pub noise_units: usize,
    pub positives: usize,
    pub negatives: usize,
    pub seed: u64,
}

impl Default for PlantedSpec {
    fn default() -> Self {
        Self {
            blocks: 3,
            block_size: 4,
            layers: 2,
            planted_per_block: 20,
            noise_units: 2000,
            positives: POSITIVES_PER_CONCEPT,
            negatives: NEGATIVES_PER_CONCEPT,
            seed: 7,
        }
    }
}

impl PlantedSpec {
    pub fn units_per_layer(&self) -> usize {
        (self.blocks * self.planted_per_block + self.noise_units) / self.layers
    }

    /// Planted units per block in each layer.
    pub fn planted_per_layer(&self) -> usize {
        self.planted_per_block / self.layers
    }

    fn check(&self) -> Result<(), String> {
        if self.blocks == 0 || self.block_size == 0 || self.layers == 0 || self.positives == 0 || self.negatives == 0 {
            return Err("all sizes must be positive".into());
        }
        if !self.planted_per_block.is_multiple_of(self.layers) || !(self.blocks * self.planted_per_block + self.noise_units).is_multiple_of(self.layers) {
            return Err("planted and total units must divide evenly across layers".into());
        }
        if self.blocks * self.block_size > 26 * 26 {
            return Err("too many pseudo-countries".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PlantedFixture {
    pub spec: PlantedSpec,
    /// Pseudo-country codes `QAA`, `QAB`, ... in block order.
    pub countries: Vec<CountryCode>,
    pub block_of: BTreeMap<CountryCode, usize>,
    pub dumps: Vec<ActivationDump>,
    /// `(layer, unit)` keys planted for each country's block.
    pub planted: BTreeMap<CountryCode, BTreeSet<(usize, usize)>>,
    /// Every pair within a block shares a border.
    pub adjacency: AdjacencyMap,
}

pub const FIXTURE_MODEL_ID: &str = "planted-fixture";
pub const FIXTURE_DATASET: &str = "QQQ-eng";

fn pseudo_code(i: usize) -> CountryCode {
    let b = [b'Q', b'A' + (i / 26) as u8, b'A' + (i % 26) as u8];
    CountryCode::new(std::str::from_utf8(&b).expect("ascii")).expect("valid pseudo code")
}

/// Planted unit `i` of `block` in `layer` sits at index `block * per_layer + i`;
/// the remaining indices are noise.
fn block_units(spec: &PlantedSpec, block: usize) -> BTreeSet<(usize, usize)> {
    let per = spec.planted_per_layer();
    (0..spec.layers).flat_map(|l| (0..per).map(move |i| (l, block * per + i))).collect()
}

/// Builds one dump per pseudo-country. Noise and other-block units draw
/// standard-normal scores for every example. Own-block planted units score
/// positives in `[3, 4)` and negatives in `[-1, 1)`, so their AP is exactly 1.
pub fn planted_fixture(spec: &PlantedSpec) -> Result<PlantedFixture, DumpError> {
    spec.check().map_err(DumpError::Shape)?;
    let n = spec.blocks * spec.block_size;
    let countries: Vec<CountryCode> = (0..n).map(pseudo_code).collect();
    let block_of: BTreeMap<CountryCode, usize> = countries.iter().enumerate().map(|(i, &c)| (c, i / spec.block_size)).collect();
    let planted: BTreeMap<CountryCode, BTreeSet<(usize, usize)>> = countries.iter().map(|&c| (c, block_units(spec, block_of[&c]))).collect();

    let mut adjacency = AdjacencyMap::new();
    for (i, &a) in countries.iter().enumerate() {
        for &b in &countries[i + 1..] {
            if block_of[&a] == block_of[&b] {
                adjacency.insert(a, b).expect("distinct codes");
            }
        }
    }

    let upl = spec.units_per_layer();
    let e = spec.positives + spec.negatives;
    let dumps = countries
        .par_iter()
        .enumerate()
        .map(|(idx, &c)| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(idx as u64 + 1);
            let mut labels: Vec<bool> = (0..e).map(|i| i < spec.positives).collect();
            rand::seq::SliceRandom::shuffle(&mut labels[..], &mut rng);
            let own = &planted[&c];
            let mut scores = Vec::with_capacity(spec.layers * upl * e);
            for layer in 0..spec.layers {
                for unit in 0..upl {
                    if own.contains(&(layer, unit)) {
                        scores.extend(labels.iter().map(|&l| if l { rng.gen_range(3.0f32..4.0) } else { rng.gen_range(-1.0f32..1.0) }));
                    } else {
                        scores.extend((0..e).map(|_| -> f32 { StandardNormal.sample(&mut rng) }));
                    }
                }
            }
            ActivationDump::new(FIXTURE_MODEL_ID, FIXTURE_DATASET, c, spec.layers, upl, labels, scores)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PlantedFixture { spec: spec.clone(), countries, block_of, dumps, planted, adjacency })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experts::average_precision;

    #[test]
    fn small_fixture_shape() {
        let spec = PlantedSpec { blocks: 2, block_size: 2, noise_units: 20, planted_per_block: 4, positives: 10, negatives: 30, ..Default::default() };
        let f = planted_fixture(&spec).unwrap();
        assert_eq!(f.countries.len(), 4);
        assert_eq!(f.countries[0].as_str(), "QAA");
        assert_eq!(spec.units_per_layer(), 14);
        let d = &f.dumps[0];
        assert_eq!(d.labels().iter().filter(|&&l| l).count(), 10);
        for &(l, u) in &f.planted[&f.countries[0]] {
            assert_eq!(average_precision(d.unit_scores(l, u), d.labels()).unwrap(), 1.0f32);
        }
        assert!(f.adjacency.are_neighbors(f.countries[0], f.countries[1]));
        assert!(!f.adjacency.are_neighbors(f.countries[1], f.countries[2]));
        let again = planted_fixture(&spec).unwrap();
        assert_eq!(again.dumps, f.dumps);
    }

    #[test]
    fn rejects_uneven_layers() {
        let spec = PlantedSpec { planted_per_block: 3, ..Default::default() };
        assert!(planted_fixture(&spec).is_err());
    }
}
