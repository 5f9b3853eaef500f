//! Sampling of compositional functions and materialisation of datasets.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{
    Cell, CompositionalFunction, Dataset, InputString, Letter, Sample, SettingTag, Symbol, BITS, CELLS, SIDE,
};

pub const DEFAULT_SAMPLE_COUNT: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SettingSpec {
    pub tag: SettingTag,
    pub seed: u64,
    #[serde(default = "default_sample_count")]
    pub sample_count: usize,
}

fn default_sample_count() -> usize {
    DEFAULT_SAMPLE_COUNT
}

impl SettingSpec {
    pub fn new(tag: SettingTag, seed: u64) -> SettingSpec {
        SettingSpec { tag, seed, sample_count: DEFAULT_SAMPLE_COUNT }
    }

    pub fn with_count(mut self, sample_count: usize) -> SettingSpec {
        assert!(sample_count >= 1, "sample_count must be at least 1");
        self.sample_count = sample_count;
        self
    }
}

/// Order in which the 16 samples are stored (and therefore shown in prompts).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "seed")]
pub enum SampleOrder {
    #[default]
    Lexicographic,
    Shuffled(u64),
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn tag_code(tag: SettingTag) -> u64 {
    SettingTag::ALL.iter().position(|&t| t == tag).unwrap() as u64 + 1
}

pub(crate) fn rng_for(seed: u64, salt: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix(splitmix(seed ^ salt.rotate_left(32)) ^ index))
}

fn row(r: usize) -> [Cell; 4] {
    std::array::from_fn(|c| Cell::new(r, c))
}

fn column(c: usize) -> [Cell; 4] {
    std::array::from_fn(|r| Cell::new(r, c))
}

/// The `i`-th 2x2 block, blocks ordered top-left, top-right, bottom-left, bottom-right.
fn block(i: usize) -> [Cell; 4] {
    let (r0, c0) = ((i / 2) * 2, (i % 2) * 2);
    [Cell::new(r0, c0), Cell::new(r0, c0 + 1), Cell::new(r0 + 1, c0), Cell::new(r0 + 1, c0 + 1)]
}

fn sorted(mut g: [Cell; 4]) -> [Cell; 4] {
    g.sort();
    g
}

/// Whether a group of cells is exactly a row, a column or an aligned 2x2 block.
pub fn is_structured_group(group: &[Cell; 4]) -> bool {
    let g = sorted(*group);
    (0..SIDE).any(|i| g == sorted(row(i)) || g == sorted(column(i)) || g == sorted(block(i)))
}

pub fn is_row(group: &[Cell; 4]) -> bool {
    let g = sorted(*group);
    (0..SIDE).any(|i| g == sorted(row(i)))
}

fn chunk4(cells: &[Cell]) -> Vec<[Cell; 4]> {
    cells.chunks(4).map(|c| [c[0], c[1], c[2], c[3]]).collect()
}

fn sample_groups(tag: SettingTag, rng: &mut ChaCha8Rng) -> [[Cell; 4]; BITS] {
    match tag {
        SettingTag::Horizontal => std::array::from_fn(row),
        SettingTag::Vertical => std::array::from_fn(column),
        SettingTag::Block => std::array::from_fn(block),
        SettingTag::Random => {
            let mut cells: Vec<Cell> = Cell::all().collect();
            cells.shuffle(rng);
            let chunks = chunk4(&cells);
            std::array::from_fn(|i| chunks[i])
        }
        SettingTag::RandomIndex => {
            let identity = [0usize, 1, 2, 3];
            let mut perm = identity;
            while perm == identity {
                perm.shuffle(rng);
            }
            std::array::from_fn(|bit| row(perm[bit]))
        }
        SettingTag::SettingCombination => {
            let mut rows = [0usize, 1, 2, 3];
            rows.shuffle(rng);
            let (h1, h2) = (rows[0], rows[1]);
            let mut rest: Vec<Cell> = Cell::all()
                .filter(|c| c.row as usize != h1 && c.row as usize != h2)
                .collect();
            // Reject splits that happen to form a row or block, which would
            // make the random half indistinguishable from a structured one.
            loop {
                rest.shuffle(rng);
                let chunks = chunk4(&rest);
                if !chunks.iter().any(is_structured_group) {
                    break [row(h1), row(h2), chunks[0], chunks[1]];
                }
            }
        }
    }
}

/// Deterministically samples the `index`-th function of a setting.
pub fn sample_function(spec: &SettingSpec, index: usize) -> CompositionalFunction {
    assert!(index < spec.sample_count, "function index {index} out of range");
    let mut rng = rng_for(spec.seed, tag_code(spec.tag), index as u64);
    let groups = sample_groups(spec.tag, &mut rng);
    let first_symbol: [Symbol; CELLS] =
        std::array::from_fn(|_| if rng.random::<bool>() { Symbol::Star } else { Symbol::Dot });
    CompositionalFunction::new(spec.tag, groups, first_symbol).expect("sampler produces valid partitions")
}

pub fn function_ref(spec: &SettingSpec, index: usize) -> String {
    format!("{}/{:02}", spec.tag.name(), index)
}

pub fn build_dataset(f: &CompositionalFunction, function_ref: impl Into<String>) -> Dataset {
    build_dataset_ordered(f, function_ref, SampleOrder::Lexicographic)
}

pub fn build_dataset_ordered(
    f: &CompositionalFunction,
    function_ref: impl Into<String>,
    order: SampleOrder,
) -> Dataset {
    let mut samples: Vec<Sample> = InputString::all().map(|input| Sample { input, output: f.apply(&input) }).collect();
    if let SampleOrder::Shuffled(seed) = order {
        samples.shuffle(&mut rng_for(seed, 0x5a4d_504c, 0));
    }
    Dataset::new(samples, function_ref).expect("exhaustive enumeration is a valid dataset")
}

/// Whether every one of the 8 letters occurs in at least one input.
pub fn covers_all_letters(samples: &[Sample]) -> bool {
    let mut seen = [false; 8];
    for s in samples {
        for l in s.input.letters() {
            seen[Letter::ALL.iter().position(|&x| x == l).unwrap()] = true;
        }
    }
    seen.iter().all(|&b| b)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResultSplit {
    pub shown: Vec<Sample>,
    pub held_out: Vec<Sample>,
}

/// Uniformly samples 8 demonstration samples that cover every letter value;
/// the remaining 8 are held out as queries.
pub fn split_for_result_test(dataset: &Dataset, seed: u64) -> ResultSplit {
    let mut rng = rng_for(seed, 0x5350_4c49, 0);
    let mut idx: Vec<usize> = (0..dataset.samples().len()).collect();
    loop {
        idx.shuffle(&mut rng);
        let (mut shown_idx, mut held_idx) = (idx[..8].to_vec(), idx[8..].to_vec());
        shown_idx.sort_unstable();
        held_idx.sort_unstable();
        let shown: Vec<Sample> = shown_idx.iter().map(|&i| dataset.samples()[i]).collect();
        if covers_all_letters(&shown) {
            let held_out = held_idx.iter().map(|&i| dataset.samples()[i]).collect();
            return ResultSplit { shown, held_out };
        }
    }
}
