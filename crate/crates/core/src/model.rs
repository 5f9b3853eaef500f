//! Domain types shared by every stage of the pipeline.
//!
//! The task is fixed: a 4-letter input string where bit `i` takes one of the
//! letters `{2i, 2i+1}` of `A..H`, mapped to a 4x4 grid of `.`/`*` cells.
//! Each bit owns four cells and flipping the bit flips exactly those cells.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of input bits (N).
pub const BITS: usize = 4;
/// Number of grid cells (M).
pub const CELLS: usize = 16;
/// Side length of the grid.
pub const SIDE: usize = 4;
/// Number of samples in a dataset (d = U^N).
pub const SAMPLES: usize = 16;
/// Values per bit (U).
pub const VALUES_PER_BIT: usize = 2;
/// N + M, the cost of one fully spelled-out sample.
pub const SAMPLE_COST: u32 = (BITS + CELLS) as u32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("input string must have exactly 4 letters, got {0:?}")]
    BadLength(String),
    #[error("letter {letter:?} is not a valid value for bit {bit}")]
    BadLetter { bit: usize, letter: char },
    #[error("invalid grid symbol {0:?}")]
    BadSymbol(char),
    #[error("grid must be 4 rows of 4 symbols")]
    BadGridShape,
    #[error("invalid partition: {0}")]
    BadPartition(String),
    #[error("invalid dataset: {0}")]
    BadDataset(String),
    #[error("unknown setting {0:?}")]
    UnknownSetting(String),
}

/// One of the eight input letters `A..H`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Letter(u8);

impl Letter {
    pub const ALL: [Letter; 8] = [
        Letter(0),
        Letter(1),
        Letter(2),
        Letter(3),
        Letter(4),
        Letter(5),
        Letter(6),
        Letter(7),
    ];

    pub fn new(bit: usize, value: u8) -> Letter {
        assert!(bit < BITS && value < 2);
        Letter((bit * 2) as u8 + value)
    }

    pub fn from_char(c: char) -> Option<Letter> {
        match c {
            'A'..='H' => Some(Letter(c as u8 - b'A')),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        (b'A' + self.0) as char
    }

    /// Zero-based index of the bit this letter belongs to.
    pub fn bit(self) -> usize {
        (self.0 / 2) as usize
    }

    /// 0 for the first letter of the bit's alphabet, 1 for the second.
    pub fn value(self) -> u8 {
        self.0 % 2
    }

    pub fn complement(self) -> Letter {
        Letter(self.0 ^ 1)
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct InputString {
    values: [u8; BITS],
}

impl InputString {
    pub fn from_values(values: [u8; BITS]) -> InputString {
        assert!(values.iter().all(|&v| v < 2));
        InputString { values }
    }

    /// The `i`-th input in lexicographic order (bit 1 most significant).
    pub fn from_index(index: usize) -> InputString {
        assert!(index < SAMPLES);
        let mut values = [0u8; BITS];
        for (bit, v) in values.iter_mut().enumerate() {
            *v = ((index >> (BITS - 1 - bit)) & 1) as u8;
        }
        InputString { values }
    }

    pub fn index(&self) -> usize {
        self.values
            .iter()
            .fold(0, |acc, &v| (acc << 1) | v as usize)
    }

    /// All 16 inputs in lexicographic order.
    pub fn all() -> impl Iterator<Item = InputString> {
        (0..SAMPLES).map(InputString::from_index)
    }

    pub fn value(&self, bit: usize) -> u8 {
        self.values[bit]
    }

    pub fn letter(&self, bit: usize) -> Letter {
        Letter::new(bit, self.values[bit])
    }

    pub fn letters(&self) -> [Letter; BITS] {
        std::array::from_fn(|bit| self.letter(bit))
    }

    pub fn with_flipped(&self, bit: usize) -> InputString {
        let mut values = self.values;
        values[bit] ^= 1;
        InputString { values }
    }
}

impl FromStr for InputString {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let chars: Vec<char> = s.chars().collect();
        if chars.len() != BITS {
            return Err(ModelError::BadLength(s.to_string()));
        }
        let mut values = [0u8; BITS];
        for (bit, &c) in chars.iter().enumerate() {
            match Letter::from_char(c) {
                Some(l) if l.bit() == bit => values[bit] = l.value(),
                _ => return Err(ModelError::BadLetter { bit: bit + 1, letter: c }),
            }
        }
        Ok(InputString { values })
    }
}

impl fmt::Display for InputString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in self.letters() {
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

impl Serialize for InputString {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for InputString {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    Dot,
    Star,
}

impl Symbol {
    pub fn as_char(self) -> char {
        match self {
            Symbol::Dot => '.',
            Symbol::Star => '*',
        }
    }

    pub fn from_char(c: char) -> Option<Symbol> {
        match c {
            '.' => Some(Symbol::Dot),
            '*' => Some(Symbol::Star),
            _ => None,
        }
    }

    pub fn flipped(self) -> Symbol {
        match self {
            Symbol::Dot => Symbol::Star,
            Symbol::Star => Symbol::Dot,
        }
    }
}

/// Zero-based (row, col) coordinate of a grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub row: u8,
    pub col: u8,
}

impl Cell {
    pub fn new(row: usize, col: usize) -> Cell {
        assert!(row < SIDE && col < SIDE);
        Cell { row: row as u8, col: col as u8 }
    }

    pub fn from_index(i: usize) -> Cell {
        Cell::new(i / SIDE, i % SIDE)
    }

    pub fn index(self) -> usize {
        self.row as usize * SIDE + self.col as usize
    }

    pub fn all() -> impl Iterator<Item = Cell> {
        (0..CELLS).map(Cell::from_index)
    }
}

impl fmt::Display for Cell {
    /// One-based, for human-readable output.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row + 1, self.col + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Grid {
    cells: [[Symbol; SIDE]; SIDE],
}

impl Grid {
    pub fn filled(symbol: Symbol) -> Grid {
        Grid { cells: [[symbol; SIDE]; SIDE] }
    }

    pub fn get(&self, cell: Cell) -> Symbol {
        self.cells[cell.row as usize][cell.col as usize]
    }

    pub fn set(&mut self, cell: Cell, symbol: Symbol) {
        self.cells[cell.row as usize][cell.col as usize] = symbol;
    }

    pub fn rows(&self) -> [String; SIDE] {
        std::array::from_fn(|r| self.cells[r].iter().map(|s| s.as_char()).collect())
    }

    pub fn from_rows<S: AsRef<str>>(rows: &[S]) -> Result<Grid, ModelError> {
        if rows.len() != SIDE {
            return Err(ModelError::BadGridShape);
        }
        let mut grid = Grid::filled(Symbol::Dot);
        for (r, row) in rows.iter().enumerate() {
            let chars: Vec<char> = row.as_ref().chars().collect();
            if chars.len() != SIDE {
                return Err(ModelError::BadGridShape);
            }
            for (c, ch) in chars.into_iter().enumerate() {
                let sym = Symbol::from_char(ch).ok_or(ModelError::BadSymbol(ch))?;
                grid.cells[r][c] = sym;
            }
        }
        Ok(grid)
    }

    /// Cells where the two grids disagree.
    pub fn diff(&self, other: &Grid) -> Vec<Cell> {
        Cell::all().filter(|&c| self.get(c) != other.get(c)).collect()
    }
}

pub fn grids_equal(a: &Grid, b: &Grid) -> bool {
    a.cells == b.cells
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows = self.rows();
        write!(f, "{}", rows.join("\n"))
    }
}

impl FromStr for Grid {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let rows: Vec<&str> = s.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        Grid::from_rows(&rows)
    }
}

impl Serialize for Grid {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Grid {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rows = Vec::<String>::deserialize(d)?;
        Grid::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SettingTag {
    Horizontal,
    Block,
    Vertical,
    Random,
    RandomIndex,
    SettingCombination,
}

impl SettingTag {
    pub const BASE: [SettingTag; 4] = [
        SettingTag::Horizontal,
        SettingTag::Block,
        SettingTag::Vertical,
        SettingTag::Random,
    ];

    pub const ALL: [SettingTag; 6] = [
        SettingTag::Horizontal,
        SettingTag::Block,
        SettingTag::Vertical,
        SettingTag::Random,
        SettingTag::RandomIndex,
        SettingTag::SettingCombination,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SettingTag::Horizontal => "horizontal",
            SettingTag::Block => "block",
            SettingTag::Vertical => "vertical",
            SettingTag::Random => "random",
            SettingTag::RandomIndex => "random_index",
            SettingTag::SettingCombination => "setting_combination",
        }
    }

    /// Short label used in report tables.
    pub fn label(self) -> &'static str {
        match self {
            SettingTag::Horizontal => "Horizontal",
            SettingTag::Block => "Block",
            SettingTag::Vertical => "Vertical",
            SettingTag::Random => "Random",
            SettingTag::RandomIndex => "RI(H)",
            SettingTag::SettingCombination => "SC(H+R)",
        }
    }
}

impl fmt::Display for SettingTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SettingTag {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SettingTag::ALL
            .into_iter()
            .find(|t| t.name() == s.to_ascii_lowercase())
            .ok_or_else(|| ModelError::UnknownSetting(s.to_string()))
    }
}

/// Ground-truth generator: a partition of the 16 cells into one group of four
/// per bit, plus an independent letter-to-symbol bijection for every cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompositionalFunction {
    setting: SettingTag,
    groups: [[Cell; 4]; BITS],
    /// Symbol shown by each cell when its owning bit takes its first letter.
    first_symbol: [Symbol; CELLS],
    owner: [u8; CELLS],
}

impl CompositionalFunction {
    pub fn new(
        setting: SettingTag,
        groups: [[Cell; 4]; BITS],
        first_symbol: [Symbol; CELLS],
    ) -> Result<Self, ModelError> {
        let mut owner = [u8::MAX; CELLS];
        for (bit, group) in groups.iter().enumerate() {
            for cell in group {
                if owner[cell.index()] != u8::MAX {
                    return Err(ModelError::BadPartition(format!(
                        "cell {cell} assigned to more than one bit"
                    )));
                }
                owner[cell.index()] = bit as u8;
            }
        }
        // 16 distinct assignments over 16 cells means the union is exhaustive.
        Ok(CompositionalFunction { setting, groups, first_symbol, owner })
    }

    pub fn setting(&self) -> SettingTag {
        self.setting
    }

    pub fn group(&self, bit: usize) -> &[Cell; 4] {
        &self.groups[bit]
    }

    pub fn groups(&self) -> &[[Cell; 4]; BITS] {
        &self.groups
    }

    pub fn owner(&self, cell: Cell) -> usize {
        self.owner[cell.index()] as usize
    }

    /// Image of `letter` under the bijection of `cell`. The letter must
    /// belong to the cell's owning bit.
    pub fn symbol_for(&self, cell: Cell, letter: Letter) -> Symbol {
        debug_assert_eq!(letter.bit(), self.owner(cell));
        let first = self.first_symbol[cell.index()];
        if letter.value() == 0 {
            first
        } else {
            first.flipped()
        }
    }

    pub fn apply(&self, x: &InputString) -> Grid {
        let mut grid = Grid::filled(Symbol::Dot);
        for (bit, group) in self.groups.iter().enumerate() {
            let letter = x.letter(bit);
            for &cell in group {
                grid.set(cell, self.symbol_for(cell, letter));
            }
        }
        grid
    }

    pub fn to_meta(&self) -> FunctionMeta {
        FunctionMeta {
            setting: self.setting,
            partition: self
                .groups
                .iter()
                .map(|g| g.iter().map(|c| [c.row, c.col]).collect())
                .collect(),
            bijections: Cell::all()
                .map(|cell| {
                    let bit = self.owner(cell);
                    CellBijection {
                        cell: [cell.row, cell.col],
                        bit: bit + 1,
                        map: [0, 1]
                            .into_iter()
                            .map(|v| {
                                let l = Letter::new(bit, v);
                                (l.as_char().to_string(), self.symbol_for(cell, l).as_char().to_string())
                            })
                            .collect(),
                    }
                })
                .collect(),
        }
    }

    pub fn from_meta(meta: &FunctionMeta) -> Result<Self, ModelError> {
        if meta.partition.len() != BITS {
            return Err(ModelError::BadPartition("expected 4 groups".into()));
        }
        let mut groups = [[Cell::new(0, 0); 4]; BITS];
        for (bit, group) in meta.partition.iter().enumerate() {
            if group.len() != 4 {
                return Err(ModelError::BadPartition(format!("group {} has {} cells", bit + 1, group.len())));
            }
            for (i, rc) in group.iter().enumerate() {
                if rc[0] as usize >= SIDE || rc[1] as usize >= SIDE {
                    return Err(ModelError::BadPartition(format!("cell {rc:?} out of range")));
                }
                groups[bit][i] = Cell::new(rc[0] as usize, rc[1] as usize);
            }
        }
        let mut first_symbol = [Symbol::Dot; CELLS];
        let mut seen = [false; CELLS];
        for b in &meta.bijections {
            if b.cell[0] as usize >= SIDE || b.cell[1] as usize >= SIDE || b.bit == 0 || b.bit > BITS {
                return Err(ModelError::BadPartition(format!("bad bijection entry {:?}", b.cell)));
            }
            let cell = Cell::new(b.cell[0] as usize, b.cell[1] as usize);
            let first = Letter::new(b.bit - 1, 0).as_char().to_string();
            let second = Letter::new(b.bit - 1, 1).as_char().to_string();
            let (s0, s1) = match (b.map.get(&first), b.map.get(&second)) {
                (Some(a), Some(b)) => (a, b),
                _ => return Err(ModelError::BadPartition(format!("incomplete bijection at {cell}"))),
            };
            let parse = |s: &str| s.chars().next().and_then(Symbol::from_char).filter(|_| s.len() == 1);
            match (parse(s0), parse(s1)) {
                (Some(a), Some(b)) if a != b => first_symbol[cell.index()] = a,
                _ => return Err(ModelError::BadPartition(format!("not a bijection at {cell}"))),
            }
            seen[cell.index()] = true;
        }
        if !seen.iter().all(|&s| s) {
            return Err(ModelError::BadPartition("missing bijection entries".into()));
        }
        let f = CompositionalFunction::new(meta.setting, groups, first_symbol)?;
        for b in &meta.bijections {
            let cell = Cell::new(b.cell[0] as usize, b.cell[1] as usize);
            if f.owner(cell) + 1 != b.bit {
                return Err(ModelError::BadPartition(format!("bijection bit mismatch at {cell}")));
            }
        }
        Ok(f)
    }
}

/// Sidecar JSON describing a sampled function.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionMeta {
    pub setting: SettingTag,
    /// `partition[k]` lists the zero-based `[row, col]` cells owned by bit `k+1`.
    pub partition: Vec<Vec<[u8; 2]>>,
    pub bijections: Vec<CellBijection>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellBijection {
    pub cell: [u8; 2],
    /// One-based owning bit.
    pub bit: usize,
    pub map: std::collections::BTreeMap<String, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub input: InputString,
    pub output: Grid,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    samples: Vec<Sample>,
    function_ref: String,
}

impl Dataset {
    /// Validates exhaustiveness; consistency with the generator is checked by
    /// [`Dataset::check_against`].
    pub fn new(samples: Vec<Sample>, function_ref: impl Into<String>) -> Result<Self, ModelError> {
        if samples.len() != SAMPLES {
            return Err(ModelError::BadDataset(format!("expected 16 samples, got {}", samples.len())));
        }
        let mut seen = [false; SAMPLES];
        for s in &samples {
            let i = s.input.index();
            if seen[i] {
                return Err(ModelError::BadDataset(format!("duplicate input {}", s.input)));
            }
            seen[i] = true;
        }
        Ok(Dataset { samples, function_ref: function_ref.into() })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn function_ref(&self) -> &str {
        &self.function_ref
    }

    pub fn output_for(&self, x: &InputString) -> Option<&Grid> {
        self.samples.iter().find(|s| s.input == *x).map(|s| &s.output)
    }

    pub fn check_against(&self, f: &CompositionalFunction) -> Result<(), ModelError> {
        for s in &self.samples {
            if !grids_equal(&f.apply(&s.input), &s.output) {
                return Err(ModelError::BadDataset(format!("sample {} disagrees with generator", s.input)));
            }
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for s in &self.samples {
            out.push_str(&serde_json::to_string(s).expect("sample serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str, function_ref: impl Into<String>) -> Result<Self, ModelError> {
        let samples = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str::<Sample>(l).map_err(|e| ModelError::BadDataset(e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        Dataset::new(samples, function_ref)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    RuleGeneration,
    ResultGeneration,
    RulesProvided,
}

impl TaskKind {
    pub fn name(self) -> &'static str {
        match self {
            TaskKind::RuleGeneration => "rule_generation",
            TaskKind::ResultGeneration => "result_generation",
            TaskKind::RulesProvided => "rules_provided",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureMode {
    None,
    NoCodeBlock,
    ParseFailure,
    RuntimeFailure,
    /// The provider call itself failed (auth, quota, malformed body, retries).
    ProviderFailure,
}

/// One scored (model, setting, function, template, task) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub record_id: String,
    pub model_id: String,
    pub setting: SettingTag,
    pub function_index: usize,
    pub prompt_template_id: String,
    pub task_kind: TaskKind,
    pub raw_response: String,
    pub extracted_program: Option<String>,
    pub l_plus: u32,
    pub errors: u32,
    pub l_total: u32,
    pub c_score: f64,
    pub failure_mode: FailureMode,
    /// Percentage of exact grid matches; only set for result-generation and
    /// rules-provided runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn input_strings_round_trip_and_enumerate() {
        let all: Vec<String> = InputString::all().map(|x| x.to_string()).collect();
        assert_eq!(all.len(), 16);
        assert_eq!(all[0], "ACEG");
        assert_eq!(all[1], "ACEH");
        assert_eq!(all[15], "BDFH");
        for s in &all {
            let x: InputString = s.parse().unwrap();
            assert_eq!(&x.to_string(), s);
        }
    }

    #[test]
    fn input_string_rejects_wrong_alphabet() {
        assert!(matches!("CAEG".parse::<InputString>(), Err(ModelError::BadLetter { bit: 1, .. })));
        assert!(matches!("ACE".parse::<InputString>(), Err(ModelError::BadLength(_))));
        assert!(matches!("ACEGH".parse::<InputString>(), Err(ModelError::BadLength(_))));
    }

    #[test]
    fn letters_identify_their_bit() {
        for l in Letter::ALL {
            assert_eq!(Letter::new(l.bit(), l.value()), l);
            assert_eq!(l.complement().bit(), l.bit());
            assert_ne!(l.complement(), l);
        }
        assert_eq!(Letter::from_char('F').unwrap().bit(), 2);
    }

    #[test]
    fn grid_text_round_trip() {
        let g: Grid = "....\n*..*\n****\n.*.*".parse().unwrap();
        assert_eq!(g.to_string(), "....\n*..*\n****\n.*.*");
        assert_eq!(serde_json::to_string(&g).unwrap(), r#"["....","*..*","****",".*.*"]"#);
        assert!(Grid::from_rows(&["....", "....", "...."]).is_err());
        assert!(Grid::from_rows(&["....", "....", "....", "..x."]).is_err());
    }

    #[test]
    fn grids_equal_detects_single_cell() {
        let a = Grid::filled(Symbol::Dot);
        let mut b = a;
        assert!(grids_equal(&a, &b));
        b.set(Cell::new(2, 3), Symbol::Star);
        assert!(!grids_equal(&a, &b));
        assert_eq!(a.diff(&b), vec![Cell::new(2, 3)]);
    }

    #[test]
    fn overlapping_partition_is_rejected() {
        let mut groups: [[Cell; 4]; 4] = std::array::from_fn(|r| std::array::from_fn(|c| Cell::new(r, c)));
        groups[1][0] = Cell::new(0, 0);
        let err = CompositionalFunction::new(SettingTag::Random, groups, [Symbol::Dot; 16]).unwrap_err();
        assert!(matches!(err, ModelError::BadPartition(_)));
    }

    #[test]
    fn meta_round_trip() {
        let groups: [[Cell; 4]; 4] = std::array::from_fn(|r| std::array::from_fn(|c| Cell::new(c, r)));
        let mut first = [Symbol::Dot; 16];
        first[5] = Symbol::Star;
        let f = CompositionalFunction::new(SettingTag::Vertical, groups, first).unwrap();
        let meta = f.to_meta();
        let json = serde_json::to_string(&meta).unwrap();
        let back = CompositionalFunction::from_meta(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back, f);
    }
}
