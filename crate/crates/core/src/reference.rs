//! Hand-built programs with known mapping-table sizes, and a small solver
//! that recovers a compositional function from samples.

use std::fmt::Write;

use crate::model::{
    Cell, CompositionalFunction, Grid, InputString, Letter, Sample, SettingTag, Symbol, BITS, CELLS,
};

/// The compositional program: one cell list per bit and one pattern per
/// letter. Its mapping table has 8 one-letter combinations and 32 symbols.
pub fn sufficient_program(f: &CompositionalFunction) -> String {
    let mut out = String::from("CELLS = [\n");
    for group in f.groups() {
        let cells: Vec<String> = group.iter().map(|c| format!("({}, {})", c.row, c.col)).collect();
        let _ = writeln!(out, "    [{}],", cells.join(", "));
    }
    out.push_str("]\n\nVALUES = {\n");
    for letter in Letter::ALL {
        let pattern: String = f.group(letter.bit()).iter().map(|&c| f.symbol_for(c, letter).as_char()).collect();
        let _ = writeln!(out, "    '{}': '{}',", letter.as_char(), pattern);
    }
    out.push_str(
        "}\n\n\
def generate(s):\n\
\x20   grid = [[None] * 4 for _ in range(4)]\n\
\x20   for i in range(4):\n\
\x20       pattern = VALUES[s[i]]\n\
\x20       for k in range(4):\n\
\x20           r, c = CELLS[i][k]\n\
\x20           grid[r][c] = pattern[k]\n\
\x20   return [''.join(row) for row in grid]\n",
    );
    out
}

/// The memorising program: a lookup table with every sample spelled out.
/// 64 input letters plus 256 symbols.
pub fn zero_program(samples: &[Sample]) -> String {
    let mut sorted = samples.to_vec();
    sorted.sort_by_key(|s| s.input.index());
    let mut out = String::from("TABLE = {\n");
    for s in &sorted {
        let rows: Vec<String> = s.output.rows().iter().map(|r| format!("'{r}'")).collect();
        let _ = writeln!(out, "    '{}': [{}],", s.input, rows.join(", "));
    }
    out.push_str("}\n\n\ndef generate(s):\n    return TABLE[s]\n");
    out
}

/// Conditional-heavy fragment: blocks contribute 2, 8, 2 and 0 input
/// letters (the last repeats the second's combinations) and 8, 16, 8 and 16
/// symbols, for 12 + 48.
pub const BRANCHING_FRAGMENT: &str = r#"def generate(s):
    rows = ['', '', '', '']
    # bit 1 decides the first row
    if s[0] == 'A':
        rows[0] = '*..*'
    else:
        rows[0] = '.**.'
    if s[1] == 'C':
        if s[2] == 'E':
            rows[1] = '**..'
        else:
            rows[1] = '*...'
    else:
        if s[2] == 'E':
            rows[1] = '.*..'
        else:
            rows[1] = '....'
    if s[3] == 'G':
        rows[3] = '*.*.'
    else:
        rows[3] = '.*.*'
    if s[1] == 'C':
        if s[2] == 'E':
            rows[2] = '..**'
        else:
            rows[2] = '...*'
    else:
        if s[2] == 'E':
            rows[2] = '..*.'
        else:
            rows[2] = '****'
    return rows
"#;

/// Dictionary-heavy fragment: four tables contributing 8, 2, 0 and 2 input
/// letters (the third repeats the first's keys) and 16, 8, 16 and 8 symbols.
pub const TABLE_FRAGMENT: &str = r#"FIRST = {
    'AC': '*..*',
    'AD': '*.**',
    'BC': '.*.*',
    'BD': '....',
}
THIRD = {'E': '**..', 'F': '..**'}
SECOND = {
    'AC': '.**.',
    'AD': '*..*',
    'BC': '**..',
    'BD': '.*..',
}
FOURTH = {'G': '*.*.', 'H': '.*.*'}


def generate(s):
    return [FIRST[s[0] + s[1]], SECOND[s[0] + s[1]], THIRD[s[2]], FOURTH[s[3]]]
"#;

/// Expected `(Σn, Σm)` of each fragment.
pub const FRAGMENT_SUMS: (u32, u32) = (12, 48);

fn consistent(samples: &[Sample], cell: Cell, bit: usize) -> Option<Symbol> {
    // Symbol shown for the bit's first letter, if the cell follows this bit.
    let mut seen: [Option<Symbol>; 2] = [None, None];
    for s in samples {
        let v = s.input.value(bit) as usize;
        let sym = s.output.get(cell);
        match seen[v] {
            None => seen[v] = Some(sym),
            Some(prev) if prev != sym => return None,
            _ => {}
        }
    }
    match seen {
        [Some(a), Some(b)] if a != b => Some(a),
        _ => None,
    }
}

/// Recovers the generator behind `samples`: each cell is assigned to the
/// first bit that explains it. Fails if some cell fits no bit or the
/// resulting groups are not four cells each.
pub fn infer_function(samples: &[Sample], setting: SettingTag) -> Option<CompositionalFunction> {
    let mut groups: [Vec<Cell>; BITS] = Default::default();
    let mut first = [Symbol::Dot; CELLS];
    for cell in Cell::all() {
        let (bit, sym) = (0..BITS).find_map(|b| consistent(samples, cell, b).map(|s| (b, s)))?;
        groups[bit].push(cell);
        first[cell.index()] = sym;
    }
    let groups: [[Cell; 4]; BITS] = [
        groups[0].clone().try_into().ok()?,
        groups[1].clone().try_into().ok()?,
        groups[2].clone().try_into().ok()?,
        groups[3].clone().try_into().ok()?,
    ];
    CompositionalFunction::new(setting, groups, first).ok()
}

/// Predicts `query` cell by cell from the first bit that explains each cell
/// on the shown samples. Cells no bit explains keep the majority symbol.
pub fn predict(shown: &[Sample], query: &InputString) -> Grid {
    let mut grid = Grid::filled(Symbol::Dot);
    for cell in Cell::all() {
        let sym = (0..BITS).find_map(|b| {
            consistent(shown, cell, b).map(|first| if query.value(b) == 0 { first } else { first.flipped() })
        });
        let sym = sym.unwrap_or_else(|| {
            let stars = shown.iter().filter(|s| s.output.get(cell) == Symbol::Star).count();
            if stars * 2 > shown.len() {
                Symbol::Star
            } else {
                Symbol::Dot
            }
        });
        grid.set(cell, sym);
    }
    grid
}
