//! Natural-language description of a generator, for the rules-provided task,
//! and the inverse parse used by the mock provider and the round-trip test.

use std::fmt::Write;

use rulegen_core::model::{Cell, CompositionalFunction, Letter, SettingTag, Symbol, BITS, CELLS};
use rulegen_core::taskgen::{is_row, is_structured_group};

const ORDINALS: [&str; 4] = ["first", "second", "third", "fourth"];

fn shape(group: &[Cell; 4]) -> String {
    let mut g = *group;
    g.sort();
    let rows: Vec<u8> = g.iter().map(|c| c.row).collect();
    let cols: Vec<u8> = g.iter().map(|c| c.col).collect();
    if is_row(group) {
        format!("row {}", rows[0] + 1)
    } else if cols.iter().all(|&c| c == cols[0]) {
        format!("column {}", cols[0] + 1)
    } else if is_structured_group(group) {
        format!("the 2x2 block in rows {}-{} and columns {}-{}", rows[0] + 1, rows[0] + 2, cols[0] + 1, cols[0] + 2)
    } else {
        let cells: Vec<String> = g.iter().map(|c| format!("({}, {})", c.row + 1, c.col + 1)).collect();
        format!("the cells {}", cells.join(", "))
    }
}

/// One sentence per bit naming the cells it controls, followed by one line
/// per cell with its letter-to-symbol assignment.
pub fn describe_rules(f: &CompositionalFunction) -> String {
    let mut out = String::from(
        "The input is a string of 4 letters: the first is A or B, the second C or D, the third E or F \
         and the fourth G or H. The output is a 4x4 grid of '*' and '.'; rows and columns are numbered \
         1 to 4 from the top left. Each letter alone decides 4 cells of the grid, and every cell is decided \
         by exactly one letter.\n",
    );
    for bit in 0..BITS {
        let (a, b) = (Letter::new(bit, 0), Letter::new(bit, 1));
        let _ = writeln!(
            out,
            "\nLetter {} (the {} letter, {a} or {b}) controls {}:",
            bit + 1,
            ORDINALS[bit],
            shape(f.group(bit))
        );
        let mut cells = *f.group(bit);
        cells.sort();
        for cell in cells {
            let _ = writeln!(
                out,
                "- row {}, column {}: '{}' if the letter is {a}, '{}' if it is {b}.",
                cell.row + 1,
                cell.col + 1,
                f.symbol_for(cell, a).as_char(),
                f.symbol_for(cell, b).as_char(),
            );
        }
    }
    out
}

fn take_number(s: &mut &str) -> Option<usize> {
    let end = s.find(|c: char| !c.is_ascii_digit()).unwrap_or(s.len());
    let n = s[..end].parse().ok()?;
    *s = &s[end..];
    Some(n)
}

fn take_char(s: &mut &str) -> Option<char> {
    let c = s.chars().next()?;
    *s = &s[c.len_utf8()..];
    Some(c)
}

fn expect(s: &mut &str, lit: &str) -> Option<()> {
    *s = s.strip_prefix(lit)?;
    Some(())
}

/// Cell plus both (symbol, letter) pairs from one assignment line.
fn parse_cell_line(line: &str) -> Option<(Cell, Symbol, Letter, Symbol, Letter)> {
    let mut s = line.trim();
    expect(&mut s, "- row ")?;
    let r = take_number(&mut s)?;
    expect(&mut s, ", column ")?;
    let c = take_number(&mut s)?;
    expect(&mut s, ": '")?;
    let s1 = Symbol::from_char(take_char(&mut s)?)?;
    expect(&mut s, "' if the letter is ")?;
    let l1 = Letter::from_char(take_char(&mut s)?)?;
    expect(&mut s, ", '")?;
    let s2 = Symbol::from_char(take_char(&mut s)?)?;
    expect(&mut s, "' if it is ")?;
    let l2 = Letter::from_char(take_char(&mut s)?)?;
    if !(1..=4).contains(&r) || !(1..=4).contains(&c) {
        return None;
    }
    Some((Cell::new(r - 1, c - 1), s1, l1, s2, l2))
}

/// Reads back the per-cell lines of [`describe_rules`]. The setting tag is
/// not part of the text and must be supplied.
pub fn parse_rules_text(text: &str, setting: SettingTag) -> Option<CompositionalFunction> {
    let mut groups: [Vec<Cell>; BITS] = Default::default();
    let mut first = [Symbol::Dot; CELLS];
    let mut seen = [false; CELLS];
    for (cell, s1, l1, s2, l2) in text.lines().filter_map(parse_cell_line) {
        if l1.bit() != l2.bit() || l1.value() == l2.value() || s1 == s2 || seen[cell.index()] {
            return None;
        }
        seen[cell.index()] = true;
        groups[l1.bit()].push(cell);
        first[cell.index()] = if l1.value() == 0 { s1 } else { s2 };
    }
    let groups: [[Cell; 4]; BITS] = [
        groups[0].clone().try_into().ok()?,
        groups[1].clone().try_into().ok()?,
        groups[2].clone().try_into().ok()?,
        groups[3].clone().try_into().ok()?,
    ];
    CompositionalFunction::new(setting, groups, first).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rulegen_core::taskgen::{build_dataset, sample_function, SettingSpec};

    #[test]
    fn horizontal_names_rows() {
        let f = sample_function(&SettingSpec::new(SettingTag::Horizontal, 0), 0);
        let text = describe_rules(&f);
        assert!(text.contains("Letter 1 (the first letter, A or B) controls row 1:"));
        assert!(text.contains("Letter 4 (the fourth letter, G or H) controls row 4:"));
        assert_eq!(text.lines().filter(|l| l.starts_with("- row ")).count(), 16);
    }

    #[test]
    fn shapes_per_setting() {
        let v = describe_rules(&sample_function(&SettingSpec::new(SettingTag::Vertical, 0), 0));
        assert!(v.contains("controls column 1:"));
        let b = describe_rules(&sample_function(&SettingSpec::new(SettingTag::Block, 0), 0));
        assert!(b.contains("controls the 2x2 block in rows 3-4 and columns 3-4:"));
        let r = describe_rules(&sample_function(&SettingSpec::new(SettingTag::Random, 0), 0));
        assert!(r.contains("controls the cells ("));
    }

    #[test]
    fn round_trips_for_every_setting() {
        for tag in SettingTag::ALL {
            for i in 0..30 {
                let f = sample_function(&SettingSpec::new(tag, 17), i);
                let back = parse_rules_text(&describe_rules(&f), tag).unwrap();
                // Same mapping; group member order may differ.
                assert_eq!(build_dataset(&back, "x"), build_dataset(&f, "x"));
            }
        }
    }

    #[test]
    fn rejects_incomplete_text() {
        let f = sample_function(&SettingSpec::new(SettingTag::Random, 1), 0);
        let text = describe_rules(&f);
        let cut: String = text.lines().take(10).collect::<Vec<_>>().join("\n");
        assert_eq!(parse_rules_text(&cut, SettingTag::Random), None);
    }
}
