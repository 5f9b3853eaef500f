//! Random subset programs for robustness testing: fresh programs built from
//! the grammar, and corrupted variants of existing sources.

use rand::seq::IndexedRandom;
use rand::Rng;

const NAMES: [&str; 6] = ["x", "y", "rows", "i", "k", "t"];
const STRINGS: [&str; 9] = ["A", "C", "ACEG", "****", "....", "*", ".", "*..*", ""];

struct Gen<'r, R: Rng> {
    rng: &'r mut R,
    out: String,
    in_loop: bool,
}

impl<R: Rng> Gen<'_, R> {
    fn name(&mut self) -> &'static str {
        NAMES.choose(self.rng).unwrap()
    }

    fn atom(&mut self) -> String {
        match self.rng.random_range(0..7) {
            0 => "s".into(),
            1 => format!("s[{}]", self.rng.random_range(-5..6)),
            2 => self.rng.random_range(-3..20).to_string(),
            3 => format!("'{}'", STRINGS.choose(self.rng).unwrap()),
            4 => ["True", "False", "None"].choose(self.rng).unwrap().to_string(),
            _ => self.name().to_string(),
        }
    }

    fn expr(&mut self, depth: u32) -> String {
        if depth == 0 || self.rng.random_bool(0.3) {
            return self.atom();
        }
        let d = depth - 1;
        let e = match self.rng.random_range(0..14) {
            0 => format!("{} + {}", self.expr(d), self.expr(d)),
            1 => format!("({} * {})", self.expr(d), self.expr(d)),
            2 => format!("{} {} {}", self.expr(d), ["==", "!=", "<", "in", "not in"].choose(self.rng).unwrap(), self.expr(d)),
            3 => format!("[{}, {}]", self.expr(d), self.expr(d)),
            4 => format!("{}[{}]", self.expr(d), self.expr(d)),
            5 => format!("{{{}: {}}}", self.atom(), self.expr(d)),
            6 => format!("{} if {} else {}", self.expr(d), self.expr(d), self.expr(d)),
            7 => format!("[{} for {} in {}]", self.expr(d), self.name(), self.expr(d)),
            8 => format!("{}({})", ["len", "range", "str", "int", "list", "sorted", "sum", "max"].choose(self.rng).unwrap(), self.expr(d)),
            9 => format!("''.join({})", self.expr(d)),
            10 => format!("{}.get({}, {})", self.expr(d), self.expr(d), self.expr(d)),
            11 => format!("({} // {})", self.expr(d), self.expr(d)),
            12 => format!("{}[{}:{}]", self.expr(d), self.rng.random_range(-4..5), self.rng.random_range(-4..5)),
            _ => format!("not {}", self.expr(d)),
        };
        format!("({e})")
    }

    fn line(&mut self, indent: usize, text: &str) {
        for _ in 0..indent {
            self.out.push_str("    ");
        }
        self.out.push_str(text);
        self.out.push('\n');
    }

    fn block(&mut self, indent: usize, depth: u32) {
        let n = self.rng.random_range(1..4);
        for _ in 0..n {
            self.stmt(indent, depth);
        }
    }

    fn stmt(&mut self, indent: usize, depth: u32) {
        let compound = depth > 0;
        match self.rng.random_range(0..if compound { 12 } else { 6 }) {
            0 | 1 => {
                let text = format!("{} = {}", self.name(), self.expr(3));
                self.line(indent, &text);
            }
            2 => {
                let text = format!("{} += {}", self.name(), self.expr(2));
                self.line(indent, &text);
            }
            3 => {
                let text = format!("{}[{}] = {}", self.name(), self.expr(1), self.expr(2));
                self.line(indent, &text);
            }
            4 => {
                let text = format!("{}.append({})", self.name(), self.expr(2));
                self.line(indent, &text);
            }
            5 => {
                let text = if self.in_loop && self.rng.random_bool(0.5) {
                    ["break", "continue"].choose(self.rng).unwrap().to_string()
                } else {
                    format!("return {}", self.expr(3))
                };
                self.line(indent, &text);
            }
            6 | 7 => {
                let text = format!("if {}:", self.expr(2));
                self.line(indent, &text);
                self.block(indent + 1, depth - 1);
                if self.rng.random_bool(0.4) {
                    let text = format!("elif {}:", self.expr(2));
                    self.line(indent, &text);
                    self.block(indent + 1, depth - 1);
                }
                if self.rng.random_bool(0.5) {
                    self.line(indent, "else:");
                    self.block(indent + 1, depth - 1);
                }
            }
            8 | 9 => {
                let text = format!("for {} in {}:", self.name(), self.expr(2));
                self.line(indent, &text);
                let saved = std::mem::replace(&mut self.in_loop, true);
                self.block(indent + 1, depth - 1);
                self.in_loop = saved;
            }
            10 => {
                // Sometimes bounded, sometimes not.
                let text = format!("while {}:", self.expr(2));
                self.line(indent, &text);
                let saved = std::mem::replace(&mut self.in_loop, true);
                self.block(indent + 1, depth - 1);
                self.in_loop = saved;
            }
            _ => {
                let name = format!("h{}", self.rng.random_range(0..3));
                self.line(indent, &format!("def {name}(s):"));
                let saved = std::mem::replace(&mut self.in_loop, false);
                self.block(indent + 1, depth - 1);
                self.in_loop = saved;
                let text = format!("{} = {name}({})", self.name(), self.expr(1));
                self.line(indent, &text);
            }
        }
    }
}

/// A random program in the accepted subset, usually (but not always) with a
/// `generate(s)` entry point. Only syntax is guaranteed, never behaviour.
pub fn random_program<R: Rng>(rng: &mut R) -> String {
    let mut g = Gen { rng, out: String::new(), in_loop: false };
    let prelude = g.rng.random_range(0..3);
    for _ in 0..prelude {
        g.stmt(0, 1);
    }
    if g.rng.random_bool(0.9) {
        g.line(0, "def generate(s):");
        g.line(1, "rows = ['....', '....', '....', '....']");
        g.block(1, 3);
        g.line(1, "return rows");
    }
    // Top-level return is rejected at run time, keep the prelude harmless.
    g.out.replace("\nreturn ", "\nx = ").trim_start_matches("return ").to_string()
}

/// A corrupted copy of `source`: lines dropped, duplicated or re-indented,
/// characters swapped or replaced. The result may or may not parse.
pub fn mutate<R: Rng>(source: &str, rng: &mut R) -> String {
    let mut lines: Vec<String> = source.lines().map(str::to_string).collect();
    let edits = rng.random_range(1..4);
    for _ in 0..edits {
        if lines.is_empty() {
            break;
        }
        let i = rng.random_range(0..lines.len());
        match rng.random_range(0..7) {
            0 => {
                lines.remove(i);
            }
            1 => {
                let l = lines[i].clone();
                lines.insert(i, l);
            }
            2 => lines[i] = format!("    {}", lines[i]),
            3 => lines[i] = lines[i].trim_start().to_string(),
            4 | 5 => {
                let mut chars: Vec<char> = lines[i].chars().collect();
                if !chars.is_empty() {
                    let j = rng.random_range(0..chars.len());
                    chars[j] = *['*', '.', 'A', 'H', '0', '9', '(', ']', ':', ' ', '\'', '-']
                        .choose(rng)
                        .unwrap();
                    lines[i] = chars.into_iter().collect();
                }
            }
            _ => {
                let j = rng.random_range(0..lines.len());
                lines.swap(i, j);
            }
        }
    }
    let mut out = lines.join("\n");
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_program;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_programs_mostly_parse() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ok = (0..300).filter(|_| parse_program(&random_program(&mut rng)).is_ok()).count();
        assert_eq!(ok, 300, "only {ok}/300 parsed");
    }
}
