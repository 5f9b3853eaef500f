//! Pulling a program out of a free-form model response.

use super::parse_program;

/// Contents of every fenced block, in order. Handles ``` and ~~~ fences with
/// optional info strings; an unclosed final fence runs to end of input.
pub fn fenced_blocks(response: &str) -> Vec<String> {
    let mut blocks = Vec::new();
    let mut current: Option<(String, Vec<&str>)> = None;
    for line in response.lines() {
        let trimmed = line.trim_start();
        match &mut current {
            None => {
                if let Some(fence) = fence_marker(trimmed) {
                    current = Some((fence, Vec::new()));
                }
            }
            Some((fence, lines)) => {
                let t = trimmed.trim_end();
                if t.starts_with(fence.as_str()) && t.chars().all(|c| c == fence.chars().next().unwrap()) {
                    blocks.push(lines.join("\n"));
                    current = None;
                } else {
                    lines.push(line);
                }
            }
        }
    }
    if let Some((_, lines)) = current {
        blocks.push(lines.join("\n"));
    }
    blocks
}

fn fence_marker(line: &str) -> Option<String> {
    for ch in ['`', '~'] {
        let n = line.chars().take_while(|&c| c == ch).count();
        if n >= 3 {
            return Some(std::iter::repeat_n(ch, n).collect());
        }
    }
    None
}

/// The last fenced block; without any fence, the whole response if it parses
/// as a program.
pub fn extract_code_block(response: &str) -> Option<String> {
    if let Some(last) = fenced_blocks(response).pop() {
        return Some(last);
    }
    let trimmed = response.trim();
    if !trimmed.is_empty() && parse_program(trimmed).is_ok() {
        Some(trimmed.to_string())
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_fence() {
        let r = "Here you go:\n```python\nx = 1\n```\nDone.";
        assert_eq!(extract_code_block(r).unwrap(), "x = 1");
    }

    #[test]
    fn last_fence_wins() {
        let r = "Draft:\n```python\nx = 1\n```\nBetter:\n```\ny = 2\nz = 3\n```\n";
        assert_eq!(extract_code_block(r).unwrap(), "y = 2\nz = 3");
    }

    #[test]
    fn prose_only_is_absent() {
        assert_eq!(extract_code_block("I think the rule is that each letter picks a row."), None);
        assert_eq!(extract_code_block(""), None);
    }

    #[test]
    fn bare_program_is_accepted() {
        let r = "def generate(s):\n    return ['....'] * 4\n";
        assert_eq!(extract_code_block(r).unwrap(), r.trim());
    }

    #[test]
    fn unclosed_and_tilde_fences() {
        assert_eq!(extract_code_block("~~~\na = 1\n~~~").unwrap(), "a = 1");
        assert_eq!(extract_code_block("```py\na = 1\nb = 2").unwrap(), "a = 1\nb = 2");
    }

    #[test]
    fn indented_fences_keep_body_indentation() {
        let r = "  ```python\ndef f(s):\n    return s\n  ```";
        assert_eq!(extract_code_block(r).unwrap(), "def f(s):\n    return s");
    }
}
