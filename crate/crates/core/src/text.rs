//! Character-addressed string helpers. All offsets in this crate count
//! Unicode scalar values, not bytes.

/// Trims the ends and collapses every internal whitespace run to one space.
pub fn normalize_whitespace(raw: &str) -> String {
    raw.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn char_len(s: &str) -> usize {
    s.chars().count()
}

/// Substring by character range `[start, end)`. Out-of-range ends are clamped.
pub fn char_slice(s: &str, start: usize, end: usize) -> &str {
    if start >= end {
        return "";
    }
    let mut indices = s.char_indices().map(|(b, _)| b).chain(std::iter::once(s.len()));
    let from = indices.nth(start).unwrap_or(s.len());
    let to = indices.nth(end - start - 1).unwrap_or(s.len());
    &s[from..to]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collapses_runs() {
        assert_eq!(normalize_whitespace("  当 我\t\t看到  \n"), "当 我 看到");
        assert_eq!(normalize_whitespace(" \t "), "");
    }

    #[test]
    fn slices_by_char() {
        let s = "老人 很高兴";
        assert_eq!(char_slice(s, 0, 2), "老人");
        assert_eq!(char_slice(s, 3, 6), "很高兴");
        assert_eq!(char_slice(s, 3, 99), "很高兴");
        assert_eq!(char_slice(s, 4, 4), "");
        assert_eq!(char_len(s), 6);
    }
}
