use std::sync::LazyLock;

use regex::Regex;
use unicode_normalization::UnicodeNormalization;

static MARKUP: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"<[^>]*>").unwrap());

/// Strips markup tags, applies NFC normalization and collapses whitespace runs
/// into single spaces.
///
/// The function is idempotent: a `<` left in the output never has a `>` after it,
/// so a second pass finds no tag to remove.
pub fn normalize_text(raw: &str) -> String {
    let stripped = MARKUP.replace_all(raw, " ");
    let composed: String = stripped.nfc().collect();
    composed.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Lowercase alphanumeric word unigrams.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn strips_markup_and_collapses_whitespace() {
        assert_eq!(normalize_text("<b>Glioma  therapy</b>\n"), "Glioma therapy");
        assert_eq!(normalize_text(""), "");
        assert_eq!(normalize_text("  a\t\tb \r\n c "), "a b c");
        assert_eq!(normalize_text("in<i>vivo</i>"), "in vivo");
    }

    #[test]
    fn composes_decomposed_accents() {
        // U+0065 U+0301 is the decomposed form of U+00E9.
        let decomposed = "cafe\u{0301}";
        assert_eq!(normalize_text(decomposed), "caf\u{00e9}");
        assert_eq!(normalize_text(decomposed).chars().count(), 4);
    }

    #[test]
    fn tokenizer_lowercases_and_splits_on_punctuation() {
        let toks: Vec<_> = tokenize("Tumor-suppressor p53, in MICE.").collect();
        assert_eq!(toks, ["tumor", "suppressor", "p53", "in", "mice"]);
    }

    proptest! {
        #[test]
        fn normalization_is_idempotent(s in "[ a-z<>/\\t\\n\u{0301}\u{00e9}e]{0,40}") {
            let once = normalize_text(&s);
            prop_assert_eq!(normalize_text(&once), once);
        }

        #[test]
        fn normalization_is_idempotent_on_arbitrary_text(s in any::<String>()) {
            let once = normalize_text(&s);
            prop_assert_eq!(normalize_text(&once), once);
        }
    }
}
