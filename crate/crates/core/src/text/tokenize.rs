//! Default token counter.
//!
//! A token is a maximal run of alphanumeric characters (a word) or a maximal
//! run of punctuation/symbol characters. Whitespace separates tokens and is
//! never counted. Because every token class is a maximal run, concatenating
//! two strings can merge at most one boundary pair, which keeps
//! `count(a + b) >= max(count(a), count(b))`.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CharClass {
    Space,
    Word,
    Punct,
}

fn classify(c: char) -> CharClass {
    if c.is_whitespace() {
        CharClass::Space
    } else if c.is_alphanumeric() {
        CharClass::Word
    } else {
        CharClass::Punct
    }
}

/// Counts tokens in `text` under the word/punctuation-run rule.
pub fn count_tokens(text: &str) -> u64 {
    let mut count = 0u64;
    let mut prev = CharClass::Space;
    for c in text.chars() {
        let class = classify(c);
        if class != CharClass::Space && class != prev {
            count += 1;
        }
        prev = class;
    }
    count
}

/// Splits `text` into its tokens, in order. Mostly useful for debugging and
/// for callers that want the same segmentation [`count_tokens`] uses.
pub fn tokens(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start: Option<(usize, CharClass)> = None;
    for (i, c) in text.char_indices() {
        let class = classify(c);
        if matches!(start, Some((_, cls)) if cls == class) {
            continue;
        }
        if let Some((s, _)) = start {
            out.push(&text[s..i]);
        }
        start = (class != CharClass::Space).then_some((i, class));
    }
    if let Some((s, _)) = start {
        out.push(&text[s..]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_text_has_no_tokens() {
        assert_eq!(count_tokens(""), 0);
        assert_eq!(count_tokens("   \n\t"), 0);
    }

    #[test]
    fn words_and_punctuation_runs() {
        // Who / is / Elon / Musk / ?
        assert_eq!(count_tokens("Who is Elon Musk?"), 5);
        assert_eq!(tokens("Who is Elon Musk?"), vec!["Who", "is", "Elon", "Musk", "?"]);
        assert_eq!(count_tokens("Wait!!! really?!"), 4);
        assert_eq!(count_tokens("don't"), 3);
        assert_eq!(count_tokens("3.5"), 3);
    }

    #[test]
    fn unicode_words_count_once() {
        assert_eq!(count_tokens("naïve café"), 2);
        assert_eq!(count_tokens("東京 は"), 2);
    }

    proptest! {
        #[test]
        fn monotone_under_concatenation(a in "[a-z .,!?']{0,24}", b in "[a-z .,!?']{0,24}") {
            let joined = format!("{a}{b}");
            let ca = count_tokens(&a);
            let cb = count_tokens(&b);
            prop_assert!(count_tokens(&joined) >= ca.max(cb));
        }

        #[test]
        fn tokens_agree_with_count(s in "\\PC{0,40}") {
            prop_assert_eq!(tokens(&s).len() as u64, count_tokens(&s));
        }
    }
}
