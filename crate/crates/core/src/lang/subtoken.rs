//! Identifier subtokenization: split camelCase / snake_case / digit runs into
//! lowercase subtokens, keeping enough structure to reassemble the original
//! byte-for-byte and to re-render the same subtokens in another style.

use serde::{Deserialize, Serialize};

/// Lossless decomposition: `original = seps[0] + raw[0] + seps[1] + raw[1]
/// + ... + trailing`, and `subtokens[i] = raw[i].to_lowercase()`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NameSplit {
    pub subtokens: Vec<String>,
    pub raw: Vec<String>,
    /// Separator (underscore/dollar run) before each piece; index 0 is the
    /// leading run, possibly empty.
    pub seps: Vec<String>,
    pub trailing: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NameStyle {
    Camel,
    Pascal,
    Snake,
    /// Leading-underscore prefix on a camelCase body.
    UnderscoreInit,
}

impl NameStyle {
    pub fn all() -> [NameStyle; 4] {
        [NameStyle::Camel, NameStyle::Pascal, NameStyle::Snake, NameStyle::UnderscoreInit]
    }
}

fn is_sep(c: char) -> bool {
    c == '_' || c == '$'
}

#[derive(PartialEq, Clone, Copy)]
enum CharClass {
    Lower,
    Upper,
    Digit,
}

fn classify(c: char) -> CharClass {
    if c.is_ascii_digit() {
        CharClass::Digit
    } else if c.is_uppercase() {
        CharClass::Upper
    } else {
        CharClass::Lower
    }
}

/// Split one separator-free run on case and digit boundaries.
fn split_word(word: &str, out: &mut Vec<String>) {
    let chars: Vec<char> = word.chars().collect();
    let mut start = 0usize;
    for i in 1..chars.len() {
        let prev = classify(chars[i - 1]);
        let cur = classify(chars[i]);
        let boundary = match (prev, cur) {
            (CharClass::Lower, CharClass::Upper) => true,
            (CharClass::Digit, CharClass::Upper) => true,
            (CharClass::Upper, CharClass::Upper) => {
                // last upper of an acronym starts the next word:
                // HTTPServer -> HTTP|Server
                chars.get(i + 1).is_some_and(|&c| classify(c) == CharClass::Lower)
            }
            (CharClass::Upper, CharClass::Lower) => false,
            (CharClass::Digit, CharClass::Lower) => true,
            (CharClass::Lower, CharClass::Digit) | (CharClass::Upper, CharClass::Digit) => true,
            (CharClass::Lower, CharClass::Lower) | (CharClass::Digit, CharClass::Digit) => false,
        };
        if boundary {
            out.push(chars[start..i].iter().collect());
            start = i;
        }
    }
    if start < chars.len() {
        out.push(chars[start..].iter().collect());
    }
}

pub fn split_name(name: &str) -> NameSplit {
    let mut raw: Vec<String> = Vec::new();
    let mut seps: Vec<String> = Vec::new();
    let mut cur_sep = String::new();
    let mut cur_word = String::new();
    for c in name.chars() {
        if is_sep(c) {
            if !cur_word.is_empty() {
                let mut pieces = Vec::new();
                split_word(&cur_word, &mut pieces);
                for (i, p) in pieces.into_iter().enumerate() {
                    seps.push(if i == 0 { std::mem::take(&mut cur_sep) } else { String::new() });
                    raw.push(p);
                }
                cur_word.clear();
            }
            cur_sep.push(c);
        } else {
            cur_word.push(c);
        }
    }
    let trailing;
    if !cur_word.is_empty() {
        let mut pieces = Vec::new();
        split_word(&cur_word, &mut pieces);
        for (i, p) in pieces.into_iter().enumerate() {
            seps.push(if i == 0 { std::mem::take(&mut cur_sep) } else { String::new() });
            raw.push(p);
        }
        trailing = String::new();
    } else {
        trailing = cur_sep;
    }
    let subtokens = raw.iter().map(|r| r.to_lowercase()).collect();
    NameSplit { subtokens, raw, seps, trailing }
}

/// Lowercase subtokens of an identifier. A name of only separators yields
/// the name itself so the result is never empty.
pub fn subtokenize(name: &str) -> Vec<String> {
    let split = split_name(name);
    if split.subtokens.is_empty() {
        vec![name.to_string()]
    } else {
        split.subtokens
    }
}

pub fn reassemble(split: &NameSplit) -> String {
    let mut out = String::new();
    for (sep, raw) in split.seps.iter().zip(&split.raw) {
        out.push_str(sep);
        out.push_str(raw);
    }
    out.push_str(&split.trailing);
    out
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().collect::<String>() + chars.as_str(),
        None => String::new(),
    }
}

/// Render lowercase subtokens in a naming style. Digit-run subtokens are
/// kept as-is; callers must re-validate identifier legality (a digit-leading
/// result is not a legal name).
pub fn render(subtokens: &[String], style: NameStyle) -> String {
    match style {
        NameStyle::Camel => {
            let mut out = String::new();
            for (i, s) in subtokens.iter().enumerate() {
                if i == 0 {
                    out.push_str(s);
                } else {
                    out.push_str(&capitalize(s));
                }
            }
            out
        }
        NameStyle::Pascal => subtokens.iter().map(|s| capitalize(s)).collect(),
        NameStyle::Snake => subtokens.join("_"),
        NameStyle::UnderscoreInit => {
            let mut out = String::from("_");
            out.push_str(&render(subtokens, NameStyle::Camel));
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn subs(name: &str) -> Vec<String> {
        subtokenize(name)
    }

    #[test]
    fn camel_case_splits() {
        assert_eq!(subs("userDetails"), ["user", "details"]);
        assert_eq!(subs("defaultValueMap"), ["default", "value", "map"]);
        assert_eq!(subs("x"), ["x"]);
    }

    #[test]
    fn hand_split_oracle_cases() {
        let cases: &[(&str, &[&str])] = &[
            ("userDetails", &["user", "details"]),
            ("userInfo", &["user", "info"]),
            ("defaultValueMap", &["default", "value", "map"]),
            ("HTTPServer", &["http", "server"]),
            ("parseJSONValue", &["parse", "json", "value"]),
            ("snake_case_name", &["snake", "case", "name"]),
            ("_privateField", &["private", "field"]),
            ("MAX_VALUE", &["max", "value"]),
            ("value2", &["value", "2"]),
            ("v2Counter", &["v", "2", "counter"]),
            ("ABC", &["abc"]),
            ("a$b", &["a", "b"]),
        ];
        for (name, want) in cases {
            assert_eq!(&subs(name), want, "split of {name}");
        }
    }

    #[test]
    fn reassembly_is_lossless() {
        for name in [
            "userDetails",
            "HTTPServer",
            "snake_case_name",
            "_privateField",
            "__doubleUnder",
            "MAX_VALUE",
            "value2",
            "a$b$c",
            "trailing_",
            "x",
            "_",
            "A1b2C3",
        ] {
            assert_eq!(reassemble(&split_name(name)), name, "round-trip of {name}");
        }
    }

    #[test]
    fn style_rendering() {
        let subs: Vec<String> = ["user", "details"].iter().map(|s| s.to_string()).collect();
        assert_eq!(render(&subs, NameStyle::Camel), "userDetails");
        assert_eq!(render(&subs, NameStyle::Pascal), "UserDetails");
        assert_eq!(render(&subs, NameStyle::Snake), "user_details");
        assert_eq!(render(&subs, NameStyle::UnderscoreInit), "_userDetails");
    }

    #[test]
    fn restyle_preserves_subtoken_multiset() {
        for name in ["userDetails", "parse_json_value", "_leadingCamel", "MAX_VALUE"] {
            let original = subtokenize(name);
            for style in NameStyle::all() {
                let restyled = render(&original, style);
                assert_eq!(subtokenize(&restyled), original, "{name} via {style:?}");
            }
        }
    }

    #[test]
    fn degenerate_names() {
        assert_eq!(subs("_"), ["_"]);
        assert_eq!(render(&[], NameStyle::Camel), "");
    }
}
