//! Caption tokenization and part-of-speech tagging.
//!
//! The tokenizer splits on whitespace and isolates punctuation; every token
//! keeps its UTF-8 byte span in the source string. The tagger is pluggable
//! through [`PosTagger`]; [`LexiconTagger`] is a small closed-class lexicon
//! with suffix rules and a one-token context rule for noun/verb homographs,
//! which is enough for caption-style English.

use std::collections::HashMap;

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    /// Byte offsets `[start, end)` into the tokenized string.
    pub span: (usize, usize),
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '\'' || c == '-'
}

pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut start: Option<usize> = None;
    for (i, c) in text.char_indices() {
        if is_word_char(c) {
            if start.is_none() {
                start = Some(i);
            }
            continue;
        }
        if let Some(s) = start.take() {
            tokens.push(Token {
                text: text[s..i].to_string(),
                span: (s, i),
            });
        }
        if !c.is_whitespace() {
            let end = i + c.len_utf8();
            tokens.push(Token {
                text: text[i..end].to_string(),
                span: (i, end),
            });
        }
    }
    if let Some(s) = start {
        tokens.push(Token {
            text: text[s..].to_string(),
            span: (s, text.len()),
        });
    }
    tokens
}

/// Lower-cased word tokens only (punctuation dropped).
pub fn word_tokens(text: &str) -> Vec<String> {
    tokenize(text)
        .into_iter()
        .filter(|t| t.text.chars().any(char::is_alphanumeric))
        .map(|t| t.text.to_lowercase())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PosTag {
    Noun,
    Verb,
    Adjective,
    Adverb,
    Determiner,
    Preposition,
    Pronoun,
    Conjunction,
    Number,
    Punctuation,
}

impl PosTag {
    pub fn is_noun(self) -> bool {
        self == PosTag::Noun
    }
}

pub trait PosTagger: Send + Sync {
    /// One tag per token, in order.
    fn tag(&self, tokens: &[Token]) -> Result<Vec<PosTag>>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Entry {
    Fixed(PosTag),
    /// Noun or verb depending on the preceding token.
    NounOrVerb,
}

#[derive(Debug, Clone)]
pub struct LexiconTagger {
    lexicon: HashMap<String, Entry>,
}

const DETERMINERS: &[&str] = &[
    "a", "an", "the", "this", "that", "these", "those", "some", "each", "every", "another",
    "his", "her", "its", "their", "our", "my", "your", "several", "many", "few", "no", "both",
    "all", "any",
];
const PREPOSITIONS: &[&str] = &[
    "on", "in", "at", "with", "of", "near", "to", "by", "under", "over", "while", "from",
    "into", "onto", "inside", "outside", "behind", "beside", "next", "across", "through",
    "around", "along", "above", "below", "between", "up", "down", "for", "about", "against",
    "atop", "toward", "towards", "during", "beneath", "underneath", "off", "out", "as",
];
const PRONOUNS: &[&str] = &[
    "he", "she", "it", "they", "we", "i", "you", "him", "them", "us", "me", "who", "which",
    "someone", "something", "there", "what",
];
const CONJUNCTIONS: &[&str] = &["and", "or", "but", "so", "yet", "nor"];
const NUMBERS: &[&str] = &[
    "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten", "dozen",
];
const ADVERBS: &[&str] = &[
    "very", "together", "outside", "nearby", "here", "away", "just", "also", "still", "too",
    "almost", "back", "not",
];
const ADJECTIVES: &[&str] = &[
    "small", "large", "big", "little", "red", "white", "black", "green", "blue", "brown",
    "yellow", "orange", "pink", "purple", "gray", "grey", "young", "old", "tall", "short",
    "wooden", "empty", "full", "open", "busy", "clean", "dirty", "dark", "bright", "colorful",
    "giant", "tiny", "huge", "long", "grassy", "snowy", "sunny", "cloudy", "plastic", "metal",
    "several", "other", "different", "same", "fresh", "happy", "cute", "modern", "various",
    "top", "front", "baby", "adult", "new",
];
const VERBS: &[&str] = &[
    "is", "are", "was", "were", "be", "been", "being", "has", "have", "had", "do", "does",
    "sits", "sit", "sat", "stands", "stood", "ran", "runs", "holds", "holding", "held",
    "eats", "ate", "eaten", "lies", "lay", "lays", "looks", "looking", "waits", "waiting",
    "sitting", "standing", "lying", "laying", "running", "walking", "riding", "eating",
    "playing", "flying", "carrying", "wearing", "wears", "parked", "filled", "covered",
    "topped", "made", "shows", "showing", "goes", "going", "rides", "jumps", "jumping",
    "sleeping", "sleeps", "throws", "throwing", "catches", "catching", "grazing", "grazes",
    "hanging", "hangs", "leaning", "leans", "posing", "poses", "watching", "watches",
    "driving", "drives", "cutting", "cuts", "preparing", "taking", "takes", "using", "uses",
    "getting", "gets", "swinging", "hitting", "hits", "traveling", "travels", "crossing",
    "crosses", "pulling", "pulls", "displayed", "seen", "sliced", "stacked", "placed",
    "can", "will", "could", "would",
];
const NOUN_OR_VERB: &[&str] = &[
    "park", "walk", "ride", "play", "dress", "surf", "skate", "fly", "stand", "run", "rest",
    "drink", "cook", "hold", "sleep", "swim", "jump", "look", "wait", "watch", "sign",
    "display", "cover", "top", "jump", "train", "board", "fence", "bowl", "plate", "show",
];
/// Nouns that would otherwise trip the `-ing` / `-ed` / `-ly` suffix rules.
const NOUN_EXCEPTIONS: &[&str] = &[
    "building", "buildings", "ceiling", "clothing", "ring", "king", "wing", "string", "thing",
    "things", "painting", "sibling", "bed", "sled", "shed", "family", "lily", "belly", "jelly",
    "bully", "frisbee", "pudding", "icing", "sling", "swing", "railing", "stocking", "bowling",
];

impl Default for LexiconTagger {
    fn default() -> Self {
        let mut lexicon = HashMap::new();
        let groups: [(&[&str], Entry); 10] = [
            (NOUN_OR_VERB, Entry::NounOrVerb),
            (VERBS, Entry::Fixed(PosTag::Verb)),
            (ADJECTIVES, Entry::Fixed(PosTag::Adjective)),
            (ADVERBS, Entry::Fixed(PosTag::Adverb)),
            (NUMBERS, Entry::Fixed(PosTag::Number)),
            (CONJUNCTIONS, Entry::Fixed(PosTag::Conjunction)),
            (PRONOUNS, Entry::Fixed(PosTag::Pronoun)),
            (PREPOSITIONS, Entry::Fixed(PosTag::Preposition)),
            (DETERMINERS, Entry::Fixed(PosTag::Determiner)),
            (NOUN_EXCEPTIONS, Entry::Fixed(PosTag::Noun)),
        ];
        // later groups win on overlap
        for (words, entry) in groups {
            for w in words {
                lexicon.insert((*w).to_string(), entry);
            }
        }
        Self { lexicon }
    }
}

impl LexiconTagger {
    /// Add or override a lexicon entry.
    pub fn with_word(mut self, word: &str, tag: PosTag) -> Self {
        self.lexicon.insert(word.to_lowercase(), Entry::Fixed(tag));
        self
    }

    fn noun_context(prev: Option<PosTag>) -> bool {
        matches!(
            prev,
            None | Some(
                PosTag::Determiner
                    | PosTag::Adjective
                    | PosTag::Preposition
                    | PosTag::Number
                    | PosTag::Conjunction
                    | PosTag::Punctuation
            )
        )
    }

    fn tag_word(&self, word: &str, prev: Option<PosTag>) -> PosTag {
        let lower = word.to_lowercase();
        if lower.chars().all(|c| c.is_ascii_digit()) {
            return PosTag::Number;
        }
        match self.lexicon.get(&lower) {
            Some(Entry::Fixed(tag)) => *tag,
            Some(Entry::NounOrVerb) => {
                if Self::noun_context(prev) {
                    PosTag::Noun
                } else {
                    PosTag::Verb
                }
            }
            None => {
                if lower.ends_with("ly") && lower.len() > 4 {
                    PosTag::Adverb
                } else if (lower.ends_with("ing") || lower.ends_with("ed")) && lower.len() > 4 {
                    if prev == Some(PosTag::Determiner) {
                        PosTag::Adjective
                    } else {
                        PosTag::Verb
                    }
                } else {
                    PosTag::Noun
                }
            }
        }
    }
}

impl PosTagger for LexiconTagger {
    fn tag(&self, tokens: &[Token]) -> Result<Vec<PosTag>> {
        let mut tags = Vec::with_capacity(tokens.len());
        let mut prev = None;
        for tok in tokens {
            let tag = if tok.text.chars().any(char::is_alphanumeric) {
                self.tag_word(&tok.text, prev)
            } else {
                PosTag::Punctuation
            };
            tags.push(tag);
            prev = Some(tag);
        }
        Ok(tags)
    }
}
