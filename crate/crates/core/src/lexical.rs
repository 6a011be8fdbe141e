//! Native lexical complexity indices.
//!
//! Covers the token-level measures (type-token ratio family, lexical
//! sophistication against a ranked frequency list, early-window uniqueness)
//! and, when coarse part-of-speech tags are supplied, the variation and
//! ratio measures that need them. Everything else arrives through the index
//! matrix CSV.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{concatenate_pair_indices, Dataset, IndexMatrix};
use crate::error::{Error, Result};

pub const DEFAULT_SEGMENT: usize = 50;
pub const DEFAULT_FIRST_K: usize = 50;
pub const DEFAULT_SOPHISTICATION_CUTOFF: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PosTag {
    Noun,
    Verb,
    Adj,
    Adv,
    Other,
}

impl PosTag {
    pub fn is_lexical(self) -> bool {
        !matches!(self, PosTag::Other)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TokenizedText {
    pub tokens: Vec<String>,
    pub tags: Option<Vec<PosTag>>,
    /// Sentence count of the source text; 0 for empty input.
    pub sentences: usize,
}

impl TokenizedText {
    pub fn with_tags(mut self, tags: Vec<PosTag>) -> Result<Self> {
        if tags.len() != self.tokens.len() {
            return Err(Error::Shape(format!(
                "{} tags for {} tokens",
                tags.len(),
                self.tokens.len()
            )));
        }
        self.tags = Some(tags);
        Ok(self)
    }

    fn n(&self) -> usize {
        self.tokens.len()
    }
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

/// Lowercased alphanumeric runs. An apostrophe between two alphanumeric
/// characters stays inside the token, so contractions survive whole.
pub fn tokenize(text: &str) -> TokenizedText {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut sentences = 0;
    let mut sentence_has_token = false;
    let mut current = String::new();

    for (i, &c) in chars.iter().enumerate() {
        if c.is_alphanumeric() {
            current.extend(c.to_lowercase());
            continue;
        }
        let joins = is_apostrophe(c)
            && !current.is_empty()
            && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric());
        if joins {
            current.push('\'');
            continue;
        }
        if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
            sentence_has_token = true;
        }
        if matches!(c, '.' | '!' | '?') && sentence_has_token {
            sentences += 1;
            sentence_has_token = false;
        }
    }
    if !current.is_empty() {
        tokens.push(current);
        sentence_has_token = true;
    }
    if sentence_has_token {
        sentences += 1;
    }
    TokenizedText {
        tokens,
        tags: None,
        sentences,
    }
}

/// Ranked word list; the first `cutoff` words count as common.
#[derive(Debug, Clone)]
pub struct FrequencyList {
    ranked_words: Vec<String>,
    cutoff: usize,
    common: HashSet<String>,
}

impl FrequencyList {
    pub fn new(ranked_words: Vec<String>, cutoff: usize) -> Result<Self> {
        if cutoff > ranked_words.len() {
            return Err(Error::Argument(format!(
                "cutoff {cutoff} exceeds frequency list length {}",
                ranked_words.len()
            )));
        }
        let mut seen = HashSet::with_capacity(ranked_words.len());
        for w in &ranked_words {
            if !seen.insert(w.as_str()) {
                return Err(Error::Argument(format!("frequency list repeats {w:?}")));
            }
        }
        let common = ranked_words[..cutoff].iter().cloned().collect();
        Ok(FrequencyList {
            ranked_words,
            cutoff,
            common,
        })
    }

    /// Reads one word per line, most frequent first. A list shorter than
    /// `cutoff` is used whole.
    pub fn load(path: impl AsRef<Path>, cutoff: usize) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut words = Vec::new();
        let mut seen = HashSet::new();
        for line in BufReader::new(file).lines() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let w = line.trim().to_lowercase();
            // case-folded duplicates keep their best rank
            if !w.is_empty() && seen.insert(w.clone()) {
                words.push(w);
            }
        }
        if words.len() < cutoff {
            log::warn!(
                "{}: {} words, below cutoff {cutoff}; using the whole list",
                path.display(),
                words.len()
            );
        }
        let cutoff = cutoff.min(words.len());
        FrequencyList::new(words, cutoff)
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn ranked_words(&self) -> &[String] {
        &self.ranked_words
    }

    pub fn is_sophisticated(&self, word: &str) -> bool {
        !self.common.contains(word)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TtrFamily {
    pub ttr: f64,
    pub root_ttr: f64,
    pub corrected_ttr: f64,
    pub log_ttr: f64,
    pub msttr: f64,
}

fn unique_count<'a>(tokens: impl IntoIterator<Item = &'a String>) -> usize {
    tokens.into_iter().collect::<HashSet<_>>().len()
}

pub fn ttr_family(t: &TokenizedText, k_segment: usize) -> Result<TtrFamily> {
    if k_segment == 0 {
        return Err(Error::Argument("segment length must be positive".into()));
    }
    let n = t.n();
    if n == 0 {
        return Ok(TtrFamily::default());
    }
    let u = unique_count(&t.tokens) as f64;
    let nf = n as f64;
    let ttr = u / nf;
    let log_ttr = if n == 1 { 1.0 } else { u.ln() / nf.ln() };
    let segments: Vec<f64> = t
        .tokens
        .chunks_exact(k_segment)
        .map(|seg| unique_count(seg) as f64 / k_segment as f64)
        .collect();
    let msttr = if segments.is_empty() {
        ttr
    } else {
        segments.iter().sum::<f64>() / segments.len() as f64
    };
    Ok(TtrFamily {
        ttr,
        root_ttr: u / nf.sqrt(),
        corrected_ttr: u / (2.0 * nf).sqrt(),
        log_ttr,
        msttr,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Sophistication {
    pub unique_words: f64,
    pub unique_sophisticated: f64,
    pub total_sophisticated: f64,
    pub lexical_sophistication_total: f64,
    pub lexical_sophistication_unique: f64,
    pub unique_in_first_k: f64,
}

pub fn sophistication_counts(t: &TokenizedText, f: &FrequencyList, first_k: usize) -> Sophistication {
    let unique: HashSet<&String> = t.tokens.iter().collect();
    let total_soph = t.tokens.iter().filter(|w| f.is_sophisticated(w)).count();
    let unique_soph = unique.iter().filter(|w| f.is_sophisticated(w)).count();
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    Sophistication {
        unique_words: unique.len() as f64,
        unique_sophisticated: unique_soph as f64,
        total_sophisticated: total_soph as f64,
        lexical_sophistication_total: ratio(total_soph, t.n()),
        lexical_sophistication_unique: ratio(unique_soph, unique.len()),
        unique_in_first_k: unique_in_first_k(t, first_k),
    }
}

fn unique_in_first_k(t: &TokenizedText, k: usize) -> f64 {
    unique_count(t.tokens.iter().take(k)) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PosIndices {
    pub noun_variation: f64,
    pub adj_variation: f64,
    pub adv_variation: f64,
    pub verb_variation_unique: f64,
    pub verbs_per_token: f64,
    pub nouns_per_verb: f64,
    pub adverbs_per_sentence_proxy: f64,
}

pub const POS_INDEX_NAMES: [&str; 7] = [
    "noun_variation",
    "adj_variation",
    "adv_variation",
    "verb_variation",
    "verbs_per_token",
    "nouns_per_verb",
    "adverbs_per_sentence",
];

pub fn pos_indices(t: &TokenizedText) -> Result<PosIndices> {
    let tags = t.tags.as_ref().ok_or_else(|| {
        Error::Unsupported(format!(
            "indices {} need part-of-speech tags",
            POS_INDEX_NAMES.join(", ")
        ))
    })?;
    let mut by_tag: HashMap<PosTag, (usize, HashSet<&str>)> = HashMap::new();
    for (tok, &tag) in t.tokens.iter().zip(tags) {
        let e = by_tag.entry(tag).or_default();
        e.0 += 1;
        e.1.insert(tok);
    }
    let count = |tag| by_tag.get(&tag).map_or(0, |e| e.0);
    let unique = |tag| by_tag.get(&tag).map_or(0, |e| e.1.len());
    let lexical = tags.iter().filter(|t| t.is_lexical()).count();
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let verbs = count(PosTag::Verb);
    Ok(PosIndices {
        noun_variation: ratio(unique(PosTag::Noun), lexical),
        adj_variation: ratio(unique(PosTag::Adj), lexical),
        adv_variation: ratio(unique(PosTag::Adv), lexical),
        verb_variation_unique: ratio(unique(PosTag::Verb), verbs),
        verbs_per_token: ratio(verbs, t.n()),
        nouns_per_verb: count(PosTag::Noun) as f64 / verbs.max(1) as f64,
        adverbs_per_sentence_proxy: count(PosTag::Adv) as f64 / t.sentences.max(1) as f64,
    })
}

/// One line of the optional tagged-token JSON-lines input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaggedRecord {
    pub id: String,
    pub tokens: Vec<String>,
    pub tags: Vec<PosTag>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tokens_pair: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tags_pair: Option<Vec<PosTag>>,
}

pub fn load_tags(path: impl AsRef<Path>) -> Result<HashMap<String, TaggedRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = HashMap::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: TaggedRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_owned(),
            line: i + 1,
            message: e.to_string(),
        })?;
        if rec.tokens.len() != rec.tags.len() {
            return Err(Error::Parse {
                path: path.to_owned(),
                line: i + 1,
                message: format!("{} tokens but {} tags", rec.tokens.len(), rec.tags.len()),
            });
        }
        let id = rec.id.clone();
        if out.insert(id.clone(), rec).is_some() {
            return Err(Error::DuplicateId(id));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct ExtractOptions {
    pub k_segment: usize,
    pub first_k: usize,
    /// Enables the four sophistication columns.
    pub frequency: Option<FrequencyList>,
    /// Enables the seven tag-dependent columns.
    pub tags: Option<HashMap<String, TaggedRecord>>,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        ExtractOptions {
            k_segment: DEFAULT_SEGMENT,
            first_k: DEFAULT_FIRST_K,
            frequency: None,
            tags: None,
        }
    }
}

impl ExtractOptions {
    pub fn index_names(&self) -> Vec<String> {
        let mut names = vec!["ttr", "root_ttr", "corrected_ttr", "log_ttr", "msttr", "unique_words"];
        if self.frequency.is_some() {
            names.extend([
                "unique_sophisticated",
                "total_sophisticated",
                "lexical_sophistication_total",
                "lexical_sophistication_unique",
            ]);
        }
        names.push("unique_in_first_k");
        if self.tags.is_some() {
            names.extend(POS_INDEX_NAMES);
        }
        names.into_iter().map(str::to_owned).collect()
    }

    fn row(&self, t: &TokenizedText) -> Result<Vec<f64>> {
        let ttr = ttr_family(t, self.k_segment)?;
        let mut row = vec![ttr.ttr, ttr.root_ttr, ttr.corrected_ttr, ttr.log_ttr, ttr.msttr];
        match &self.frequency {
            Some(f) => {
                let s = sophistication_counts(t, f, self.first_k);
                row.extend([
                    s.unique_words,
                    s.unique_sophisticated,
                    s.total_sophisticated,
                    s.lexical_sophistication_total,
                    s.lexical_sophistication_unique,
                    s.unique_in_first_k,
                ]);
            }
            None => row.extend([unique_count(&t.tokens) as f64, unique_in_first_k(t, self.first_k)]),
        }
        if self.tags.is_some() {
            let p = pos_indices(t)?;
            row.extend([
                p.noun_variation,
                p.adj_variation,
                p.adv_variation,
                p.verb_variation_unique,
                p.verbs_per_token,
                p.nouns_per_verb,
                p.adverbs_per_sentence_proxy,
            ]);
        }
        Ok(row)
    }

    fn tokenized(&self, id: &str, text: &str, second: bool) -> Result<TokenizedText> {
        let mut t = tokenize(text);
        if let Some(table) = &self.tags {
            let rec = table.get(id).ok_or_else(|| Error::Coverage {
                id: id.to_owned(),
                what: "tagged token input".into(),
            })?;
            let (tokens, tags) = if second {
                match (&rec.tokens_pair, &rec.tags_pair) {
                    (Some(tok), Some(tag)) => (tok, tag),
                    _ => {
                        return Err(Error::Coverage {
                            id: id.to_owned(),
                            what: "tagged token input (second text)".into(),
                        })
                    }
                }
            } else {
                (&rec.tokens, &rec.tags)
            };
            t.tokens = tokens.iter().map(|w| w.to_lowercase()).collect();
            t = t.with_tags(tags.clone())?;
        }
        Ok(t)
    }
}

/// Computes the native index columns for every sample, in dataset order.
/// Pair datasets get one block per text, tagged `(P)` / `(H)`.
pub fn compute_index_matrix(d: &Dataset, opts: &ExtractOptions) -> Result<IndexMatrix> {
    let names = opts.index_names();
    let first = per_text_matrix(d, opts, &names, false)?;
    if !d.is_pair() {
        return Ok(first);
    }
    let second = per_text_matrix(d, opts, &names, true)?;
    concatenate_pair_indices(&first, &second)
}

fn per_text_matrix(d: &Dataset, opts: &ExtractOptions, names: &[String], second: bool) -> Result<IndexMatrix> {
    let mut values = Vec::with_capacity(d.len() * names.len());
    for s in d.samples() {
        let text = if second {
            s.text_pair.as_deref().unwrap_or("")
        } else {
            &s.text
        };
        values.extend(opts.row(&opts.tokenized(&s.id, text, second)?)?);
    }
    IndexMatrix::new(d.ids(), names.to_vec(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::read_dataset;

    fn toks(words: &[&str]) -> TokenizedText {
        TokenizedText {
            tokens: words.iter().map(|w| w.to_string()).collect(),
            tags: None,
            sentences: 1,
        }
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("The cat sat.").tokens, ["the", "cat", "sat"]);
        assert_eq!(tokenize("don't stop").tokens, ["don't", "stop"]);
        assert!(tokenize("").tokens.is_empty());
        assert_eq!(tokenize("").sentences, 0);
        assert_eq!(tokenize("'quoted' words'").tokens, ["quoted", "words"]);
        assert_eq!(tokenize("One. Two! Three").sentences, 3);
        assert_eq!(tokenize("Wait... what?!").sentences, 2);
    }

    #[test]
    fn ttr_hand_examples() {
        let t = toks(&["a", "b", "b", "a", "c"]);
        let f = ttr_family(&t, 2).unwrap();
        assert_eq!(f.ttr, 0.6);
        assert!((f.corrected_ttr - 3.0 / 10f64.sqrt()).abs() < 1e-15);
        assert!((f.corrected_ttr - 0.94868).abs() < 1e-5);
        assert!((f.root_ttr - 1.34164).abs() < 1e-5);
        assert!((f.log_ttr - 0.68261).abs() < 1e-5);
        assert_eq!(f.msttr, 1.0);
    }

    #[test]
    fn ttr_degenerate_lengths() {
        assert_eq!(ttr_family(&toks(&[]), 50).unwrap(), TtrFamily::default());
        let one = ttr_family(&toks(&["x"]), 50).unwrap();
        assert_eq!(one.log_ttr, 1.0);
        // no full segment: msttr falls back to the whole-text ratio
        let t = toks(&["a", "a", "b"]);
        let f = ttr_family(&t, 5).unwrap();
        assert_eq!(f.msttr, f.ttr);
    }

    #[test]
    fn sophistication_hand_examples() {
        let f = FrequencyList::new(vec!["the".into(), "a".into()], 1).unwrap();
        let s = sophistication_counts(&toks(&["the", "cat"]), &f, 50);
        assert_eq!(s.total_sophisticated, 1.0);
        assert_eq!(s.lexical_sophistication_total, 0.5);

        let s = sophistication_counts(&toks(&["the", "the"]), &f, 50);
        assert_eq!(s.lexical_sophistication_total, 0.0);
        assert_eq!(s.lexical_sophistication_unique, 0.0);

        assert_eq!(sophistication_counts(&toks(&[]), &f, 50), Sophistication::default());
    }

    #[test]
    fn unique_in_first_k_window() {
        let f = FrequencyList::new(vec![], 0).unwrap();
        let s = sophistication_counts(&toks(&["a", "a", "b", "c"]), &f, 2);
        assert_eq!(s.unique_in_first_k, 1.0);
        assert_eq!(s.unique_words, 3.0);
    }

    #[test]
    fn frequency_list_validation() {
        assert!(FrequencyList::new(vec!["a".into(), "a".into()], 1).is_err());
        assert!(FrequencyList::new(vec!["a".into()], 2).is_err());
    }

    #[test]
    fn pos_examples() {
        let t = toks(&["run", "run"]).with_tags(vec![PosTag::Verb, PosTag::Verb]).unwrap();
        assert_eq!(pos_indices(&t).unwrap().verb_variation_unique, 0.5);

        let t = toks(&["dogs", "cats", "the"])
            .with_tags(vec![PosTag::Noun, PosTag::Noun, PosTag::Other])
            .unwrap();
        let p = pos_indices(&t).unwrap();
        assert_eq!(p.verb_variation_unique, 0.0);
        assert_eq!(p.nouns_per_verb, 2.0);
        assert_eq!(p.noun_variation, 1.0);

        let err = pos_indices(&toks(&["x"])).unwrap_err();
        match err {
            Error::Unsupported(msg) => assert!(msg.contains("verb_variation")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn tag_length_mismatch_rejected() {
        assert!(toks(&["a"]).with_tags(vec![]).is_err());
    }

    fn dataset(pair: bool) -> Dataset {
        let extra = if pair { r#","text_pair":"A dog ran.""# } else { "" };
        let src = format!(
            "{{\"id\":\"a\",\"text\":\"The cat sat on the mat.\",\"label\":0,\"split\":\"train\"{extra}}}\n\
             {{\"id\":\"b\",\"text\":\"Colorless green ideas sleep furiously.\",\"label\":1,\"split\":\"train\"{extra}}}\n"
        );
        read_dataset(src.as_bytes(), "d.jsonl").unwrap()
    }

    #[test]
    fn matrix_shape_for_native_subset() {
        let opts = ExtractOptions {
            frequency: Some(FrequencyList::new(vec!["the".into(), "on".into()], 2).unwrap()),
            ..Default::default()
        };
        let m = compute_index_matrix(&dataset(false), &opts).unwrap();
        assert_eq!((m.n_rows(), m.n_cols()), (2, 11));

        let pair = compute_index_matrix(&dataset(true), &opts).unwrap();
        assert_eq!(pair.n_cols(), 22);
        assert!(pair.index_names()[11].ends_with("(H)"));
    }

    #[test]
    fn matrix_is_deterministic() {
        let opts = ExtractOptions::default();
        let a = compute_index_matrix(&dataset(true), &opts).unwrap();
        let b = compute_index_matrix(&dataset(true), &opts).unwrap();
        assert_eq!(a, b);
        assert!(a.values().iter().zip(b.values()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn tags_add_pos_columns() {
        let mut table = HashMap::new();
        for (id, n) in [("a", 6), ("b", 5)] {
            table.insert(
                id.to_string(),
                TaggedRecord {
                    id: id.into(),
                    tokens: (0..n).map(|i| format!("w{i}")).collect(),
                    tags: vec![PosTag::Verb; n],
                    tokens_pair: None,
                    tags_pair: None,
                },
            );
        }
        let opts = ExtractOptions {
            tags: Some(table),
            ..Default::default()
        };
        let m = compute_index_matrix(&dataset(false), &opts).unwrap();
        assert_eq!(m.n_cols(), 7 + 7);
        let vv = m.column_position("verb_variation").unwrap();
        assert_eq!(m.get(0, vv), 1.0);
    }
}
