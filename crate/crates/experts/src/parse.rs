//! Parsers that turn free-text expert replies into structured data.
//!
//! All parsers are pure. Failures come back as a list of
//! [`ParseViolation`]s, each of which names the rule a repair prompt should
//! remind the expert of.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::OnceLock;

use ahp_core::csv_format::format_ratio;
use ahp_core::elicitation::{normalize_label, tidy_label, word_count};
use ahp_core::PairwiseMatrix;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::persona::ExpertPersona;
use crate::prompt::MatrixRequest;

/// Distance within which a decimal is read as a scale point.
pub const SCALE_SNAP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParseViolation {
    EmptyReply,
    CountMismatch {
        expected: usize,
        found: usize,
        context: String,
    },
    LabelTooLong {
        label: String,
        words: usize,
        max_words: usize,
    },
    DuplicateLabel {
        label: String,
    },
    MissingGroup {
        parent: String,
    },
    MissingItem {
        item: String,
    },
    DuplicateItem {
        item: String,
    },
    NotAnInteger {
        item: String,
        token: String,
    },
    ScoreOutOfRange {
        item: String,
        score: i64,
    },
    MissingMatrix {
        node: String,
    },
    LabelMismatch {
        node: String,
        expected: Vec<String>,
        found: Vec<String>,
    },
    MissingCell {
        node: String,
        row: String,
        col: String,
    },
    OffScale {
        node: String,
        row: String,
        col: String,
        token: String,
    },
    Diagonal {
        node: String,
        label: String,
        token: String,
    },
    Reciprocity {
        node: String,
        row: String,
        col: String,
        upper: String,
        lower: String,
    },
    PersonaFormat {
        detail: String,
    },
}

impl ParseViolation {
    /// The guideline a reminder prompt should restate.
    pub fn rule(&self) -> &'static str {
        match self {
            Self::EmptyReply => "Please answer in the requested format.",
            Self::CountMismatch { .. } => "Give exactly the requested number of items.",
            Self::LabelTooLong { .. } => "Keep each name within the requested word limit.",
            Self::DuplicateLabel { .. } => "Every item in the list must be different.",
            Self::MissingGroup { .. } => "Answer for every listed parent criterion, using its name as a heading.",
            Self::MissingItem { .. } | Self::DuplicateItem { .. } => {
                "Score every listed item exactly once, as \"Item: score\"."
            }
            Self::NotAnInteger { .. } | Self::ScoreOutOfRange { .. } => "Scores must be whole numbers from 1 to 9.",
            Self::MissingMatrix { .. } => "Provide one comparison matrix for every requested node.",
            Self::LabelMismatch { .. } => "Use exactly the given items as row and column headers, in the given order.",
            Self::MissingCell { .. } => "Fill in every cell of the matrix.",
            Self::OffScale { .. } => "AHP judgments must come from the scale 1/9 ... 1/2, 1, 2 ... 9.",
            Self::Diagonal { .. } => "In AHP every item compared with itself scores 1.",
            Self::Reciprocity { .. } => {
                "AHP matrices are reciprocal: if A is rated x against B, B must be rated exactly 1/x against A."
            }
            Self::PersonaFormat { .. } => {
                "Present each expert as \"Title, Name:\" followed by Background and Personality/Preferences lines."
            }
        }
    }
}

impl fmt::Display for ParseViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::EmptyReply => write!(f, "empty reply"),
            Self::CountMismatch {
                expected,
                found,
                context,
            } => {
                write!(
                    f,
                    "count mismatch in {context}: expected {expected}, found {found}"
                )
            }
            Self::LabelTooLong {
                label,
                words,
                max_words,
            } => {
                write!(f, "{label:?} has {words} words, more than {max_words}")
            }
            Self::DuplicateLabel { label } => write!(f, "{label:?} is listed twice"),
            Self::MissingGroup { parent } => write!(f, "no items given for {parent:?}"),
            Self::MissingItem { item } => write!(f, "no score for {item:?}"),
            Self::DuplicateItem { item } => write!(f, "{item:?} is scored more than once"),
            Self::NotAnInteger { item, token } => {
                write!(f, "score {token:?} for {item:?} is not a whole number")
            }
            Self::ScoreOutOfRange { item, score } => {
                write!(f, "score {score} for {item:?} is outside 1..9")
            }
            Self::MissingMatrix { node } => write!(f, "no matrix for {node:?}"),
            Self::LabelMismatch {
                node,
                expected,
                found,
            } => {
                write!(
                    f,
                    "matrix for {node:?} has headers {found:?}, expected {expected:?}"
                )
            }
            Self::MissingCell { node, row, col } => {
                write!(f, "matrix for {node:?} lacks ({row}, {col})")
            }
            Self::OffScale {
                node,
                row,
                col,
                token,
            } => {
                write!(
                    f,
                    "matrix for {node:?}: ({row}, {col}) = {token} is not on the Saaty scale"
                )
            }
            Self::Diagonal { node, label, token } => {
                write!(
                    f,
                    "matrix for {node:?}: diagonal entry for {label:?} is {token}, not 1"
                )
            }
            Self::Reciprocity {
                node,
                row,
                col,
                upper,
                lower,
            } => {
                write!(
                    f,
                    "matrix for {node:?}: ({row}, {col}) = {upper} but ({col}, {row}) = {lower}"
                )
            }
            Self::PersonaFormat { detail } => write!(f, "persona format: {detail}"),
        }
    }
}

pub type Parsed<T> = Result<T, Vec<ParseViolation>>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SaatyError {
    #[error("{0:?} is not a number")]
    Unparseable(String),
    #[error("{0:?} is not on the scale 1/9..9")]
    OutOfScale(String),
}

/// Scale point at `k` in -8..=8: `k+1` for k >= 0, `1/(1-k)` below.
fn scale_point(k: i32) -> f64 {
    if k >= 0 {
        f64::from(k + 1)
    } else {
        1.0 / f64::from(1 - k)
    }
}

/// Reads one judgment. Integers 1..9, fractions 1/2..1/9 and decimals within
/// [`SCALE_SNAP`] of a scale point are accepted; the result is the exact ratio.
pub fn parse_saaty_value(token: &str) -> Result<f64, SaatyError> {
    let t = token.trim().trim_matches('*').trim();
    let raw = if let Some((p, q)) = t.split_once('/') {
        let p: f64 = p
            .trim()
            .parse()
            .map_err(|_| SaatyError::Unparseable(token.into()))?;
        let q: f64 = q
            .trim()
            .parse()
            .map_err(|_| SaatyError::Unparseable(token.into()))?;
        if q == 0.0 {
            return Err(SaatyError::Unparseable(token.into()));
        }
        p / q
    } else {
        t.parse::<f64>()
            .map_err(|_| SaatyError::Unparseable(token.into()))?
    };
    if !raw.is_finite() {
        return Err(SaatyError::Unparseable(token.into()));
    }
    (-8..=8)
        .map(scale_point)
        .find(|s| (raw - s).abs() <= SCALE_SNAP)
        .ok_or_else(|| SaatyError::OutOfScale(token.into()))
}

/// Scale point closest to `ratio` in log space.
pub fn nearest_saaty(ratio: f64) -> f64 {
    let l = ratio.ln();
    (-8..=8)
        .map(scale_point)
        .min_by(|a, b| (a.ln() - l).abs().total_cmp(&(b.ln() - l).abs()))
        .expect("scale is non-empty")
}

fn list_marker() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\s*(?:[-*•+]|\(?\d{1,3}[.)]|\(?[a-zA-Z][.)])\s+").unwrap())
}

/// Strips list markers, emphasis and surrounding punctuation.
fn clean_line(line: &str) -> String {
    let s = list_marker().replace(line, "");
    let s = s.replace("**", "").replace("__", "");
    let s = s.trim().trim_start_matches('#').trim();
    s.trim_matches(|c: char| c == '"' || c == '\'' || c == '`')
        .trim()
        .to_string()
}

/// Label part of a list item: drops a trailing description after a colon or dash.
fn item_label(line: &str) -> String {
    let cleaned = clean_line(line);
    let mut cut = cleaned.as_str();
    for sep in [": ", " - ", " – ", " — "] {
        if let Some((head, _)) = cut.split_once(sep) {
            cut = head;
        }
    }
    tidy_label(cut.trim_end_matches([':', '.', ';', ',']))
}

fn is_list_item(line: &str) -> bool {
    list_marker().is_match(line)
}

fn check_labels(
    labels: &[String],
    expected: usize,
    max_words: usize,
    context: &str,
) -> Vec<ParseViolation> {
    let mut v = Vec::new();
    if labels.len() != expected {
        v.push(ParseViolation::CountMismatch {
            expected,
            found: labels.len(),
            context: context.into(),
        });
    }
    let mut seen = HashMap::new();
    for l in labels {
        let words = word_count(l);
        if words > max_words {
            v.push(ParseViolation::LabelTooLong {
                label: l.clone(),
                words,
                max_words,
            });
        }
        if let Ok(c) = normalize_label(l) {
            if seen.insert(c, ()).is_some() {
                v.push(ParseViolation::DuplicateLabel { label: l.clone() });
            }
        }
    }
    v
}

fn raw_items(reply: &str) -> Vec<String> {
    let lines: Vec<&str> = reply.lines().filter(|l| !l.trim().is_empty()).collect();
    let marked: Vec<&str> = lines.iter().copied().filter(|l| is_list_item(l)).collect();
    if !marked.is_empty() {
        return marked
            .into_iter()
            .map(item_label)
            .filter(|l| !l.is_empty())
            .collect();
    }
    let body = match lines.as_slice() {
        [] => return Vec::new(),
        [single] => *single,
        // A lead-in line followed by a comma list.
        [.., last] if last.contains(',') => *last,
        _ => {
            return lines
                .into_iter()
                .map(item_label)
                .filter(|l| !l.is_empty())
                .collect()
        }
    };
    // "Here they are: A, B, C" keeps only the part after the lead-in.
    let body = match body.split_once(':') {
        Some((_, rest)) if rest.contains(',') => rest,
        _ => body,
    };
    body.split(',')
        .map(item_label)
        .filter(|l| !l.is_empty())
        .collect()
}

/// Extracts exactly `expected_n` labels from a numbered, bulleted,
/// line-per-item or comma-separated reply.
pub fn parse_item_list(reply: &str, expected_n: usize, max_words: usize) -> Parsed<Vec<String>> {
    if reply.trim().is_empty() {
        return Err(vec![ParseViolation::EmptyReply]);
    }
    let labels = raw_items(reply);
    let v = check_labels(&labels, expected_n, max_words, "list");
    if v.is_empty() {
        Ok(labels)
    } else {
        Err(v)
    }
}

fn canonical(s: &str) -> String {
    normalize_label(s).unwrap_or_default()
}

/// Parses one list of items per parent. A line naming a parent (optionally
/// followed by a colon and an inline comma list) opens its group.
pub fn parse_grouped_items(
    reply: &str,
    parents: &[String],
    expected_per_group: usize,
    max_words: usize,
) -> Parsed<Vec<(String, Vec<String>)>> {
    if reply.trim().is_empty() {
        return Err(vec![ParseViolation::EmptyReply]);
    }
    let index: HashMap<String, usize> = parents
        .iter()
        .enumerate()
        .map(|(i, p)| (canonical(p), i))
        .collect();
    let mut groups: Vec<Option<Vec<String>>> = vec![None; parents.len()];
    let mut current: Option<usize> = None;
    for line in reply.lines().filter(|l| !l.trim().is_empty()) {
        let cleaned = clean_line(line);
        let (head, inline) = match cleaned.split_once(':') {
            Some((h, rest)) => (h.trim().to_string(), rest.trim().to_string()),
            None => (cleaned.clone(), String::new()),
        };
        let head_key = canonical(head.trim_end_matches(['.', ':']));
        if let Some(&i) = index.get(&head_key) {
            current = Some(i);
            let group = groups[i].get_or_insert_with(Vec::new);
            if !inline.is_empty() {
                group.extend(inline.split(',').map(item_label).filter(|l| !l.is_empty()));
            }
            continue;
        }
        if let Some(i) = current {
            let label = item_label(line);
            if !label.is_empty() {
                groups[i].get_or_insert_with(Vec::new).push(label);
            }
        }
    }
    let mut violations = Vec::new();
    let mut out = Vec::new();
    for (parent, items) in parents.iter().zip(groups) {
        match items {
            None => violations.push(ParseViolation::MissingGroup {
                parent: parent.clone(),
            }),
            Some(items) => {
                violations.extend(check_labels(&items, expected_per_group, max_words, parent));
                out.push((parent.clone(), items));
            }
        }
    }
    if violations.is_empty() {
        Ok(out)
    } else {
        Err(violations)
    }
}

fn trailing_score() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(-?\d+(?:\.\d+)?)\s*(?:/\s*9)?\s*[|.]?\s*$").unwrap())
}

/// Maps every item to an integer score 1..9. Lines naming unknown items are
/// treated as commentary.
pub fn parse_ballot(reply: &str, items: &[String]) -> Parsed<Vec<(String, u8)>> {
    if reply.trim().is_empty() {
        return Err(vec![ParseViolation::EmptyReply]);
    }
    let index: HashMap<String, usize> = items
        .iter()
        .enumerate()
        .map(|(i, p)| (canonical(p), i))
        .collect();
    let mut scores: Vec<Option<String>> = vec![None; items.len()];
    let mut violations = Vec::new();
    for line in reply.lines() {
        let cleaned = clean_line(line.trim().trim_start_matches('|'));
        let Some(m) = trailing_score().captures(&cleaned) else {
            continue;
        };
        let whole = m.get(0).expect("match");
        let label = cleaned[..whole.start()]
            .trim_end()
            .trim_end_matches([':', '-', '–', '—', '=', '|', '(', ' '])
            .trim();
        let label = label.replace("**", "");
        let Some(&i) = index.get(&canonical(&label)) else {
            continue;
        };
        let token = m[1].to_string();
        if scores[i].as_ref().is_some_and(|prev| prev != &token) {
            violations.push(ParseViolation::DuplicateItem {
                item: items[i].clone(),
            });
        }
        scores[i] = Some(token);
    }
    let mut out = Vec::with_capacity(items.len());
    for (item, token) in items.iter().zip(scores) {
        let Some(token) = token else {
            violations.push(ParseViolation::MissingItem { item: item.clone() });
            continue;
        };
        match token.parse::<i64>() {
            Err(_) => violations.push(ParseViolation::NotAnInteger {
                item: item.clone(),
                token,
            }),
            Ok(s) if !(1..=9).contains(&s) => violations.push(ParseViolation::ScoreOutOfRange {
                item: item.clone(),
                score: s,
            }),
            Ok(s) => out.push((item.clone(), s as u8)),
        }
    }
    if violations.is_empty() {
        Ok(out)
    } else {
        Err(violations)
    }
}

/// A table found in a reply: the nearest heading above it and its rows of cells.
#[derive(Debug, Clone)]
struct RawTable {
    heading: String,
    rows: Vec<Vec<String>>,
}

fn table_cells(line: &str) -> Option<Vec<String>> {
    let t = line.trim();
    let cells: Vec<&str> = if t.contains('|') {
        let inner = t.strip_prefix('|').unwrap_or(t);
        let inner = inner.strip_suffix('|').unwrap_or(inner);
        inner.split('|').collect()
    } else if t.matches('\t').count() >= 2 {
        t.split('\t').collect()
    } else {
        return None;
    };
    Some(
        cells
            .into_iter()
            .map(|c| c.trim().replace("**", "").trim().to_string())
            .collect(),
    )
}

fn is_separator(cells: &[String]) -> bool {
    cells
        .iter()
        .all(|c| !c.is_empty() && c.chars().all(|ch| matches!(ch, '-' | ':' | ' ')))
}

fn find_tables(reply: &str) -> Vec<RawTable> {
    let mut tables = Vec::new();
    let mut heading = String::new();
    let mut current: Option<RawTable> = None;
    for line in reply.lines() {
        match table_cells(line) {
            Some(cells) if !is_separator(&cells) => current
                .get_or_insert_with(|| RawTable {
                    heading: heading.clone(),
                    rows: Vec::new(),
                })
                .rows
                .push(cells),
            Some(_) => {}
            None => {
                if let Some(t) = current.take() {
                    tables.push(t);
                }
                if !line.trim().is_empty() {
                    heading = clean_line(line);
                }
            }
        }
    }
    tables.extend(current);
    tables.retain(|t| t.rows.len() >= 2);
    tables
}

/// Maps header texts to label indices: exact canonical matches first, and
/// positional when the count matches but names are abbreviated.
fn map_headers(headers: &[String], labels: &[String]) -> Option<Vec<usize>> {
    if headers.len() != labels.len() {
        return None;
    }
    let keys: Vec<String> = labels.iter().map(|l| canonical(l)).collect();
    let exact: Vec<Option<usize>> = headers
        .iter()
        .map(|h| keys.iter().position(|k| *k == canonical(h)))
        .collect();
    if exact.iter().all(Option::is_some) {
        let idx: Vec<usize> = exact.into_iter().flatten().collect();
        let mut sorted = idx.clone();
        sorted.sort_unstable();
        sorted.dedup();
        return (sorted.len() == labels.len()).then_some(idx);
    }
    // Positional fallback must not contradict any header that does match exactly.
    exact
        .iter()
        .enumerate()
        .all(|(pos, m)| m.is_none_or(|i| i == pos))
        .then(|| (0..labels.len()).collect())
}

fn matrix_from_table(table: &RawTable, request: &MatrixRequest) -> Parsed<PairwiseMatrix> {
    let labels = &request.labels;
    let node = request.node.clone();
    let n = labels.len();
    let header = &table.rows[0];
    let body = &table.rows[1..];
    let mismatch = || ParseViolation::LabelMismatch {
        node: node.clone(),
        expected: labels.clone(),
        found: header.iter().skip(1).cloned().collect(),
    };
    let cols =
        map_headers(&header[1.min(header.len())..], labels).ok_or_else(|| vec![mismatch()])?;
    let row_names: Vec<String> = body
        .iter()
        .map(|r| r.first().cloned().unwrap_or_default())
        .collect();
    let rows = map_headers(&row_names, labels).ok_or_else(|| {
        vec![ParseViolation::LabelMismatch {
            node: node.clone(),
            expected: labels.clone(),
            found: row_names.clone(),
        }]
    })?;
    let mut cells: Vec<Vec<Option<(f64, String)>>> = vec![vec![None; n]; n];
    let mut violations = Vec::new();
    for (r, row) in body.iter().enumerate() {
        for (c, text) in row.iter().skip(1).take(n).enumerate() {
            let (i, j) = (rows[r], cols[c]);
            let token = text.trim();
            if token.is_empty() || matches!(token, "-" | "–" | "—" | "x" | "X" | "?") {
                continue;
            }
            match parse_saaty_value(token) {
                Ok(v) => cells[i][j] = Some((v, token.to_string())),
                Err(_) => violations.push(ParseViolation::OffScale {
                    node: node.clone(),
                    row: labels[i].clone(),
                    col: labels[j].clone(),
                    token: token.to_string(),
                }),
            }
        }
    }
    if !violations.is_empty() {
        return Err(violations);
    }
    assemble(&node, labels, cells)
}

/// Fills the matrix from whatever cells were given, deriving missing mirrors
/// by reciprocity and reporting conflicts.
fn assemble(
    node: &str,
    labels: &[String],
    cells: Vec<Vec<Option<(f64, String)>>>,
) -> Parsed<PairwiseMatrix> {
    let n = labels.len();
    let mut out = vec![vec![1.0; n]; n];
    let mut violations = Vec::new();
    for i in 0..n {
        if let Some((v, tok)) = &cells[i][i] {
            if *v != 1.0 {
                violations.push(ParseViolation::Diagonal {
                    node: node.into(),
                    label: labels[i].clone(),
                    token: tok.clone(),
                });
            }
        }
        for j in i + 1..n {
            match (&cells[i][j], &cells[j][i]) {
                (Some((a, _)), None) => {
                    out[i][j] = *a;
                    out[j][i] = 1.0 / *a;
                }
                (None, Some((b, _))) => {
                    out[j][i] = *b;
                    out[i][j] = 1.0 / *b;
                }
                (Some((a, ta)), Some((b, tb))) => {
                    if (a * b - 1.0).abs() > 1e-9 {
                        violations.push(ParseViolation::Reciprocity {
                            node: node.into(),
                            row: labels[i].clone(),
                            col: labels[j].clone(),
                            upper: ta.clone(),
                            lower: tb.clone(),
                        });
                    }
                    out[i][j] = *a;
                    out[j][i] = 1.0 / *a;
                }
                (None, None) => violations.push(ParseViolation::MissingCell {
                    node: node.into(),
                    row: labels[i].clone(),
                    col: labels[j].clone(),
                }),
            }
        }
    }
    if !violations.is_empty() {
        return Err(violations);
    }
    PairwiseMatrix::from_rows(labels.to_vec(), out).map_err(|e| {
        vec![ParseViolation::LabelMismatch {
            node: node.into(),
            expected: labels.to_vec(),
            found: vec![e.to_string()],
        }]
    })
}

fn triple_line() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)^(.+?)\s+(?:vs\.?|versus|compared to|over)\s+(.+?)\s*(?:[:=]|->|→)\s*([0-9]+(?:\.[0-9]+)?(?:\s*/\s*[0-9]+)?)\s*\.?$")
            .unwrap()
    })
}

/// "A vs B: 3" style judgments for one request's labels.
fn matrix_from_triples(reply: &str, request: &MatrixRequest) -> Option<Parsed<PairwiseMatrix>> {
    let n = request.labels.len();
    let keys: Vec<String> = request.labels.iter().map(|l| canonical(l)).collect();
    let mut cells: Vec<Vec<Option<(f64, String)>>> = vec![vec![None; n]; n];
    let mut any = false;
    let mut violations = Vec::new();
    for line in reply.lines() {
        let cleaned = clean_line(line);
        let Some(m) = triple_line().captures(&cleaned) else {
            continue;
        };
        let (Some(i), Some(j)) = (
            keys.iter().position(|k| *k == canonical(&m[1])),
            keys.iter().position(|k| *k == canonical(&m[2])),
        ) else {
            continue;
        };
        any = true;
        let token = m[3].to_string();
        match parse_saaty_value(&token) {
            Ok(v) => cells[i][j] = Some((v, token)),
            Err(_) => violations.push(ParseViolation::OffScale {
                node: request.node.clone(),
                row: request.labels[i].clone(),
                col: request.labels[j].clone(),
                token,
            }),
        }
    }
    if !any {
        return None;
    }
    if !violations.is_empty() {
        return Some(Err(violations));
    }
    Some(assemble(&request.node, &request.labels, cells))
}

/// Parses one matrix per request. Tables are matched to requests by
/// heading, then by order of appearance; a request with no table falls back
/// to "A vs B: x" lines.
pub fn parse_matrices(reply: &str, requests: &[MatrixRequest]) -> Parsed<Vec<PairwiseMatrix>> {
    if reply.trim().is_empty() {
        return Err(vec![ParseViolation::EmptyReply]);
    }
    let tables = find_tables(reply);
    let mut assigned: Vec<Option<usize>> = vec![None; requests.len()];
    let mut used = vec![false; tables.len()];
    for (r, req) in requests.iter().enumerate() {
        let key = canonical(&req.node);
        if key.is_empty() {
            continue;
        }
        if let Some(t) =
            (0..tables.len()).find(|&t| !used[t] && canonical(&tables[t].heading).contains(&key))
        {
            assigned[r] = Some(t);
            used[t] = true;
        }
    }
    let mut free = (0..tables.len())
        .filter(|&t| !used[t])
        .collect::<Vec<_>>()
        .into_iter();
    for slot in assigned.iter_mut().filter(|s| s.is_none()) {
        *slot = free.next();
    }
    let mut out = Vec::with_capacity(requests.len());
    let mut violations = Vec::new();
    for (req, slot) in requests.iter().zip(assigned) {
        let result = match slot {
            Some(t) => matrix_from_table(&tables[t], req),
            None => match (requests.len() == 1 || tables.is_empty())
                .then(|| matrix_from_triples(reply, req))
                .flatten()
            {
                Some(r) => r,
                None => Err(vec![ParseViolation::MissingMatrix {
                    node: req.node.clone(),
                }]),
            },
        };
        match result {
            Ok(m) => out.push(m),
            Err(v) => violations.extend(v),
        }
    }
    if violations.is_empty() {
        Ok(out)
    } else {
        Err(violations)
    }
}

pub fn parse_matrix(reply: &str, labels: &[String]) -> Parsed<PairwiseMatrix> {
    let req = MatrixRequest {
        node: String::new(),
        labels: labels.to_vec(),
    };
    parse_matrices(reply, std::slice::from_ref(&req)).map(|mut v| v.remove(0))
}

/// Markdown table under a `### node` heading, with exact fractions.
pub fn render_matrix_table(node: &str, matrix: &PairwiseMatrix) -> String {
    let labels = matrix.labels();
    let mut out = String::new();
    if !node.is_empty() {
        out.push_str(&format!("### {node}\n\n"));
    }
    out.push_str(&format!("| | {} |\n", labels.join(" | ")));
    out.push_str(&format!("|---|{}\n", "---|".repeat(labels.len())));
    for (label, row) in labels.iter().zip(matrix.rows()) {
        let cells: Vec<String> = row.iter().map(|&v| format_ratio(v)).collect();
        out.push_str(&format!("| {label} | {} |\n", cells.join(" | ")));
    }
    out.trim_end().to_string()
}

/// Parses "Title, Name:" blocks with Background and Personality/Preferences lines.
pub fn parse_personas(reply: &str, expected: usize) -> Parsed<Vec<ExpertPersona>> {
    if reply.trim().is_empty() {
        return Err(vec![ParseViolation::EmptyReply]);
    }
    struct Draft {
        title: String,
        name: String,
        background: Option<String>,
        personality: Option<String>,
    }
    let mut drafts: Vec<Draft> = Vec::new();
    for line in reply.lines().filter(|l| !l.trim().is_empty()) {
        let cleaned = clean_line(line);
        let lower = cleaned.to_lowercase();
        if let Some(rest) = lower
            .strip_prefix("background:")
            .map(|_| cleaned["background:".len()..].trim())
        {
            if let Some(d) = drafts.last_mut() {
                d.background = Some(rest.to_string());
            }
        } else if lower.starts_with("personality") {
            let rest = cleaned.split_once(':').map(|(_, r)| r.trim()).unwrap_or("");
            if let Some(d) = drafts.last_mut() {
                d.personality = Some(rest.to_string());
            }
        } else if let Some(head) = cleaned.strip_suffix(':') {
            if let Some((title, name)) = head.split_once(", ") {
                drafts.push(Draft {
                    title: tidy_label(title),
                    name: tidy_label(name),
                    background: None,
                    personality: None,
                });
            }
        }
    }
    let mut violations = Vec::new();
    if drafts.len() != expected {
        violations.push(ParseViolation::CountMismatch {
            expected,
            found: drafts.len(),
            context: "persona list".into(),
        });
    }
    let mut out = Vec::new();
    for d in drafts {
        match (d.background, d.personality) {
            (Some(b), Some(p)) if !b.is_empty() && !p.is_empty() => {
                out.push(ExpertPersona::from_profile(&d.title, &d.name, &b, &p))
            }
            _ => violations.push(ParseViolation::PersonaFormat {
                detail: format!("{} lacks background or personality", d.name),
            }),
        }
    }
    if let Err(e) = crate::persona::validate_panel(&out) {
        violations.push(ParseViolation::PersonaFormat {
            detail: e.to_string(),
        });
    }
    if violations.is_empty() {
        Ok(out)
    } else {
        Err(violations)
    }
}

fn number_word(w: &str) -> Option<u32> {
    const WORDS: [&str; 12] = [
        "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
        "eleven",
    ];
    w.parse().ok().or_else(|| {
        WORDS
            .iter()
            .position(|x| x.eq_ignore_ascii_case(w))
            .map(|i| i as u32)
    })
}

/// Expert-count range suggested in a reply: "5-7 experts" gives (5, 7),
/// "seven experts" gives (7, 7).
pub fn parse_expert_count_advice(reply: &str) -> Option<(u32, u32)> {
    static RANGE: OnceLock<Regex> = OnceLock::new();
    static SINGLE: OnceLock<Regex> = OnceLock::new();
    let range = RANGE.get_or_init(|| {
        Regex::new(r"(?i)\b(\w+)\s*(?:-|–|to)\s*(\w+)\s+(?:\w+\s+)?experts\b").unwrap()
    });
    let single =
        SINGLE.get_or_init(|| Regex::new(r"(?i)\b(\w+)\s+(?:(\w+)\s+)?experts\b").unwrap());
    if let Some(c) = range.captures(reply) {
        if let (Some(a), Some(b)) = (number_word(&c[1]), number_word(&c[2])) {
            return Some((a.min(b), a.max(b)));
        }
    }
    single.captures_iter(reply).find_map(|c| {
        let near = c.get(2).and_then(|m| number_word(m.as_str()));
        near.or_else(|| number_word(&c[1])).map(|n| (n, n))
    })
}

/// Level count suggested in a reply: "a two-level structure", "3 levels".
pub fn parse_level_advice(reply: &str) -> Option<u32> {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = RE.get_or_init(|| Regex::new(r"(?i)\b(\w+)[-\s]levels?\b").unwrap());
    re.captures_iter(reply).find_map(|c| number_word(&c[1]))
}

/// Groups violations by rule for a compact reminder.
pub fn reminder_lines(violations: &[ParseViolation]) -> String {
    let mut by_rule: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    for v in violations {
        by_rule.entry(v.rule()).or_default().push(v.to_string());
    }
    by_rule
        .into_iter()
        .map(|(rule, items)| format!("- {rule} ({})", items.join("; ")))
        .collect::<Vec<_>>()
        .join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn saaty_values() {
        assert_eq!(parse_saaty_value("1/9").unwrap(), 1.0 / 9.0);
        assert_eq!(parse_saaty_value("1").unwrap(), 1.0);
        assert_eq!(parse_saaty_value(" 0.3333333 ").unwrap(), 1.0 / 3.0);
        assert_eq!(parse_saaty_value("**5**").unwrap(), 5.0);
        assert_eq!(parse_saaty_value("2/1").unwrap(), 2.0);
        assert_eq!(
            parse_saaty_value("0"),
            Err(SaatyError::OutOfScale("0".into()))
        );
        assert_eq!(
            parse_saaty_value("10"),
            Err(SaatyError::OutOfScale("10".into()))
        );
        assert_eq!(
            parse_saaty_value("0.4"),
            Err(SaatyError::OutOfScale("0.4".into()))
        );
        assert_eq!(
            parse_saaty_value("high"),
            Err(SaatyError::Unparseable("high".into()))
        );
        assert!(parse_saaty_value("1/0").is_err());
        assert_eq!(nearest_saaty(0.26), 0.25);
        assert_eq!(nearest_saaty(100.0), 9.0);
    }

    #[test]
    fn item_lists() {
        assert_eq!(
            parse_item_list("1. A\n2. B\n3. C", 3, 3).unwrap(),
            s(&["A", "B", "C"])
        );
        let reply = "Here are my picks:\n1. **Employee Training**: teaching staff\n2. Access Control - gates\n";
        assert_eq!(
            parse_item_list(reply, 2, 3).unwrap(),
            s(&["Employee Training", "Access Control"])
        );
        assert_eq!(
            parse_item_list("Sure: A, B, C", 3, 3).unwrap(),
            s(&["A", "B", "C"])
        );
        assert_eq!(
            parse_item_list("A, B, C", 3, 3).unwrap(),
            s(&["A", "B", "C"])
        );
        assert_eq!(
            parse_item_list("Criteria:\nA, B, C.", 3, 3).unwrap(),
            s(&["A", "B", "C"])
        );
        let err = parse_item_list("- a\n- b\n- c d e f", 4, 3).unwrap_err();
        assert!(err.iter().any(|v| matches!(
            v,
            ParseViolation::CountMismatch {
                expected: 4,
                found: 3,
                ..
            }
        )));
        assert!(err
            .iter()
            .any(|v| matches!(v, ParseViolation::LabelTooLong { words: 4, .. })));
        assert_eq!(
            parse_item_list("  ", 1, 3),
            Err(vec![ParseViolation::EmptyReply])
        );
    }

    #[test]
    fn grouped_items() {
        let parents = s(&["Audit Trails", "Behavior Analysis"]);
        let reply = "**Audit Trails:**\n1. Log Analysis Accuracy\n2. Audit Frequency\n\nBehavior Analysis: User Monitoring, Pattern Analysis";
        let g = parse_grouped_items(reply, &parents, 2, 3).unwrap();
        assert_eq!(g[0].1, s(&["Log Analysis Accuracy", "Audit Frequency"]));
        assert_eq!(g[1].1, s(&["User Monitoring", "Pattern Analysis"]));
        let err = parse_grouped_items("Audit Trails:\n- a\n- b", &parents, 2, 3).unwrap_err();
        assert_eq!(
            err,
            vec![ParseViolation::MissingGroup {
                parent: "Behavior Analysis".into()
            }]
        );
    }

    #[test]
    fn ballots() {
        let items = s(&["Audit Trails", "Behavior Analysis", "Staff Vigilance"]);
        let reply =
            "Scores:\n1. Audit Trails: 7\n- **Behavior Analysis** - 9/9\n| Staff Vigilance | 3 |";
        let b = parse_ballot(reply, &items).unwrap();
        assert_eq!(b.iter().map(|x| x.1).collect::<Vec<_>>(), vec![7, 9, 3]);
        let err = parse_ballot("Audit Trails: 0\nBehavior Analysis: 7.5", &items).unwrap_err();
        assert!(err.contains(&ParseViolation::ScoreOutOfRange {
            item: "Audit Trails".into(),
            score: 0
        }));
        assert!(err.contains(&ParseViolation::NotAnInteger {
            item: "Behavior Analysis".into(),
            token: "7.5".into()
        }));
        assert!(err.contains(&ParseViolation::MissingItem {
            item: "Staff Vigilance".into()
        }));
    }

    const EXPERT_TABLE: &str = "\
Criteria | Training Program Effectiveness | Awareness Session Regularity | Incident Reporting Protocol
--- | --- | --- | ---
Training Program Effectiveness | 1 | 2 | 3
Awareness Session Regularity | 1/2 | 1 | 2
Incident Reporting Protocol | 1/3 | 1/2 | 1

Training effectiveness matters most because it underpins the rest.";

    fn expert_labels() -> Vec<String> {
        s(&[
            "Training Program Effectiveness",
            "Awareness Session Regularity",
            "Incident Reporting Protocol",
        ])
    }

    #[test]
    fn matrix_from_published_reply() {
        let m = parse_matrix(EXPERT_TABLE, &expert_labels()).unwrap();
        assert_eq!(
            m.rows(),
            &[
                vec![1.0, 2.0, 3.0],
                vec![0.5, 1.0, 2.0],
                vec![1.0 / 3.0, 0.5, 1.0]
            ]
        );
        assert!(m.validate(0.0).is_ok());
    }

    #[test]
    fn upper_triangle_only_and_abbreviated_headers() {
        let reply = "| | A | B | C |\n|---|---|---|---|\n| Alpha | 1 | 5 | 1/3 |\n| Beta | | 1 | 2 |\n| Gamma | | | 1 |";
        let m = parse_matrix(reply, &s(&["Alpha", "Beta", "Gamma"])).unwrap();
        assert_eq!(m.get(1, 0), 1.0 / 5.0);
        assert_eq!(m.get(2, 0), 3.0);
        assert_eq!(m.get(2, 1), 0.5);
    }

    #[test]
    fn reciprocity_and_scale_violations() {
        let reply = "| | A | B |\n|---|---|---|\n| A | 1 | 2 |\n| B | 0.4 | 1 |";
        let err = parse_matrix(reply, &s(&["A", "B"])).unwrap_err();
        assert!(matches!(&err[0], ParseViolation::OffScale { token, .. } if token == "0.4"));
        let reply = "| | A | B |\n|---|---|---|\n| A | 1 | 2 |\n| B | 1/3 | 1 |";
        let err = parse_matrix(reply, &s(&["A", "B"])).unwrap_err();
        assert!(matches!(&err[0], ParseViolation::Reciprocity { .. }));
        assert!(err[0].rule().contains("reciprocal"));
        let reply =
            "| | A | B | C |\n|---|---|---|---|\n| A | 1 | 2 | |\n| B | | 1 | 2 |\n| C | | | 1 |";
        let err = parse_matrix(reply, &s(&["A", "B", "C"])).unwrap_err();
        assert!(matches!(&err[0], ParseViolation::MissingCell { .. }));
        let reply = "| | A | B | C |\n| A | 1 | 2 | 3 |\n| B | | 1 | 2 |";
        assert!(matches!(
            &parse_matrix(reply, &s(&["A", "B", "C"])).unwrap_err()[0],
            ParseViolation::LabelMismatch { .. }
        ));
    }

    #[test]
    fn several_matrices_matched_by_heading() {
        let a = PairwiseMatrix::from_upper_triangle(s(&["x", "y"]), &[3.0]).unwrap();
        let b = PairwiseMatrix::from_upper_triangle(s(&["p", "q"]), &[1.0 / 7.0]).unwrap();
        let reply = format!(
            "{}\n\n{}",
            render_matrix_table("Second", &b),
            render_matrix_table("First", &a)
        );
        let reqs = vec![
            MatrixRequest {
                node: "First".into(),
                labels: s(&["x", "y"]),
            },
            MatrixRequest {
                node: "Second".into(),
                labels: s(&["p", "q"]),
            },
        ];
        let ms = parse_matrices(&reply, &reqs).unwrap();
        assert_eq!(ms, vec![a, b]);
        let err = parse_matrices(&render_matrix_table("First", &ms[0]), &reqs).unwrap_err();
        assert_eq!(
            err,
            vec![ParseViolation::MissingMatrix {
                node: "Second".into()
            }]
        );
    }

    #[test]
    fn tab_separated_and_triples() {
        let reply = "Criteria\tA\tB\nA\t1\t4\nB\t1/4\t1";
        assert_eq!(parse_matrix(reply, &s(&["A", "B"])).unwrap().get(0, 1), 4.0);
        let reply = "- Alpha vs Beta: 3\n- Alpha vs Gamma: 1/2\n- Beta vs Gamma = 1/6";
        let m = parse_matrix(reply, &s(&["Alpha", "Beta", "Gamma"])).unwrap();
        assert_eq!(m.get(2, 1), 6.0);
    }

    #[test]
    fn personas() {
        let reply = "1. **Cybersecurity Strategist, Dr. Ava Chen**:\n\nBackground: Fifteen years in defense.\n\nPersonality/Preferences: Analytical.\n\nPhysical Security Expert, Lt. Col. John Abrams (Retd.):\nBackground: Military.\nPersonality/Preferences: Practical.";
        let ps = parse_personas(reply, 2).unwrap();
        assert_eq!(ps[0].name, "Dr. Ava Chen");
        assert_eq!(ps[0].title.as_deref(), Some("Cybersecurity Strategist"));
        assert_eq!(ps[1].id, "lt-col-john-abrams-retd");
        let err = parse_personas(reply, 3).unwrap_err();
        assert!(matches!(
            err[0],
            ParseViolation::CountMismatch {
                expected: 3,
                found: 2,
                ..
            }
        ));
    }

    #[test]
    fn advice() {
        let r = "In summary, for a decision as critical as securing a corporate datacenter, a group of 5-7 experts from key areas would be a good balance.";
        assert_eq!(parse_expert_count_advice(r), Some((5, 7)));
        assert_eq!(
            parse_expert_count_advice("I suggest seven experts."),
            Some((7, 7))
        );
        assert_eq!(parse_expert_count_advice("It depends."), None);
        assert_eq!(
            parse_level_advice("a two-level structure is often optimal"),
            Some(2)
        );
        assert_eq!(parse_level_advice("use ten levels"), Some(10));
        assert_eq!(parse_level_advice("hard to say"), None);
    }

    #[test]
    fn reminders_group_by_rule() {
        let v = vec![
            ParseViolation::MissingItem { item: "A".into() },
            ParseViolation::DuplicateItem { item: "B".into() },
        ];
        let text = reminder_lines(&v);
        assert_eq!(text.lines().count(), 1);
        assert!(text.contains("\"A\"") && text.contains("\"B\""));
    }
}
