//! Civil-code and query-case ingestion, paragraph splitting, reference expansion.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::sync::OnceLock;

use log::warn;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Article {
    pub id: String,
    pub paragraphs: Vec<String>,
    pub raw_text: String,
}

impl Article {
    pub fn is_empty(&self) -> bool {
        self.paragraphs.is_empty()
    }

    pub fn full_text(&self) -> String {
        self.paragraphs.join(" ")
    }
}

/// A retrieval document: one paragraph of an article, or a whole article
/// when splitting is disabled.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParagraphUnit {
    pub id: String,
    pub parent_id: String,
    /// 1-based; 0 for a whole-article unit built without splitting.
    pub index: usize,
    pub text: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Yes,
    No,
}

impl Label {
    pub fn from_bool(yes: bool) -> Self {
        if yes {
            Label::Yes
        } else {
            Label::No
        }
    }

    pub fn is_yes(self) -> bool {
        self == Label::Yes
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Yes => "YES",
            Label::No => "NO",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryCase {
    pub id: String,
    pub question: String,
    pub relevant_ids: BTreeSet<String>,
    pub label: Label,
}

fn heading_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^Article(?:\s+(\S+))?(?:\s+(.*))?$").unwrap())
}

fn reference_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\bArticle\s+(\d+(?:-\d+)*)").unwrap())
}

fn marker_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\((\d+)\)$").unwrap())
}

fn caption_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\([^()]*[A-Za-z]{2,}[^()]*\)$").unwrap())
}

fn division_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^(Part|Chapter|Section|Subsection|Division)\s+[IVXLC\d]+\b").unwrap())
}

fn clean_id(raw: &str) -> &str {
    raw.trim_end_matches(|c: char| !(c.is_alphanumeric() || c == '-'))
}

/// Splits an article body into numbered paragraphs.
///
/// A `(n)` token opens paragraph `n` only when `n` is the next expected
/// number and it starts a line or follows sentence-final punctuation, so
/// inline mentions such as "paragraph (1)" stay body text.
fn split_body(lines: &[&str]) -> Vec<String> {
    let mut paragraphs: Vec<Vec<&str>> = Vec::new();
    let mut preamble: Vec<&str> = Vec::new();
    for line in lines {
        let mut prev: Option<&str> = None;
        for (pos, tok) in line.split_whitespace().enumerate() {
            let opens = marker_re()
                .captures(tok)
                .and_then(|c| c[1].parse::<usize>().ok())
                .is_some_and(|n| {
                    n == paragraphs.len() + 1
                        && (pos == 0
                            || prev.is_some_and(|p| p.ends_with(['.', ';', ':'])))
                });
            if opens {
                paragraphs.push(Vec::new());
            } else if let Some(cur) = paragraphs.last_mut() {
                cur.push(tok);
            } else {
                preamble.push(tok);
            }
            prev = Some(tok);
        }
    }
    if paragraphs.is_empty() {
        if preamble.is_empty() {
            return Vec::new();
        }
        return vec![preamble.join(" ")];
    }
    if !preamble.is_empty() {
        let mut first = preamble;
        first.append(&mut paragraphs[0]);
        paragraphs[0] = first;
    }
    paragraphs
        .into_iter()
        .map(|p| p.join(" "))
        .filter(|p| !p.trim().is_empty())
        .collect()
}

/// Parses the plain-text civil code.
///
/// `Article <id>` at line start opens an article. Division headings
/// (`Part I ...`, `Chapter II ...`) and standalone parenthesized captions
/// are structural and dropped; every other line is body text.
pub fn parse_civil_code(text: &str) -> Result<Vec<Article>> {
    struct Open<'a> {
        id: String,
        raw: Vec<&'a str>,
        body: Vec<&'a str>,
    }

    fn close(open: Open<'_>) -> Article {
        Article {
            paragraphs: split_body(&open.body),
            raw_text: open.raw.join("\n"),
            id: open.id,
        }
    }

    let mut articles = Vec::new();
    let mut seen = HashSet::new();
    let mut current: Option<Open> = None;

    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if let Some(caps) = heading_re().captures(trimmed) {
            let id = caps.get(1).map(|m| clean_id(m.as_str())).unwrap_or("");
            if id.is_empty() || !id.starts_with(|c: char| c.is_ascii_digit()) {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("malformed article heading `{trimmed}`"),
                });
            }
            if !seen.insert(id.to_string()) {
                return Err(Error::DuplicateArticle(id.to_string()));
            }
            if let Some(open) = current.take() {
                articles.push(close(open));
            }
            let mut open = Open {
                id: id.to_string(),
                raw: vec![line],
                body: Vec::new(),
            };
            if let Some(rest) = caps.get(2) {
                open.body.push(rest.as_str());
            }
            current = Some(open);
            continue;
        }
        if trimmed.is_empty() || division_re().is_match(trimmed) || caption_re().is_match(trimmed) {
            if let Some(open) = current.as_mut() {
                if !trimmed.is_empty() {
                    open.raw.push(line);
                }
            }
            continue;
        }
        match current.as_mut() {
            Some(open) => {
                open.raw.push(line);
                open.body.push(trimmed);
            }
            None => warn!("line {}: text before the first article ignored", i + 1),
        }
    }
    if let Some(open) = current.take() {
        articles.push(close(open));
    }
    Ok(articles)
}

/// Units plus the ids of empty articles, which produce none.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitResult {
    pub units: Vec<ParagraphUnit>,
    pub skipped: Vec<String>,
}

pub fn split_articles(articles: &[Article]) -> SplitResult {
    let mut out = SplitResult::default();
    for a in articles {
        match a.paragraphs.len() {
            0 => out.skipped.push(a.id.clone()),
            1 => out.units.push(ParagraphUnit {
                id: a.id.clone(),
                parent_id: a.id.clone(),
                index: 1,
                text: a.paragraphs[0].clone(),
            }),
            _ => {
                for (i, p) in a.paragraphs.iter().enumerate() {
                    out.units.push(ParagraphUnit {
                        id: format!("{}({})", a.id, i + 1),
                        parent_id: a.id.clone(),
                        index: i + 1,
                        text: p.clone(),
                    });
                }
            }
        }
    }
    out
}

/// One unit per non-empty article, for the non-splitting baseline.
pub fn whole_articles(articles: &[Article]) -> SplitResult {
    let mut out = SplitResult::default();
    for a in articles {
        if a.is_empty() {
            out.skipped.push(a.id.clone());
        } else {
            out.units.push(ParagraphUnit {
                id: a.id.clone(),
                parent_id: a.id.clone(),
                index: if a.paragraphs.len() == 1 { 1 } else { 0 },
                text: a.full_text(),
            });
        }
    }
    out
}

/// Article ids mentioned as `Article <id>` anywhere in `text`, in order of
/// first mention.
pub fn article_mentions(text: &str) -> Vec<String> {
    let mut seen = HashSet::new();
    reference_re()
        .captures_iter(text)
        .map(|c| c[1].to_string())
        .filter(|id| seen.insert(id.clone()))
        .collect()
}

/// Appends to each paragraph the full text of every article it cites.
///
/// Depth one: the appended text is not itself expanded. Paragraph count is
/// unchanged so splitting still sees the original structure. Citations of
/// a whole article and of one of its paragraphs both pull in the whole
/// target article.
pub fn expand_references(article: &Article, corpus: &HashMap<&str, &Article>) -> Article {
    let mut out = article.clone();
    for para in out.paragraphs.iter_mut() {
        let mut extra = Vec::new();
        for id in article_mentions(para) {
            if id == article.id {
                continue;
            }
            match corpus.get(id.as_str()) {
                Some(target) if !target.is_empty() => extra.push(target.full_text()),
                Some(_) => {}
                None => warn!("article {} cites missing article {}", article.id, id),
            }
        }
        for e in extra {
            para.push(' ');
            para.push_str(&e);
        }
    }
    out
}

pub fn expand_all(articles: &[Article]) -> Vec<Article> {
    let index: HashMap<&str, &Article> = articles.iter().map(|a| (a.id.as_str(), a)).collect();
    articles.iter().map(|a| expand_references(a, &index)).collect()
}

fn parse_label(raw: &str) -> Option<Label> {
    match raw.trim().to_ascii_uppercase().as_str() {
        "Y" | "YES" => Some(Label::Yes),
        "N" | "NO" => Some(Label::No),
        _ => None,
    }
}

/// Gold ids from the article child of a pair. Line-leading `Article <id>`
/// headings are authoritative since the quoted article bodies often cite
/// other articles; bare mentions are used only when there is no heading.
fn gold_ids(articles_text: &str) -> BTreeSet<String> {
    let headed: BTreeSet<String> = articles_text
        .lines()
        .filter_map(|l| heading_re().captures(l.trim()))
        .filter_map(|c| c.get(1).map(|m| clean_id(m.as_str()).to_string()))
        .filter(|id| id.starts_with(|c: char| c.is_ascii_digit()))
        .collect();
    if !headed.is_empty() {
        return headed;
    }
    article_mentions(articles_text).into_iter().collect()
}

pub fn parse_query_file(xml: &str) -> Result<Vec<QueryCase>> {
    if xml.trim().is_empty() {
        return Ok(Vec::new());
    }
    let doc = roxmltree::Document::parse(xml)?;
    let mut cases = Vec::new();
    for (n, pair) in doc
        .descendants()
        .filter(|node| node.has_tag_name("pair"))
        .enumerate()
    {
        let id = pair
            .attribute("id")
            .map(str::to_string)
            .unwrap_or_else(|| format!("#{}", n + 1));
        let label = match pair.attribute("label") {
            Some(raw) => parse_label(raw).ok_or_else(|| Error::QueryPair {
                id: id.clone(),
                msg: format!("unrecognized label `{raw}`"),
            })?,
            None => {
                return Err(Error::QueryPair {
                    id,
                    msg: "missing label".into(),
                })
            }
        };
        let mut children = pair.children().filter(|c| c.is_element());
        let articles_text = children.next().map(node_text).unwrap_or_default();
        let question = children.next().map(node_text).unwrap_or_default();
        if question.is_empty() {
            return Err(Error::QueryPair {
                id,
                msg: "missing question".into(),
            });
        }
        cases.push(QueryCase {
            relevant_ids: gold_ids(&articles_text),
            question,
            label,
            id,
        });
    }
    Ok(cases)
}

fn node_text(node: roxmltree::Node<'_, '_>) -> String {
    let raw: String = node
        .descendants()
        .filter(|d| d.is_text())
        .filter_map(|d| d.text())
        .collect();
    // keep line structure, it carries the article headings
    raw.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect::<Vec<_>>()
        .join("\n")
}

/// Units indexed by id and by parent article.
#[derive(Clone, Debug, Default)]
pub struct UnitIndex {
    by_id: HashMap<String, usize>,
    by_parent: HashMap<String, Vec<usize>>,
}

impl UnitIndex {
    pub fn new(units: &[ParagraphUnit]) -> Self {
        let mut idx = UnitIndex::default();
        for (i, u) in units.iter().enumerate() {
            idx.by_id.insert(u.id.clone(), i);
            idx.by_parent.entry(u.parent_id.clone()).or_default().push(i);
        }
        idx
    }

    pub fn position(&self, unit_id: &str) -> Option<usize> {
        self.by_id.get(unit_id).copied()
    }

    /// Every unit generated from `article_id`; all of them count as
    /// relevant when the article is.
    pub fn units_of(&self, article_id: &str) -> &[usize] {
        self.by_parent.get(article_id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn lookup<'a>(
        &self,
        units: &'a [ParagraphUnit],
        parent_id: &str,
        index: usize,
    ) -> Option<&'a ParagraphUnit> {
        self.units_of(parent_id)
            .iter()
            .map(|&i| &units[i])
            .find(|u| u.index == index)
    }

    pub fn gold_units(&self, case: &QueryCase) -> BTreeSet<usize> {
        case.relevant_ids
            .iter()
            .flat_map(|id| self.units_of(id).iter().copied())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ART_233: &str = "Article 233\n(1) If a tree or bamboo branch from neighboring land crosses a boundary line, the landowner may have the owner of that tree or bamboo sever that branch.\n(2) If a tree or bamboo root from neighboring land crosses a boundary line, the owner of the land may sever that root.\n";

    #[test]
    fn parses_two_paragraph_article() {
        let arts = parse_civil_code(ART_233).unwrap();
        assert_eq!(arts.len(), 1);
        assert_eq!(arts[0].id, "233");
        assert_eq!(arts[0].paragraphs.len(), 2);
        assert!(arts[0].paragraphs[0].starts_with("If a tree or bamboo branch"));
        assert!(arts[0].paragraphs[1].ends_with("may sever that root."));
    }

    #[test]
    fn inline_markers_split_after_sentence_end() {
        let text = "Article 233 (1) First sentence here. (2) Second one.";
        let arts = parse_civil_code(text).unwrap();
        assert_eq!(arts[0].paragraphs, vec!["First sentence here.", "Second one."]);
    }

    #[test]
    fn mid_sentence_marker_is_body() {
        let text = "Article 5\nThe provisions of paragraph (1) apply.\n";
        let arts = parse_civil_code(text).unwrap();
        assert_eq!(arts[0].paragraphs, vec!["The provisions of paragraph (1) apply."]);
    }

    #[test]
    fn empty_article() {
        let arts = parse_civil_code("Article 9\nArticle 10\nSome body.\n").unwrap();
        assert_eq!(arts[0].id, "9");
        assert!(arts[0].paragraphs.is_empty());
        assert_eq!(arts[1].paragraphs, vec!["Some body."]);
    }

    #[test]
    fn three_headings_counts() {
        let text = "Article 1\nOnly body.\nArticle 2\n(1) One.\n(2) Two.\nArticle 3\nThird.\n";
        let counts: Vec<usize> = parse_civil_code(text)
            .unwrap()
            .iter()
            .map(|a| a.paragraphs.len())
            .collect();
        assert_eq!(counts, vec![1, 2, 1]);
    }

    #[test]
    fn structural_lines_dropped() {
        let text = "Part I General Provisions\nChapter I Common Provisions\n(Fundamental Principles)\nArticle 1\n(1) A.\n(2) B.\n(Capacity)\nArticle 3\nC.\n";
        let arts = parse_civil_code(text).unwrap();
        assert_eq!(arts.len(), 2);
        assert_eq!(arts[0].paragraphs, vec!["A.", "B."]);
    }

    #[test]
    fn roman_items_stay_in_paragraph() {
        let text = "Article 653\nA mandate shall terminate when\n(i) The mandator or mandatary dies;\n(ii) The mandatary is subject to an order.\n";
        let arts = parse_civil_code(text).unwrap();
        assert_eq!(arts[0].paragraphs.len(), 1);
        assert!(arts[0].paragraphs[0].contains("(ii) The mandatary"));
    }

    #[test]
    fn heading_errors() {
        let err = parse_civil_code("Article 1\nx\nArticle\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = parse_civil_code("Article 1\nx\nArticle 1\ny\n").unwrap_err();
        assert!(matches!(err, Error::DuplicateArticle(ref id) if id == "1"));
    }

    #[test]
    fn split_counts() {
        let mk = |id: &str, n: usize| Article {
            id: id.into(),
            paragraphs: (0..n).map(|i| format!("p{i}")).collect(),
            raw_text: String::new(),
        };
        let arts = vec![mk("1", 1), mk("2", 2), mk("3", 0), mk("4", 3), mk("5", 1)];
        let s = split_articles(&arts);
        assert_eq!(s.units.len(), 7);
        assert_eq!(s.skipped, vec!["3"]);
        let ids: Vec<&str> = s.units.iter().map(|u| u.id.as_str()).collect();
        assert_eq!(ids, ["1", "2(1)", "2(2)", "4(1)", "4(2)", "4(3)", "5"]);
    }

    #[test]
    fn split_233_and_lookup() {
        let arts = parse_civil_code(ART_233).unwrap();
        let s = split_articles(&arts);
        assert_eq!(s.units[0].id, "233(1)");
        assert_eq!(s.units[1].id, "233(2)");
        let idx = UnitIndex::new(&s.units);
        assert_eq!(idx.lookup(&s.units, "233", 2).unwrap().text, arts[0].paragraphs[1]);
    }

    #[test]
    fn expansion() {
        let arts = parse_civil_code(
            "Article 624\nPay after work.\nArticle 648\n(1) No pay.\n(2) Paragraph 2 of Article 624 applies mutatis mutandis.\nArticle 700\nSee Article 999.\nArticle 701\nPlain.\n",
        )
        .unwrap();
        let idx: HashMap<&str, &Article> = arts.iter().map(|a| (a.id.as_str(), a)).collect();
        let e = expand_references(&arts[1], &idx);
        assert_eq!(e.paragraphs[0], "No pay.");
        assert!(e.paragraphs[1].ends_with("Pay after work."));
        assert_eq!(expand_references(&arts[2], &idx), arts[2]);
        assert_eq!(expand_references(&arts[3], &idx), arts[3]);
    }

    const QUERIES: &str = r#"<?xml version="1.0" encoding="UTF-8"?>
<dataset>
<pair id="H18-1-1" label="Y">
<t1>
Article 233
(1) If a tree or bamboo branch crosses a boundary line, see Article 234.
</t1>
<t2>A landowner may have the owner of a tree sever a branch crossing the boundary.</t2>
</pair>
<pair id="H18-1-2" label="N">
<t1>
Article 624
Remuneration is paid after work.
Article 648
(1) No remuneration.
</t1>
<t2>A mandatary may always claim remuneration in advance.</t2>
</pair>
</dataset>"#;

    #[test]
    fn query_file() {
        let cases = parse_query_file(QUERIES).unwrap();
        assert_eq!(cases.len(), 2);
        assert_eq!(cases[0].id, "H18-1-1");
        assert_eq!(cases[0].label, Label::Yes);
        assert_eq!(cases[0].relevant_ids, BTreeSet::from(["233".to_string()]));
        assert_eq!(cases[1].relevant_ids.len(), 2);
        assert_eq!(cases[1].label, Label::No);
        assert!(parse_query_file("").unwrap().is_empty());
    }

    #[test]
    fn query_file_errors() {
        let err = parse_query_file(r#"<d><pair id="X1"><t1>Article 1</t1><t2>q</t2></pair></d>"#).unwrap_err();
        assert!(err.to_string().contains("X1"));
        let err = parse_query_file(r#"<d><pair id="X2" label="Y"><t1>Article 1</t1></pair></d>"#).unwrap_err();
        assert!(err.to_string().contains("X2"));
        assert!(matches!(parse_query_file("<d><pair>").unwrap_err(), Error::Xml(_)));
    }
}
