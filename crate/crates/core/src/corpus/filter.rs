use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use super::{DropReason, Dropped, IngestReport, PaperRecord, SourceDb};

/// Publication-type whitelist per source plus the abstract requirement.
///
/// A whitelist entry of `*` admits every publication type of that source.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusFilter {
    pub allowed_pub_types: BTreeMap<SourceDb, BTreeSet<String>>,
    pub require_abstract: bool,
    #[serde(default)]
    pub query_terms: Vec<String>,
}

impl Default for CorpusFilter {
    fn default() -> Self {
        let set = |items: &[&str]| items.iter().map(|s| s.to_string()).collect::<BTreeSet<_>>();
        let mut allowed = BTreeMap::new();
        allowed.insert(
            SourceDb::Acm,
            set(&[
                "Extended Abstracts",
                "Research Articles",
                "Works in Progress",
                "Posters",
                "Short Papers",
            ]),
        );
        allowed.insert(SourceDb::Ieee, set(&["Journals", "Conferences"]));
        allowed.insert(SourceDb::Springer, set(&["Research Articles"]));
        allowed.insert(SourceDb::Arxiv, set(&["*"]));
        allowed.insert(SourceDb::Fixture, set(&["*"]));
        Self {
            allowed_pub_types: allowed,
            require_abstract: true,
            query_terms: vec!["human-ai interaction".into()],
        }
    }
}

impl CorpusFilter {
    fn admits(&self, source: SourceDb, pub_type: &str) -> bool {
        let Some(allowed) = self.allowed_pub_types.get(&source) else {
            return false;
        };
        let wanted = normalize_pub_type(pub_type);
        allowed
            .iter()
            .any(|a| a == "*" || normalize_pub_type(a) == wanted)
    }
}

/// Case-, separator- and plural-insensitive form: "Posters" and "poster"
/// compare equal, as do "research-article" and "Research Articles".
fn normalize_pub_type(s: &str) -> String {
    s.to_lowercase()
        .split(|c: char| c.is_whitespace() || c == '-' || c == '_')
        .filter(|w| !w.is_empty())
        .map(|w| w.strip_suffix('s').unwrap_or(w))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Partitions `records` into kept and dropped. Abstract presence is checked
/// before the publication type.
pub fn filter_corpus(records: &[PaperRecord], filter: &CorpusFilter) -> (Vec<PaperRecord>, IngestReport) {
    let mut kept = Vec::new();
    let mut report = IngestReport::default();
    for r in records {
        let reason = if filter.require_abstract && !r.has_abstract() {
            Some(DropReason::MissingAbstract)
        } else if !filter.admits(r.source_db, &r.pub_type) {
            Some(DropReason::PubTypeExcluded)
        } else {
            None
        };
        match reason {
            Some(reason) => report.dropped.push(Dropped {
                id: r.id.clone(),
                reason,
            }),
            None => kept.push(r.clone()),
        }
    }
    report.kept = kept.len();
    (kept, report)
}

/// NFC, lowercase, ASCII punctuation removed, whitespace collapsed.
pub fn normalize_title(title: &str) -> String {
    let folded: String = title
        .nfc()
        .collect::<String>()
        .to_lowercase()
        .chars()
        .filter(|c| !c.is_ascii_punctuation())
        .collect();
    folded.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn dedupe(records: &[PaperRecord], priority: &[SourceDb]) -> Vec<PaperRecord> {
    dedupe_with_report(records, priority).0
}

/// Groups records sharing a DOI or a normalized title (transitively) and keeps
/// one per group: the earliest source in `priority`, then input order.
/// Survivors keep their input order.
pub fn dedupe_with_report(
    records: &[PaperRecord],
    priority: &[SourceDb],
) -> (Vec<PaperRecord>, Vec<Dropped>) {
    let n = records.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }

    let mut first_by_key: HashMap<String, usize> = HashMap::new();
    for (i, r) in records.iter().enumerate() {
        let mut keys = Vec::with_capacity(2);
        if let Some(doi) = r.doi.as_deref().and_then(super::normalize_doi) {
            keys.push(format!("doi:{doi}"));
        }
        let title = normalize_title(&r.title);
        if !title.is_empty() {
            keys.push(format!("title:{title}"));
        }
        for k in keys {
            match first_by_key.get(&k) {
                Some(&j) => {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    parent[a.max(b)] = a.min(b);
                }
                None => {
                    first_by_key.insert(k, i);
                }
            }
        }
    }

    let rank = |db: SourceDb| priority.iter().position(|p| *p == db).unwrap_or(priority.len());
    let mut survivor: HashMap<usize, usize> = HashMap::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        survivor
            .entry(root)
            .and_modify(|s| {
                if rank(records[i].source_db) < rank(records[*s].source_db) {
                    *s = i;
                }
            })
            .or_insert(i);
    }

    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for (i, r) in records.iter().enumerate() {
        if survivor[&find(&mut parent, i)] == i {
            kept.push(r.clone());
        } else {
            dropped.push(Dropped {
                id: r.id.clone(),
                reason: DropReason::Duplicate,
            });
        }
    }
    (kept, dropped)
}
