//! Two-stage extraction: findings from each abstract, then one triplet per
//! finding. Failures quarantine the paper or finding and the run continues.

pub mod parse;
pub mod prompts;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::PaperRecord;
use crate::notation::{validate_triplet, EntityKey, Outcome, Relationship, Triplet};
use crate::provider::{Provider, ProviderError, Request};
use parse::FindingsResponse;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionConfig {
    pub model: String,
    pub findings_template: String,
    pub triplet_template: String,
    /// Upper bound on concurrently processed papers.
    pub parallelism: usize,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self {
            model: "claude-opus-4-1-20250805".into(),
            findings_template: prompts::FINDINGS_TEMPLATE.into(),
            triplet_template: prompts::TRIPLET_TEMPLATE.into(),
            parallelism: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub id: String,
    pub paper_id: String,
    pub text: String,
    pub keywords: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoteType {
    ConceptualFramework,
    SystematicReview,
    WorkshopAnnouncement,
    SystemMethodologyImprovement,
    DesignMethodology,
    TechnicalSpecification,
    ResearchProposal,
    Other,
}

impl NoteType {
    /// Maps the free-text paper type a provider writes onto the closed set.
    pub fn from_label(label: &str) -> Self {
        let l = label.to_lowercase();
        let has = |w: &str| l.contains(w);
        if has("conceptual") || has("framework") {
            NoteType::ConceptualFramework
        } else if has("review") || has("survey") {
            NoteType::SystematicReview
        } else if has("workshop") {
            NoteType::WorkshopAnnouncement
        } else if has("improvement") {
            NoteType::SystemMethodologyImprovement
        } else if has("design method") {
            NoteType::DesignMethodology
        } else if has("specification") {
            NoteType::TechnicalSpecification
        } else if has("proposal") {
            NoteType::ResearchProposal
        } else {
            NoteType::Other
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoFindingsNote {
    pub paper_id: String,
    pub note_type: NoteType,
    pub description: String,
}

/// A finding's triplet, persisted one per line.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RawTriplet {
    pub finding_id: String,
    pub paper_id: String,
    pub finding: String,
    pub cause: EntityKey,
    pub relationship: Relationship,
    pub effect: EntityKey,
    pub net_outcome: Outcome,
}

impl RawTriplet {
    pub fn triplet(&self) -> Triplet {
        Triplet {
            cause: self.cause.clone(),
            relationship: self.relationship,
            effect: self.effect.clone(),
            net_outcome: self.net_outcome,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuarantineStage {
    Paper,
    Finding,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuarantineEntry {
    pub stage: QuarantineStage,
    pub paper_id: String,
    pub finding_id: Option<String>,
    pub reason: String,
    /// Provider output kept for audit when it could not be used.
    pub raw_response: Option<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum ExtractError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("unparseable response: {reason}")]
    Unparseable { reason: String, raw: String },
    #[error("malformed triplet: {}", violations.join("; "))]
    MalformedTriplet { violations: Vec<String>, raw: String },
}

impl ExtractError {
    fn raw(&self) -> Option<String> {
        match self {
            ExtractError::Unparseable { raw, .. } | ExtractError::MalformedTriplet { raw, .. } => {
                Some(raw.clone())
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PaperFindings {
    Findings(Vec<Finding>),
    NoFindings(NoFindingsNote),
}

pub fn findings_request(paper: &PaperRecord, config: &ExtractionConfig) -> Result<Request, ExtractError> {
    let abstract_text = paper
        .abstract_text
        .as_deref()
        .map(str::trim)
        .filter(|a| !a.is_empty())
        .ok_or_else(|| ExtractError::InvalidInput(format!("paper {} has an empty abstract", paper.id)))?;
    let prompt = prompts::render(&config.findings_template, &[("abstract", abstract_text)]);
    Ok(Request::new(&config.model, prompts::FINDINGS_TEMPLATE_ID, prompt))
}

pub fn triplet_request(finding: &Finding, config: &ExtractionConfig) -> Result<Request, ExtractError> {
    if finding.text.trim().is_empty() {
        return Err(ExtractError::InvalidInput(format!("finding {} is empty", finding.id)));
    }
    let prompt = prompts::render(&config.triplet_template, &[("finding", finding.text.trim())]);
    Ok(Request::new(&config.model, prompts::TRIPLET_TEMPLATE_ID, prompt))
}

/// Stage one. At most three findings, in the order the provider listed them.
pub fn extract_findings(
    paper: &PaperRecord,
    provider: &Provider,
    config: &ExtractionConfig,
) -> Result<PaperFindings, ExtractError> {
    let request = findings_request(paper, config)?;
    let raw = provider.complete(&request)?;
    match parse::parse_findings_response(&raw) {
        Ok(FindingsResponse::Findings { items, keywords }) => Ok(PaperFindings::Findings(
            items
                .into_iter()
                .enumerate()
                .map(|(i, text)| Finding {
                    id: format!("{}#f{}", paper.id, i + 1),
                    paper_id: paper.id.clone(),
                    text,
                    keywords: keywords.clone(),
                })
                .collect(),
        )),
        Ok(FindingsResponse::Note { note_type, description }) => Ok(PaperFindings::NoFindings(NoFindingsNote {
            paper_id: paper.id.clone(),
            note_type,
            description,
        })),
        Err(reason) => Err(ExtractError::Unparseable { reason, raw }),
    }
}

/// Stage two. The returned triplet has passed notation validation.
pub fn extract_triplet(
    finding: &Finding,
    provider: &Provider,
    config: &ExtractionConfig,
) -> Result<RawTriplet, ExtractError> {
    let request = triplet_request(finding, config)?;
    let raw = provider.complete(&request)?;
    let fields = parse::parse_triplet_response(&raw).map_err(|reason| ExtractError::Unparseable {
        reason,
        raw: raw.clone(),
    })?;
    let verdict = validate_triplet(&fields);
    match verdict.triplet {
        Some(t) => Ok(RawTriplet {
            finding_id: finding.id.clone(),
            paper_id: finding.paper_id.clone(),
            finding: finding.text.clone(),
            cause: t.cause,
            relationship: t.relationship,
            effect: t.effect,
            net_outcome: t.net_outcome,
        }),
        None => Err(ExtractError::MalformedTriplet {
            violations: verdict.violations.iter().map(ToString::to_string).collect(),
            raw,
        }),
    }
}

/// Everything one extraction run produced, each list in paper-id order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExtractionRun {
    pub findings: Vec<Finding>,
    pub notes: Vec<NoFindingsNote>,
    pub triplets: Vec<RawTriplet>,
    pub quarantine: Vec<QuarantineEntry>,
}

struct PaperResult {
    findings: Vec<Finding>,
    note: Option<NoFindingsNote>,
    triplets: Vec<RawTriplet>,
    quarantine: Vec<QuarantineEntry>,
}

fn process_paper(paper: &PaperRecord, provider: &Provider, config: &ExtractionConfig) -> PaperResult {
    let mut out = PaperResult {
        findings: Vec::new(),
        note: None,
        triplets: Vec::new(),
        quarantine: Vec::new(),
    };
    match extract_findings(paper, provider, config) {
        Ok(PaperFindings::NoFindings(note)) => out.note = Some(note),
        Ok(PaperFindings::Findings(findings)) => {
            for f in &findings {
                match extract_triplet(f, provider, config) {
                    Ok(t) => out.triplets.push(t),
                    Err(e) => out.quarantine.push(QuarantineEntry {
                        stage: QuarantineStage::Finding,
                        paper_id: paper.id.clone(),
                        finding_id: Some(f.id.clone()),
                        reason: e.to_string(),
                        raw_response: e.raw(),
                    }),
                }
            }
            out.findings = findings;
        }
        Err(e) => out.quarantine.push(QuarantineEntry {
            stage: QuarantineStage::Paper,
            paper_id: paper.id.clone(),
            finding_id: None,
            reason: e.to_string(),
            raw_response: e.raw(),
        }),
    }
    out
}

/// Runs both stages over a corpus with bounded parallelism. Output is merged
/// in paper-id order, so identical inputs and cache give identical runs.
pub fn run_extraction(papers: &[PaperRecord], provider: &Provider, config: &ExtractionConfig) -> ExtractionRun {
    let mut ordered: Vec<&PaperRecord> = papers.iter().collect();
    ordered.sort_by(|a, b| a.id.cmp(&b.id));

    let work = || -> Vec<PaperResult> {
        ordered
            .par_iter()
            .map(|p| process_paper(p, provider, config))
            .collect()
    };
    let results = match rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism.max(1))
        .build()
    {
        Ok(pool) => pool.install(work),
        Err(_) => ordered.iter().map(|p| process_paper(p, provider, config)).collect(),
    };

    let mut run = ExtractionRun::default();
    for r in results {
        run.findings.extend(r.findings);
        run.notes.extend(r.note);
        run.triplets.extend(r.triplets);
        run.quarantine.extend(r.quarantine);
    }
    run
}

/// Per-paper outcome, used to check that every paper ended in exactly one
/// state.
pub fn paper_outcomes(run: &ExtractionRun) -> BTreeMap<String, Vec<&'static str>> {
    let mut m: BTreeMap<String, Vec<&'static str>> = BTreeMap::new();
    let mut seen_findings = std::collections::BTreeSet::new();
    for f in &run.findings {
        if seen_findings.insert(f.paper_id.clone()) {
            m.entry(f.paper_id.clone()).or_default().push("findings");
        }
    }
    for n in &run.notes {
        m.entry(n.paper_id.clone()).or_default().push("note");
    }
    for q in run.quarantine.iter().filter(|q| q.stage == QuarantineStage::Paper) {
        m.entry(q.paper_id.clone()).or_default().push("quarantine");
    }
    m
}
