//! Tolerant parsers for provider responses.

use serde_json::Value;

use super::NoteType;
use crate::notation::TripletFields;

pub const MAX_FINDINGS: usize = 3;
pub const MAX_KEYWORDS: usize = 3;

/// Keywords the findings prompt forbids; dropped if a provider emits them.
const GENERIC_KEYWORDS: [&str; 8] = [
    "human-ai interaction",
    "human ai interaction",
    "human-computer interaction",
    "human computer interaction",
    "artificial intelligence",
    "ai",
    "hci",
    "hai",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FindingsResponse {
    Findings {
        items: Vec<String>,
        keywords: Vec<String>,
    },
    Note {
        note_type: NoteType,
        description: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    None,
    Summaries,
    Note,
    Keywords,
}

fn strip_marker(line: &str) -> Option<&str> {
    let t = line.trim_start();
    for m in ["- ", "* ", "• ", "+ "] {
        if let Some(rest) = t.strip_prefix(m) {
            return Some(rest.trim());
        }
    }
    let digits = t.chars().take_while(char::is_ascii_digit).count();
    if digits > 0 {
        let rest = &t[digits..];
        if let Some(r) = rest.strip_prefix(". ").or_else(|| rest.strip_prefix(") ")) {
            return Some(r.trim());
        }
    }
    None
}

fn unquote(s: &str) -> String {
    s.trim()
        .trim_matches(|c| c == '"' || c == '“' || c == '”' || c == '*' || c == '`')
        .trim()
        .to_string()
}

/// `label: value` with a case-insensitive label; markdown emphasis tolerated.
fn labelled<'a>(line: &'a str, label: &str) -> Option<&'a str> {
    let t = line.trim().trim_start_matches(['*', '#', '_']).trim_start();
    let (head, rest) = t.split_once(':')?;
    let head = head.trim().trim_matches(['*', '_']).trim();
    head.eq_ignore_ascii_case(label).then(|| rest.trim().trim_start_matches(['*', '_']).trim())
}

fn split_keywords(s: &str) -> impl Iterator<Item = String> + '_ {
    s.split([',', ';']).map(unquote).filter(|k| !k.is_empty())
}

pub fn parse_findings_response(text: &str) -> Result<FindingsResponse, String> {
    let mut section = Section::None;
    let mut items = Vec::new();
    let mut keywords: Vec<String> = Vec::new();
    let mut note_type = None;
    let mut description = None;

    for raw_line in text.lines() {
        let line = raw_line.trim();
        if line.is_empty() {
            continue;
        }
        let body = strip_marker(line).unwrap_or(line);

        if let Some(rest) = labelled(body, "summaries").or_else(|| labelled(body, "findings")) {
            section = Section::Summaries;
            if !rest.is_empty() && !rest.eq_ignore_ascii_case("none") {
                items.push(unquote(rest));
            }
            continue;
        }
        if let Some(rest) = labelled(body, "note") {
            section = Section::Note;
            if !rest.is_empty() {
                description.get_or_insert_with(|| unquote(rest));
            }
            continue;
        }
        if let Some(rest) = labelled(body, "keywords").or_else(|| {
            // "Keywords [1-3]: ..."
            let lower = body.to_ascii_lowercase();
            lower
                .starts_with("keywords")
                .then(|| body.split_once(':').map(|(_, r)| r.trim()))
                .flatten()
        }) {
            section = Section::Keywords;
            keywords.extend(split_keywords(rest));
            continue;
        }
        if let Some(rest) = labelled(body, "type") {
            note_type = Some(NoteType::from_label(&unquote(rest)));
            section = Section::Note;
            continue;
        }
        if let Some(rest) = labelled(body, "description") {
            description = Some(unquote(rest));
            section = Section::Note;
            continue;
        }

        let is_bullet = strip_marker(line).is_some();
        match section {
            Section::Keywords if is_bullet => keywords.extend(split_keywords(body)),
            Section::Summaries | Section::None if is_bullet => items.push(unquote(body)),
            _ => {}
        }
    }

    items.retain(|i| !i.is_empty());
    if !items.is_empty() {
        items.truncate(MAX_FINDINGS);
        let mut kept: Vec<String> = Vec::new();
        for k in keywords {
            let generic = GENERIC_KEYWORDS.contains(&k.to_lowercase().as_str());
            if !generic && !kept.iter().any(|e| e.eq_ignore_ascii_case(&k)) {
                kept.push(k);
            }
        }
        kept.truncate(MAX_KEYWORDS);
        if kept.is_empty() {
            return Err("findings without any admissible keyword".into());
        }
        return Ok(FindingsResponse::Findings { items, keywords: kept });
    }
    match (note_type, description) {
        (Some(note_type), Some(description)) if !description.is_empty() => {
            Ok(FindingsResponse::Note { note_type, description })
        }
        (Some(_), _) => Err("note without description".into()),
        _ => Err("response has neither findings nor a note".into()),
    }
}

/// Pulls the first `{...}` object out of a response, tolerating code fences
/// and trailing commas.
fn extract_json_object(text: &str) -> Result<Value, String> {
    let start = text.find('{').ok_or("no JSON object in response")?;
    let end = text.rfind('}').ok_or("unterminated JSON object")?;
    if end < start {
        return Err("unterminated JSON object".into());
    }
    let body = &text[start..=end];
    match serde_json::from_str(body) {
        Ok(v) => Ok(v),
        Err(_) => {
            let re = regex::Regex::new(r",(\s*[}\]])").expect("static regex");
            let cleaned = re.replace_all(body, "$1");
            serde_json::from_str(&cleaned).map_err(|e| format!("invalid JSON: {e}"))
        }
    }
}

fn subject_text(v: Option<&Value>, role: &str) -> Result<String, String> {
    match v {
        Some(Value::String(s)) => Ok(s.clone()),
        Some(Value::Object(o)) => {
            let get = |k: &str| o.get(k).and_then(Value::as_str).unwrap_or("").trim().to_string();
            let mut s = get("type");
            let subtype = get("subtype");
            let feature = get("feature");
            if !subtype.is_empty() {
                s.push(':');
                s.push_str(&subtype);
            }
            if !feature.is_empty() {
                s.push('>');
                s.push_str(&feature);
            }
            Ok(s)
        }
        _ => Err(format!("missing `{role}` subject")),
    }
}

/// Reads the triplet object into unvalidated fields; key and enum checking is
/// left to [`crate::notation::validate_triplet`].
pub fn parse_triplet_response(text: &str) -> Result<TripletFields, String> {
    let v = extract_json_object(text)?;
    let field = |k: &str| v.get(k).and_then(Value::as_str).map(str::to_string);
    Ok(TripletFields {
        cause: subject_text(v.get("cause"), "cause")?,
        relationship: field("relationship").ok_or("missing `relationship`")?,
        effect: subject_text(v.get("effect"), "effect")?,
        net_outcome: field("net_outcome")
            .or_else(|| field("outcome"))
            .ok_or("missing `net_outcome`")?,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterName {
    pub name: String,
    pub description: String,
}

pub fn parse_naming_response(text: &str) -> Result<ClusterName, String> {
    if let Ok(v) = extract_json_object(text) {
        let get = |k: &str| v.get(k).and_then(Value::as_str).map(|s| s.trim().to_string());
        if let (Some(name), Some(description)) = (get("name"), get("description")) {
            if !name.is_empty() {
                return Ok(ClusterName { name, description });
            }
        }
    }
    let mut name = None;
    let mut description = None;
    for line in text.lines() {
        if let Some(n) = labelled(line, "name") {
            name = Some(unquote(n));
        } else if let Some(d) = labelled(line, "description") {
            description = Some(unquote(d));
        }
    }
    match (name, description) {
        (Some(name), Some(description)) if !name.is_empty() => Ok(ClusterName { name, description }),
        _ => Err("response has no name/description".into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_bullets_with_mixed_markers() {
        let text = "Summaries:\n- AI chatbots foster creative collaboration\n* \"Students trust 2D AI teachers more\"\n3. AI hints reduce errors\n4) A fourth finding\nKeywords: Education, Human-AI Interaction, Creativity, Learning\n";
        let FindingsResponse::Findings { items, keywords } = parse_findings_response(text).unwrap() else {
            panic!("expected findings");
        };
        assert_eq!(items.len(), 3);
        assert_eq!(items[1], "Students trust 2D AI teachers more");
        assert_eq!(keywords, ["Education", "Creativity", "Learning"]);
    }

    #[test]
    fn parses_note() {
        let text = "Note:\n  1. type: Conceptual framework\n  2. description: Proposes a framework for trust.\nKeywords: Trust";
        assert_eq!(
            parse_findings_response(text).unwrap(),
            FindingsResponse::Note {
                note_type: NoteType::ConceptualFramework,
                description: "Proposes a framework for trust.".into()
            }
        );
    }

    #[test]
    fn keyword_bullets_and_bracketed_label() {
        let text = "**Summaries:**\n- Finding one\nKeywords [1-3]:\n- Healthcare\n- K-12";
        let FindingsResponse::Findings { keywords, .. } = parse_findings_response(text).unwrap() else {
            panic!()
        };
        assert_eq!(keywords, ["Healthcare", "K-12"]);
    }

    #[test]
    fn rejects_unusable_responses() {
        assert!(parse_findings_response("I cannot help with that.").is_err());
        assert!(parse_findings_response("Summaries:\n- x\nKeywords: AI").is_err());
        assert!(parse_findings_response("Note:\ntype: Workshop announcement").is_err());
    }

    #[test]
    fn triplet_object_form_with_trailing_commas() {
        let text = "```json\n{\n \"cause\": {\"type\": \"ai\", \"subtype\": \"llm\", \"feature\": \"tutoring\"},\n \"relationship\": \"INCREASES\",\n \"effect\": {\"type\": \"human\", \"subtype\": \"student(medical)\", \"feature\": \"learning\"},\n \"net_outcome\": \"positive\",\n}\n```";
        let f = parse_triplet_response(text).unwrap();
        assert_eq!(f.cause, "ai:llm>tutoring");
        assert_eq!(f.effect, "human:student(medical)>learning");
        assert_eq!(f.net_outcome, "positive");
    }

    #[test]
    fn triplet_string_form_and_empty_subtype() {
        let text = r##"{"cause": "ai:teacher(2d)", "relationship": "INCREASES", "effect": {"type": "human", "subtype": "", "feature": "#robot"}, "net_outcome": "[neutral]"}"##;
        let f = parse_triplet_response(text).unwrap();
        assert_eq!(f.cause, "ai:teacher(2d)");
        assert_eq!(f.effect, "human>#robot");
    }

    #[test]
    fn triplet_missing_fields() {
        assert!(parse_triplet_response("no json").is_err());
        assert!(parse_triplet_response(r#"{"cause": "ai:x", "effect": "human:y"}"#).is_err());
    }

    #[test]
    fn naming_json_and_labelled() {
        let n = parse_naming_response(r#"{"name": "Learners", "description": "Students."}"#).unwrap();
        assert_eq!(n.name, "Learners");
        let n = parse_naming_response("Name: Clinicians\nDescription: Medical staff.").unwrap();
        assert_eq!(n.description, "Medical staff.");
        assert!(parse_naming_response("sorry").is_err());
    }
}
