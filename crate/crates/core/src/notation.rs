//! The entity coding scheme: `type:subtype(specificity)>feature(specificity)`.
//!
//! Grammar accepted by [`parse_key`]:
//!
//! ```text
//! key     := type [":" segment] [">" segment]
//! segment := ["#"] name ["(" name ")"]
//! type    := "human" | "ai" | "co"
//! name    := [a-z0-9_]+
//! ```
//!
//! Parsing canonicalizes provider drift before validating: input is
//! lowercased, whitespace around separators is dropped, and spaces or dashes
//! inside names become underscores. A `#` (perception marker) written in the
//! subtype position, as in `human:#trust`, is moved to the feature, so the
//! canonical form of that key is `human>#trust`. A key with two `:` and no
//! `>`, as in `human:usage:multipurpose`, reads the second `:` as `>`.
//!
//! [`EntityKey`] is the only identity type the downstream stages accept;
//! raw strings never reach the graph.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityType {
    Human,
    Ai,
    Co,
}

impl EntityType {
    pub const ALL: [EntityType; 3] = [EntityType::Human, EntityType::Ai, EntityType::Co];

    pub fn as_str(self) -> &'static str {
        match self {
            EntityType::Human => "human",
            EntityType::Ai => "ai",
            EntityType::Co => "co",
        }
    }
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EntityType {
    type Err = KeyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "human" => Ok(EntityType::Human),
            "ai" => Ok(EntityType::Ai),
            "co" => Ok(EntityType::Co),
            other => Err(KeyError::UnknownType(other.to_string())),
        }
    }
}

/// A subtype such as `student(medical)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Subtype {
    pub name: String,
    pub specificity: Option<String>,
}

/// A feature such as `trust(ai)` or the perception feature `#trust`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Feature {
    pub name: String,
    pub specificity: Option<String>,
    pub is_perception: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EntityKey {
    pub entity_type: EntityType,
    pub subtype: Option<Subtype>,
    pub feature: Option<Feature>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentKind {
    Subtype,
    Feature,
    Specificity,
}

impl fmt::Display for SegmentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SegmentKind::Subtype => "subtype",
            SegmentKind::Feature => "feature",
            SegmentKind::Specificity => "specificity",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KeyError {
    #[error("empty key")]
    Empty,
    #[error("unknown entity type `{0}`")]
    UnknownType(String),
    #[error("empty {0} segment")]
    EmptySegment(SegmentKind),
    #[error("unbalanced parentheses in `{0}`")]
    UnbalancedParens(String),
    #[error("nested specificity in `{0}`; only one level is allowed")]
    NestedSpecificity(String),
    #[error("illegal character {ch:?} in `{segment}`")]
    IllegalChar { segment: String, ch: char },
    #[error("more than one `{0}` separator")]
    RepeatedSeparator(char),
    #[error("perception subtype `{0}` cannot be combined with a feature")]
    PerceptionConflict(String),
}

impl EntityKey {
    pub fn new(entity_type: EntityType) -> Self {
        Self {
            entity_type,
            subtype: None,
            feature: None,
        }
    }

    /// A key with neither subtype nor feature (e.g. `ai`).
    pub fn is_bare(&self) -> bool {
        self.subtype.is_none() && self.feature.is_none()
    }

    /// The `type:subtype(spec)` part with the feature stripped.
    pub fn entity_part(&self) -> EntityKey {
        EntityKey {
            entity_type: self.entity_type,
            subtype: self.subtype.clone(),
            feature: None,
        }
    }

    /// Builds a key from the split `{type, subtype, feature}` object form used
    /// by the triplet prompt. Empty strings mean "absent".
    pub fn from_parts(entity_type: &str, subtype: &str, feature: &str) -> Result<Self, KeyError> {
        let mut text = entity_type.trim().to_string();
        if !subtype.trim().is_empty() {
            text.push(':');
            text.push_str(subtype);
        }
        if !feature.trim().is_empty() {
            text.push('>');
            text.push_str(feature);
        }
        parse_key(&text)
    }

    pub fn canonical(&self) -> String {
        format_key(self)
    }
}

impl fmt::Display for Subtype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        if let Some(spec) = &self.specificity {
            write!(f, "({spec})")?;
        }
        Ok(())
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_perception {
            f.write_str("#")?;
        }
        f.write_str(&self.name)?;
        if let Some(spec) = &self.specificity {
            write!(f, "({spec})")?;
        }
        Ok(())
    }
}

impl fmt::Display for EntityKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.entity_type.as_str())?;
        if let Some(sub) = &self.subtype {
            write!(f, ":{sub}")?;
        }
        if let Some(feat) = &self.feature {
            write!(f, ">{feat}")?;
        }
        Ok(())
    }
}

impl FromStr for EntityKey {
    type Err = KeyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_key(s)
    }
}

impl Ord for EntityKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.canonical().cmp(&other.canonical())
    }
}

impl PartialOrd for EntityKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Serialize for EntityKey {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.canonical())
    }
}

impl<'de> Deserialize<'de> for EntityKey {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        parse_key(&s).map_err(serde::de::Error::custom)
    }
}

/// Canonical surface form of a key.
pub fn format_key(key: &EntityKey) -> String {
    key.to_string()
}

/// Parses and canonicalizes a key.
pub fn parse_key(text: &str) -> Result<EntityKey, KeyError> {
    let lowered = text.trim().to_lowercase();
    if lowered.is_empty() {
        return Err(KeyError::Empty);
    }

    let lowered = repair_second_colon(lowered);
    let (head, feature_text) = split_once_strict(&lowered, '>')?;
    let (type_text, subtype_text) = split_once_strict(head, ':')?;

    let entity_type: EntityType = type_text.parse()?;
    let mut key = EntityKey::new(entity_type);

    if let Some(sub) = subtype_text {
        let seg = parse_segment(sub, SegmentKind::Subtype)?;
        if seg.perception {
            if feature_text.is_some() {
                return Err(KeyError::PerceptionConflict(sub.trim().to_string()));
            }
            key.feature = Some(Feature {
                name: seg.name,
                specificity: seg.specificity,
                is_perception: true,
            });
        } else {
            key.subtype = Some(Subtype {
                name: seg.name,
                specificity: seg.specificity,
            });
        }
    }

    if let Some(feat) = feature_text {
        let seg = parse_segment(feat, SegmentKind::Feature)?;
        key.feature = Some(Feature {
            name: seg.name,
            specificity: seg.specificity,
            is_perception: seg.perception,
        });
    }

    Ok(key)
}

fn repair_second_colon(text: String) -> String {
    if text.contains('>') || text.matches(':').count() != 2 {
        return text;
    }
    let second = text.rfind(':').unwrap_or_default();
    format!("{}>{}", &text[..second], &text[second + 1..])
}

fn split_once_strict(text: &str, sep: char) -> Result<(&str, Option<&str>), KeyError> {
    match text.split_once(sep) {
        None => Ok((text, None)),
        Some((_, b)) if b.contains(sep) => Err(KeyError::RepeatedSeparator(sep)),
        Some((a, b)) => Ok((a, Some(b))),
    }
}

struct Segment {
    name: String,
    specificity: Option<String>,
    perception: bool,
}

fn parse_segment(raw: &str, kind: SegmentKind) -> Result<Segment, KeyError> {
    let mut text = raw.trim();
    let perception = text.starts_with('#');
    if perception {
        text = text[1..].trim_start();
    }

    let opens = text.matches('(').count();
    let closes = text.matches(')').count();
    if opens != closes {
        return Err(KeyError::UnbalancedParens(raw.trim().to_string()));
    }
    if opens > 1 {
        return Err(KeyError::NestedSpecificity(raw.trim().to_string()));
    }

    let (name_part, spec_part) = if opens == 1 {
        let open = text.find('(').unwrap_or_default();
        let close = text.find(')').unwrap_or_default();
        if close < open || !text[close + 1..].trim().is_empty() {
            return Err(KeyError::UnbalancedParens(raw.trim().to_string()));
        }
        (&text[..open], Some(&text[open + 1..close]))
    } else {
        (text, None)
    };

    let name = canonical_name(name_part, kind)?;
    let specificity = match spec_part {
        Some(spec) => Some(canonical_name(spec, SegmentKind::Specificity)?),
        None => None,
    };
    Ok(Segment {
        name,
        specificity,
        perception,
    })
}

/// Lowercased name with spaces/dashes mapped to single underscores.
fn canonical_name(raw: &str, kind: SegmentKind) -> Result<String, KeyError> {
    let mut out = String::with_capacity(raw.len());
    for ch in raw.trim().chars() {
        let mapped = match ch {
            ' ' | '\t' | '-' | '_' => '_',
            c if c.is_ascii_lowercase() || c.is_ascii_digit() => c,
            c => {
                return Err(KeyError::IllegalChar {
                    segment: raw.trim().to_string(),
                    ch: c,
                })
            }
        };
        if mapped == '_' && (out.is_empty() || out.ends_with('_')) {
            continue;
        }
        out.push(mapped);
    }
    while out.ends_with('_') {
        out.pop();
    }
    if out.is_empty() {
        return Err(KeyError::EmptySegment(kind));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Relationship {
    #[serde(rename = "INCREASES")]
    Increases,
    #[serde(rename = "DECREASES")]
    Decreases,
    #[serde(rename = "INFLUENCES")]
    Influences,
}

impl Relationship {
    pub const ALL: [Relationship; 3] = [
        Relationship::Increases,
        Relationship::Decreases,
        Relationship::Influences,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Relationship::Increases => "INCREASES",
            Relationship::Decreases => "DECREASES",
            Relationship::Influences => "INFLUENCES",
        }
    }
}

impl fmt::Display for Relationship {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Relationship {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "INCREASES" => Ok(Relationship::Increases),
            "DECREASES" => Ok(Relationship::Decreases),
            "INFLUENCES" => Ok(Relationship::Influences),
            _ => Err(s.trim().to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Positive,
    Negative,
    Neutral,
    Undetermined,
}

impl Outcome {
    pub const ALL: [Outcome; 4] = [
        Outcome::Positive,
        Outcome::Negative,
        Outcome::Neutral,
        Outcome::Undetermined,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Positive => "positive",
            Outcome::Negative => "negative",
            Outcome::Neutral => "neutral",
            Outcome::Undetermined => "undetermined",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Outcome {
    type Err = String;

    /// Accepts the bracketed tag form (`[positive]`) as well.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().trim_start_matches('[').trim_end_matches(']');
        match t.trim().to_ascii_lowercase().as_str() {
            "positive" => Ok(Outcome::Positive),
            "negative" => Ok(Outcome::Negative),
            "neutral" => Ok(Outcome::Neutral),
            "undetermined" => Ok(Outcome::Undetermined),
            _ => Err(s.trim().to_string()),
        }
    }
}

/// A validated cause → effect statement.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Triplet {
    pub cause: EntityKey,
    pub relationship: Relationship,
    pub effect: EntityKey,
    pub net_outcome: Outcome,
}

/// Unvalidated triplet fields as they arrive from a provider.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripletFields {
    pub cause: String,
    pub relationship: String,
    pub effect: String,
    pub net_outcome: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    InvalidKey { role: String, input: String, reason: String },
    EmptyKey { role: String },
    UnknownRelationship { value: String },
    UnknownOutcome { value: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::InvalidKey { role, input, reason } => {
                write!(f, "invalid {role} key `{input}`: {reason}")
            }
            Violation::EmptyKey { role } => write!(f, "{role} key has neither subtype nor feature"),
            Violation::UnknownRelationship { value } => write!(f, "unknown relationship `{value}`"),
            Violation::UnknownOutcome { value } => write!(f, "unknown net outcome `{value}`"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub violations: Vec<Violation>,
    pub triplet: Option<Triplet>,
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every field and reports all violations at once.
pub fn validate_triplet(fields: &TripletFields) -> Verdict {
    let mut violations = Vec::new();

    let mut check_key = |role: &str, input: &str| -> Option<EntityKey> {
        match parse_key(input) {
            Ok(k) if k.is_bare() => {
                violations.push(Violation::EmptyKey { role: role.into() });
                None
            }
            Ok(k) => Some(k),
            Err(e) => {
                violations.push(Violation::InvalidKey {
                    role: role.into(),
                    input: input.to_string(),
                    reason: e.to_string(),
                });
                None
            }
        }
    };
    let cause = check_key("cause", &fields.cause);
    let effect = check_key("effect", &fields.effect);

    let relationship = fields.relationship.parse::<Relationship>();
    if let Err(value) = &relationship {
        violations.push(Violation::UnknownRelationship { value: value.clone() });
    }
    let outcome = fields.net_outcome.parse::<Outcome>();
    if let Err(value) = &outcome {
        violations.push(Violation::UnknownOutcome { value: value.clone() });
    }

    let triplet = match (cause, relationship, effect, outcome) {
        (Some(cause), Ok(relationship), Some(effect), Ok(net_outcome)) if violations.is_empty() => {
            Some(Triplet {
                cause,
                relationship,
                effect,
                net_outcome,
            })
        }
        _ => None,
    };
    Verdict { violations, triplet }
}
