//! Cluster naming through the provider.

use super::ThematicCluster;
use crate::extraction::parse::{parse_naming_response, ClusterName};
use crate::extraction::prompts::{render, NAMING_TEMPLATE, NAMING_TEMPLATE_ID};
use crate::notation::EntityType;
use crate::provider::{Provider, Request};

pub fn type_context(t: EntityType) -> &'static str {
    match t {
        EntityType::Human => "people, their roles, traits and perceptions",
        EntityType::Ai => "AI systems, models and their properties",
        EntityType::Co => "concepts, objects, tasks and outcomes",
    }
}

/// The naming request for a cluster, listing `terms` in order.
pub fn naming_request(cluster: &ThematicCluster, terms: &[String], model: &str) -> Request {
    let list: Vec<String> = terms.iter().map(|t| format!("- {t}")).collect();
    let prompt = render(
        NAMING_TEMPLATE,
        &[
            ("entity_type", cluster.entity_type.as_str()),
            ("type_context", type_context(cluster.entity_type)),
            ("terms", &list.join("\n")),
        ],
    );
    Request::new(model, NAMING_TEMPLATE_ID, prompt)
}

/// Asks the provider for a name and description. On any provider or parse
/// failure the cluster gets its placeholder name and no description.
pub fn name_cluster(cluster: &ThematicCluster, terms: &[String], provider: Option<&Provider>, model: &str) -> ClusterName {
    let placeholder = || ClusterName {
        name: cluster.placeholder_name(),
        description: String::new(),
    };
    let Some(provider) = provider else {
        return placeholder();
    };
    match provider.complete(&naming_request(cluster, terms, model)) {
        Ok(text) => parse_naming_response(&text).unwrap_or_else(|e| {
            log::warn!("cluster {}: {e}", cluster.id);
            placeholder()
        }),
        Err(e) => {
            log::warn!("cluster {}: {e}", cluster.id);
            placeholder()
        }
    }
}
