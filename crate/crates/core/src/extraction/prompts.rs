//! Default prompt templates. Placeholders are written `{{name}}`.

pub const FINDINGS_TEMPLATE_ID: &str = "findings.v1";
pub const TRIPLET_TEMPLATE_ID: &str = "triplet.v1";
pub const NAMING_TEMPLATE_ID: &str = "cluster_naming.v1";

pub const FINDINGS_TEMPLATE: &str = include_str!("../../prompts/findings.txt");
pub const TRIPLET_TEMPLATE: &str = include_str!("../../prompts/triplet.txt");
pub const NAMING_TEMPLATE: &str = include_str!("../../prompts/cluster_naming.txt");

/// Substitutes every `{{name}}` with its value. Unknown placeholders are left
/// untouched.
pub fn render(template: &str, vars: &[(&str, &str)]) -> String {
    vars.iter().fold(template.to_string(), |acc, (name, value)| {
        acc.replace(&format!("{{{{{name}}}}}"), value)
    })
}
