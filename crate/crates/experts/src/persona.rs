use std::collections::HashSet;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    /// Coordinates the process: panel size, hierarchy depth, personas.
    Guide,
    /// One independent judge on the panel.
    Expert,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpertPersona {
    pub id: String,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    pub description: String,
    /// System-style priming sent ahead of every conversation.
    pub instructions: String,
    pub role: Role,
}

impl ExpertPersona {
    pub fn expert(name: &str, title: Option<&str>, description: &str, instructions: &str) -> Self {
        Self {
            id: slug(name),
            name: name.to_string(),
            title: title.map(str::to_string),
            description: description.to_string(),
            instructions: instructions.to_string(),
            role: Role::Expert,
        }
    }

    /// The coordinating persona, primed with the stock guide instructions.
    pub fn guide() -> Self {
        Self {
            id: GUIDE_ID.into(),
            name: "AHP Guide".into(),
            title: None,
            description: GUIDE_DESCRIPTION.into(),
            instructions: GUIDE_INSTRUCTIONS.into(),
            role: Role::Guide,
        }
    }

    /// Builds an expert from a title/name header plus background and
    /// personality paragraphs, writing instructions in the persona's voice.
    pub fn from_profile(title: &str, name: &str, background: &str, personality: &str) -> Self {
        let description =
            format!("{title}. Background: {background} Personality/Preferences: {personality}");
        let instructions = format!(
            "As {name}, {title}, you are one member of a panel of independent experts supporting an \
             Analytic Hierarchy Process study. Background: {background} Personality and preferences: \
             {personality} Answer from this professional perspective, give your own subjective \
             judgement, and follow the requested answer format exactly."
        );
        Self::expert(name, Some(title), &description, &instructions)
    }
}

/// Lower-case, dash-separated identifier derived from a display name.
pub fn slug(name: &str) -> String {
    let mut out = String::new();
    for ch in name.chars() {
        if ch.is_alphanumeric() {
            out.extend(ch.to_lowercase());
        } else if !out.ends_with('-') && !out.is_empty() {
            out.push('-');
        }
    }
    out.trim_end_matches('-').to_string()
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum PanelError {
    #[error("duplicate persona id {0:?}")]
    DuplicateId(String),
    #[error("persona {0:?} has empty instructions")]
    EmptyInstructions(String),
}

/// Checks id uniqueness and non-empty instructions.
pub fn validate_panel(personas: &[ExpertPersona]) -> Result<(), PanelError> {
    let mut seen = HashSet::new();
    for p in personas {
        if !seen.insert(p.id.as_str()) {
            return Err(PanelError::DuplicateId(p.id.clone()));
        }
        if p.instructions.trim().is_empty() {
            return Err(PanelError::EmptyInstructions(p.id.clone()));
        }
    }
    Ok(())
}

/// Persona id of the coordinating guide.
pub const GUIDE_ID: &str = "ahp-guide";

pub const GUIDE_DESCRIPTION: &str =
    "Guides AHP decision-making, including managing external expert inputs.";

pub const GUIDE_INSTRUCTIONS: &str = "As an AHP Guide, your role includes facilitating users who are working with a specific problem or question using Saaty's Analytic Hierarchy Process. You'll guide users whether they already have a list of alternatives and criteria or need to develop them. Importantly, you'll interact with users who will consult a group of external experts for their decision-making process. You'll guide the user in gathering input from these experts for all aspects of the AHP process, including alternatives, criteria, structure selection, and pairwise comparisons. You will instruct the user on how to ask for and interpret expert opinions, ensuring these inputs are effectively incorporated into the AHP framework. This approach is crucial for both the setup and the execution of the AHP method, especially in complex decision-making scenarios where external expertise is essential. Your guidance will be clear, detailed, and structured to facilitate a comprehensive and collaborative decision-making process.";

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slugs() {
        assert_eq!(slug("Dr. Ava Chen"), "dr-ava-chen");
        assert_eq!(
            slug("Lt. Col. John Abrams (Retd.)"),
            "lt-col-john-abrams-retd"
        );
        assert_eq!(slug("Laura García"), "laura-garcía");
    }

    #[test]
    fn panel_validation() {
        let a = ExpertPersona::from_profile("Strategist", "Ann", "bg", "calm");
        let mut b = a.clone();
        assert_eq!(
            validate_panel(&[a.clone(), b.clone()]),
            Err(PanelError::DuplicateId("ann".into()))
        );
        b.id = "other".into();
        b.instructions = " ".into();
        assert_eq!(
            validate_panel(&[a.clone(), b]),
            Err(PanelError::EmptyInstructions("other".into()))
        );
        assert!(validate_panel(&[a, ExpertPersona::guide()]).is_ok());
    }
}
