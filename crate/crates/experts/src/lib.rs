//! Virtual expert panel: personas, conversations, backends, prompt templates
//! and reply parsing.

pub mod backend;
pub mod conversation;
pub mod cost;
pub mod parse;
pub mod persona;
pub mod prompt;
pub mod repair;

pub use backend::{converse, BackendError, BackendKind, ExpertBackend};
pub use conversation::{rotate_conversation, ContextBudget, Conversation};
pub use cost::{estimate_cost, CostReport, Pricing};
pub use persona::{ExpertPersona, Role};
pub use prompt::{Bindings, Intent, MatrixRequest, Prompt, TemplateName, TemplateSet};
pub use repair::{elicit, ElicitError, Elicited};
