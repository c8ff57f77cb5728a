//! Knowledge base, design inputs and the filtering rule engine.

pub mod engine;
pub mod facts;
pub mod kb;

pub use engine::{
    enumerate_configurations, run_applicability, run_restrictions, Alternative, Enumeration,
    Feasibility, FeasibleSlot, Selection, TraceEntry,
};
pub use facts::FactSet;
pub use kb::{load_knowledge_base, KnowledgeBase, KnowledgeBaseDocument, RuleCategory};
