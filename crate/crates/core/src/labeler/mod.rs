//! Report labeling: a deterministic rule-based path and an LLM-backed
//! extraction client, both producing schema-conformant assignments.

pub mod extract;
pub mod rules;

pub use extract::{
    label_corpus_llm, llm_label, parse_structured_response, render_prompt, ExtractorConfig,
    HttpTransport, LabelOutcome, Transport, TransportRequest, TransportResponse,
};
pub use rules::{rule_label, split_sentences, LabelRule, RuleSet};
