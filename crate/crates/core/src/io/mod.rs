//! Text formats: the term mini-language and the JSON documents.

pub mod fit_doc;
pub mod panel_doc;
pub mod terms;
