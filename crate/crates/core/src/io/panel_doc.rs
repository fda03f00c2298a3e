//! The `stergm-panel/1` JSON document.
//!
//! ```json
//! {
//!   "schema_version": "stergm-panel/1",
//!   "games": [
//!     { "game_id": "g1", "n": 3,
//!       "times": [
//!         { "t": 0, "edges": [[0, 1]],
//!           "attrs": { "decision": ["C", "D", "N"], "wealth": [500, 500, 500] } },
//!         { "t": 1, "edges": [[0, 1], [1, 2]],
//!           "attrs": { "decision": ["C", "C", "D"], "wealth": [450, 650, 600] } }
//!       ] }
//!   ]
//! }
//! ```
//!
//! The attributes stored at time `t` govern the transition into `t`.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::graph::{AttributeTable, Decision, Game, Panel, SmallGraph, Snapshot, MAX_NODES};

pub const PANEL_SCHEMA: &str = "stergm-panel/1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PanelError {
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("{0}")]
    Json(String),
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> PanelError {
    PanelError::Invalid {
        path: path.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PanelDocument {
    pub schema_version: String,
    pub games: Vec<GameDoc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameDoc {
    pub game_id: String,
    pub n: usize,
    pub times: Vec<TimeDoc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeDoc {
    pub t: i64,
    pub edges: Vec<[usize; 2]>,
    pub attrs: AttrsDoc,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttrsDoc {
    pub decision: Vec<Decision>,
    pub wealth: Vec<i64>,
}

/// Parses and validates a panel document.
pub fn parse_panel(bytes: &[u8]) -> Result<Panel, PanelError> {
    let mut de = serde_json::Deserializer::from_slice(bytes);
    let doc: PanelDocument = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        match inner.classify() {
            serde_json::error::Category::Data => invalid(path, inner.to_string()),
            _ => PanelError::Json(inner.to_string()),
        }
    })?;
    de.end().map_err(|e| PanelError::Json(e.to_string()))?;
    from_document(&doc)
}

/// Validates a document and builds the panel it describes.
pub fn from_document(doc: &PanelDocument) -> Result<Panel, PanelError> {
    if doc.schema_version != PANEL_SCHEMA {
        return Err(invalid(
            "schema_version",
            format!("expected \"{PANEL_SCHEMA}\", found \"{}\"", doc.schema_version),
        ));
    }
    let mut ids = HashSet::new();
    let mut games = Vec::with_capacity(doc.games.len());
    for (g, game) in doc.games.iter().enumerate() {
        let gp = format!("games[{g}]");
        if !ids.insert(game.game_id.as_str()) {
            return Err(invalid(format!("{gp}.game_id"), format!("duplicate game id \"{}\"", game.game_id)));
        }
        let n = game.n;
        if !(2..=MAX_NODES).contains(&n) {
            return Err(invalid(format!("{gp}.n"), format!("n must be between 2 and {MAX_NODES}, found {n}")));
        }
        if game.times.len() < 2 {
            return Err(invalid(format!("{gp}.times"), "a game needs at least two time points"));
        }
        let mut snaps = Vec::with_capacity(game.times.len());
        for (s, time) in game.times.iter().enumerate() {
            let tp = format!("{gp}.times[{s}]");
            if s > 0 && time.t <= game.times[s - 1].t {
                return Err(invalid(
                    format!("{tp}.t"),
                    format!("times must increase strictly ({} follows {})", time.t, game.times[s - 1].t),
                ));
            }
            let mut seen = HashSet::new();
            for (e, &[i, j]) in time.edges.iter().enumerate() {
                let ep = format!("{tp}.edges[{e}]");
                if i >= j {
                    return Err(invalid(ep, format!("pair [{i}, {j}] must satisfy i < j")));
                }
                if j >= n {
                    return Err(invalid(ep, format!("node {j} out of range for n = {n}")));
                }
                if !seen.insert((i, j)) {
                    return Err(invalid(ep, format!("duplicate edge [{i}, {j}]")));
                }
            }
            for (name, len) in [("decision", time.attrs.decision.len()), ("wealth", time.attrs.wealth.len())] {
                if len != n {
                    return Err(invalid(format!("{tp}.attrs.{name}"), format!("expected {n} entries, found {len}")));
                }
            }
            let edges: Vec<(usize, usize)> = time.edges.iter().map(|&[i, j]| (i, j)).collect();
            let graph = SmallGraph::from_edges(n, &edges).map_err(|e| invalid(format!("{tp}.edges"), e.to_string()))?;
            let attrs = AttributeTable::new(time.attrs.decision.clone(), time.attrs.wealth.clone())
                .map_err(|e| invalid(format!("{tp}.attrs"), e.to_string()))?;
            snaps.push(Snapshot { t: time.t, graph, attrs });
        }
        games.push(Game::new(game.game_id.clone(), snaps).map_err(|e| invalid(gp, e.to_string()))?);
    }
    Ok(Panel::new(games))
}

/// Canonical document for a panel: edges in lexicographic order.
pub fn to_document(panel: &Panel) -> PanelDocument {
    PanelDocument {
        schema_version: PANEL_SCHEMA.to_string(),
        games: panel
            .games()
            .iter()
            .map(|game| GameDoc {
                game_id: game.id().to_string(),
                n: game.n(),
                times: game
                    .snapshots()
                    .iter()
                    .map(|s| TimeDoc {
                        t: s.t,
                        edges: s.graph.edges().map(|(i, j)| [i, j]).collect(),
                        attrs: AttrsDoc {
                            decision: s.attrs.decision().to_vec(),
                            wealth: s.attrs.wealth().to_vec(),
                        },
                    })
                    .collect(),
            })
            .collect(),
    }
}

/// Pretty-printed canonical JSON with a trailing newline.
pub fn serialize_panel(panel: &Panel) -> String {
    let mut s = serde_json::to_string_pretty(&to_document(panel)).expect("panel documents always serialize");
    s.push('\n');
    s
}

/// SHA-256 (lowercase hex) of the compact canonical JSON.
pub fn digest(panel: &Panel) -> String {
    let bytes = serde_json::to_vec(&to_document(panel)).expect("panel documents always serialize");
    hex::encode(Sha256::digest(&bytes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const MINIMAL: &str = r#"{
      "schema_version": "stergm-panel/1",
      "games": [{"game_id": "a", "n": 2, "times": [
        {"t": 0, "edges": [], "attrs": {"decision": ["C", "D"], "wealth": [500, 500]}},
        {"t": 1, "edges": [[0, 1]], "attrs": {"decision": ["N", "C"], "wealth": [500, 450]}}
      ]}]
    }"#;

    #[test]
    fn minimal_document_parses() {
        let p = parse_panel(MINIMAL.as_bytes()).unwrap();
        assert_eq!(p.games().len(), 1);
        assert_eq!(p.transition_count(), 1);
        assert_eq!(p.games()[0].snapshots()[1].graph.edge_count(), 1);
    }

    fn err_path(doc: &str) -> String {
        match parse_panel(doc.as_bytes()).unwrap_err() {
            PanelError::Invalid { path, .. } => path,
            other => panic!("expected a path-addressed error, got {other:?}"),
        }
    }

    #[test]
    fn violations_name_their_path() {
        assert_eq!(err_path(&MINIMAL.replace("[[0, 1]]", "[[1, 0]]")), "games[0].times[1].edges[0]");
        assert_eq!(err_path(&MINIMAL.replace("[[0, 1]]", "[[0, 1], [0, 1]]")), "games[0].times[1].edges[1]");
        assert_eq!(err_path(&MINIMAL.replace("[[0, 1]]", "[[0, 2]]")), "games[0].times[1].edges[0]");
        assert_eq!(err_path(&MINIMAL.replace("\"t\": 1", "\"t\": 0")), "games[0].times[1].t");
        assert_eq!(err_path(&MINIMAL.replace("[500, 450]", "[500]")), "games[0].times[1].attrs.wealth");
        assert_eq!(err_path(&MINIMAL.replace("\"N\", \"C\"", "\"N\", \"X\"")), "games[0].times[1].attrs.decision[1]");
        assert_eq!(err_path(&MINIMAL.replace("stergm-panel/1", "stergm-panel/2")), "schema_version");
        assert_eq!(err_path(&MINIMAL.replace("\"n\": 2", "\"n\": 12")), "games[0].n");
        assert_eq!(err_path(&MINIMAL.replace("\"wealth\": [500, 450]", "\"wealth\": [500, 4.5]")), "games[0].times[1].attrs.wealth[1]");
        assert!(matches!(parse_panel(b"{"), Err(PanelError::Json(_))));
        assert!(parse_panel(b"not json").is_err());
    }

    #[test]
    fn digest_is_stable_and_content_sensitive() {
        let p = parse_panel(MINIMAL.as_bytes()).unwrap();
        let d = digest(&p);
        assert_eq!(d.len(), 64);
        let reformatted: String = MINIMAL.split_whitespace().collect();
        assert_eq!(digest(&parse_panel(reformatted.as_bytes()).unwrap()), d);
        let changed = parse_panel(MINIMAL.replace("[500, 450]", "[500, 451]").as_bytes()).unwrap();
        assert_ne!(digest(&changed), d);
    }

    fn doc_strategy() -> impl Strategy<Value = PanelDocument> {
        let game = (2usize..=6, 2usize..5).prop_flat_map(|(n, times)| {
            let d = n * (n - 1) / 2;
            let snap = (
                any::<u64>(),
                prop::collection::vec(0u8..3, n),
                prop::collection::vec(-5000i64..5000, n),
            );
            (Just(n), prop::collection::vec(snap, times), 0i64..3)
                .prop_map(move |(n, snaps, t0)| {
                    let times = snaps
                        .into_iter()
                        .enumerate()
                        .map(|(s, (mask, dec, wealth))| {
                            let g = SmallGraph::from_mask(n, mask & ((1u64 << d) - 1)).unwrap();
                            TimeDoc {
                                t: t0 + 2 * s as i64,
                                edges: g.edges().map(|(i, j)| [i, j]).collect(),
                                attrs: AttrsDoc {
                                    decision: dec
                                        .into_iter()
                                        .map(|c| [Decision::Cooperate, Decision::Defect, Decision::None][c as usize])
                                        .collect(),
                                    wealth,
                                },
                            }
                        })
                        .collect();
                    (n, times)
                })
        });
        prop::collection::vec(game, 1..4).prop_map(|games| PanelDocument {
            schema_version: PANEL_SCHEMA.into(),
            games: games
                .into_iter()
                .enumerate()
                .map(|(g, (n, times))| GameDoc {
                    game_id: format!("game-{g}"),
                    n,
                    times,
                })
                .collect(),
        })
    }

    proptest! {
        #[test]
        fn serialize_parse_roundtrip(doc in doc_strategy()) {
            let text = serde_json::to_string(&doc).unwrap();
            let panel = parse_panel(text.as_bytes()).unwrap();
            prop_assert_eq!(&to_document(&panel), &doc);
            let again = parse_panel(serialize_panel(&panel).as_bytes()).unwrap();
            prop_assert_eq!(again, panel);
        }
    }
}
