use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::expr::{Effect, ExprError, Guard, SExpr, Scope};
use super::state::AppState;
use crate::selector::TargetId;
use crate::test_case::Value;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamDomain {
    IntRange(i64, i64),
    StringPool(Vec<String>),
    RefCollection(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamSpec {
    pub name: String,
    pub domain: ParamDomain,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateDecl {
    #[serde(default)]
    pub variables: BTreeMap<String, Value>,
    #[serde(default)]
    pub collections: BTreeMap<String, Vec<Value>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeDecl {
    pub id: String,
    pub source: String,
    pub dest: String,
    pub method: String,
    #[serde(default)]
    pub params: Vec<ParamSpec>,
    #[serde(default)]
    pub guard: Option<SExpr>,
    #[serde(default)]
    pub effects: Vec<SExpr>,
}

/// A navigation model exactly as written in a model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub schema: u32,
    #[serde(default)]
    pub name: Option<String>,
    pub nodes: Vec<String>,
    pub home: String,
    #[serde(default)]
    pub state: StateDecl,
    pub edges: Vec<EdgeDecl>,
}

/// Semantic problems found while validating a [`ModelDocument`].
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("unsupported schema version {0} (expected {SCHEMA_VERSION})")]
    SchemaVersion(u32),
    #[error("no-edges: model declares no edges, so there is nothing to cover")]
    NoEdges,
    #[error("unique-nodes: node `{0}` is declared twice")]
    DuplicateNode(String),
    #[error("home-declared: home node `{0}` is not declared")]
    UnknownHome(String),
    #[error("edge-endpoints: edge `{edge}` references undeclared node `{node}`")]
    UnknownNode { edge: String, node: String },
    #[error("unique-edge-ids: edge id `{0}` is used twice")]
    DuplicateEdgeId(String),
    #[error("unique-methods: node `{node}` has two edges with method `{method}`")]
    DuplicateMethod { node: String, method: String },
    #[error("unique-params: edge `{edge}` declares parameter `{param}` twice")]
    DuplicateParam { edge: String, param: String },
    #[error("param-domain: edge `{edge}` parameter `{param}`: {message}")]
    BadDomain {
        edge: String,
        param: String,
        message: String,
    },
    #[error("expressions: edge `{edge}`: {source}")]
    Expr { edge: String, source: ExprError },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodEdge {
    pub id: TargetId,
    /// Identifier used in the model file.
    pub name: String,
    pub source: usize,
    pub dest: usize,
    pub method: String,
    pub params: Vec<ParamSpec>,
    pub guard: Option<Guard>,
    pub effects: Vec<Effect>,
}

/// A validated, immutable navigation model. Every edge is a coverage target;
/// the edge at index `i` has `TargetId(i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NavigationModel {
    pub name: String,
    nodes: Vec<String>,
    home: usize,
    initial: AppState,
    edges: Vec<MethodEdge>,
    outgoing: Vec<Vec<usize>>,
}

struct EdgeScope<'a> {
    state: &'a AppState,
    params: &'a [ParamSpec],
}

impl Scope for EdgeScope<'_> {
    fn has_variable(&self, name: &str) -> bool {
        self.state.has_variable(name)
    }
    fn has_collection(&self, name: &str) -> bool {
        self.state.has_collection(name)
    }
    fn arg_index(&self, name: &str) -> Option<usize> {
        self.params.iter().position(|p| p.name == name)
    }
}

impl NavigationModel {
    pub fn from_document(doc: &ModelDocument) -> Result<Self, ModelError> {
        if doc.schema != SCHEMA_VERSION {
            return Err(ModelError::SchemaVersion(doc.schema));
        }
        if doc.edges.is_empty() {
            return Err(ModelError::NoEdges);
        }
        let mut index = BTreeMap::new();
        for (i, n) in doc.nodes.iter().enumerate() {
            if index.insert(n.as_str(), i).is_some() {
                return Err(ModelError::DuplicateNode(n.clone()));
            }
        }
        let home = *index
            .get(doc.home.as_str())
            .ok_or_else(|| ModelError::UnknownHome(doc.home.clone()))?;
        let initial = AppState::new(doc.state.variables.clone(), doc.state.collections.clone());

        let mut ids = BTreeSet::new();
        let mut methods = BTreeSet::new();
        let mut edges = Vec::with_capacity(doc.edges.len());
        let mut outgoing = alloc::vec![Vec::new(); doc.nodes.len()];
        for (i, e) in doc.edges.iter().enumerate() {
            let node = |n: &String| {
                index.get(n.as_str()).copied().ok_or_else(|| ModelError::UnknownNode {
                    edge: e.id.clone(),
                    node: n.clone(),
                })
            };
            let source = node(&e.source)?;
            let dest = node(&e.dest)?;
            if !ids.insert(e.id.as_str()) {
                return Err(ModelError::DuplicateEdgeId(e.id.clone()));
            }
            if !methods.insert((source, e.method.as_str())) {
                return Err(ModelError::DuplicateMethod {
                    node: e.source.clone(),
                    method: e.method.clone(),
                });
            }
            let mut names = BTreeSet::new();
            for p in &e.params {
                if !names.insert(p.name.as_str()) {
                    return Err(ModelError::DuplicateParam {
                        edge: e.id.clone(),
                        param: p.name.clone(),
                    });
                }
                let bad = |message: &str| ModelError::BadDomain {
                    edge: e.id.clone(),
                    param: p.name.clone(),
                    message: message.to_string(),
                };
                match &p.domain {
                    ParamDomain::IntRange(lo, hi) if lo > hi => return Err(bad("empty int range")),
                    ParamDomain::StringPool(pool) if pool.is_empty() => {
                        return Err(bad("empty string pool"))
                    }
                    ParamDomain::RefCollection(c) if !initial.has_collection(c) => {
                        return Err(bad("undeclared collection"))
                    }
                    _ => {}
                }
            }
            let scope = EdgeScope {
                state: &initial,
                params: &e.params,
            };
            let wrap = |source| ModelError::Expr {
                edge: e.id.clone(),
                source,
            };
            let guard = e
                .guard
                .as_ref()
                .map(|g| Guard::compile(g, &scope))
                .transpose()
                .map_err(wrap)?;
            let effects = e
                .effects
                .iter()
                .map(|x| Effect::compile(x, &scope))
                .collect::<Result<Vec<_>, _>>()
                .map_err(wrap)?;
            outgoing[source].push(i);
            edges.push(MethodEdge {
                id: TargetId(i as u32),
                name: e.id.clone(),
                source,
                dest,
                method: e.method.clone(),
                params: e.params.clone(),
                guard,
                effects,
            });
        }
        Ok(NavigationModel {
            name: doc.name.clone().unwrap_or_default(),
            nodes: doc.nodes.clone(),
            home,
            initial,
            edges,
            outgoing,
        })
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn home(&self) -> usize {
        self.home
    }

    pub fn initial_state(&self) -> &AppState {
        &self.initial
    }

    pub fn edges(&self) -> &[MethodEdge] {
        &self.edges
    }

    pub fn edge(&self, id: TargetId) -> &MethodEdge {
        &self.edges[id.0 as usize]
    }

    pub fn edge_by_name(&self, name: &str) -> Option<&MethodEdge> {
        self.edges.iter().find(|e| e.name == name)
    }

    /// Edge indices leaving `node`, in declaration order.
    pub fn outgoing(&self, node: usize) -> &[usize] {
        &self.outgoing[node]
    }

    pub fn find_method(&self, node: usize, method: &str) -> Option<&MethodEdge> {
        self.outgoing[node]
            .iter()
            .map(|&i| &self.edges[i])
            .find(|e| e.method == method)
    }

    pub fn targets(&self) -> impl Iterator<Item = TargetId> + '_ {
        self.edges.iter().map(|e| e.id)
    }

    pub fn target_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n == name)
    }
}
