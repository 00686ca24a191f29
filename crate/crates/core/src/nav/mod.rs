//! Guarded navigation models: pages are nodes, methods are edges, and every
//! edge is a coverage target.

mod exec;
mod expr;
mod generate;
mod model;
mod state;

pub use exec::{execute_test, ModelExecutor};
pub use expr::{CmpOp, Effect, Expr, ExprError, Guard, SExpr, Scope};
pub use generate::{
    generate_candidate, instantiate, random_walk, shortest_path, NavGenerator, DEFAULT_MAX_WALK_LEN,
    FALLBACK_REF_RANGE,
};
pub use model::{
    EdgeDecl, MethodEdge, ModelDocument, ModelError, NavigationModel, ParamDomain, ParamSpec,
    StateDecl, SCHEMA_VERSION,
};
pub use state::AppState;
