pub mod ast;
pub mod eval;
pub mod parser;

pub use ast::MetricExpr;
pub use parser::{parse_metric, print_expr};
