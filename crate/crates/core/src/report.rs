//! Serialization helpers shared by reports.

use serde::Serializer;

use crate::expr::Expr;

pub(crate) fn serialize_expr<S: Serializer>(e: &Expr, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(e)
}

pub(crate) fn serialize_opt_expr<S: Serializer>(e: &Option<Expr>, s: S) -> Result<S::Ok, S::Error> {
    match e {
        Some(e) => s.collect_str(e),
        None => s.serialize_none(),
    }
}
