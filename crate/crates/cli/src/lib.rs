//! Command-line driver and HTTP service over a cartae store.

pub mod server;

use cartae_core::store::{query, QueryError};
use cartae_core::{ResultPage, SearchParams, Snapshot};

/// The one search path used by both `cartae query` and `GET /search`.
pub fn search(snapshot: &Snapshot, params: &SearchParams) -> Result<ResultPage, QueryError> {
    Ok(query(snapshot, &params.to_query()?))
}
