//! HTTP service that runs the streaming engine with a person as the oracle.
//!
//! Each session streams its dataset until the engine needs a comparison,
//! then waits for the answer:
//!
//! | method | path | |
//! |---|---|---|
//! | POST | `/sessions` | create from `{dataset, config, ties}`; 201 `{id, progress}` |
//! | GET | `/sessions/{id}/query` | pending pair or `done` with the winner; idempotent |
//! | POST | `/sessions/{id}/answer` | `{outcome: first\|second\|tie, query_id?}`; progress |
//! | POST | `/sessions/{id}/stop` | stop reading; the final comparisons follow via `/query` |
//! | GET | `/sessions/{id}/progress` | counters |
//! | GET | `/sessions/{id}/result` | winner and answer log; 409 until done |
//! | GET | `/sessions/{id}/record` | spec plus answer log, enough to replay |
//! | DELETE | `/sessions/{id}` | drop the session |
//!
//! Errors are `{code, message}` with 400, 404, 409, 410, 422 or 503.

pub mod api;
pub mod error;
pub mod session;
pub mod store;

pub use api::{router, AnswerRequest, Created};
pub use error::{ApiError, ErrorBody};
pub use session::{
    Answer, AnswerRecord, DatasetSource, Progress, QueryView, ResultView, Session, SessionRecord,
    SessionSpec, Status, TupleView,
};
pub use store::{ServiceConfig, Store};
