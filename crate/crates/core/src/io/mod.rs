//! Model files, result files and selection files.

mod model_file;
mod result_file;

pub use model_file::{
    interval_vertices, load_model, model_hash, save_model, ModelFile, RowSpec, MAX_INTERVAL_STATES,
};
pub use result_file::{
    ChoiceEntry, ClassificationEntry, Diagnostics, ResultFile, SelectionFile, ValueEntry,
    SCHEMA_VERSION,
};
