//! Loading, validation, normalization, lagging and splitting of the
//! link-level observation table.

mod frame;
mod scaler;
mod split;
mod table;

pub use frame::{
    build_lagged, read_frame_csv, write_frame_csv, Attribute, FrameRow, LaggedFrame, ModelFrame, N_COVARIATES,
};
pub use scaler::{minmax_apply, minmax_fit, ColumnRange, OutOfRange, Scaled, ScalerParams};
pub use split::{split, split_indices};
pub use table::{load_csv, read_csv, save_csv, write_csv, Column, LinkRecord, ObservationTable, RowKey};
