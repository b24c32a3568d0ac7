//! Compact dense-track storage: per-pixel barycentric records, the on-disk
//! clip archive, storage accounting and the query engine.

mod archive;
mod barymap;
mod query;
mod storage;

pub use archive::{
    conventions, read_archive, read_archive_file, write_archive, write_archive_file,
    ArchiveError, ArchiveReader, ClipArchive, ClipHeader, Frame, SizeBreakdown, MAGIC,
    VERSION_MAJOR, VERSION_MINOR,
};
pub use barymap::{BaryMap, PixelFlag, PixelRecord, SegMap, ALPHA_SCALE, ALPHA_TOL, NO_FACE};
pub use query::{dpm_from_frame, track_from_frame, QueryError, RefFrame, Track};
pub use storage::{human_bytes, storage_estimate, StorageEstimate, StorageMode, GIB, TIB};
