//! Finds library versions inside an application's declared dependency range
//! that are binary-incompatible with how the application uses the library.
//!
//! The pipeline has three stages:
//!
//! 1. [`diff::collect_incompatible_changes`] walks a library's release
//!    history and records every backward- and forward-incompatible change
//!    between adjacent releases.
//! 2. [`detect::detect`] decides, for one application and one change, which
//!    side of the change the application cannot run against.
//! 3. [`suggest::suggest_incompatible_versions`] widens that single version
//!    to every release in which the changed element looks the same.
//!
//! [`scan::scan`] runs the pipeline over a repository manifest, and
//! [`oracle`] is an independent link simulator used to check it.

pub mod abi;
pub mod detect;
pub mod diff;
pub mod error;
pub mod interval;
pub mod oracle;
pub mod scan;
pub mod suggest;
pub mod usage;
pub mod version;

pub use abi::{AbiSnapshot, LibraryHistory, SymbolKey, TypeRef};
pub use diff::{ChangeKind, Direction, ElementRef, IncompatibleChange};
pub use error::{AbiError, ElfError, LoadError, ParseError};
pub use interval::{Interval, IntervalSet};
pub use usage::{AppUsage, UsageFact};
pub use version::{Version, VersionRange};
