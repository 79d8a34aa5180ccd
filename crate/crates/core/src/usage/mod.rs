//! Application-side usage model: imported symbols plus facts about how the
//! application touches library elements.

mod elf;
mod facts;
mod source;

pub use elf::{read_elf_imports, read_elf_imports_file};
pub use facts::{load_usage_facts, AppUsage, UsageDoc, UsageFact};
pub use source::{scan_source_file, scan_source_usage};
