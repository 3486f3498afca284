//! Placeholder bench file; filled in once the pipeline modules exist.
fn main() {}
