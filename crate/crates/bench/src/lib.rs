//! Empty library target; the crate exists for its benchmark binaries.
