//! Plate-with-hole mesh generation (under construction).
