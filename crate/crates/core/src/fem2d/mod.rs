//! 2D quasistatic finite-element engine.
