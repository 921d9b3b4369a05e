//! Refinement of a coarse description, goal-aware zooming, and lifting of
//! fine observations back to the coarse resolution.

mod spec;

pub use spec::{Counterpart, Observability, RefinementSpec, TestSpec};

mod refine;

pub use refine::{lift_observations, refine, FineDescription, RefineError, TestMachinery, COMPONENT};

mod zoom;

pub use zoom::{fine_goal, relevant_constants, zoom, ZoomedDescription};
