//! Core analysis library for FlareLang programs.
//!
//! The pipeline mirrors a four-step cycle: identify bounded elements at
//! each scale, describe each element by its four observable properties
//! (Receives, Sends, Effects, Shares), extract the bindings between
//! elements along two dimensions (Causal-Temporal and Communicative), and
//! compose bound sets into new elements at the next scale. A deterministic
//! event-loop interpreter produces traces used to validate the static
//! classification dynamically.

pub mod bindings;
pub mod compose;
pub mod elements;
pub mod lang;
pub mod linkage;
pub mod properties;
pub mod span;

pub use bindings::{
    binding_stems, element_stems, extract_causal_temporal, extract_communicative, Binding,
    CtSubtype, Dimension, Warning,
};
pub use compose::{compose, flatten_oracle, CompositionError, CompositionResult};
pub use elements::{element_at, identify_elements, Element, ElementTree, ScalePolicy};
pub use lang::{parse, resolve_names, tokenize, unparse};
pub use properties::{classify_access, compute_properties, PropertyEntry, PropertySet};
pub use span::{Pos, SourceSpan};
