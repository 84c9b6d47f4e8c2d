//! Cross-device visual sensemaking sessions.
//!
//! A PC client and (simulated) VR clients share one node-link diagram through a
//! server that totally orders every mutation and replicates it, together with the
//! shared selection and device poses. Around that core sit the display geometry
//! used by both presentations, headless gesture-driven clients, and the
//! analytics that turn session logs into usage-strategy reports.

pub mod analytics;
pub mod corpus;
pub mod graph;
pub mod interaction;
pub mod layout;
pub mod sync;

pub use graph::{
    DeviceId, DocumentId, DocumentRecord, GraphError, GraphOp, GraphState, LinkId, LinkKind, LinkRecord, NodeId,
    NodeKind, NodeRecord, SelectionState, SelectionUpdate, Vec3,
};
