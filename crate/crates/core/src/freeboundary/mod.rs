//! Free boundary extraction, regular-point classification and audits of
//! non-degeneracy, quadratic growth, subharmonicity and support localization.

mod audits;
mod classify;
mod extract;
mod graphfit;

pub use audits::{
    audit_nondegeneracy, audit_quadratic_growth, audit_subharmonicity, audit_support_localization, in_support_closure,
    GrowthReport, NonDegeneracyReport, NonDegeneracySample, SubharmonicityReport, SupportReport,
};
pub use classify::{
    classify_point, classify_points, default_margin, Classification, PointClassification, Verdict, SCAN_RADII,
    SCAN_RATIO,
};
pub use extract::{default_delta, default_eps_grad, extract_free_boundary, BoundaryPoint, FreeBoundarySet};
pub use graphfit::{fit_boundary_graph, GraphFit, GraphSample, HolderBin, FLAT_TOLERANCE, MIN_GRAPH_SAMPLES};
