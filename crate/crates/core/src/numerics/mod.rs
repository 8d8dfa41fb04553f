pub mod fit;
pub mod jet;
pub mod quadrature;

pub use fit::{fit_leading_order, fit_series, FitResult};
pub use jet::{jet_compose, ComplexJet, Jet, RealJet, Scalar};
pub use quadrature::{integrate, integrate_fixed, Axis, Integral, QuadratureSpec};
