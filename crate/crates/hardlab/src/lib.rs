//! Certification toolkit for hardness-of-approximation constructions:
//! Ramanujan witnesses, MAX-k-CUT gadgets, reduction ratios and
//! local-labeling LP upper bounds.

pub mod bench_harness;
pub mod gadget_core;
pub mod graph_core;
pub mod kcut_solver;
pub mod linalg;
pub mod lp_bounds;
pub mod reduction_calc;
pub mod search_loop;
pub mod simplex;
pub mod spectral_cert;

/// Floating-point scalar accepted by the numeric kernels.
pub trait Real: num_traits::Float + num_traits::FromPrimitive + std::fmt::Debug + Send + Sync + 'static {}
impl<T> Real for T where T: num_traits::Float + num_traits::FromPrimitive + std::fmt::Debug + Send + Sync + 'static {}

/// Exact rational used for weights, fractions and reduction parameters.
pub type Rational = num_rational::BigRational;

pub type SymmetricEigen64 = linalg::SymmetricEigen<f64>;
pub type Simplex64 = simplex::Simplex<f64>;

pub use gadget_core::{Gadget, GadgetParams};
pub use graph_core::MultiGraph;
pub use kcut_solver::KCutInstance;
pub use reduction_calc::ReductionSummary;

/// Parses `p` or `p/q`.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let p: num_bigint::BigInt = p.trim().parse().ok()?;
            let q: num_bigint::BigInt = q.trim().parse().ok()?;
            if num_traits::Zero::is_zero(&q) {
                return None;
            }
            Some(Rational::new(p, q))
        }
        None => Some(Rational::from_integer(s.parse().ok()?)),
    }
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    num_traits::ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
}
