//! Generalized range, algebraic core, regularity and the generalized-inverse calculus.

mod dagger;
mod geninv;
mod regularity;

pub use dagger::{
    dagger_checks, dagger_iterate, dagger_iterates, hat_map_check, is_hyper_dagger, is_n_dagger,
    DaggerCheck, HatMapCheck,
};
pub use geninv::{
    accept_generalized_inverse, inverse_residuals, is_biregular, iterate_s, iterates_s,
    make_generalized_inverse, power_identity_residuals, r_infty_fixedpoint_check,
    s_invariance_check, BiregularityReport, GenInverse, PowerIdentityResiduals,
};
pub(crate) use regularity::{power_noise_scale, stabilize};
pub use regularity::{
    algebraic_core, generalized_range, is_regular, kernel_lift_identity, range_chain, translate,
    BoundaryRegularity, KernelLiftCheck, RangeChain, RegularityReport, RegularityVerdict, Witness,
};
