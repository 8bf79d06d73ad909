//! Certificates computed from a finished history: the energy inequalities,
//! the weak-form residual and the error-term pairing.

mod energy;
mod weak_form;

pub use energy::{
    check_discrete_coercivity, check_energy_estimate, check_l2h1_bound, check_summation_bound, energy_constant,
    EnergyBound, EnergyCertificate, L2H1Bound, LedgerEntry, ALGEBRAIC_TOLERANCE, DATA_SLACK,
    LINEAR_DOMINATION_CONSTANT,
};
pub use weak_form::{
    error_term_pairing, standard_bumps, weak_form_residual, weak_form_with_error_terms, ErrorTermEntry, HatFamilyEntry, WeakFormEntry,
    WeakFormResidualReport,
};
