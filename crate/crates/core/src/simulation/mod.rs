//! Patient-data generators: a Gaussian copula for tables and
//! nearest-neighbor slot swapping (Simulants) for visit sequences.

mod copula;
mod simulants;

pub use copula::{
    fit_gaussian_copula, fit_gaussian_copula_with, repair_correlation, sample_copula, CopulaConfig, CopulaError,
    CopulaModel, Marginal, EIGEN_FLOOR,
};
pub use simulants::{
    jaccard_distance, plan_simulants, simulants_generate, uniform_random_generate, PatientDistance, SimulantsError,
    SimulantsPlan, DEFAULT_K, DEFAULT_SWAP_PROB,
};
