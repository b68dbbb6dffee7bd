//! Torus spectral windows, Weyl counts, the spherical transform pair on the
//! disc, the spectral cutoff construction and the wave propagator.

mod cutoff;
mod propagator;
mod transform;
mod window;

pub use cutoff::{cutoff_kernel, cutoff_study, plateau, CutoffKernel, CutoffReport, SpectralCutoff};
pub use propagator::{
    ball_volume, fit_asymptotic, oscillation_period, propagator_asymptotic, propagator_asymptotic_quadrature,
    propagator_eigenvalue, AsymptoticFit, PropagatorTable,
};
pub use transform::{
    calibrate_plancherel, forward_on_grid, gaussian_spectrum, hankel_transform, inverse_on_grid,
    inverse_transform_h2, phi_table, plancherel_constant, plancherel_weight, spherical_transform_h2,
    PlancherelCalibration, RadialKernel,
};
pub use window::{
    enumerate_window, weyl_window_count, Parity, SpectralWindow, TorusEigenbasis, TorusMode, WeylCount,
    WindowSchedule,
};
