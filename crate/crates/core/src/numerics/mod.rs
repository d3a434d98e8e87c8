//! Special functions, quadrature and root finding.

pub mod gauss;
pub mod mittag_leffler;
pub mod optimize;
pub mod quadrature;
pub mod roots;
pub mod special;

pub use gauss::GaussLegendre;
pub use mittag_leffler::{mittag_leffler, mittag_leffler_2p, MittagLeffler};
pub use optimize::{nelder_mead, Minimum, NelderMeadOptions};
pub use quadrature::{integrate_finite, integrate_lewis, integrate_lewis_vec, QuadratureSpec};
pub use roots::find_root_bracketed;
pub use special::{cexpm1, clog1p, decay_phi1, decay_phi2, decay_phi3, rgamma, sin_pi};
