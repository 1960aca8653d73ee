//! Yoccoz puzzles for `z² + c` on a pixel raster, with marked grids, moduli
//! of annuli, area bounds and first-return maps.
//!
//! Start with [`dynamics::fixed_points`] and [`puzzle::build_puzzle`]; the
//! guide in `book/` walks through the rest.

pub mod angle;
pub mod dynamics;
pub mod error;
pub mod mask;
pub mod measure;
pub mod moduli;
pub mod puzzle;
pub mod rays;
pub mod renorm;
pub mod tableau;

pub use angle::Angle;
pub use error::{Error, Result};
pub use num_complex::Complex64;

// The guide in book/ is compiled here so its snippets run as doc-tests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/dynamics.md")]
    mod dynamics {}
    #[doc = include_str!("../../../book/src/puzzle.md")]
    mod puzzle {}
    #[doc = include_str!("../../../book/src/tableau.md")]
    mod tableau {}
    #[doc = include_str!("../../../book/src/moduli.md")]
    mod moduli {}
    #[doc = include_str!("../../../book/src/measure.md")]
    mod measure {}
    #[doc = include_str!("../../../book/src/renorm.md")]
    mod renorm {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/formats.md")]
    mod formats {}
}
