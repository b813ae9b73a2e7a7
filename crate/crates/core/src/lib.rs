//! Conformal geometry in Clifford algebras and the transformation theory of
//! isothermic surfaces in `R^n`.
//!
//! * [`clifford`]: algebra `Cl(p,q)`, Vahlen matrices, light-cone model,
//!   cross-ratios.
//! * [`surface`]: sampled surfaces on curvature-line grids, Clifford-valued
//!   one-forms, Christoffel transforms and Calapso data.
//! * [`transform`]: Darboux, T- and Bianchi transforms, the H-surface
//!   invariant and the Sym formula.
//! * [`loopgroup`]: extended flat frames, simple factors and dressing.
//! * [`io`]: grid serialization.

pub mod clifford;
pub mod io;
pub mod loopgroup;
mod magnus;
pub mod surface;
pub mod transform;
mod vecops;
