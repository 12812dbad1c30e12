//! Dirichlet spectra of weighted divergence-form operators
//! `ℒu = div(T(∇u)) − ⟨∇η, T(∇u)⟩` on domains of Riemannian manifolds,
//! together with the geometric constants and universal eigenvalue
//! inequalities that bound them.

pub mod assembly;
pub mod bounds;
pub mod cli;
pub mod eigensolve;
pub mod expressions;
pub mod geometry;
pub mod mesh;
pub mod oracle;
