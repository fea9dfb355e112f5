//! Numerical machinery for checking Mellin-transform identities: special
//! functions, adaptive quadrature, coefficient sequences, identity
//! transforms and a built-in regression corpus.

pub mod dd;
pub mod specfun;
pub mod quadrature;
pub mod expr;
pub mod sequences;
pub mod transforms;
pub mod corpus;
