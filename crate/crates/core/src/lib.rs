//! Numerical toolkit for the binary skew-symmetric broadcast channel.
//!
//! * [`info`]: distributions, channels, entropies and mutual informations.
//! * [`conjecture`]: the inequality `I(U;Y1) + I(V;Y2) - I(U;V) <= max(I(X;Y1), I(X;Y2))`
//!   over all sixteen `X = f(U, V)`, with stationarity and perturbation checks.
//! * [`reduction`]: functional representation of `X` and cardinality reduction
//!   of auxiliaries by multiplicative perturbations.
//! * [`bounds`]: sum-rate evaluation of Marton's inner bound and of two outer bounds.
//! * [`cli`]: the `bssc` command-line front end.

pub mod bounds;
pub mod cli;
pub mod conjecture;
pub mod info;
pub mod reduction;
pub mod search;
