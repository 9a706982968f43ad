//! Generative adversarial nets on a hand-written neural stack.
//!
//! * [`numkit`]: matrices, seeded randomness, stable scalar helpers
//! * [`neural`]: perceptrons with relu/sigmoid/tanh/maxout units, dropout,
//!   backpropagation and momentum SGD
//! * [`adversarial`]: the minimax value, both generator objectives and the
//!   alternating minibatch training loop
//! * [`theory`]: discretized densities, the optimal discriminator,
//!   KL/JSD, the virtual criterion and density-space descent
//! * [`parzen`]: Gaussian Parzen-window log-likelihood with cross-validated
//!   bandwidth
//! * [`data`]: reference distributions, IDX/CSV ingestion, splits

pub mod adversarial;
pub mod data;
pub mod neural;
pub mod numkit;
pub mod parzen;
pub mod theory;
