//! Quantum channels, qudit teleportation and resource protocols for faithful
//! state transfer through a noisy channel.
//!
//! The crate is organised bottom-up:
//!
//! - [`qmath`]: dense complex linear algebra, states, Schmidt forms, fidelity.
//! - [`channels`]: Kraus and Choi representations, channel rank, named channels.
//! - [`teleport`]: the N-level teleportation protocol.
//! - [`protocol`]: general one-way resource protocols and their Choi-level control map.
//! - [`theorem`]: numerical renditions of the necessity argument.
//! - [`optimize`]: seeded derivative-free search over parameterised protocols.
//! - [`io`]: JSON file formats for channels, states, protocols and experiments.
//!
//! Choi matrices are normalised to unit trace throughout.

pub mod channels;
pub mod error;
pub mod io;
pub mod optimize;
pub mod protocol;
pub mod qmath;
pub mod teleport;
pub mod theorem;

pub use error::{Error, Result};

#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/states-and-channels.md")]
    mod states_and_channels {}
    #[doc = include_str!("../../../book/src/teleportation.md")]
    mod teleportation {}
    #[doc = include_str!("../../../book/src/resource-protocols.md")]
    mod resource_protocols {}
    #[doc = include_str!("../../../book/src/necessity.md")]
    mod necessity {}
    #[doc = include_str!("../../../book/src/search.md")]
    mod search {}
    #[doc = include_str!("../../../book/src/command-line.md")]
    mod command_line {}
}
