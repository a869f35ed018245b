//! Code listings of the guide, run as doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/grassmann.md")]
pub mod ch01_grassmann {}
#[doc = include_str!("../../../book/src/models.md")]
pub mod ch02_models {}
#[doc = include_str!("../../../book/src/transport.md")]
pub mod ch03_transport {}
#[doc = include_str!("../../../book/src/holonomy.md")]
pub mod ch04_holonomy {}
#[doc = include_str!("../../../book/src/invariance.md")]
pub mod ch05_invariance {}
#[doc = include_str!("../../../book/src/descent.md")]
pub mod ch06_descent {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod ch07_cli {}
