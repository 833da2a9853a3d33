//! Gradient synchronization over a ring or a parameter server, with the
//! training-time cost models that predict which one wins.
//!
//! The crate has three layers:
//!
//! * [`transport`] moves framed gradient blocks between workers, in-process
//!   or over TCP, with optional simulated link cost and full traffic ledgers;
//! * [`collectives`] runs ring all-reduce (scatter-reduce then all-gather)
//!   and parameter-server aggregation on top of any transport, plus
//!   closed-form communication-volume predictors;
//! * [`trainer`] and [`metrics`] close the loop: a synchronous SGD harness
//!   that produces timing samples, and the cost models that are fitted to
//!   them, validated, and compared.
//!
//! ```
//! use ringpar::{connect_ring, ring_allreduce, ClusterConfig, GradientBuffer, LinkProfile};
//!
//! let config = ClusterConfig::ring(3)?;
//! let endpoints = connect_ring(&config, LinkProfile::ZERO)?;
//! let handles: Vec<_> = endpoints
//!     .into_iter()
//!     .enumerate()
//!     .map(|(rank, mut ep)| {
//!         std::thread::spawn(move || {
//!             let mut local = vec![0.0; 3];
//!             local[rank] = 1.0;
//!             ring_allreduce(&GradientBuffer::new(local), &config, &mut ep)
//!         })
//!     })
//!     .collect();
//! for handle in handles {
//!     let reduced = handle.join().unwrap()?;
//!     assert_eq!(reduced.values(), &[1.0, 1.0, 1.0]);
//! }
//! # Ok::<(), ringpar::Error>(())
//! ```

mod buffer;
mod cluster;
mod error;
mod partition;
mod schedule;

pub mod collectives;
pub mod metrics;
pub mod trainer;
pub mod transport;

pub use buffer::{GradientBuffer, ELEMENT_BYTES};
pub use cluster::{ClusterConfig, ReduceOp, Strategy, WorkerId};
pub use collectives::{
    ps_allreduce, ps_volume, ring_allreduce, ring_volume_per_worker, run_once,
    serve_parameter_server, CollectiveOutcome,
};
pub use error::{Error, Result};
pub use partition::{partition, BlockPartition};
pub use schedule::{gather_schedule, reduced_block, scatter_schedule, BlockExchange};
pub use transport::{
    connect_ring, connect_ring_tcp, connect_star, connect_star_tcp, CommLedger, Frame, LinkProfile,
    MsgType, RingEndpoint, StarServerEndpoint, StarWorkerEndpoint, Topology, TransportChoice,
};
