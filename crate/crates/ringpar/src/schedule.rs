//! Round-by-round block rotations for the two phases of ring all-reduce.
//!
//! Both phases run `N - 1` rounds. In every round each rank forwards one block
//! to its right neighbor and receives one block from its left neighbor:
//!
//! * scatter-reduce: the received block is *added* into the local block, so
//!   after the final round rank `n` holds the fully reduced block
//!   `(n + 1) % N`;
//! * all-gather: the received block *replaces* the local block, starting from
//!   the fully reduced one, so after the final round every rank holds every
//!   block.
//!
//! All indices are non-negative residues mod `N`; a naive `%` on negative
//! operands would corrupt the rotation.

use crate::cluster::WorkerId;
use crate::error::{Error, Result};

/// Blocks moved by one rank in one round: `send` goes to the right neighbor
/// while `recv` arrives from the left neighbor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockExchange {
    pub send_block: usize,
    pub recv_block: usize,
}

fn wrap(value: isize, modulus: usize) -> usize {
    let m = modulus as isize;
    (((value % m) + m) % m) as usize
}

fn check_round(worker_count: usize, round: usize) -> Result<()> {
    if worker_count < 2 {
        return Err(Error::invalid(
            "ring rounds are defined only for 2 or more workers",
        ));
    }
    if round > worker_count - 2 {
        return Err(Error::invalid(format!(
            "round {round} out of range [0, {}] for {worker_count} workers",
            worker_count - 2
        )));
    }
    Ok(())
}

/// Scatter-reduce rotation: in round `i` rank `n` sends block `(n - i) mod N`
/// and receives block `(n - i - 1) mod N`, which it adds into its own copy.
pub fn scatter_schedule(
    rank: WorkerId,
    worker_count: usize,
    round: usize,
) -> Result<BlockExchange> {
    check_round(worker_count, round)?;
    let r = rank.rank() as isize;
    let i = round as isize;
    Ok(BlockExchange {
        send_block: wrap(r - i, worker_count),
        recv_block: wrap(r - i - 1, worker_count),
    })
}

/// All-gather rotation: in round `i` rank `n` sends block `(n + 1 - i) mod N`
/// and receives block `(n - i) mod N`, which replaces its own copy.
///
/// At round 0 each rank sends exactly the block it finished reducing during
/// scatter, `(n + 1) % N`; every later round forwards the block received in
/// the previous one.
pub fn gather_schedule(rank: WorkerId, worker_count: usize, round: usize) -> Result<BlockExchange> {
    check_round(worker_count, round)?;
    let r = rank.rank() as isize;
    let i = round as isize;
    Ok(BlockExchange {
        send_block: wrap(r + 1 - i, worker_count),
        recv_block: wrap(r - i, worker_count),
    })
}

/// Block fully reduced at rank `n` once scatter completes: `(n + 1) % N`.
pub fn reduced_block(rank: WorkerId, worker_count: usize) -> usize {
    (rank.rank() + 1) % worker_count
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(rank: usize) -> WorkerId {
        WorkerId::new(rank)
    }

    #[test]
    fn scatter_examples() {
        let x = scatter_schedule(id(2), 4, 0).unwrap();
        assert_eq!((x.send_block, x.recv_block), (2, 1));
        let x = scatter_schedule(id(0), 4, 1).unwrap();
        assert_eq!((x.send_block, x.recv_block), (3, 2));
        let x = scatter_schedule(id(1), 2, 0).unwrap();
        assert_eq!((x.send_block, x.recv_block), (1, 0));
    }

    #[test]
    fn gather_examples() {
        let x = gather_schedule(id(2), 4, 0).unwrap();
        assert_eq!((x.send_block, x.recv_block), (3, 2));
        let x = gather_schedule(id(0), 3, 1).unwrap();
        assert_eq!((x.send_block, x.recv_block), (0, 2));
        let x = gather_schedule(id(1), 2, 0).unwrap();
        assert_eq!((x.send_block, x.recv_block), (0, 1));
    }

    #[test]
    fn round_bounds_enforced() {
        assert!(scatter_schedule(id(0), 4, 2).is_ok());
        assert!(scatter_schedule(id(0), 4, 3).is_err());
        assert!(gather_schedule(id(0), 4, 3).is_err());
        assert!(scatter_schedule(id(0), 1, 0).is_err());
    }

    #[test]
    fn gather_round_zero_sends_the_scatter_complete_block() {
        for n in 2..=16 {
            for rank in 0..n {
                let x = gather_schedule(id(rank), n, 0).unwrap();
                assert_eq!(x.send_block, reduced_block(id(rank), n));
            }
        }
    }

    #[test]
    fn schedules_are_bijective_per_round() {
        for n in 2..=16 {
            for round in 0..n - 1 {
                for schedule in [scatter_schedule, gather_schedule] {
                    let mut sends = vec![false; n];
                    let mut recvs = vec![false; n];
                    for rank in 0..n {
                        let x = schedule(id(rank), n, round).unwrap();
                        assert!(!sends[x.send_block], "duplicate send N={n} round={round}");
                        assert!(!recvs[x.recv_block], "duplicate recv N={n} round={round}");
                        sends[x.send_block] = true;
                        recvs[x.recv_block] = true;
                    }
                }
            }
        }
    }

    #[test]
    fn recv_matches_left_neighbor_send() {
        for n in 2..=16 {
            for round in 0..n - 1 {
                for rank in 0..n {
                    let left = (rank + n - 1) % n;
                    for schedule in [scatter_schedule, gather_schedule] {
                        let mine = schedule(id(rank), n, round).unwrap();
                        let theirs = schedule(id(left), n, round).unwrap();
                        assert_eq!(mine.recv_block, theirs.send_block, "N={n} round={round}");
                    }
                }
            }
        }
    }

    /// Symbolic scatter + gather over contribution sets: scatter must leave
    /// rank n with block (n+1)%N containing every rank's contribution, and
    /// gather must finish with all blocks complete on all ranks.
    #[test]
    fn symbolic_simulation_completes() {
        for n in 2..=16 {
            // state[rank][block] = set of contributing ranks, as a bitmask.
            let mut state: Vec<Vec<u32>> = (0..n).map(|rank| vec![1u32 << rank; n]).collect();

            for round in 0..n - 1 {
                let mut inbound = vec![(0usize, 0u32); n];
                for rank in 0..n {
                    let x = scatter_schedule(id(rank), n, round).unwrap();
                    inbound[(rank + 1) % n] = (x.send_block, state[rank][x.send_block]);
                }
                for rank in 0..n {
                    let x = scatter_schedule(id(rank), n, round).unwrap();
                    let (block, mask) = inbound[rank];
                    assert_eq!(block, x.recv_block);
                    state[rank][block] |= mask;
                }
            }
            let all = (1u64 << n) as u32 - 1;
            for rank in 0..n {
                let complete = (rank + 1) % n;
                assert_eq!(
                    state[rank][complete], all,
                    "N={n}: rank {rank} did not finish block {complete}"
                );
            }

            for round in 0..n - 1 {
                let mut inbound = vec![(0usize, 0u32); n];
                for rank in 0..n {
                    let x = gather_schedule(id(rank), n, round).unwrap();
                    inbound[(rank + 1) % n] = (x.send_block, state[rank][x.send_block]);
                }
                for rank in 0..n {
                    let x = gather_schedule(id(rank), n, round).unwrap();
                    let (block, mask) = inbound[rank];
                    assert_eq!(block, x.recv_block);
                    state[rank][block] = mask; // gather replaces, never adds
                }
            }
            for rank in 0..n {
                for block in 0..n {
                    assert_eq!(
                        state[rank][block], all,
                        "N={n}: rank {rank} block {block} incomplete after gather"
                    );
                }
            }
        }
    }
}
