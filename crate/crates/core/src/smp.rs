//! One round of a simultaneous-message-passing protocol.
//!
//! Every player holds one sample, passes it through its assigned channel
//! using a private stream derived from `(master_seed, player index)`, and
//! the referee receives the messages in player order.

use std::ops::Range;

use rayon::prelude::*;

use crate::channel::{Channel, Message};
use crate::error::{Error, Result};
use crate::rng::{self, tag, StreamRng};

/// Shared randomness visible to every player and the referee.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PublicSeed(pub u64);

impl PublicSeed {
    /// The shared stream. Identical seeds give identical draws everywhere.
    pub fn stream(&self) -> StreamRng {
        rng::stream(self.0, tag::PUBLIC)
    }

    /// Independent shared sub-stream `index`, for protocols that need
    /// several unrelated public draws.
    pub fn substream(&self, index: u64) -> StreamRng {
        rng::stream(rng::derive_seed(self.0, tag::PUBLIC), index)
    }
}

/// A contiguous split of players into groups; players past the last group
/// are dropped and counted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupAssignment {
    ranges: Vec<Range<usize>>,
    players: usize,
}

impl GroupAssignment {
    /// `groups` groups of `⌊n/groups⌋` players each.
    pub fn equal(n: usize, groups: usize) -> Result<Self> {
        if groups == 0 || groups > n {
            return Err(Error::InfeasiblePartition { players: n, groups });
        }
        let size = n / groups;
        Ok(Self {
            ranges: (0..groups).map(|g| g * size..(g + 1) * size).collect(),
            players: n,
        })
    }

    /// Consecutive groups with the given sizes.
    pub fn with_sizes(n: usize, sizes: &[usize]) -> Result<Self> {
        let total: usize = sizes.iter().sum();
        if sizes.is_empty() || total > n {
            return Err(Error::InfeasiblePartition {
                players: n,
                groups: sizes.len(),
            });
        }
        let mut start = 0;
        let ranges = sizes
            .iter()
            .map(|&s| {
                let r = start..start + s;
                start += s;
                r
            })
            .collect();
        Ok(Self { ranges, players: n })
    }

    pub fn groups(&self) -> usize {
        self.ranges.len()
    }

    pub fn range(&self, group: usize) -> Range<usize> {
        self.ranges[group].clone()
    }

    pub fn ranges(&self) -> &[Range<usize>] {
        &self.ranges
    }

    /// Players that belong to some group.
    pub fn used(&self) -> usize {
        self.ranges.last().map_or(0, |r| r.end)
    }

    pub fn dropped(&self) -> usize {
        self.players - self.used()
    }

    /// Group of each used player.
    pub fn group_of_players(&self) -> Vec<usize> {
        self.ranges
            .iter()
            .enumerate()
            .flat_map(|(g, r)| std::iter::repeat_n(g, r.len()))
            .collect()
    }
}

/// `partition_players(n, groups)`: equal contiguous groups.
pub fn partition_players(n: usize, groups: usize) -> Result<GroupAssignment> {
    GroupAssignment::equal(n, groups)
}

/// Which channel each player uses.
pub struct ChannelPlan<'a> {
    channels: Vec<Box<dyn Channel + 'a>>,
    of_player: Vec<usize>,
}

impl<'a> ChannelPlan<'a> {
    /// Every player uses the same channel.
    pub fn shared(channel: Box<dyn Channel + 'a>, players: usize) -> Self {
        Self {
            channels: vec![channel],
            of_player: vec![0; players],
        }
    }

    /// Group `g` of `groups` uses `channels[g]`; dropped players get none
    /// and must not be simulated.
    pub fn grouped(channels: Vec<Box<dyn Channel + 'a>>, groups: &GroupAssignment) -> Result<Self> {
        if channels.len() != groups.groups() {
            return Err(Error::LengthMismatch {
                expected: groups.groups(),
                actual: channels.len(),
            });
        }
        Ok(Self {
            channels,
            of_player: groups.group_of_players(),
        })
    }

    pub fn players(&self) -> usize {
        self.of_player.len()
    }

    pub fn channel_of(&self, player: usize) -> &dyn Channel {
        self.channels[self.of_player[player]].as_ref()
    }
}

/// What the referee sees.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transcript {
    pub messages: Vec<Message>,
    pub public_seed: Option<PublicSeed>,
    /// Channel index (group) of each player.
    pub group_assignment: Vec<usize>,
}

impl Transcript {
    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    /// One-bit messages of the players in `range`; `None` if any of them
    /// sent a vector.
    pub fn bits(&self, range: Range<usize>) -> Option<Vec<bool>> {
        self.messages[range].iter().map(Message::as_bit).collect()
    }
}

fn simulate(plan: &ChannelPlan<'_>, samples: &[usize], master_seed: u64) -> Result<Vec<Message>> {
    if plan.players() != samples.len() {
        return Err(Error::LengthMismatch {
            expected: plan.players(),
            actual: samples.len(),
        });
    }
    let player_seed = rng::derive_seed(master_seed, tag::PROTOCOL);
    Ok(samples
        .par_iter()
        .enumerate()
        .map(|(i, &x)| plan.channel_of(i).sample(x, &mut rng::stream(player_seed, i as u64)))
        .collect())
}

/// Each player applies its channel with private randomness only.
pub fn run_private_coin(plan: &ChannelPlan<'_>, samples: &[usize], master_seed: u64) -> Result<Transcript> {
    Ok(Transcript {
        messages: simulate(plan, samples, master_seed)?,
        public_seed: None,
        group_assignment: plan.of_player.clone(),
    })
}

/// Channels are chosen by `setup` as a function of the public seed; the
/// players then respond with private randomness as in the private-coin case.
pub fn run_public_coin<'a, F>(
    setup: F,
    samples: &[usize],
    public_seed: PublicSeed,
    master_seed: u64,
) -> Result<Transcript>
where
    F: FnOnce(PublicSeed) -> Result<ChannelPlan<'a>>,
{
    let plan = setup(public_seed)?;
    Ok(Transcript {
        messages: simulate(&plan, samples, master_seed)?,
        public_seed: Some(public_seed),
        group_assignment: plan.of_player,
    })
}
