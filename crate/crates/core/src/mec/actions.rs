use super::topology::EdgeTopology;
use super::Choice;
use crate::error::{ensure_dim, Error, Result};

pub type JointAction = Vec<Choice>;

/// Choices open to server `i` for a task of `size`, in enumeration order.
pub fn server_options(topology: &EdgeTopology, i: usize, size: f64) -> Vec<Choice> {
    if topology.overflows(i, size) {
        std::iter::once(Choice::Core)
            .chain(topology.neighbors(i).iter().map(|&j| Choice::Neighbor(j)))
            .collect()
    } else {
        vec![Choice::NoOp]
    }
}

/// Checks that `action` is valid for `sizes`: overflowing servers pick the
/// core or one of their neighbours, all others pick no-op.
pub fn validate_action(topology: &EdgeTopology, sizes: &[f64], action: &[Choice]) -> Result<()> {
    ensure_dim("joint action", topology.server_count(), action.len())?;
    ensure_dim("task sizes", topology.server_count(), sizes.len())?;
    for (i, &c) in action.iter().enumerate() {
        let over = topology.overflows(i, sizes[i]);
        let ok = match c {
            Choice::NoOp => !over,
            Choice::Core => over,
            Choice::Neighbor(j) => over && topology.neighbors(i).contains(&j),
        };
        if !ok {
            return Err(Error::InvalidAction(format!(
                "server {} cannot take {c:?} with task size {}",
                i + 1,
                sizes[i]
            )));
        }
    }
    Ok(())
}

fn checked_count(counts: impl Iterator<Item = usize>, ceiling: u128) -> Result<usize> {
    let mut size: u128 = 1;
    for c in counts {
        size = size.saturating_mul(c as u128);
    }
    if size > ceiling {
        return Err(Error::ActionSpaceTooLarge { size, ceiling });
    }
    Ok(size as usize)
}

/// Every valid joint action for `sizes`, ordered by server then choice
/// (core before neighbours, neighbours ascending).
pub fn enumerate_actions(topology: &EdgeTopology, sizes: &[f64], ceiling: u128) -> Result<Vec<JointAction>> {
    ensure_dim("task sizes", topology.server_count(), sizes.len())?;
    let options: Vec<Vec<Choice>> = (0..sizes.len()).map(|i| server_options(topology, i, sizes[i])).collect();
    let total = checked_count(options.iter().map(Vec::len), ceiling)?;
    let mut out = Vec::with_capacity(total);
    let mut digits = vec![0usize; options.len()];
    for _ in 0..total {
        out.push(digits.iter().zip(&options).map(|(&d, o)| o[d]).collect());
        for i in (0..digits.len()).rev() {
            digits[i] += 1;
            if digits[i] < options[i].len() {
                break;
            }
            digits[i] = 0;
        }
    }
    Ok(out)
}

/// Fixed joint-action encoding shared by every slot of a run.
///
/// Servers that may ever overflow get digits `[no-op, core, neighbours…]`,
/// the rest a single no-op digit. Indices are mixed-radix with server 1 most
/// significant, so ascending index order matches [`enumerate_actions`].
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSpace {
    options: Vec<Vec<Choice>>,
    size: usize,
}

impl ActionSpace {
    pub fn new(topology: &EdgeTopology, capable: &[bool], ceiling: u128) -> Result<Self> {
        ensure_dim("capable flags", topology.server_count(), capable.len())?;
        let options: Vec<Vec<Choice>> = capable
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let mut o = vec![Choice::NoOp];
                if c {
                    o.push(Choice::Core);
                    o.extend(topology.neighbors(i).iter().map(|&j| Choice::Neighbor(j)));
                }
                o
            })
            .collect();
        let size = checked_count(options.iter().map(Vec::len), ceiling)?;
        Ok(Self { options, size })
    }

    /// Number of encoded joint actions (the Q-network width).
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn decode(&self, mut index: usize) -> JointAction {
        let mut out = vec![Choice::NoOp; self.options.len()];
        for i in (0..self.options.len()).rev() {
            let r = self.options[i].len();
            out[i] = self.options[i][index % r];
            index /= r;
        }
        out
    }

    pub fn encode(&self, action: &[Choice]) -> Result<usize> {
        ensure_dim("joint action", self.options.len(), action.len())?;
        let mut index = 0;
        for (i, c) in action.iter().enumerate() {
            let digit = self.options[i]
                .iter()
                .position(|o| o == c)
                .ok_or_else(|| Error::InvalidAction(format!("server {} has no encoding for {c:?}", i + 1)))?;
            index = index * self.options[i].len() + digit;
        }
        Ok(index)
    }

    /// Encoded indices of the valid joint actions for `sizes`, ascending.
    pub fn valid_indices(&self, topology: &EdgeTopology, sizes: &[f64]) -> Result<Vec<usize>> {
        ensure_dim("task sizes", self.options.len(), sizes.len())?;
        let per_server: Vec<Vec<usize>> = (0..sizes.len())
            .map(|i| {
                server_options(topology, i, sizes[i])
                    .iter()
                    .map(|c| {
                        self.options[i].iter().position(|o| o == c).ok_or_else(|| {
                            Error::InvalidAction(format!("server {} overflows but was not marked capable", i + 1))
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        let mut indices = vec![0usize];
        for (i, digits) in per_server.iter().enumerate() {
            let r = self.options[i].len();
            indices = indices
                .iter()
                .flat_map(|&base| digits.iter().map(move |&d| base * r + d))
                .collect();
        }
        Ok(indices)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mec::topology::MecConfig;

    #[test]
    fn two_overflowing_servers_with_one_neighbour() {
        let mut cfg = MecConfig::four_server();
        cfg.links = vec![
            crate::mec::topology::Link { a: 1, b: 3, rate: None },
            crate::mec::topology::Link { a: 2, b: 4, rate: None },
        ];
        let t = cfg.topology().unwrap();
        let acts = enumerate_actions(&t, &[20.0, 20.0, 5.0, 5.0], 1_000_000).unwrap();
        assert_eq!(acts.len(), 4);
        assert_eq!(acts[0], vec![Choice::Core, Choice::Core, Choice::NoOp, Choice::NoOp]);
        assert_eq!(acts[1], vec![Choice::Core, Choice::Neighbor(3), Choice::NoOp, Choice::NoOp]);
    }

    #[test]
    fn no_overflow_is_singleton() {
        let t = MecConfig::seven_server().topology().unwrap();
        let acts = enumerate_actions(&t, &[1.0; 7], 1_000_000).unwrap();
        assert_eq!(acts, vec![vec![Choice::NoOp; 7]]);
    }

    #[test]
    fn ceiling_rejects() {
        let t = MecConfig::seven_server().topology().unwrap();
        let big = [100.0; 7];
        let err = enumerate_actions(&t, &big, 100).unwrap_err();
        assert!(matches!(err, Error::ActionSpaceTooLarge { size, ceiling: 100 } if size == 4 * 3 * 5 * 4 * 4 * 3 * 4));
    }

    #[test]
    fn encoding_matches_enumeration_order() {
        let t = MecConfig::seven_server().topology().unwrap();
        let space = ActionSpace::new(&t, &[true, false, true, true, false, false, false], 1_000_000).unwrap();
        assert_eq!(space.size(), 5 * 6 * 5);
        let sizes = [20.0, 3.0, 40.0, 12.0, 4.0, 4.0, 9.0];
        let enumerated = enumerate_actions(&t, &sizes, 1_000_000).unwrap();
        let valid = space.valid_indices(&t, &sizes).unwrap();
        assert_eq!(valid.len(), enumerated.len());
        for (idx, act) in valid.iter().zip(&enumerated) {
            assert_eq!(&space.decode(*idx), act);
            assert_eq!(space.encode(act).unwrap(), *idx);
        }
        assert!(valid.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn uncapable_overflow_is_an_error() {
        let t = MecConfig::seven_server().topology().unwrap();
        let space = ActionSpace::new(&t, &[false; 7], 1_000_000).unwrap();
        assert_eq!(space.size(), 1);
        assert!(space.valid_indices(&t, &[20.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn validation() {
        let t = MecConfig::seven_server().topology().unwrap();
        let sizes = [20.0, 3.0, 3.0, 3.0, 3.0, 3.0, 3.0];
        let mut a = vec![Choice::NoOp; 7];
        assert!(validate_action(&t, &sizes, &a).is_err());
        a[0] = Choice::Neighbor(1);
        assert!(validate_action(&t, &sizes, &a).is_err());
        a[0] = Choice::Neighbor(2);
        assert!(validate_action(&t, &sizes, &a).is_ok());
        a[1] = Choice::Core;
        assert!(validate_action(&t, &sizes, &a).is_err());
    }
}
