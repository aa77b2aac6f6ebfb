use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

/// One slot's joint action: an XOR code on the cellular link plus one XOR
/// code per scheduled D2D transmitter. Packet and user indices are 0-based.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransmissionPlan {
    pub bs_code: BTreeSet<usize>,
    pub d2d_codes: BTreeMap<usize, BTreeSet<usize>>,
}

impl TransmissionPlan {
    pub fn idle() -> Self {
        Self::default()
    }

    pub fn cellular<I: IntoIterator<Item = usize>>(packets: I) -> Self {
        Self {
            bs_code: packets.into_iter().collect(),
            d2d_codes: BTreeMap::new(),
        }
    }

    pub fn with_d2d<I: IntoIterator<Item = usize>>(
        mut self,
        transmitter: usize,
        packets: I,
    ) -> Self {
        self.d2d_codes
            .entry(transmitter)
            .or_default()
            .extend(packets);
        self
    }

    pub fn is_idle(&self) -> bool {
        self.bs_code.is_empty() && self.d2d_codes.values().all(BTreeSet::is_empty)
    }

    /// Total number of source packets carried across all codes.
    pub fn packet_count(&self) -> usize {
        self.bs_code.len() + self.d2d_codes.values().map(BTreeSet::len).sum::<usize>()
    }
}

pub(crate) fn fmt_code(code: &BTreeSet<usize>) -> String {
    if code.is_empty() {
        return "-".to_string();
    }
    code.iter()
        .map(|p| format!("p{}", p + 1))
        .collect::<Vec<_>>()
        .join("+")
}

impl fmt::Display for TransmissionPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BS {}", fmt_code(&self.bs_code))?;
        for (tx, code) in &self.d2d_codes {
            write!(f, " | UE{} {}", tx + 1, fmt_code(code))?;
        }
        Ok(())
    }
}
