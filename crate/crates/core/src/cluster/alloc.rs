//! Per-node CPU sharing under contention.

/// What one pod asks of its node for the current interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpuClaim {
    pub demand_mcores: f64,
    pub request_mcores: f64,
    /// `None` for an unbounded container.
    pub limit_mcores: Option<f64>,
}

/// Pods with a zero request still get a minimal scheduling weight.
pub const MIN_SHARE_WEIGHT: f64 = 1.0;

impl CpuClaim {
    pub fn cap(&self) -> f64 {
        let d = self.demand_mcores.max(0.0);
        match self.limit_mcores {
            Some(l) => d.min(l.max(0.0)),
            None => d,
        }
    }

    pub fn weight(&self) -> f64 {
        self.request_mcores.max(MIN_SHARE_WEIGHT)
    }
}

/// Weighted max-min fair share of `capacity` among `claims`.
///
/// Each pod is capped at `min(demand, limit)`. Without contention every pod
/// receives its cap. Otherwise capacity is split in proportion to requests;
/// pods whose cap is at or below their share are frozen at the cap and the
/// remainder is redistributed until no further pod freezes.
pub fn allocate_cpu(capacity: f64, claims: &[CpuClaim]) -> Vec<f64> {
    let capacity = capacity.max(0.0);
    let caps: Vec<f64> = claims.iter().map(CpuClaim::cap).collect();
    if caps.iter().sum::<f64>() <= capacity {
        return caps;
    }
    let weights: Vec<f64> = claims.iter().map(CpuClaim::weight).collect();
    let mut frozen = vec![false; claims.len()];
    loop {
        let (remaining, wsum) = remaining_and_weight(capacity, &caps, &weights, &frozen);
        if wsum <= 0.0 {
            break;
        }
        let level = remaining / wsum;
        let mut changed = false;
        for i in 0..claims.len() {
            if !frozen[i] && caps[i] <= level * weights[i] {
                frozen[i] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    shares_for(capacity, &caps, &weights, &frozen)
}

pub(crate) fn remaining_and_weight(
    capacity: f64,
    caps: &[f64],
    weights: &[f64],
    frozen: &[bool],
) -> (f64, f64) {
    let mut remaining = capacity;
    let mut wsum = 0.0;
    for i in 0..caps.len() {
        if frozen[i] {
            remaining -= caps[i];
        } else {
            wsum += weights[i];
        }
    }
    (remaining.max(0.0), wsum)
}

/// Allocation for a given frozen set: frozen pods get their cap, the rest
/// split what is left by weight.
pub(crate) fn shares_for(
    capacity: f64,
    caps: &[f64],
    weights: &[f64],
    frozen: &[bool],
) -> Vec<f64> {
    let (remaining, wsum) = remaining_and_weight(capacity, caps, weights, frozen);
    (0..caps.len())
        .map(|i| {
            if frozen[i] {
                caps[i]
            } else if wsum > 0.0 {
                remaining * weights[i] / wsum
            } else {
                0.0
            }
        })
        .collect()
}
