//! Replica-count actuation: clamping, creation rate limit, namespace quota.

/// What one actuation pass does to a deployment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScalePlan {
    /// Target after clamping to `[min, max]`.
    pub actuated: u32,
    pub create: u32,
    pub terminate: u32,
    /// Creation stopped short because the quota would have been exceeded.
    pub quota_clamped: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct ScaleBounds {
    pub min_replicas: u32,
    pub max_replicas: u32,
    /// Max pods created per sync; `None` is unlimited.
    pub rate_limit: Option<u32>,
}

#[derive(Debug, Clone, Copy)]
pub struct QuotaRoom {
    /// Σ requests of every pod in the namespace, including terminating ones.
    pub used_mcores: f64,
    pub cap_mcores: f64,
    pub request_mcores: f64,
}

impl QuotaRoom {
    pub fn pods_that_fit(&self) -> u32 {
        if self.request_mcores <= 0.0 {
            return u32::MAX;
        }
        let room = (self.cap_mcores - self.used_mcores).max(0.0);
        // tolerate float noise when the ledger lands exactly on the cap
        ((room + 1e-9) / self.request_mcores)
            .floor()
            .min(u32::MAX as f64) as u32
    }
}

/// Plan moving from `live` non-terminating pods toward `target`.
pub fn scale_to(
    target: u32,
    live: u32,
    bounds: ScaleBounds,
    quota: Option<QuotaRoom>,
) -> ScalePlan {
    let actuated = target.clamp(bounds.min_replicas, bounds.max_replicas);
    let mut plan = ScalePlan {
        actuated,
        create: 0,
        terminate: 0,
        quota_clamped: false,
    };
    if actuated > live {
        let mut n = actuated - live;
        if let Some(r) = bounds.rate_limit {
            n = n.min(r);
        }
        if let Some(q) = quota {
            let fit = q.pods_that_fit();
            if fit < n {
                n = fit;
                plan.quota_clamped = true;
            }
        }
        plan.create = n;
    } else {
        plan.terminate = live - actuated;
    }
    plan
}
