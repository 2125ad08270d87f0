//! Service workloads (video, voice, chat) served through a per-slice fluid
//! FIFO queue.
//!
//! Requests arriving in step `t` enter the queue at time `t·Δ`. The queue
//! drains at rate `k` (data per unit time), so at most `k·Δ` is served per
//! step; a request's latency is its fluid completion time minus its arrival
//! time.

use std::collections::{BTreeMap, VecDeque};

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ServiceProfile {
    /// A file split into chunks sent at the start of every cycle.
    Video {
        cycle_steps: u64,
        chunks: u64,
        file_size: f64,
    },
    /// One fixed-size packet per step.
    Voice { packet_size: f64 },
    /// Poisson request count per step with uniform sizes.
    Chat {
        mean_arrivals: f64,
        min_size: f64,
        max_size: f64,
    },
}

impl ServiceProfile {
    pub fn default_video() -> Self {
        ServiceProfile::Video {
            cycle_steps: 10,
            chunks: 4,
            file_size: 8.0,
        }
    }

    pub fn default_voice() -> Self {
        ServiceProfile::Voice { packet_size: 0.6 }
    }

    pub fn default_chat() -> Self {
        ServiceProfile::Chat {
            mean_arrivals: 2.0,
            min_size: 0.05,
            max_size: 0.35,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            ServiceProfile::Video {
                cycle_steps,
                chunks,
                file_size,
            } => cycle_steps >= 2 && chunks >= 1 && chunks < cycle_steps && file_size > 0.0,
            ServiceProfile::Voice { packet_size } => packet_size > 0.0,
            ServiceProfile::Chat {
                mean_arrivals,
                min_size,
                max_size,
            } => mean_arrivals >= 0.0 && min_size > 0.0 && max_size >= min_size,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid service profile {self:?}")))
        }
    }

    pub fn is_video(&self) -> bool {
        matches!(self, ServiceProfile::Video { .. })
    }

    /// Long-run mean data offered per step at unit load.
    pub fn mean_load(&self) -> f64 {
        match *self {
            ServiceProfile::Video {
                cycle_steps,
                file_size,
                ..
            } => file_size / cycle_steps as f64,
            ServiceProfile::Voice { packet_size } => packet_size,
            ServiceProfile::Chat {
                mean_arrivals,
                min_size,
                max_size,
            } => mean_arrivals * (min_size + max_size) / 2.0,
        }
    }
}

/// A freshly generated request.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arrival {
    pub size: f64,
    /// Video cycle the chunk belongs to.
    pub cycle: Option<u64>,
}

/// Requests produced by `profile` at `step`, with sizes (or, for chat, the
/// arrival rate) scaled by `load`.
pub fn generate<R: Rng + ?Sized>(
    profile: &ServiceProfile,
    step: u64,
    load: f64,
    rng: &mut R,
) -> Vec<Arrival> {
    match *profile {
        ServiceProfile::Video {
            cycle_steps,
            chunks,
            file_size,
        } => {
            if step % cycle_steps < chunks {
                vec![Arrival {
                    size: file_size * load / chunks as f64,
                    cycle: Some(step / cycle_steps),
                }]
            } else {
                Vec::new()
            }
        }
        ServiceProfile::Voice { packet_size } => vec![Arrival {
            size: packet_size * load,
            cycle: None,
        }],
        ServiceProfile::Chat {
            mean_arrivals,
            min_size,
            max_size,
        } => {
            let lambda = mean_arrivals * load;
            let count = if lambda > 0.0 {
                Poisson::new(lambda).map(|p| p.sample(rng) as u64).unwrap_or(0)
            } else {
                0
            };
            (0..count)
                .map(|_| Arrival {
                    size: if max_size > min_size {
                        rng.random_range(min_size..max_size)
                    } else {
                        min_size
                    },
                    cycle: None,
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PendingRequest {
    pub id: u64,
    pub arrival_step: u64,
    pub size: f64,
    pub remaining: f64,
    pub cycle: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Completion {
    pub id: u64,
    pub size: f64,
    pub latency: f64,
}

/// Result of serving one step.
#[derive(Debug, Clone, PartialEq)]
pub struct ServeOutcome {
    pub completions: Vec<Completion>,
    /// Mean latency of this step's completions, or the step duration if none.
    pub mean_latency: f64,
    /// Video completion flag after this step.
    pub video_flag: u8,
    pub served: f64,
}

impl ServeOutcome {
    pub fn completed(&self) -> usize {
        self.completions.len()
    }
}

/// FIFO queue for one slice.
#[derive(Debug, Clone)]
pub struct RequestQueue {
    pending: VecDeque<PendingRequest>,
    next_id: u64,
    video: Option<VideoTracker>,
    served_total: f64,
    completed_total: f64,
    arrived_total: f64,
}

#[derive(Debug, Clone)]
struct VideoTracker {
    cycle_steps: u64,
    chunks: u64,
    done: BTreeMap<u64, u64>,
    flag: u8,
}

impl RequestQueue {
    pub fn new(profile: &ServiceProfile) -> Self {
        let video = match *profile {
            ServiceProfile::Video {
                cycle_steps,
                chunks,
                ..
            } => Some(VideoTracker {
                cycle_steps,
                chunks,
                done: BTreeMap::new(),
                flag: 0,
            }),
            _ => None,
        };
        Self {
            pending: VecDeque::new(),
            next_id: 0,
            video,
            served_total: 0.0,
            completed_total: 0.0,
            arrived_total: 0.0,
        }
    }

    pub fn enqueue(&mut self, step: u64, arrivals: &[Arrival]) {
        for a in arrivals {
            if a.size <= 0.0 {
                continue;
            }
            self.pending.push_back(PendingRequest {
                id: self.next_id,
                arrival_step: step,
                size: a.size,
                remaining: a.size,
                cycle: a.cycle,
            });
            self.next_id += 1;
            self.arrived_total += a.size;
        }
    }

    pub fn pending(&self) -> &VecDeque<PendingRequest> {
        &self.pending
    }

    pub fn len(&self) -> usize {
        self.pending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }

    pub fn backlog(&self) -> f64 {
        self.pending.iter().map(|r| r.remaining).sum()
    }

    pub fn served_total(&self) -> f64 {
        self.served_total
    }

    pub fn completed_total(&self) -> f64 {
        self.completed_total
    }

    pub fn arrived_total(&self) -> f64 {
        self.arrived_total
    }

    /// Drains up to `rate · step_duration` in FIFO order during `step`.
    pub fn serve(&mut self, rate: f64, step_duration: f64, step: u64) -> Result<ServeOutcome> {
        if !(rate > 0.0) || !(step_duration > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "serve needs positive rate and duration, got {rate} and {step_duration}"
            )));
        }
        if let Some(v) = self.video.as_mut() {
            if step % v.cycle_steps == 0 {
                v.flag = 0;
            }
        }
        let capacity = rate * step_duration;
        let slack = 1e-12 * capacity;
        let start = step as f64 * step_duration;
        let mut used = 0.0;
        let mut completions = Vec::new();
        while let Some(head) = self.pending.front_mut() {
            let left = capacity - used;
            if left <= 0.0 {
                break;
            }
            if head.remaining <= left + slack {
                used += head.remaining;
                let finish = start + used / rate;
                let latency = (finish - head.arrival_step as f64 * step_duration).max(0.0);
                let done = self.pending.pop_front().expect("head exists");
                self.completed_total += done.size;
                completions.push(Completion {
                    id: done.id,
                    size: done.size,
                    latency,
                });
                if let (Some(v), Some(cycle)) = (self.video.as_mut(), done.cycle) {
                    let count = v.done.entry(cycle).or_insert(0);
                    *count += 1;
                    if *count == v.chunks && cycle == step / v.cycle_steps {
                        v.flag = 1;
                    }
                    let current = step / v.cycle_steps;
                    v.done.retain(|&c, _| c + 2 >= current);
                }
            } else {
                head.remaining -= left;
                used = capacity;
            }
        }
        self.served_total += used;
        let mean_latency = if completions.is_empty() {
            step_duration
        } else {
            completions.iter().map(|c| c.latency).sum::<f64>() / completions.len() as f64
        };
        Ok(ServeOutcome {
            completions,
            mean_latency,
            video_flag: self.video.as_ref().map_or(0, |v| v.flag),
            served: used,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::rng_from_seed;

    #[test]
    fn voice_emits_one_identical_packet_each_step() {
        let mut rng = rng_from_seed(0);
        let p = ServiceProfile::default_voice();
        for step in 0..50 {
            let a = generate(&p, step, 1.0, &mut rng);
            assert_eq!(a.len(), 1);
            assert_eq!(a[0].size, 0.6);
        }
    }

    #[test]
    fn video_is_front_loaded() {
        let mut rng = rng_from_seed(0);
        let p = ServiceProfile::default_video();
        for step in 0..100u64 {
            let a = generate(&p, step, 1.0, &mut rng);
            if step % 10 < 4 {
                assert_eq!(a.len(), 1);
                assert_eq!(a[0].cycle, Some(step / 10));
                assert_eq!(a[0].size, 2.0);
            } else {
                assert!(a.is_empty(), "step {step}");
            }
        }
    }

    /// 10⁵ steps at λ = 2: total count has mean 2·10⁵ and σ = √(2·10⁵) ≈ 447.
    #[test]
    fn chat_counts_follow_poisson_mean() {
        let mut rng = rng_from_seed(31);
        let p = ServiceProfile::default_chat();
        let steps = 100_000u64;
        let mut total = 0usize;
        for step in 0..steps {
            let a = generate(&p, step, 1.0, &mut rng);
            assert!(a.iter().all(|r| (0.05..0.35).contains(&r.size)));
            total += a.len();
        }
        let mean = 2.0 * steps as f64;
        assert!((total as f64 - mean).abs() < 3.0 * mean.sqrt(), "{total}");
    }

    #[test]
    fn profile_validation() {
        assert!(ServiceProfile::Video { cycle_steps: 1, chunks: 1, file_size: 1.0 }.validate().is_err());
        assert!(ServiceProfile::Video { cycle_steps: 4, chunks: 4, file_size: 1.0 }.validate().is_err());
        assert!(ServiceProfile::Voice { packet_size: 0.0 }.validate().is_err());
        assert!(ServiceProfile::Chat { mean_arrivals: 1.0, min_size: 0.5, max_size: 0.1 }.validate().is_err());
        assert!(ServiceProfile::default_chat().validate().is_ok());
    }

    #[test]
    fn exact_fit_completes_in_one_step() {
        let mut q = RequestQueue::new(&ServiceProfile::default_voice());
        q.enqueue(3, &[Arrival { size: 0.75, cycle: None }]);
        let out = q.serve(0.75, 1.0, 3).unwrap();
        assert_eq!(out.completed(), 1);
        assert_eq!(out.mean_latency, 1.0);
        assert!(q.is_empty());
    }

    #[test]
    fn empty_step_reports_step_duration() {
        let mut q = RequestQueue::new(&ServiceProfile::default_voice());
        let out = q.serve(1.0, 0.5, 0).unwrap();
        assert_eq!(out.completed(), 0);
        assert_eq!(out.mean_latency, 0.5);
        assert!(q.serve(0.0, 1.0, 1).is_err());
    }

    #[test]
    fn starved_queue_grows() {
        let p = ServiceProfile::default_voice();
        let mut q = RequestQueue::new(&p);
        let mut rng = rng_from_seed(0);
        let mut last = 0;
        for step in 0..40 {
            q.enqueue(step, &generate(&p, step, 1.0, &mut rng));
            q.serve(0.075, 1.0, step).unwrap();
            assert!(q.len() >= last);
            last = q.len();
        }
        assert!(last > 30);
    }

    #[test]
    fn fifo_and_conservation_with_dyadic_sizes() {
        let mut q = RequestQueue::new(&ServiceProfile::default_chat());
        let mut order = Vec::new();
        let mut served = 0.0;
        for step in 0..64u64 {
            let sizes: Vec<Arrival> = (0..(step % 3))
                .map(|i| Arrival { size: 0.125 * (1 + (step + i) % 7) as f64, cycle: None })
                .collect();
            q.enqueue(step, &sizes);
            let out = q.serve(0.5, 1.0, step).unwrap();
            assert!(out.served <= 0.5);
            if !q.is_empty() {
                assert_eq!(out.served, 0.5);
            }
            served += out.served;
            order.extend(out.completions.iter().map(|c| c.id));
        }
        assert!(order.windows(2).all(|w| w[0] < w[1]));
        let progress: f64 = q.pending().iter().map(|r| r.size - r.remaining).sum();
        assert_eq!(served, q.completed_total() + progress);
        assert_eq!(q.served_total(), served);
    }

    #[test]
    fn video_flag_set_on_full_file_and_reset_each_cycle() {
        let p = ServiceProfile::default_video();
        let mut q = RequestQueue::new(&p);
        let mut rng = rng_from_seed(0);
        let mut flags = Vec::new();
        for step in 0..30 {
            q.enqueue(step, &generate(&p, step, 1.0, &mut rng));
            flags.push(q.serve(4.0, 1.0, step).unwrap().video_flag);
        }
        // 2-unit chunks at rate 4 finish within their step: flag rises on the
        // 4th chunk (cycle position 3) and clears at the next cycle start.
        for (step, f) in flags.iter().enumerate() {
            let want = u8::from(step % 10 >= 3);
            assert_eq!(*f, want, "step {step}");
        }
    }

    #[test]
    fn non_video_flag_stays_zero() {
        let p = ServiceProfile::default_chat();
        let mut q = RequestQueue::new(&p);
        let mut rng = rng_from_seed(8);
        for step in 0..50 {
            q.enqueue(step, &generate(&p, step, 1.0, &mut rng));
            assert_eq!(q.serve(1.0, 1.0, step).unwrap().video_flag, 0);
        }
    }
}
