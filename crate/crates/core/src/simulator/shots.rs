use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use super::plan::{CircuitPlan, Instruction};
use super::state::{QuantumState, MIN_KEEP_PROBABILITY};
use super::SimError;
use crate::rng::{CounterRng, Domain};

const CHUNK: u64 = 16_384;

/// Counts of meaningful classical strings (every post-selection bit 0).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShotHistogram {
    pub counts: BTreeMap<u128, u64>,
    pub total_shots: u64,
    pub meaningful_shots: u64,
    pub seed: u64,
    pub n_clbits: usize,
    pub postselect_mask: u128,
    /// Shots discarded at each post-selection, in circuit order.
    pub rejected_at: Vec<u64>,
}

#[derive(Serialize)]
struct Metadata<'a> {
    total_shots: u64,
    meaningful_shots: u64,
    seed: u64,
    n_clbits: usize,
    rejected_at: &'a [u64],
}

impl ShotHistogram {
    /// Register contents as text, highest clbit first.
    pub fn bitstring(&self, key: u128) -> String {
        (0..self.n_clbits).rev().map(|b| if (key >> b) & 1 == 1 { '1' } else { '0' }).collect()
    }

    pub fn meaningful_fraction(&self) -> f64 {
        self.meaningful_shots as f64 / self.total_shots as f64
    }

    /// `count(i) / meaningful` for the low `n_data` clbits.
    pub fn data_probabilities(&self, n_data: usize) -> Vec<f64> {
        let mut out = vec![0.0; 1 << n_data];
        if self.meaningful_shots == 0 {
            return out;
        }
        for (&key, &count) in &self.counts {
            if key < (1u128 << n_data) {
                out[key as usize] += count as f64 / self.meaningful_shots as f64;
            }
        }
        out
    }

    /// `√(count(i) / meaningful)`.
    pub fn data_amplitudes(&self, n_data: usize) -> Vec<f64> {
        self.data_probabilities(n_data).into_iter().map(f64::sqrt).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bitstring,count\n");
        for (&key, &count) in &self.counts {
            let _ = writeln!(out, "{},{count}", self.bitstring(key));
        }
        out
    }

    pub fn metadata_json(&self) -> String {
        serde_json::to_string_pretty(&Metadata {
            total_shots: self.total_shots,
            meaningful_shots: self.meaningful_shots,
            seed: self.seed,
            n_clbits: self.n_clbits,
            rejected_at: &self.rejected_at,
        })
        .expect("metadata serializes")
    }
}

/// Everything a shot needs: the keep probability of each post-selection
/// along the kept branch and the joint distribution of the final register.
/// The kept branch is deterministic, so it is simulated once; each shot then
/// draws its own Born outcomes against it.
struct KeptBranch {
    keep: Vec<f64>,
    reachable: bool,
    keys: Vec<u128>,
    cdf: Vec<f64>,
}

fn kept_branch(plan: &CircuitPlan, input: &QuantumState) -> KeptBranch {
    let mut state = input.clone();
    let mut keep = Vec::with_capacity(plan.n_postselects());
    let mut reachable = true;
    for ins in plan.instructions() {
        match ins {
            Instruction::Unitary { matrix, targets } => state.apply_unchecked(&plan.matrices()[*matrix], targets),
            Instruction::MeasurePostselect0 { qubit, .. } => {
                let p0 = state.prob_zero(*qubit).min(1.0);
                keep.push(p0);
                if p0 <= MIN_KEEP_PROBABILITY {
                    reachable = false;
                    break;
                }
                state.project(*qubit, 0).expect("probability checked above");
            }
            Instruction::Measure { .. } => {}
        }
    }
    let finals = plan.final_measurements();
    let mut joint: BTreeMap<u128, f64> = BTreeMap::new();
    if reachable {
        for (index, p) in state.probabilities().into_iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let key = finals
                .iter()
                .map(|&(q, c)| (((index >> q) & 1) as u128) << c)
                .fold(0u128, |a, b| a | b);
            *joint.entry(key).or_insert(0.0) += p;
        }
    }
    let total: f64 = joint.values().sum();
    let mut acc = 0.0;
    let mut keys = Vec::with_capacity(joint.len());
    let mut cdf = Vec::with_capacity(joint.len());
    for (key, p) in joint {
        acc += p / total;
        keys.push(key);
        cdf.push(acc);
    }
    if let Some(last) = cdf.last_mut() {
        *last = f64::INFINITY;
    }
    KeptBranch { keep, reachable, keys, cdf }
}

struct Tally {
    counts: BTreeMap<u128, u64>,
    meaningful: u64,
    rejected_at: Vec<u64>,
}

impl Tally {
    fn new(steps: usize) -> Self {
        Self { counts: BTreeMap::new(), meaningful: 0, rejected_at: vec![0; steps] }
    }

    fn merge(mut self, other: Tally) -> Self {
        for (k, v) in other.counts {
            *self.counts.entry(k).or_insert(0) += v;
        }
        self.meaningful += other.meaningful;
        for (a, b) in self.rejected_at.iter_mut().zip(other.rejected_at) {
            *a += b;
        }
        self
    }
}

/// Samples `shots` runs; shot `k` draws from stream `k` of `seed`, so the
/// histogram does not depend on the number of worker threads.
pub fn run_shots(plan: &CircuitPlan, input: &QuantumState, shots: u64, seed: u64) -> Result<ShotHistogram, SimError> {
    plan.check_input(input)?;
    if shots == 0 {
        return Err(SimError::ZeroShots);
    }
    let branch = kept_branch(plan, input);
    let steps = plan.n_postselects();
    let n_chunks = shots.div_ceil(CHUNK);
    let tally = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut t = Tally::new(steps);
            let end = ((chunk + 1) * CHUNK).min(shots);
            'shot: for k in chunk * CHUNK..end {
                let mut rng = CounterRng::new(seed, Domain::Shots, k);
                for (step, &p0) in branch.keep.iter().enumerate() {
                    if !(rng.uniform() < p0) {
                        t.rejected_at[step] += 1;
                        continue 'shot;
                    }
                }
                if !branch.reachable {
                    continue;
                }
                let u = rng.uniform();
                let pick = branch.cdf.partition_point(|&c| c <= u);
                *t.counts.entry(branch.keys[pick]).or_insert(0) += 1;
                t.meaningful += 1;
            }
            t
        })
        .reduce(|| Tally::new(steps), Tally::merge);
    Ok(ShotHistogram {
        counts: tally.counts,
        total_shots: shots,
        meaningful_shots: tally.meaningful,
        seed,
        n_clbits: plan.n_clbits(),
        postselect_mask: plan.postselect_mask(),
        rejected_at: tally.rejected_at,
    })
}
