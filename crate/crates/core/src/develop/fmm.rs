//! Fast marching for `|∇T| = 1 / r` on the resist grid.
//!
//! First-order upwind stencil with separate vertical and lateral spacing.
//! Along each axis the slowness is averaged between the node being updated
//! and its upwind neighbour, so a purely vertical march reproduces the
//! trapezoid integral of [`super::develop_vertical`].

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{ResistError, Result};
use crate::grids::{Field2D, Field3D};

use super::{check_rate, check_t_dev, depth_map};

/// A grid node with a prescribed arrival time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Seed {
    pub k: usize,
    pub x: usize,
    pub y: usize,
    pub time: f64,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum State {
    Far,
    Trial,
    Known,
}

#[derive(Clone, Copy, PartialEq)]
struct Candidate {
    time: f64,
    node: u32,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed: BinaryHeap is a max-heap
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Grid {
    nz: usize,
    width: usize,
    height: usize,
    spacing: [f64; 3],
}

impl Grid {
    #[inline]
    fn coords(&self, node: usize) -> [usize; 3] {
        let x = node % self.width;
        let rest = node / self.width;
        [rest / self.height, rest % self.height, x]
    }

    #[inline]
    fn strides(&self) -> [usize; 3] {
        [self.width * self.height, self.width, 1]
    }

    #[inline]
    fn extents(&self) -> [usize; 3] {
        [self.nz, self.height, self.width]
    }

    fn neighbours(&self, node: usize) -> impl Iterator<Item = usize> {
        let c = self.coords(node);
        let s = self.strides();
        let e = self.extents();
        (0..3).flat_map(move |axis| {
            let lo = (c[axis] > 0).then(|| node - s[axis]);
            let hi = (c[axis] + 1 < e[axis]).then(|| node + s[axis]);
            lo.into_iter().chain(hi)
        })
    }
}

pub(crate) struct March {
    pub times: Vec<f64>,
    /// Nodes in the order they were frozen.
    #[cfg_attr(not(test), allow(dead_code))]
    pub accepted: Vec<u32>,
}

/// Upwind solve of `sum_i ((T - a_i) / (h_i s_i))^2 = 1` over the axes with
/// accepted neighbours, dropping axes whose neighbour is too late to
/// contribute.
fn local_update(grid: &Grid, times: &[f64], state: &[State], slowness: &[f64], node: usize) -> f64 {
    let c = grid.coords(node);
    let s = grid.strides();
    let e = grid.extents();
    let mut terms: [(f64, f64); 3] = [(f64::INFINITY, 0.0); 3];
    let mut count = 0;
    for axis in 0..3 {
        let mut best: Option<usize> = None;
        let below = (c[axis] > 0).then(|| node - s[axis]);
        let above = (c[axis] + 1 < e[axis]).then(|| node + s[axis]);
        for nb in below.into_iter().chain(above) {
            if state[nb] == State::Known && best.is_none_or(|b| times[nb] < times[b]) {
                best = Some(nb);
            }
        }
        if let Some(nb) = best {
            let mean_slowness = 0.5 * (slowness[node] + slowness[nb]);
            let scale = grid.spacing[axis] * mean_slowness;
            terms[count] = (times[nb], 1.0 / (scale * scale));
            count += 1;
        }
    }
    let terms = &mut terms[..count];
    terms.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut t = terms[0].0 + 1.0 / terms[0].1.sqrt();
    let (mut sw, mut swa, mut swaa) = (terms[0].1, terms[0].1 * terms[0].0, terms[0].1 * terms[0].0 * terms[0].0);
    for &(a, w) in &terms[1..] {
        if t <= a {
            break;
        }
        sw += w;
        swa += w * a;
        swaa += w * a * a;
        let disc = swa * swa - sw * (swaa - 1.0);
        if disc < 0.0 {
            break;
        }
        t = (swa + disc.sqrt()) / sw;
    }
    t
}

pub(crate) fn march(rate: &Field3D, seeds: &[Seed]) -> Result<March> {
    check_rate(rate)?;
    if seeds.is_empty() {
        return Err(ResistError::invalid("fast marching needs at least one seed"));
    }
    let grid = Grid {
        nz: rate.nz(),
        width: rate.width(),
        height: rate.height(),
        spacing: [rate.dz_nm(), rate.pitch_nm(), rate.pitch_nm()],
    };
    let total = rate.values().len();
    if total > u32::MAX as usize {
        return Err(ResistError::invalid("grid too large for fast marching"));
    }
    let slowness: Vec<f64> = rate.values().iter().map(|r| 1.0 / r).collect();
    let mut times = vec![f64::INFINITY; total];
    let mut state = vec![State::Far; total];
    let mut heap = BinaryHeap::new();
    let mut accepted = Vec::with_capacity(total);

    for seed in seeds {
        if seed.k >= grid.nz || seed.x >= grid.width || seed.y >= grid.height {
            return Err(ResistError::invalid(format!(
                "seed ({}, {}, {}) outside the grid",
                seed.k, seed.x, seed.y
            )));
        }
        if !(seed.time.is_finite() && seed.time >= 0.0) {
            return Err(ResistError::invalid(format!("seed time {} invalid", seed.time)));
        }
        let node = rate.index(seed.k, seed.x, seed.y);
        if seed.time < times[node] {
            times[node] = seed.time;
            state[node] = State::Trial;
            heap.push(Candidate {
                time: seed.time,
                node: node as u32,
            });
        }
    }

    while let Some(Candidate { time, node }) = heap.pop() {
        let node = node as usize;
        if state[node] == State::Known || time > times[node] {
            continue;
        }
        state[node] = State::Known;
        accepted.push(node as u32);
        for nb in grid.neighbours(node) {
            if state[nb] == State::Known {
                continue;
            }
            let t = local_update(&grid, &times, &state, &slowness, nb);
            if t < times[nb] {
                times[nb] = t;
                state[nb] = State::Trial;
                heap.push(Candidate {
                    time: t,
                    node: nb as u32,
                });
            }
        }
    }

    Ok(March { times, accepted })
}

/// Arrival times from arbitrary seed nodes.
pub fn fast_march(rate: &Field3D, seeds: &[Seed]) -> Result<Field3D> {
    let March { times, .. } = march(rate, seeds)?;
    Field3D::new(
        rate.nz(),
        rate.width(),
        rate.height(),
        rate.pitch_nm(),
        rate.thickness_nm(),
        times,
    )
}

/// Develops from the whole top surface at `t = 0`; returns the arrival-time
/// volume and the normalised depth of the `T = t_dev` envelope.
pub fn develop_fmm(rate: &Field3D, t_dev: f64) -> Result<(Field3D, Field2D)> {
    check_t_dev(t_dev)?;
    let seeds: Vec<Seed> = (0..rate.height())
        .flat_map(|y| {
            (0..rate.width()).map(move |x| Seed {
                k: 0,
                x,
                y,
                time: 0.0,
            })
        })
        .collect();
    let times = fast_march(rate, &seeds)?;
    let depth = depth_map(&times, t_dev)?;
    Ok((times, depth))
}
