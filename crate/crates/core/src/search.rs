//! Driven search for a marked vertex on an `L x L` torus.
//!
//! Every vertex carries the Grover coin except the two marked ones, which
//! carry `-I_4`; the shift is flip-flop. Walkers are pumped into the known
//! (central) marked vertex with equal amplitude `alpha / 2` in each coin
//! state and constant phase, which phase-matches the `omega = 0` eigenspace
//! localised on the marked pair. The unknown target then stands out in the
//! coin-traced intensity map.

use std::collections::BTreeSet;

use nalgebra::DVector;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::coin::{Coin, CoinAssignment};
use crate::error::{Error, Result};
use crate::lattice::{vertex_intensities, Direction, Topology, C64};
use crate::par::{self, Execution};
use crate::spectrum::{eigendecompose, EigenDecomposition, EIGENSPACE_TOL};
use crate::walk::{run_driven_walk, run_driven_walk_with, InjectionSchedule, WalkOperator};

/// Torus coordinates `(x, y)`.
pub type Site = (usize, usize);

/// Eigenspaces with less coupling than this (relative to `|alpha|^2`) count
/// as dark.
const DARK_COUPLING: f64 = 1e-12;

/// `sqrt(N ln N)` rounded to the nearest step, `N = side^2`.
pub fn default_steps(side: usize) -> usize {
    let n = (side * side) as f64;
    (n * n.ln()).sqrt().round() as usize
}

#[derive(Debug, Clone)]
pub struct SearchInstance {
    side: usize,
    central: Site,
    target: Site,
    operator: WalkOperator,
    amplitude: f64,
    steps: usize,
}

fn marked_operator(topology: Topology, marked: &[usize]) -> Result<WalkOperator> {
    let mut coins = CoinAssignment::uniform(topology, Coin::grover4())?;
    for &v in marked {
        coins.assign(v, Coin::minus_identity4())?;
    }
    WalkOperator::build(topology, &coins, true)
}

/// Grover walk with flip-flop shift and `-I_4` on `marked` vertices.
pub fn search_operator(side: usize, marked: &[Site]) -> Result<WalkOperator> {
    let topology = Topology::torus(side, side)?;
    let marked = marked
        .iter()
        .map(|&(x, y)| topology.vertex_at(x, y))
        .collect::<Result<Vec<_>>>()?;
    marked_operator(topology, &marked)
}

pub fn build_search_instance(
    side: usize,
    central: Site,
    target: Site,
    alpha: f64,
) -> Result<SearchInstance> {
    if side < 3 {
        return Err(Error::config(format!(
            "search lattice needs L >= 3, got {side}"
        )));
    }
    if central == target {
        return Err(Error::config(format!(
            "central and target coincide at {central:?}"
        )));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::config(format!(
            "injection amplitude must be > 0, got {alpha}"
        )));
    }
    let operator = search_operator(side, &[central, target])?;
    Ok(SearchInstance {
        side,
        central,
        target,
        operator,
        amplitude: alpha,
        steps: default_steps(side),
    })
}

impl SearchInstance {
    pub fn with_steps(mut self, steps: usize) -> Self {
        self.steps = steps;
        self
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn central(&self) -> Site {
        self.central
    }

    pub fn target(&self) -> Site {
        self.target
    }

    pub fn operator(&self) -> &WalkOperator {
        &self.operator
    }

    pub fn topology(&self) -> &Topology {
        self.operator.topology()
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    fn vertex(&self, site: Site) -> usize {
        site.1 * self.side + site.0
    }

    pub fn central_vertex(&self) -> usize {
        self.vertex(self.central)
    }

    pub fn target_vertex(&self) -> usize {
        self.vertex(self.target)
    }

    /// `alpha / 2` in each of the four coin modes of the central vertex.
    pub fn injection_base(&self) -> DVector<C64> {
        let mut base = DVector::zeros(self.operator.mode_count());
        let v = self.central_vertex();
        for c in 0..4 {
            base[4 * v + c] = C64::new(self.amplitude / 2.0, 0.0);
        }
        base
    }

    /// Constant-phase injection, matched to `omega = 0`.
    pub fn schedule(&self) -> InjectionSchedule {
        InjectionSchedule::new(self.injection_base(), 0.0, self.steps)
    }

    pub fn exclusion_zone(&self) -> BTreeSet<usize> {
        exclusion_zone(self.topology(), self.central_vertex())
    }

    pub fn site_of(&self, vertex: usize) -> Site {
        self.topology().coords(vertex)
    }
}

/// The injection vertex and its four nearest neighbours.
pub fn exclusion_zone(topology: &Topology, central: usize) -> BTreeSet<usize> {
    let mut zone = BTreeSet::from([central]);
    for d in [
        Direction::Left,
        Direction::Right,
        Direction::Up,
        Direction::Down,
    ] {
        zone.insert(topology.neighbor(central, d));
    }
    zone
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Detection {
    pub vertex: usize,
    /// The strongest candidate sits next to the injection site, where
    /// intensity is elevated regardless of the target.
    pub degraded: bool,
}

fn argmax(map: &[f64], mut keep: impl FnMut(usize) -> bool) -> Option<usize> {
    // strict `>` keeps the lowest index on ties
    let mut best: Option<usize> = None;
    for (v, &x) in map.iter().enumerate() {
        if keep(v) && best.is_none_or(|b| x > map[b]) {
            best = Some(v);
        }
    }
    best
}

/// Pick the target from a coin-traced intensity map.
///
/// The argmax outside the exclusion zone wins unless a neighbour of the
/// central vertex is brighter still; then that neighbour is reported with
/// `degraded` set.
pub fn detect(topology: &Topology, map: &[f64], central: usize) -> Detection {
    let zone = exclusion_zone(topology, central);
    let outside = argmax(map, |v| !zone.contains(&v));
    let inside = argmax(map, |v| v != central && zone.contains(&v));
    match (outside, inside) {
        (Some(o), Some(i)) if map[i] > map[o] => Detection {
            vertex: i,
            degraded: true,
        },
        (Some(o), _) => Detection {
            vertex: o,
            degraded: false,
        },
        (None, Some(i)) => Detection {
            vertex: i,
            degraded: true,
        },
        (None, None) => Detection {
            vertex: central,
            degraded: true,
        },
    }
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub detected: Site,
    pub degraded: bool,
    /// Coin-traced intensity at the last step, indexed by flattened vertex.
    pub intensity_map: Vec<f64>,
    /// Intensity on the central and target vertices combined.
    pub marked_intensity: f64,
    /// Mean marked intensity over the median unmarked intensity outside the
    /// exclusion zone.
    pub contrast: f64,
    pub steps_run: usize,
    pub central_series: Vec<f64>,
    pub target_series: Vec<f64>,
}

impl SearchResult {
    pub fn found(&self, instance: &SearchInstance) -> bool {
        self.detected == instance.target()
    }
}

fn median(mut xs: Vec<f64>) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        0.5 * (xs[m - 1] + xs[m])
    }
}

pub fn run_search(instance: &SearchInstance) -> Result<SearchResult> {
    run_search_with(instance, Execution::Parallel)
}

pub fn run_search_with(instance: &SearchInstance, exec: Execution) -> Result<SearchResult> {
    let record = run_driven_walk_with(&instance.operator, &instance.schedule(), None, exec)?;
    let topology = instance.topology();
    let (c, t) = (instance.central_vertex(), instance.target_vertex());
    let map = record
        .vertex_intensity
        .last()
        .cloned()
        .unwrap_or_else(|| vec![0.0; topology.vertex_count()]);
    let detection = detect(topology, &map, c);

    let zone = instance.exclusion_zone();
    let unmarked: Vec<f64> = (0..map.len())
        .filter(|v| !zone.contains(v) && *v != t)
        .map(|v| map[v])
        .collect();
    let marked_mean = 0.5 * (map[c] + map[t]);
    let med = median(unmarked);
    let contrast = if med > 0.0 {
        marked_mean / med
    } else if marked_mean > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };

    Ok(SearchResult {
        detected: topology.coords(detection.vertex),
        degraded: detection.degraded,
        marked_intensity: map[c] + map[t],
        contrast,
        steps_run: instance.steps,
        central_series: record.vertex_intensity.iter().map(|r| r[c]).collect(),
        target_series: record.vertex_intensity.iter().map(|r| r[t]).collect(),
        intensity_map: map,
    })
}

/// Run independent searches, in parallel when `exec` allows.
pub fn run_batch(instances: &[SearchInstance], exec: Execution) -> Result<Vec<SearchResult>> {
    par::map(instances, exec, |inst| {
        run_search_with(inst, Execution::Sequential)
    })
    .into_iter()
    .collect()
}

/// `count` distinct target sites outside the exclusion zone of `central`.
pub fn random_targets<R: Rng + ?Sized>(
    side: usize,
    central: Site,
    count: usize,
    rng: &mut R,
) -> Result<Vec<Site>> {
    let topology = Topology::torus(side, side)?;
    let zone = exclusion_zone(&topology, topology.vertex_at(central.0, central.1)?);
    let mut candidates: Vec<usize> = (0..topology.vertex_count())
        .filter(|v| !zone.contains(v))
        .collect();
    if count > candidates.len() {
        return Err(Error::config(format!(
            "asked for {count} targets, only {} sites lie outside the exclusion zone",
            candidates.len()
        )));
    }
    candidates.shuffle(rng);
    Ok(candidates[..count]
        .iter()
        .map(|&v| topology.coords(v))
        .collect())
}

/// The injection-coupled eigenspace nearest `omega = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalizedMode {
    pub frequency: f64,
    pub multiplicity: usize,
    /// `sum |beta_j|^2` over the eigenspace.
    pub coupling: f64,
    /// Coin-traced weights of the normalised projection of the injection
    /// vector onto the eigenspace.
    pub weights: Vec<f64>,
    /// Weight on the marked vertices, in `[0, 1]`.
    pub fraction: f64,
}

/// Locate the eigenspace with minimal `|omega|` among those the injection
/// couples to, and measure how much of it sits on `marked`.
///
/// Within a degenerate eigenspace only the projection of the injection is
/// basis-independent; it is also what phase-matched driving populates.
pub fn localized_mode(
    e: &EigenDecomposition,
    topology: &Topology,
    base: &DVector<C64>,
    marked: &[usize],
) -> Option<LocalizedMode> {
    let floor = DARK_COUPLING * base.norm_squared().max(f64::MIN_POSITIVE);
    let b = e.to_eigenbasis(base);
    let space = e
        .eigenspaces(EIGENSPACE_TOL)
        .into_iter()
        .map(|r| {
            let coupling: f64 = r.clone().map(|j| b[j].norm_sqr()).sum();
            let w = r
                .clone()
                .map(|j| e.frequencies()[j].abs())
                .fold(f64::MAX, f64::min);
            (r, coupling, w)
        })
        .filter(|(_, coupling, _)| *coupling > floor)
        .min_by(|x, y| x.2.total_cmp(&y.2).then(y.1.total_cmp(&x.1)))?;
    let (range, coupling, _) = space;
    let p = e.project(range.clone(), base);
    let total = p.norm_squared();
    let weights: Vec<f64> = vertex_intensities(topology, p.as_slice())
        .into_iter()
        .map(|w| w / total)
        .collect();
    let fraction = marked
        .iter()
        .map(|&v| weights[v])
        .sum::<f64>()
        .clamp(0.0, 1.0);
    Some(LocalizedMode {
        frequency: e.frequencies()[range.start + (range.len() - 1) / 2],
        multiplicity: range.len(),
        coupling,
        weights,
        fraction,
    })
}

pub fn localized_mode_check(instance: &SearchInstance) -> Result<LocalizedMode> {
    let e = eigendecompose(&instance.operator)?;
    localized_mode_for(instance, &e)
}

pub fn localized_mode_for(
    instance: &SearchInstance,
    e: &EigenDecomposition,
) -> Result<LocalizedMode> {
    localized_mode(
        e,
        instance.topology(),
        &instance.injection_base(),
        &[instance.central_vertex(), instance.target_vertex()],
    )
    .ok_or_else(|| Error::config("injection couples to no eigenmode"))
}

/// Per-step intensity in the matched eigenspace and in the nearest coupled
/// eigenspaces on either side of it.
#[derive(Debug, Clone)]
pub struct ModeSeries {
    pub matched_frequency: f64,
    pub matched: Vec<f64>,
    pub lower_frequency: Option<f64>,
    pub lower: Vec<f64>,
    pub upper_frequency: Option<f64>,
    pub upper: Vec<f64>,
}

pub fn mode_series(instance: &SearchInstance, e: &EigenDecomposition) -> Result<ModeSeries> {
    let base = instance.injection_base();
    let floor = DARK_COUPLING * base.norm_squared();
    let b = e.to_eigenbasis(&base);
    let spaces: Vec<_> = e
        .eigenspaces(EIGENSPACE_TOL)
        .into_iter()
        .filter(|r| r.clone().map(|j| b[j].norm_sqr()).sum::<f64>() > floor)
        .collect();
    let freq = |r: &std::ops::Range<usize>| e.frequencies()[r.start];
    let matched = spaces
        .iter()
        .min_by(|x, y| freq(x).abs().total_cmp(&freq(y).abs()))
        .cloned()
        .ok_or_else(|| Error::config("injection couples to no eigenmode"))?;
    let mf = freq(&matched);
    let lower = spaces
        .iter()
        .filter(|r| freq(r) < mf)
        .max_by(|x, y| freq(x).total_cmp(&freq(y)))
        .cloned();
    let upper = spaces
        .iter()
        .filter(|r| freq(r) > mf)
        .min_by(|x, y| freq(x).total_cmp(&freq(y)))
        .cloned();

    let record = run_driven_walk(&instance.operator, &instance.schedule(), Some(e))?;
    let rows = record.eigenmode_intensity.unwrap_or_default();
    let series = |r: &Option<std::ops::Range<usize>>| -> Vec<f64> {
        match r {
            Some(r) => rows.iter().map(|row| row[r.clone()].iter().sum()).collect(),
            None => vec![0.0; rows.len()],
        }
    };
    Ok(ModeSeries {
        matched_frequency: mf,
        matched: series(&Some(matched.clone())),
        lower_frequency: lower.as_ref().map(freq),
        lower: series(&lower),
        upper_frequency: upper.as_ref().map(freq),
        upper: series(&upper),
    })
}
