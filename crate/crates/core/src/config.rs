//! Experiment files.
//!
//! An experiment is a TOML document. A plain walk names its `[topology]`,
//! `[coins]` and `[injection]`; a search experiment names only `[search]`
//! and gets the Grover lattice, marked coins and central injection built
//! for it. Every problem is reported with the dotted path of the offending
//! field.
//!
//! ```toml
//! name = "line5_matched"
//! steps = 50
//!
//! [topology]
//! kind = "line"
//! n = 5
//! boundary = "hard"
//!
//! [coins]
//! default = "hadamard"
//! overrides = [{ vertex = 0, coin = "pauli_x" }, { vertex = 4, coin = "pauli_x" }]
//!
//! [injection]
//! amplitude = 0.1
//! sites = [{ vertex = 2, coin = "R" }]
//! phase = { mode = "matched", index = 1 }
//! ```
//!
//! Inline coin matrices are row-major lists of `re, im` pairs, so a 2x2
//! matrix row is `[re00, im00, re01, im01]`.

use std::fmt;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coin::{Coin, CoinAssignment};
use crate::error::{Error, Result};
use crate::lattice::{mode_index, Boundary, Direction, Topology, C64};
use crate::search::{self, SearchInstance, Site};
use crate::spectrum::EigenDecomposition;
use crate::walk::{InjectionSchedule, WalkOperator};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topology: Option<TopologySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coins: Option<CoinSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub injection: Option<InjectionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchSpec>,
    #[serde(default)]
    pub outputs: OutputSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TopologyKind {
    Line,
    Torus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySpec {
    pub kind: TopologyKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<Boundary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nx: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ny: Option<usize>,
    #[serde(default)]
    pub flip_flop: bool,
}

/// A vertex as a line index or torus coordinates `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VertexSpec {
    Index(usize),
    Coords([usize; 2]),
}

impl fmt::Display for VertexSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VertexSpec::Index(i) => write!(f, "{i}"),
            VertexSpec::Coords([x, y]) => write!(f, "[{x}, {y}]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoinSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default_matrix: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub overrides: Vec<CoinOverride>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoinOverride {
    pub vertex: VertexSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InjectionSpec {
    #[serde(default = "one")]
    pub amplitude: f64,
    pub sites: Vec<SiteSpec>,
    #[serde(default)]
    pub phase: PhaseSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteSpec {
    pub vertex: VertexSpec,
    pub coin: String,
    /// Complex weight `[re, im]` multiplying `amplitude`.
    #[serde(default = "unit_weight")]
    pub weight: [f64; 2],
}

/// How the per-step injection phase `phi` is chosen.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase", deny_unknown_fields)]
pub enum PhaseSpec {
    /// `phi = 0`.
    #[default]
    Constant,
    Explicit {
        phi: f64,
    },
    /// `phi = omega_index`, eigenfrequencies sorted ascending.
    Matched {
        index: usize,
    },
    /// `phi` halfway between two eigenfrequencies.
    Midway {
        between: [usize; 2],
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSpec {
    pub side: usize,
    pub central: [usize; 2],
    /// Ground truth. When absent the target is drawn from `seed` and the
    /// search reports a detection without judging it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<[usize; 2]>,
    #[serde(default = "one")]
    pub amplitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "yes")]
    pub physical: bool,
    #[serde(default)]
    pub eigenmode: bool,
    #[serde(default = "yes")]
    pub search: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            physical: true,
            eigenmode: false,
            search: true,
        }
    }
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

fn unit_weight() -> [f64; 2] {
    [1.0, 0.0]
}

/// Collects `path: message` diagnostics.
#[derive(Default)]
struct Issues(Vec<String>);

impl Issues {
    fn push(&mut self, path: impl fmt::Display, msg: impl fmt::Display) {
        self.0.push(format!("{path}: {msg}"));
    }

    fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn finish(self) -> Result<()> {
        if self.0.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(self.0.join("\n")))
        }
    }
}

fn parse_matrix(rows: &[Vec<f64>], dim: usize, path: &str, issues: &mut Issues) -> Option<Coin> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != 2 * dim) {
        issues.push(
            path,
            format!("expected {dim} rows of {} numbers (re, im pairs)", 2 * dim),
        );
        return None;
    }
    let m = DMatrix::from_fn(dim, dim, |i, j| {
        C64::new(rows[i][2 * j], rows[i][2 * j + 1])
    });
    match Coin::new(m) {
        Ok(c) => Some(c),
        Err(e) => {
            issues.push(path, e);
            None
        }
    }
}

fn named_coin(name: &str, dim: usize, path: &str, issues: &mut Issues) -> Option<Coin> {
    match Coin::named(name) {
        Some(c) if c.dim() == dim => Some(c),
        Some(c) => {
            issues.push(
                path,
                format!(
                    "coin `{name}` is {}x{0}, topology needs {dim}x{dim}",
                    c.dim()
                ),
            );
            None
        }
        None => {
            issues.push(
                path,
                format!(
                    "unknown coin `{name}` (expected hadamard, pauli_x, grover4, minus_identity4, identity2, identity4)"
                ),
            );
            None
        }
    }
}

fn resolve_vertex(t: &Topology, v: VertexSpec, path: &str, issues: &mut Issues) -> Option<usize> {
    let r = match (t, v) {
        (Topology::Line { .. }, VertexSpec::Index(i)) => t.vertex_at(i, 0),
        (Topology::Torus { .. }, VertexSpec::Coords([x, y])) => t.vertex_at(x, y),
        (Topology::Line { .. }, VertexSpec::Coords(_)) => {
            Err(Error::index("a line vertex is a single index"))
        }
        (Topology::Torus { .. }, VertexSpec::Index(_)) => {
            Err(Error::index("a torus vertex is written [x, y]"))
        }
    };
    match r {
        Ok(v) => Some(v),
        Err(e) => {
            issues.push(path, e);
            None
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(text).map_err(|e| Error::Config(e.to_string()))?;
        let config: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::Config(format!("{path}: {}", e.into_inner().message().trim()))
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    pub fn is_search(&self) -> bool {
        self.search.is_some()
    }

    /// Schema-level checks that need no linear algebra.
    pub fn validate(&self) -> Result<()> {
        let mut issues = Issues::default();
        if let Some(s) = &self.search {
            for (field, present) in [
                ("topology", self.topology.is_some()),
                ("coins", self.coins.is_some()),
                ("injection", self.injection.is_some()),
            ] {
                if present {
                    issues.push(field, "not allowed in a search experiment");
                }
            }
            if s.side < 3 {
                issues.push("search.side", format!("must be >= 3, got {}", s.side));
            }
            for (field, site) in [
                ("search.central", Some(s.central)),
                ("search.target", s.target),
            ] {
                if let Some([x, y]) = site {
                    if x >= s.side || y >= s.side {
                        issues.push(
                            field,
                            format!("[{x}, {y}] outside the {0}x{0} lattice", s.side),
                        );
                    }
                }
            }
            if s.target == Some(s.central) {
                issues.push("search.target", "must differ from search.central");
            }
            if !(s.amplitude > 0.0 && s.amplitude.is_finite()) {
                issues.push(
                    "search.amplitude",
                    format!("must be > 0, got {}", s.amplitude),
                );
            }
            return issues.finish();
        }

        if self.steps.is_none() {
            issues.push("steps", "required for walk experiments");
        }
        let topology = match &self.topology {
            None => {
                issues.push("topology", "missing section");
                None
            }
            Some(t) => self.check_topology(t, &mut issues),
        };
        match &self.coins {
            None => issues.push("coins", "missing section"),
            Some(c) => {
                if c.default.is_some() && c.default_matrix.is_some() {
                    issues.push(
                        "coins",
                        "give either `default` or `default_matrix`, not both",
                    );
                }
                for (i, o) in c.overrides.iter().enumerate() {
                    if o.coin.is_some() == o.matrix.is_some() {
                        issues.push(
                            format!("coins.overrides[{i}]"),
                            "give exactly one of `coin` or `matrix`",
                        );
                    }
                }
            }
        }
        match &self.injection {
            None => issues.push("injection", "missing section"),
            Some(inj) => {
                if !inj.amplitude.is_finite() || inj.amplitude < 0.0 {
                    issues.push(
                        "injection.amplitude",
                        format!("must be finite and >= 0, got {}", inj.amplitude),
                    );
                }
                if let Some(t) = topology {
                    for (i, s) in inj.sites.iter().enumerate() {
                        let path = format!("injection.sites[{i}]");
                        resolve_vertex(&t, s.vertex, &format!("{path}.vertex"), &mut issues);
                        match Direction::from_label(&s.coin) {
                            Some(d) if t.coin_index(d).is_some() => {}
                            _ => issues.push(
                                format!("{path}.coin"),
                                format!("`{}` is not a coin label of {t}", s.coin),
                            ),
                        }
                    }
                    let n = t.mode_count();
                    match inj.phase {
                        PhaseSpec::Matched { index } if index >= n => issues.push(
                            "injection.phase.index",
                            format!("mode {index} does not exist, {t} has {n} modes"),
                        ),
                        PhaseSpec::Midway { between } => {
                            for (k, &j) in between.iter().enumerate() {
                                if j >= n {
                                    issues.push(
                                        format!("injection.phase.between[{k}]"),
                                        format!("mode {j} does not exist, {t} has {n} modes"),
                                    );
                                }
                            }
                        }
                        PhaseSpec::Explicit { phi } if !phi.is_finite() => {
                            issues.push("injection.phase.phi", "must be finite")
                        }
                        _ => {}
                    }
                }
            }
        }
        issues.finish()
    }

    fn check_topology(&self, t: &TopologySpec, issues: &mut Issues) -> Option<Topology> {
        let built = match t.kind {
            TopologyKind::Line => {
                for (f, p) in [("nx", t.nx.is_some()), ("ny", t.ny.is_some())] {
                    if p {
                        issues.push(format!("topology.{f}"), "not used by a line (use `n`)");
                    }
                }
                match t.n {
                    None => {
                        issues.push("topology.n", "required for a line");
                        return None;
                    }
                    Some(n) => Topology::line(n, t.boundary.unwrap_or(Boundary::Cyclic))
                        .map_err(|_| ("topology.n", format!("must be >= 2, got {n}"))),
                }
            }
            TopologyKind::Torus => {
                if t.n.is_some() {
                    issues.push("topology.n", "not used by a torus (use `nx`, `ny`)");
                }
                if t.boundary.is_some() {
                    issues.push("topology.boundary", "a torus is always periodic");
                }
                match (t.nx, t.ny) {
                    (Some(nx), Some(ny)) => Topology::torus(nx, ny)
                        .map_err(|_| ("topology", format!("nx, ny must be >= 2, got {nx}x{ny}"))),
                    _ => {
                        issues.push("topology", "a torus needs both `nx` and `ny`");
                        return None;
                    }
                }
            }
        };
        match built {
            Ok(t) => Some(t),
            Err((path, msg)) => {
                issues.push(path, msg);
                None
            }
        }
    }

    /// Build operators and injection vectors. Randomised target placement
    /// is drawn here, from `seed`.
    pub fn resolve(&self, fallback_name: &str) -> Result<Experiment> {
        self.validate()?;
        let name = self
            .name
            .clone()
            .unwrap_or_else(|| fallback_name.to_string());
        if let Some(s) = &self.search {
            let central: Site = (s.central[0], s.central[1]);
            let target: Site = match s.target {
                Some([x, y]) => (x, y),
                None => {
                    let mut rng = ChaCha8Rng::seed_from_u64(self.seed.unwrap_or(0));
                    search::random_targets(s.side, central, 1, &mut rng)?[0]
                }
            };
            let mut inst = search::build_search_instance(s.side, central, target, s.amplitude)?;
            if let Some(steps) = self.steps {
                inst = inst.with_steps(steps);
            }
            return Ok(Experiment {
                name,
                config: self.clone(),
                operator: inst.operator().clone(),
                base: inst.injection_base(),
                phase: PhaseSpec::Constant,
                steps: inst.steps(),
                target_known: s.target.is_some(),
                search: Some(inst),
            });
        }

        let mut issues = Issues::default();
        let t = self
            .check_topology(self.topology.as_ref().expect("validated"), &mut issues)
            .expect("validated");
        let spec = self.coins.as_ref().expect("validated");
        let dim = t.coin_dim();
        let default = match (&spec.default, &spec.default_matrix) {
            (Some(name), None) => named_coin(name, dim, "coins.default", &mut issues),
            (None, Some(m)) => parse_matrix(m, dim, "coins.default_matrix", &mut issues),
            _ => None,
        };
        let mut coins = CoinAssignment::new(t);
        if let Some(c) = default {
            for v in 0..t.vertex_count() {
                coins.assign(v, c.clone())?;
            }
        }
        for (i, o) in spec.overrides.iter().enumerate() {
            let path = format!("coins.overrides[{i}]");
            let v = resolve_vertex(&t, o.vertex, &format!("{path}.vertex"), &mut issues);
            let coin = match (&o.coin, &o.matrix) {
                (Some(name), None) => named_coin(name, dim, &format!("{path}.coin"), &mut issues),
                (None, Some(m)) => parse_matrix(m, dim, &format!("{path}.matrix"), &mut issues),
                _ => None,
            };
            if let (Some(v), Some(c)) = (v, coin) {
                coins.assign(v, c)?;
            }
        }
        let clean = issues.is_empty();
        if let Some(v) = coins.missing_vertex().filter(|_| clean) {
            issues.push(
                "coins",
                format!("no coin for vertex {v}; set `default` or add an override"),
            );
        }
        issues.finish()?;

        let flip_flop = self.topology.as_ref().is_some_and(|t| t.flip_flop);
        let operator = WalkOperator::build(t, &coins, flip_flop)?;

        let inj = self.injection.as_ref().expect("validated");
        let mut base = DVector::zeros(t.mode_count());
        for s in &inj.sites {
            let v = resolve_vertex(&t, s.vertex, "", &mut Issues::default()).expect("validated");
            let coin = Direction::from_label(&s.coin).expect("validated");
            base[mode_index(&t, coin, v)?] += C64::new(s.weight[0], s.weight[1]) * inj.amplitude;
        }

        Ok(Experiment {
            name,
            config: self.clone(),
            operator,
            base,
            phase: inj.phase,
            steps: self.steps.expect("validated"),
            search: None,
            target_known: false,
        })
    }
}

/// A validated, fully built experiment.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub name: String,
    pub config: ExperimentConfig,
    pub operator: WalkOperator,
    pub base: DVector<C64>,
    pub phase: PhaseSpec,
    pub steps: usize,
    pub search: Option<SearchInstance>,
    /// Whether the search target was given (ground truth) or drawn.
    pub target_known: bool,
}

impl Experiment {
    pub fn needs_eigen_for_phase(&self) -> bool {
        matches!(
            self.phase,
            PhaseSpec::Matched { .. } | PhaseSpec::Midway { .. }
        )
    }

    /// Per-step injection phase. Under `U v = e^{i omega} v` and injection
    /// `base e^{i phi k}`, mode `j` accumulates constructively at
    /// `phi = omega_j`.
    pub fn phi(&self, eigen: Option<&EigenDecomposition>) -> Result<f64> {
        let freq = |j: usize| -> Result<f64> {
            let e = eigen.ok_or_else(|| Error::config("phase mode needs an eigendecomposition"))?;
            e.frequencies()
                .get(j)
                .copied()
                .ok_or_else(|| Error::index(format!("eigenmode {j} does not exist")))
        };
        Ok(match self.phase {
            PhaseSpec::Constant => 0.0,
            PhaseSpec::Explicit { phi } => phi,
            PhaseSpec::Matched { index } => freq(index)?,
            PhaseSpec::Midway { between: [a, b] } => 0.5 * (freq(a)? + freq(b)?),
        })
    }

    pub fn schedule(&self, phi: f64) -> InjectionSchedule {
        InjectionSchedule::new(self.base.clone(), phi, self.steps)
    }
}
