//! Run configuration files.
//!
//! ```text
//! # comment
//! [grid]
//! shape = 16x16
//!
//! [kernel]
//! stencil = random-antihermitian   # or: path = kernel.cfld | core.txt
//! seed = 7
//! amplitude = 1.0
//! scale = 1 0                      # complex factor "re [im]"
//!
//! [model]
//! type = curnn                     # curnn | cornn
//! t = 1.0
//! phi = identity
//! psi = identity                   # cornn only
//! steps = 1000
//!
//! [initial]
//! mode = random                    # random | delta | constant | file
//! seed = 1
//! amplitude = 1.0
//! value = 1 0                      # constant
//! path = init.cfld                 # file: z, or x then p
//!
//! [input]
//! mode = zero                      # zero | constant | random
//! value = 0.5
//! amplitude = 0.1
//! seed = 3
//!
//! [output]
//! record = norm                    # norm | full
//! norms = norms.csv
//! states = states.cfld
//! ```
//!
//! Every key lives in a section; unknown sections or keys, duplicates and
//! missing input files are errors carrying the line number. Relative paths
//! resolve against the directory of the config file.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Activation, BipartiteStep, InputMode, Model, NetworkState, Record, Recurrence, StepOperator};
use crate::error::{Error, Result};
use crate::field::{cfld, ComplexField, GridShape};
use crate::kernel::{load_kernel_file, Kernel};
use crate::spectral::bipartite_exp;
use crate::stencils::Stencil;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    Unitary,
    Bipartite,
}

#[derive(Clone, Debug, PartialEq)]
pub enum KernelSource {
    File(PathBuf),
    Stencil {
        stencil: Stencil,
        seed: u64,
        amplitude: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitialState {
    Random { seed: u64, amplitude: f64 },
    Delta,
    Constant(Complex64),
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub source: PathBuf,
    pub shape: Option<GridShape>,
    pub kernel: KernelSource,
    pub scale: Complex64,
    pub model: ModelKind,
    pub t: f64,
    pub phi: Activation,
    pub psi: Activation,
    pub steps: usize,
    pub initial: InitialState,
    pub input: InputMode,
    pub record: Record,
    pub norms: Option<PathBuf>,
    pub states: Option<PathBuf>,
}

const KEYS: &[(&str, &[&str])] = &[
    ("grid", &["shape"]),
    ("kernel", &["stencil", "path", "seed", "amplitude", "scale"]),
    ("model", &["type", "t", "phi", "psi", "steps"]),
    ("initial", &["mode", "seed", "amplitude", "value", "path"]),
    ("input", &["mode", "value", "amplitude", "seed"]),
    ("output", &["record", "norms", "states"]),
];

struct Entries {
    source: PathBuf,
    base: PathBuf,
    map: HashMap<(String, String), (usize, String)>,
}

impl Entries {
    fn err(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Config {
            path: self.source.clone(),
            line,
            message: message.into(),
        }
    }

    fn raw(&self, section: &str, key: &str) -> Option<(usize, &str)> {
        self.map
            .get(&(section.to_string(), key.to_string()))
            .map(|(l, v)| (*l, v.as_str()))
    }

    fn get<T>(&self, section: &str, key: &str, parse: impl Fn(&str) -> Option<T>) -> Result<Option<T>> {
        match self.raw(section, key) {
            None => Ok(None),
            Some((line, v)) => parse(v)
                .map(Some)
                .ok_or_else(|| self.err(line, format!("bad value for {section}.{key}: {v:?}"))),
        }
    }

    fn num<T: std::str::FromStr>(&self, section: &str, key: &str) -> Result<Option<T>> {
        self.get(section, key, |v| v.parse().ok())
    }

    fn complex(&self, section: &str, key: &str) -> Result<Option<Complex64>> {
        self.get(section, key, parse_complex)
    }

    /// An input path that must exist now.
    fn existing_path(&self, section: &str, key: &str) -> Result<Option<PathBuf>> {
        match self.raw(section, key) {
            None => Ok(None),
            Some((line, v)) => {
                let p = self.base.join(v);
                if !p.is_file() {
                    return Err(self.err(line, format!("{section}.{key}: no such file {}", p.display())));
                }
                Ok(Some(p))
            }
        }
    }

    fn output_path(&self, section: &str, key: &str) -> Option<PathBuf> {
        self.raw(section, key).map(|(_, v)| self.base.join(v))
    }

    fn line_of(&self, section: &str, key: &str) -> usize {
        self.raw(section, key).map(|(l, _)| l).unwrap_or(0)
    }
}

fn parse_complex(v: &str) -> Option<Complex64> {
    let nums: Vec<f64> = v.split_whitespace().map(|p| p.parse().ok()).collect::<Option<_>>()?;
    match nums.as_slice() {
        [re] => Some(Complex64::new(*re, 0.0)),
        [re, im] => Some(Complex64::new(*re, *im)),
        _ => None,
    }
}

fn tokenize(text: &str, source: &Path, base: &Path) -> Result<Entries> {
    let mut entries = Entries {
        source: source.to_path_buf(),
        base: base.to_path_buf(),
        map: HashMap::new(),
    };
    let mut section: Option<&str> = None;
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let name = name.trim();
            let known = KEYS.iter().find(|(s, _)| *s == name);
            section = Some(
                known
                    .ok_or_else(|| entries.err(line_no, format!("unknown section [{name}]")))?
                    .0,
            );
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| entries.err(line_no, format!("expected `key = value`, got {line:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        let sec = section.ok_or_else(|| entries.err(line_no, format!("key {key:?} outside any section")))?;
        let allowed = KEYS.iter().find(|(s, _)| *s == sec).unwrap().1;
        if !allowed.contains(&key) {
            return Err(entries.err(line_no, format!("unknown key {key:?} in [{sec}]")));
        }
        if value.is_empty() {
            return Err(entries.err(line_no, format!("empty value for {sec}.{key}")));
        }
        let slot = (sec.to_string(), key.to_string());
        if let Some((first, _)) = entries.map.get(&slot) {
            return Err(entries.err(line_no, format!("duplicate key {sec}.{key} (first on line {first})")));
        }
        entries.map.insert(slot, (line_no, value.to_string()));
    }
    Ok(entries)
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, path, base)
    }

    /// `source` is used in error messages; paths resolve against `base`.
    pub fn parse(text: &str, source: &Path, base: &Path) -> Result<Self> {
        let e = tokenize(text, source, base)?;

        let shape = e.get("grid", "shape", |v| v.parse::<GridShape>().ok())?;

        let kernel = match (e.raw("kernel", "stencil"), e.existing_path("kernel", "path")?) {
            (Some(_), Some(_)) => {
                return Err(e.err(e.line_of("kernel", "path"), "give either kernel.stencil or kernel.path"))
            }
            (None, Some(p)) => KernelSource::File(p),
            (Some(_), None) => KernelSource::Stencil {
                stencil: e.get("kernel", "stencil", |v| v.parse().ok())?.unwrap(),
                seed: e.num("kernel", "seed")?.unwrap_or(0),
                amplitude: e.num("kernel", "amplitude")?.unwrap_or(1.0),
            },
            (None, None) => return Err(e.err(0, "missing kernel.stencil or kernel.path")),
        };
        if shape.is_none() && !matches!(kernel, KernelSource::File(_)) {
            return Err(e.err(0, "missing grid.shape"));
        }
        let scale = e.complex("kernel", "scale")?.unwrap_or(Complex64::new(1.0, 0.0));

        let model = e
            .get("model", "type", |v| match v {
                "curnn" | "unitary" => Some(ModelKind::Unitary),
                "cornn" | "bipartite" | "orthogonal" => Some(ModelKind::Bipartite),
                _ => None,
            })?
            .unwrap_or(ModelKind::Unitary);
        let default_phi = match model {
            ModelKind::Unitary => Activation::default(),
            ModelKind::Bipartite => Activation::Identity,
        };
        let phi = e.get("model", "phi", |v| v.parse().ok())?.unwrap_or(default_phi);
        let psi = e
            .get("model", "psi", |v| v.parse().ok())?
            .unwrap_or(Activation::Identity);
        if model == ModelKind::Unitary && e.raw("model", "psi").is_some() {
            return Err(e.err(e.line_of("model", "psi"), "model.psi only applies to cornn"));
        }
        let t = e.num("model", "t")?.unwrap_or(1.0);
        if !f64::is_finite(t) {
            return Err(e.err(e.line_of("model", "t"), "model.t must be finite"));
        }
        let steps = e.num("model", "steps")?.unwrap_or(0);

        let initial = match e.raw("initial", "mode").map(|(_, v)| v).unwrap_or("random") {
            "random" => InitialState::Random {
                seed: e.num("initial", "seed")?.unwrap_or(0),
                amplitude: e.num("initial", "amplitude")?.unwrap_or(1.0),
            },
            "delta" => InitialState::Delta,
            "constant" => InitialState::Constant(
                e.complex("initial", "value")?
                    .ok_or_else(|| e.err(e.line_of("initial", "mode"), "initial.value is required"))?,
            ),
            "file" => InitialState::File(
                e.existing_path("initial", "path")?
                    .ok_or_else(|| e.err(e.line_of("initial", "mode"), "initial.path is required"))?,
            ),
            other => return Err(e.err(e.line_of("initial", "mode"), format!("unknown initial mode {other:?}"))),
        };

        let input = match e.raw("input", "mode").map(|(_, v)| v).unwrap_or("zero") {
            "zero" => InputMode::Zero,
            "constant" => InputMode::Constant(
                e.complex("input", "value")?
                    .ok_or_else(|| e.err(e.line_of("input", "mode"), "input.value is required"))?,
            ),
            "random" => InputMode::Random {
                amplitude: e.num("input", "amplitude")?.unwrap_or(1.0),
                seed: e.num("input", "seed")?.unwrap_or(0),
            },
            other => return Err(e.err(e.line_of("input", "mode"), format!("unknown input mode {other:?}"))),
        };

        let record = e
            .get("output", "record", |v| match v {
                "norm" | "norms" => Some(Record::Norm),
                "full" => Some(Record::Full),
                _ => None,
            })?
            .unwrap_or(Record::Norm);
        let norms = e.output_path("output", "norms");
        let states = e.output_path("output", "states");
        if record == Record::Norm && states.is_some() {
            return Err(e.err(e.line_of("output", "states"), "output.states needs record = full"));
        }

        Ok(RunConfig {
            source: source.to_path_buf(),
            shape,
            kernel,
            scale,
            model,
            t,
            phi,
            psi,
            steps,
            initial,
            input,
            record,
            norms,
            states,
        })
    }

    /// The generator `K`, already multiplied by `scale`.
    pub fn build_kernel(&self) -> Result<Kernel> {
        let k = match &self.kernel {
            KernelSource::File(p) => load_kernel_file(p, self.shape.as_ref())?,
            KernelSource::Stencil {
                stencil,
                seed,
                amplitude,
            } => stencil.build(self.shape.as_ref().expect("checked at parse"), *seed, *amplitude)?,
        };
        Ok(if self.scale == Complex64::new(1.0, 0.0) {
            k
        } else {
            k.scale(self.scale)
        })
    }

    fn build_initial(&self, shape: &GridShape) -> Result<NetworkState> {
        let real = self.model == ModelKind::Bipartite;
        let fields: Vec<ComplexField> = match &self.initial {
            InitialState::Random { seed, amplitude } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let count = if real { 2 } else { 1 };
                (0..count)
                    .map(|_| {
                        ComplexField::from_fn(shape.clone(), |_| {
                            let re = amplitude * rng.random_range(-1.0..1.0);
                            let im = if real {
                                0.0
                            } else {
                                amplitude * rng.random_range(-1.0..1.0)
                            };
                            Complex64::new(re, im)
                        })
                    })
                    .collect()
            }
            InitialState::Delta => {
                let d = ComplexField::delta(shape.clone());
                if real {
                    vec![d, ComplexField::zeros(shape.clone())]
                } else {
                    vec![d]
                }
            }
            InitialState::Constant(v) => {
                if real {
                    let c = ComplexField::constant(shape.clone(), Complex64::new(v.re, 0.0));
                    vec![c, ComplexField::zeros(shape.clone())]
                } else {
                    vec![ComplexField::constant(shape.clone(), *v)]
                }
            }
            InitialState::File(p) => cfld::load_sequence(p)?,
        };
        for f in &fields {
            if f.shape() != shape {
                return Err(Error::ShapeMismatch {
                    expected: shape.to_string(),
                    found: f.shape().to_string(),
                });
            }
        }
        match (real, fields.len()) {
            (false, 1) => Ok(NetworkState::unitary(fields.into_iter().next().unwrap())),
            (true, 2) => {
                let mut it = fields.into_iter();
                NetworkState::bipartite(it.next().unwrap(), it.next().unwrap())
            }
            (_, n) => Err(Error::Format(format!(
                "initial state file has {n} records, expected {}",
                if real { 2 } else { 1 }
            ))),
        }
    }

    pub fn build(&self) -> Result<Recurrence> {
        let k = self.build_kernel()?;
        let shape = k.shape().clone();
        let model = match self.model {
            ModelKind::Unitary => Model::Unitary {
                op: StepOperator::new(&k, self.t)?,
                phi: self.phi,
            },
            ModelKind::Bipartite => Model::Bipartite {
                step: BipartiteStep::new(bipartite_exp(&k, self.t)?)?,
                phi: self.phi,
                psi: self.psi,
            },
        };
        let input = match (&self.input, self.model) {
            (InputMode::Constant(v), ModelKind::Bipartite) if v.im != 0.0 => {
                return Err(Error::InvalidArgument("cornn input must be real".into()))
            }
            (i, _) => i.clone(),
        };
        Ok(Recurrence {
            model,
            initial: self.build_initial(&shape)?,
            input,
        })
    }
}
