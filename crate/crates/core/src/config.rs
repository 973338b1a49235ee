//! Run configuration stored as an INI file.
//!
//! Sections are `[mesh]`, exactly one of `[physical]` or `[dimensionless]`,
//! `[time]`, `[initial]`, `[solver]` and `[output]`. Keys in the physical
//! block carry their SI unit in the name. Vectors are written `x, y, z`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ini::{EscapePolicy, Ini, ParseOption, Properties};

use crate::error::{Error, Result};
use crate::integrator::SolverSettings;
use crate::mesh::BoxSide;
use crate::units::PhysicalParams;
use crate::vec3::Vec3;

#[derive(Clone, Debug, PartialEq)]
pub enum MeshSpec {
    /// `[0, L]` box with named clamped and loaded sides.
    Box {
        lengths: Vec3,
        divisions: [usize; 3],
        dirichlet: Vec<BoxSide>,
        neumann: Vec<BoxSide>,
    },
    /// Half ball with its flat face at `x = 0` clamped.
    Hemisphere { radius: f64, divisions: usize },
    /// Gmsh file with physical tags assigned to boundary regions.
    Msh {
        path: PathBuf,
        dirichlet_tags: Vec<i64>,
        neumann_tags: Vec<i64>,
        other_tags: Vec<i64>,
    },
}

/// Material data in SI units together with the applied loads.
#[derive(Clone, Debug, PartialEq)]
pub struct PhysicalModel {
    pub material: PhysicalParams,
    /// A/m
    pub applied_field: Vec3,
    /// N/m², on the Neumann boundary.
    pub traction: Vec3,
    /// N/m³, added to gravity when that is on.
    pub volume_force: Vec3,
    pub gravity: bool,
}

impl Default for PhysicalModel {
    fn default() -> Self {
        PhysicalModel {
            material: PhysicalParams::fecosib(),
            applied_field: [0.0; 3],
            traction: [0.0; 3],
            volume_force: [0.0; 3],
            gravity: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DimensionlessModel {
    pub alpha: f64,
    pub kappa: f64,
    pub mu: f64,
    pub lambda: f64,
    pub lambda100: f64,
    pub lambda111: f64,
    pub h_ext: Vec3,
    pub f: Vec3,
    pub g: Vec3,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    Physical(PhysicalModel),
    Dimensionless(DimensionlessModel),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TimeSpec {
    Dimensionless { k: f64, t_final: f64 },
    /// Only valid with a physical model.
    Seconds { time_step: f64, final_time: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitialCondition {
    Uniform(Vec3),
    /// Direction plus per-node uniform noise of the given amplitude, normalised.
    Perturbed { direction: Vec3, amplitude: f64, seed: u64 },
    /// Independent random unit vectors at every node.
    Hot { seed: u64 },
    /// `(2, sin(x+y+z), cos(x+y+z)) / √5`
    Sinusoidal,
    /// A named field from [`crate::runner::initial_callback`].
    Callback(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputSpec {
    pub dir: PathBuf,
    pub name: String,
    /// VTK snapshot every this many steps; zero disables snapshots.
    pub snapshot_stride: usize,
    /// Also write the energy with the projected magnetisation in the elastic term.
    pub hat_energy: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: PathBuf::from("out"),
            name: "run".into(),
            snapshot_stride: 0,
            hat_energy: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub mesh: MeshSpec,
    pub model: Model,
    pub theta: f64,
    pub time: TimeSpec,
    pub unsafe_theta: bool,
    pub initial: InitialCondition,
    pub solver: SolverSettings,
    pub output: OutputSpec,
}

const SECTIONS: [&str; 7] = ["mesh", "physical", "dimensionless", "time", "initial", "solver", "output"];

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = RunConfig::parse(&text)?;
        if let MeshSpec::Msh { path: msh, .. } = &mut cfg.mesh {
            if msh.is_relative() {
                if let Some(dir) = path.parent() {
                    *msh = dir.join(&*msh);
                }
            }
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<RunConfig> {
        let opt = ParseOption {
            enabled_escape: false,
            ..ParseOption::default()
        };
        let ini = Ini::load_from_str_opt(text, opt).map_err(|e| Error::Parse {
            section: "config".into(),
            line: e.line + 1,
            message: e.msg.into_owned(),
        })?;
        from_ini(&ini, text)
    }

    /// Applies `section.key=value` assignments and re-reads the result.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<RunConfig> {
        if overrides.is_empty() {
            return Ok(self.clone());
        }
        let opt = ParseOption {
            enabled_escape: false,
            ..ParseOption::default()
        };
        let mut ini = Ini::load_from_str_opt(&self.to_ini_string(), opt).map_err(|e| Error::Config(e.to_string()))?;
        for o in overrides {
            let o = o.as_ref();
            let (lhs, value) = o
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override `{o}` is not of the form section.key=value")))?;
            let (section, key) = lhs
                .trim()
                .split_once('.')
                .ok_or_else(|| Error::Config(format!("override `{o}` needs a section, as in time.k=0.5")))?;
            ini.with_section(Some(section.trim())).set(key.trim(), value.trim());
        }
        let mut buf = Vec::new();
        ini.write_to_policy(&mut buf, EscapePolicy::Nothing)
            .map_err(|e| Error::Config(e.to_string()))?;
        RunConfig::parse(&String::from_utf8_lossy(&buf))
    }

    pub fn validate(&self) -> Result<()> {
        let (k, t) = match self.time {
            TimeSpec::Dimensionless { k, t_final } => (k, t_final),
            TimeSpec::Seconds { time_step, final_time } => {
                if matches!(self.model, Model::Dimensionless(_)) {
                    return Err(Error::Config(
                        "time_step_s and final_time_s need a [physical] block; use k and t_final".into(),
                    ));
                }
                (time_step, final_time)
            }
        };
        if !(k > 0.0) || !(t > 0.0) {
            return Err(Error::Config(format!("time step and final time must be positive, got {k} and {t}")));
        }
        if !(k < t) {
            return Err(Error::Config(format!("time step {k} must be smaller than the final time {t}")));
        }
        match &self.mesh {
            MeshSpec::Box {
                lengths,
                divisions,
                dirichlet,
                ..
            } => {
                if lengths.iter().any(|&l| !(l > 0.0)) || divisions.contains(&0) {
                    return Err(Error::Config("box lengths and divisions must be positive".into()));
                }
                if dirichlet.is_empty() {
                    return Err(Error::Config("box mesh needs at least one dirichlet side".into()));
                }
            }
            MeshSpec::Hemisphere { radius, divisions } => {
                if !(*radius > 0.0) || *divisions == 0 {
                    return Err(Error::Config("hemisphere radius and divisions must be positive".into()));
                }
            }
            MeshSpec::Msh { dirichlet_tags, .. } => {
                if dirichlet_tags.is_empty() {
                    return Err(Error::Config("msh mesh needs at least one dirichlet tag".into()));
                }
            }
        }
        if self.output.name.is_empty() || self.output.name.contains(['/', '\\']) {
            return Err(Error::Config(format!("output name `{}` is not a plain file stem", self.output.name)));
        }
        Ok(())
    }

    pub fn to_ini_string(&self) -> String {
        let mut s = String::new();
        s.push_str("[mesh]\n");
        match &self.mesh {
            MeshSpec::Box {
                lengths,
                divisions,
                dirichlet,
                neumann,
            } => {
                kv(&mut s, "kind", "box");
                kv(&mut s, "lengths", &fmt_vec(lengths));
                kv(&mut s, "divisions", &join(divisions.iter()));
                kv(&mut s, "dirichlet", &sides(dirichlet));
                kv(&mut s, "neumann", &sides(neumann));
            }
            MeshSpec::Hemisphere { radius, divisions } => {
                kv(&mut s, "kind", "hemisphere");
                kv(&mut s, "radius", &format!("{radius:?}"));
                kv(&mut s, "divisions", &divisions.to_string());
            }
            MeshSpec::Msh {
                path,
                dirichlet_tags,
                neumann_tags,
                other_tags,
            } => {
                kv(&mut s, "kind", "msh");
                kv(&mut s, "path", &path.display().to_string());
                kv(&mut s, "dirichlet_tags", &join(dirichlet_tags.iter()));
                kv(&mut s, "neumann_tags", &join(neumann_tags.iter()));
                kv(&mut s, "other_tags", &join(other_tags.iter()));
            }
        }
        match &self.model {
            Model::Physical(p) => {
                let m = &p.material;
                s.push_str("\n[physical]\n");
                kv(&mut s, "exchange_a_j_per_m", &format!("{:?}", m.exchange_a));
                kv(&mut s, "alpha", &format!("{:?}", m.alpha));
                kv(&mut s, "gamma_rad_per_s_t", &format!("{:?}", m.gamma));
                kv(&mut s, "mu0_n_per_a2", &format!("{:?}", m.mu0));
                kv(&mut s, "ms_a_per_m", &format!("{:?}", m.ms));
                kv(&mut s, "lambda100", &format!("{:?}", m.lambda100));
                kv(&mut s, "lambda111", &format!("{:?}", m.lambda111));
                kv(&mut s, "rho_kg_per_m3", &format!("{:?}", m.rho));
                kv(&mut s, "shear_modulus_pa", &format!("{:?}", m.shear_modulus));
                kv(&mut s, "lame_lambda_pa", &format!("{:?}", m.lame_lambda));
                kv(&mut s, "gravity_m_per_s2", &format!("{:?}", m.g_grav));
                if let Some(l) = m.length_scale {
                    kv(&mut s, "length_scale_m", &format!("{l:?}"));
                }
                kv(&mut s, "applied_field_a_per_m", &fmt_vec(&p.applied_field));
                kv(&mut s, "traction_n_per_m2", &fmt_vec(&p.traction));
                kv(&mut s, "volume_force_n_per_m3", &fmt_vec(&p.volume_force));
                kv(&mut s, "gravity", &p.gravity.to_string());
            }
            Model::Dimensionless(d) => {
                s.push_str("\n[dimensionless]\n");
                kv(&mut s, "alpha", &format!("{:?}", d.alpha));
                kv(&mut s, "kappa", &format!("{:?}", d.kappa));
                kv(&mut s, "mu", &format!("{:?}", d.mu));
                kv(&mut s, "lambda", &format!("{:?}", d.lambda));
                kv(&mut s, "lambda100", &format!("{:?}", d.lambda100));
                kv(&mut s, "lambda111", &format!("{:?}", d.lambda111));
                kv(&mut s, "h_ext", &fmt_vec(&d.h_ext));
                kv(&mut s, "f", &fmt_vec(&d.f));
                kv(&mut s, "g", &fmt_vec(&d.g));
            }
        }
        s.push_str("\n[time]\n");
        kv(&mut s, "theta", &format!("{:?}", self.theta));
        match self.time {
            TimeSpec::Dimensionless { k, t_final } => {
                kv(&mut s, "k", &format!("{k:?}"));
                kv(&mut s, "t_final", &format!("{t_final:?}"));
            }
            TimeSpec::Seconds { time_step, final_time } => {
                kv(&mut s, "time_step_s", &format!("{time_step:?}"));
                kv(&mut s, "final_time_s", &format!("{final_time:?}"));
            }
        }
        kv(&mut s, "unsafe_theta", &self.unsafe_theta.to_string());
        s.push_str("\n[initial]\n");
        match &self.initial {
            InitialCondition::Uniform(d) => {
                kv(&mut s, "kind", "uniform");
                kv(&mut s, "direction", &fmt_vec(d));
            }
            InitialCondition::Perturbed {
                direction,
                amplitude,
                seed,
            } => {
                kv(&mut s, "kind", "perturbed");
                kv(&mut s, "direction", &fmt_vec(direction));
                kv(&mut s, "amplitude", &format!("{amplitude:?}"));
                kv(&mut s, "seed", &seed.to_string());
            }
            InitialCondition::Hot { seed } => {
                kv(&mut s, "kind", "hot");
                kv(&mut s, "seed", &seed.to_string());
            }
            InitialCondition::Sinusoidal => kv(&mut s, "kind", "sinusoidal"),
            InitialCondition::Callback(name) => {
                kv(&mut s, "kind", "callback");
                kv(&mut s, "name", name);
            }
        }
        s.push_str("\n[solver]\n");
        kv(&mut s, "tol", &format!("{:?}", self.solver.tol));
        kv(&mut s, "restart", &self.solver.restart.to_string());
        kv(&mut s, "maxit", &self.solver.maxit.to_string());
        kv(&mut s, "freeze_ilu", &self.solver.freeze_ilu.to_string());
        s.push_str("\n[output]\n");
        kv(&mut s, "dir", &self.output.dir.display().to_string());
        kv(&mut s, "name", &self.output.name);
        kv(&mut s, "snapshot_stride", &self.output.snapshot_stride.to_string());
        kv(&mut s, "hat_energy", &self.output.hat_energy.to_string());
        s
    }

    /// `(k, T)` in dimensionless units, given the physical time scale if any.
    pub fn dimensionless_times(&self, time_scale: Option<f64>) -> Result<(f64, f64)> {
        match (self.time, time_scale) {
            (TimeSpec::Dimensionless { k, t_final }, _) => Ok((k, t_final)),
            (TimeSpec::Seconds { time_step, final_time }, Some(ts)) => Ok((time_step / ts, final_time / ts)),
            (TimeSpec::Seconds { .. }, None) => Err(Error::Config("times in seconds need a [physical] block".into())),
        }
    }
}

fn kv(s: &mut String, key: &str, value: &str) {
    let _ = writeln!(s, "{key} = {value}");
}

fn fmt_vec(v: &Vec3) -> String {
    format!("{:?}, {:?}, {:?}", v[0], v[1], v[2])
}

fn join<T: ToString>(it: impl Iterator<Item = T>) -> String {
    it.map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

fn sides(s: &[BoxSide]) -> String {
    s.iter().map(|b| b.name()).collect::<Vec<_>>().join(", ")
}

/// 1-based line of `key` inside `[section]`, or of the header if the key is
/// not found.
fn line_of(text: &str, section: &str, key: Option<&str>) -> usize {
    let mut inside = false;
    let mut header = 0;
    for (i, raw) in text.lines().enumerate() {
        let l = raw.trim();
        if let Some(rest) = l.strip_prefix('[') {
            inside = rest.split(']').next().map(str::trim) == Some(section);
            if inside {
                header = i + 1;
            }
            continue;
        }
        if let (true, Some(k)) = (inside, key) {
            if l.split(['=', ':']).next().map(str::trim) == Some(k) {
                return i + 1;
            }
        }
    }
    header
}

struct Section<'a> {
    name: &'static str,
    props: &'a Properties,
    text: &'a str,
}

impl<'a> Section<'a> {
    fn err(&self, key: Option<&str>, message: impl Into<String>) -> Error {
        Error::Parse {
            section: self.name.to_string(),
            line: line_of(self.text, self.name, key),
            message: message.into(),
        }
    }

    fn raw(&self, key: &str) -> Option<&'a str> {
        self.props.get(key).map(str::trim)
    }

    fn require(&self, key: &str) -> Result<&'a str> {
        self.raw(key).ok_or_else(|| self.err(None, format!("missing key `{key}`")))
    }

    fn parse_with<T>(&self, key: &str, f: impl Fn(&str) -> Option<T>, what: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => f(v)
                .map(Some)
                .ok_or_else(|| self.err(Some(key), format!("`{key} = {v}` is not {what}"))),
        }
    }

    fn f64(&self, key: &str) -> Result<Option<f64>> {
        self.parse_with(key, |v| v.parse::<f64>().ok().filter(|x| x.is_finite()), "a finite number")
    }

    fn req_f64(&self, key: &str) -> Result<f64> {
        self.require(key)?;
        Ok(self.f64(key)?.expect("present"))
    }

    fn usize(&self, key: &str) -> Result<Option<usize>> {
        self.parse_with(key, |v| v.parse().ok(), "a non-negative integer")
    }

    fn u64(&self, key: &str) -> Result<Option<u64>> {
        self.parse_with(key, |v| v.parse().ok(), "a non-negative integer")
    }

    fn bool(&self, key: &str) -> Result<Option<bool>> {
        self.parse_with(
            key,
            |v| match v.to_ascii_lowercase().as_str() {
                "true" | "yes" | "on" | "1" => Some(true),
                "false" | "no" | "off" | "0" => Some(false),
                _ => None,
            },
            "a boolean",
        )
    }

    fn vec3(&self, key: &str) -> Result<Option<Vec3>> {
        self.parse_with(
            key,
            |v| {
                let xs = list::<f64>(v)?;
                let arr: Vec3 = xs.try_into().ok()?;
                arr.iter().all(|x| x.is_finite()).then_some(arr)
            },
            "three comma-separated numbers",
        )
    }

    fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        self.parse_with(key, list::<T>, "a comma-separated list")
    }

    fn sides(&self, key: &str) -> Result<Vec<BoxSide>> {
        Ok(self
            .parse_with(
                key,
                |v| {
                    if v.is_empty() {
                        return Some(Vec::new());
                    }
                    v.split(',').map(BoxSide::parse).collect::<Option<Vec<_>>>()
                },
                "a list of box sides (x_min, x_max, y_min, y_max, z_min, z_max)",
            )?
            .unwrap_or_default())
    }

    fn only(&self, allowed: &[&str]) -> Result<()> {
        for (k, _) in self.props.iter() {
            if !allowed.contains(&k) {
                return Err(self.err(Some(k), format!("unknown key `{k}`; expected one of {}", allowed.join(", "))));
            }
        }
        Ok(())
    }
}

fn list<T: std::str::FromStr>(v: &str) -> Option<Vec<T>> {
    if v.trim().is_empty() {
        return Some(Vec::new());
    }
    v.split(',').map(|x| x.trim().parse().ok()).collect()
}

fn from_ini(ini: &Ini, text: &str) -> Result<RunConfig> {
    for (name, props) in ini.iter() {
        match name {
            None if props.is_empty() => {}
            None => {
                let (k, _) = props.iter().next().expect("non-empty");
                return Err(Error::Parse {
                    section: "config".into(),
                    line: line_of(text, "", Some(k)).max(1),
                    message: format!("key `{k}` appears before any section"),
                });
            }
            Some(n) if !SECTIONS.contains(&n) => {
                return Err(Error::Parse {
                    section: n.to_string(),
                    line: line_of(text, n, None),
                    message: format!("unknown section; expected one of {}", SECTIONS.join(", ")),
                });
            }
            Some(_) => {}
        }
    }
    let empty = Properties::new();
    let sec = |name: &'static str| Section {
        name,
        props: ini.section(Some(name)).unwrap_or(&empty),
        text,
    };
    let missing = |name: &str| Error::Parse {
        section: name.to_string(),
        line: 0,
        message: "missing section".into(),
    };

    if ini.section(Some("mesh")).is_none() {
        return Err(missing("mesh"));
    }
    let mesh = parse_mesh(&sec("mesh"))?;

    let model = match (ini.section(Some("physical")), ini.section(Some("dimensionless"))) {
        (Some(_), Some(_)) => {
            return Err(Error::Parse {
                section: "dimensionless".into(),
                line: line_of(text, "dimensionless", None),
                message: "[physical] and [dimensionless] are mutually exclusive".into(),
            })
        }
        (None, None) => {
            return Err(Error::Parse {
                section: "config".into(),
                line: 0,
                message: "one of [physical] or [dimensionless] is required".into(),
            })
        }
        (Some(_), None) => Model::Physical(parse_physical(&sec("physical"))?),
        (None, Some(_)) => Model::Dimensionless(parse_dimensionless(&sec("dimensionless"))?),
    };

    if ini.section(Some("time")).is_none() {
        return Err(missing("time"));
    }
    let t = sec("time");
    t.only(&["theta", "k", "t_final", "time_step_s", "final_time_s", "unsafe_theta"])?;
    let theta = t.req_f64("theta")?;
    let time = match (t.f64("k")?, t.f64("t_final")?, t.f64("time_step_s")?, t.f64("final_time_s")?) {
        (Some(k), Some(t_final), None, None) => TimeSpec::Dimensionless { k, t_final },
        (None, None, Some(time_step), Some(final_time)) => TimeSpec::Seconds { time_step, final_time },
        _ => return Err(t.err(None, "give either `k` and `t_final` or `time_step_s` and `final_time_s`")),
    };
    let unsafe_theta = t.bool("unsafe_theta")?.unwrap_or(false);

    let initial = parse_initial(&sec("initial"))?;

    let s = sec("solver");
    s.only(&["tol", "restart", "maxit", "freeze_ilu"])?;
    let d = SolverSettings::default();
    let solver = SolverSettings {
        tol: s.f64("tol")?.unwrap_or(d.tol),
        restart: s.usize("restart")?.unwrap_or(d.restart),
        maxit: s.usize("maxit")?.unwrap_or(d.maxit),
        freeze_ilu: s.bool("freeze_ilu")?.unwrap_or(d.freeze_ilu),
    };

    let o = sec("output");
    o.only(&["dir", "name", "snapshot_stride", "hat_energy"])?;
    let od = OutputSpec::default();
    let output = OutputSpec {
        dir: o.raw("dir").map(PathBuf::from).unwrap_or(od.dir),
        name: o.raw("name").map(String::from).unwrap_or(od.name),
        snapshot_stride: o.usize("snapshot_stride")?.unwrap_or(0),
        hat_energy: o.bool("hat_energy")?.unwrap_or(false),
    };

    let cfg = RunConfig {
        mesh,
        model,
        theta,
        time,
        unsafe_theta,
        initial,
        solver,
        output,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn parse_mesh(s: &Section<'_>) -> Result<MeshSpec> {
    match s.require("kind")? {
        "box" => {
            s.only(&["kind", "lengths", "divisions", "dirichlet", "neumann"])?;
            let lengths = s.vec3("lengths")?.ok_or_else(|| s.err(None, "missing key `lengths`"))?;
            let divs: Vec<usize> = s.list("divisions")?.ok_or_else(|| s.err(None, "missing key `divisions`"))?;
            let divisions: [usize; 3] = divs
                .try_into()
                .map_err(|_| s.err(Some("divisions"), "`divisions` needs three integers"))?;
            Ok(MeshSpec::Box {
                lengths,
                divisions,
                dirichlet: s.sides("dirichlet")?,
                neumann: s.sides("neumann")?,
            })
        }
        "hemisphere" => {
            s.only(&["kind", "radius", "divisions"])?;
            Ok(MeshSpec::Hemisphere {
                radius: s.req_f64("radius")?,
                divisions: s.usize("divisions")?.ok_or_else(|| s.err(None, "missing key `divisions`"))?,
            })
        }
        "msh" => {
            s.only(&["kind", "path", "dirichlet_tags", "neumann_tags", "other_tags"])?;
            Ok(MeshSpec::Msh {
                path: PathBuf::from(s.require("path")?),
                dirichlet_tags: s.list("dirichlet_tags")?.unwrap_or_else(|| vec![1]),
                neumann_tags: s.list("neumann_tags")?.unwrap_or_else(|| vec![2]),
                other_tags: s.list("other_tags")?.unwrap_or_else(|| vec![3]),
            })
        }
        other => Err(s.err(Some("kind"), format!("unknown mesh kind `{other}`; expected box, hemisphere or msh"))),
    }
}

fn parse_physical(s: &Section<'_>) -> Result<PhysicalModel> {
    s.only(&[
        "exchange_a_j_per_m",
        "alpha",
        "gamma_rad_per_s_t",
        "mu0_n_per_a2",
        "ms_a_per_m",
        "lambda100",
        "lambda111",
        "rho_kg_per_m3",
        "shear_modulus_pa",
        "lame_lambda_pa",
        "gravity_m_per_s2",
        "length_scale_m",
        "applied_field_a_per_m",
        "traction_n_per_m2",
        "volume_force_n_per_m3",
        "gravity",
    ])?;
    let d = PhysicalParams::fecosib();
    let lambda100 = s.f64("lambda100")?.unwrap_or(d.lambda100);
    let material = PhysicalParams {
        exchange_a: s.f64("exchange_a_j_per_m")?.unwrap_or(d.exchange_a),
        alpha: s.f64("alpha")?.unwrap_or(d.alpha),
        gamma: s.f64("gamma_rad_per_s_t")?.unwrap_or(d.gamma),
        mu0: s.f64("mu0_n_per_a2")?.unwrap_or(d.mu0),
        ms: s.f64("ms_a_per_m")?.unwrap_or(d.ms),
        lambda100,
        lambda111: s.f64("lambda111")?.unwrap_or(lambda100),
        rho: s.f64("rho_kg_per_m3")?.unwrap_or(d.rho),
        shear_modulus: s.f64("shear_modulus_pa")?.unwrap_or(d.shear_modulus),
        lame_lambda: s.f64("lame_lambda_pa")?.unwrap_or(d.lame_lambda),
        g_grav: s.f64("gravity_m_per_s2")?.unwrap_or(d.g_grav),
        length_scale: s.f64("length_scale_m")?,
    };
    Ok(PhysicalModel {
        material,
        applied_field: s.vec3("applied_field_a_per_m")?.unwrap_or_default(),
        traction: s.vec3("traction_n_per_m2")?.unwrap_or_default(),
        volume_force: s.vec3("volume_force_n_per_m3")?.unwrap_or_default(),
        gravity: s.bool("gravity")?.unwrap_or(false),
    })
}

fn parse_dimensionless(s: &Section<'_>) -> Result<DimensionlessModel> {
    s.only(&["alpha", "kappa", "mu", "lambda", "lambda100", "lambda111", "h_ext", "f", "g"])?;
    let lambda100 = s.f64("lambda100")?.unwrap_or(0.0);
    Ok(DimensionlessModel {
        alpha: s.req_f64("alpha")?,
        kappa: s.req_f64("kappa")?,
        mu: s.req_f64("mu")?,
        lambda: s.req_f64("lambda")?,
        lambda100,
        lambda111: s.f64("lambda111")?.unwrap_or(lambda100),
        h_ext: s.vec3("h_ext")?.unwrap_or_default(),
        f: s.vec3("f")?.unwrap_or_default(),
        g: s.vec3("g")?.unwrap_or_default(),
    })
}

fn parse_initial(s: &Section<'_>) -> Result<InitialCondition> {
    let kind = s.raw("kind").unwrap_or("uniform");
    let seed = |s: &Section<'_>| -> Result<u64> { Ok(s.u64("seed")?.unwrap_or(0)) };
    match kind {
        "uniform" => {
            s.only(&["kind", "direction"])?;
            Ok(InitialCondition::Uniform(s.vec3("direction")?.unwrap_or([1.0, 0.0, 0.0])))
        }
        "perturbed" => {
            s.only(&["kind", "direction", "amplitude", "seed"])?;
            Ok(InitialCondition::Perturbed {
                direction: s.vec3("direction")?.unwrap_or([1.0, 0.0, 0.0]),
                amplitude: s.req_f64("amplitude")?,
                seed: seed(s)?,
            })
        }
        "hot" => {
            s.only(&["kind", "seed"])?;
            Ok(InitialCondition::Hot { seed: seed(s)? })
        }
        "sinusoidal" => {
            s.only(&["kind"])?;
            Ok(InitialCondition::Sinusoidal)
        }
        "callback" => {
            s.only(&["kind", "name"])?;
            Ok(InitialCondition::Callback(s.require("name")?.to_string()))
        }
        other => Err(s.err(
            Some("kind"),
            format!("unknown initial condition `{other}`; expected uniform, perturbed, hot, sinusoidal or callback"),
        )),
    }
}
