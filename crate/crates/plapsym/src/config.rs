//! Plain-text run configuration: `key = value` lines, `#` comments.
//!
//! Recognized keys:
//!   family      disk | ellipse | star
//!   r           radius (disk, star)
//!   a, b        semi-axes (ellipse)
//!   amp, k      polar perturbation amplitude and frequency (star)
//!   center_x/y  domain center, default (0, 0)
//!   n_boundary  boundary sample count, default 256
//!   p           exponent of the p-Laplacian, required
//!   f           source term: "const C", "affine C0 C1", or
//!               "table s:v s:v ..." (piecewise linear), default "const 1"
//!   h           target mesh spacing, required
//!   t_levels    number of level-grid rows, default 64
//!   output_dir  where the bundle is written, required for pipeline runs
//!   seed        recorded in reports; all algorithms are deterministic
//!   workers     sweep pool size, 0 = available parallelism
//!   p_list      space/comma separated p values for sweeps, default [p]
//!
//! Sweep axis files hold blank-line-separated blocks of the same syntax;
//! each block overlays the base configuration to produce one run.

use std::path::PathBuf;

use thiserror::Error;

use crate::geometry::{DomainSpec, Shape};
use crate::solver::Nonlinearity;
use crate::vec2::vec2;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected key = value, got {text:?}")]
    BadLine { line: usize, text: String },
    #[error("unknown key {0:?}")]
    UnknownKey(String),
    #[error("key {key}: cannot parse {value:?} as {expected}")]
    BadValue {
        key: String,
        value: String,
        expected: &'static str,
    },
    #[error("unknown family {0:?} (expected disk, ellipse, or star)")]
    UnknownFamily(String),
    #[error("missing required key {0:?}")]
    Missing(&'static str),
    #[error("key f: {0}")]
    BadSource(String),
}

/// One fully specified run.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub domain: DomainSpec,
    pub p: f64,
    pub f: Nonlinearity,
    pub h: f64,
    pub t_levels: usize,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub workers: usize,
    pub p_list: Vec<f64>,
}

/// Splits config text into (key, value) pairs, keeping order.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::BadLine {
                line: i + 1,
                text: raw.to_string(),
            });
        };
        pairs.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}

/// Splits an axis file into blank-line-separated blocks of pairs.
pub fn parse_axis(text: &str) -> Result<Vec<Vec<(String, String)>>, ConfigError> {
    let mut blocks = Vec::new();
    for chunk in text.split("\n\n") {
        let pairs = parse_pairs(chunk)?;
        if !pairs.is_empty() {
            blocks.push(pairs);
        }
    }
    Ok(blocks)
}

fn parse_f64(key: &str, value: &str) -> Result<f64, ConfigError> {
    value.parse().map_err(|_| ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
        expected: "a number",
    })
}

fn parse_usize(key: &str, value: &str) -> Result<usize, ConfigError> {
    value.parse().map_err(|_| ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
        expected: "a nonnegative integer",
    })
}

fn parse_source(value: &str) -> Result<Nonlinearity, ConfigError> {
    let bad = |m: String| Err(ConfigError::BadSource(m));
    let mut words = value.split_whitespace();
    let kind = words.next().unwrap_or("");
    let rest: Vec<&str> = words.collect();
    match kind {
        "const" => match rest.as_slice() {
            [c] => Ok(Nonlinearity::constant(parse_f64("f", c)?)),
            _ => bad(format!("const takes one number, got {value:?}")),
        },
        "affine" => match rest.as_slice() {
            [c0, c1] => Ok(Nonlinearity::affine(
                parse_f64("f", c0)?,
                parse_f64("f", c1)?,
            )),
            _ => bad(format!("affine takes two numbers, got {value:?}")),
        },
        "table" => {
            let mut s = Vec::new();
            let mut f = Vec::new();
            for pair in &rest {
                let Some((a, b)) = pair.split_once(':') else {
                    return bad(format!("table entries are s:v, got {pair:?}"));
                };
                s.push(parse_f64("f", a)?);
                f.push(parse_f64("f", b)?);
            }
            if s.len() < 2 {
                return bad("table needs at least two s:v entries".to_string());
            }
            Ok(Nonlinearity::Table { s, f })
        }
        _ => bad(format!(
            "expected \"const C\", \"affine C0 C1\" or \"table s:v ...\", got {value:?}"
        )),
    }
}

fn parse_p_list(value: &str) -> Result<Vec<f64>, ConfigError> {
    value
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|w| !w.is_empty())
        .map(|w| parse_f64("p_list", w))
        .collect()
}

impl RunConfig {
    /// Builds a config from pairs; later pairs override earlier ones.
    pub fn from_pairs(pairs: &[(String, String)]) -> Result<RunConfig, ConfigError> {
        let mut family: Option<String> = None;
        let mut r = 1.0;
        let mut a = 1.0;
        let mut b = 1.0;
        let mut amp = 0.0;
        let mut k: usize = 3;
        let mut center = vec2(0.0, 0.0);
        let mut n_boundary: Option<usize> = None;
        let mut p: Option<f64> = None;
        let mut f = Nonlinearity::constant(1.0);
        let mut h: Option<f64> = None;
        let mut t_levels = 64usize;
        let mut output_dir = PathBuf::from(".");
        let mut seed = 0u64;
        let mut workers = 0usize;
        let mut p_list: Option<Vec<f64>> = None;

        for (key, value) in pairs {
            match key.as_str() {
                "family" => family = Some(value.to_ascii_lowercase()),
                "r" | "R" => r = parse_f64(key, value)?,
                "a" => a = parse_f64(key, value)?,
                "b" => b = parse_f64(key, value)?,
                "amp" => amp = parse_f64(key, value)?,
                "k" => k = parse_usize(key, value)?,
                "center_x" => center.x = parse_f64(key, value)?,
                "center_y" => center.y = parse_f64(key, value)?,
                "n_boundary" => n_boundary = Some(parse_usize(key, value)?),
                "p" => p = Some(parse_f64(key, value)?),
                "f" => f = parse_source(value)?,
                "h" => h = Some(parse_f64(key, value)?),
                "t_levels" => t_levels = parse_usize(key, value)?,
                "output_dir" => output_dir = PathBuf::from(value),
                "seed" => {
                    seed = value.parse().map_err(|_| ConfigError::BadValue {
                        key: key.clone(),
                        value: value.clone(),
                        expected: "a nonnegative integer",
                    })?
                }
                "workers" => workers = parse_usize(key, value)?,
                "p_list" => p_list = Some(parse_p_list(value)?),
                _ => return Err(ConfigError::UnknownKey(key.clone())),
            }
        }

        let shape = match family.as_deref() {
            Some("disk") => Shape::Disk { r },
            Some("ellipse") => Shape::Ellipse { a, b },
            Some("star") => Shape::Star {
                r,
                amp,
                k: k as u32,
            },
            Some(other) => return Err(ConfigError::UnknownFamily(other.to_string())),
            None => return Err(ConfigError::Missing("family")),
        };
        let domain = DomainSpec {
            shape,
            center,
            n_boundary: n_boundary.unwrap_or(crate::geometry::DEFAULT_BOUNDARY_POINTS),
        };
        let p = p.ok_or(ConfigError::Missing("p"))?;
        let h = h.ok_or(ConfigError::Missing("h"))?;
        Ok(RunConfig {
            domain,
            p,
            f,
            h,
            t_levels,
            output_dir,
            seed,
            workers,
            p_list: p_list.unwrap_or_else(|| vec![p]),
        })
    }

    pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        RunConfig::from_pairs(&parse_pairs(text)?)
    }

    /// Base pairs followed by an axis block; later pairs win, so the block
    /// overrides exactly the keys it mentions.
    pub fn with_overrides(
        base: &[(String, String)],
        block: &[(String, String)],
    ) -> Result<RunConfig, ConfigError> {
        let mut all = base.to_vec();
        all.extend_from_slice(block);
        RunConfig::from_pairs(&all)
    }

    /// Canonical one-line-per-field rendering; the hash input. Semantically
    /// equal configs render identically no matter how they were written.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        match self.domain.shape {
            Shape::Disk { r } => s.push_str(&format!("family=disk\nr={r}\n")),
            Shape::Ellipse { a, b } => s.push_str(&format!("family=ellipse\na={a}\nb={b}\n")),
            Shape::Star { r, amp, k } => {
                s.push_str(&format!("family=star\nr={r}\namp={amp}\nk={k}\n"))
            }
        }
        s.push_str(&format!(
            "center_x={}\ncenter_y={}\nn_boundary={}\n",
            self.domain.center.x, self.domain.center.y, self.domain.n_boundary
        ));
        s.push_str(&format!("p={}\n", self.p));
        match &self.f {
            Nonlinearity::Constant { c } => s.push_str(&format!("f=const {c}\n")),
            Nonlinearity::Affine { c0, c1 } => s.push_str(&format!("f=affine {c0} {c1}\n")),
            Nonlinearity::Table { s: xs, f: fs } => {
                s.push_str("f=table");
                for (x, v) in xs.iter().zip(fs) {
                    s.push_str(&format!(" {x}:{v}"));
                }
                s.push('\n');
            }
        }
        s.push_str(&format!(
            "h={}\nt_levels={}\nseed={}\n",
            self.h, self.t_levels, self.seed
        ));
        let mut pl = String::from("p_list=");
        for (i, v) in self.p_list.iter().enumerate() {
            if i > 0 {
                pl.push(' ');
            }
            pl.push_str(&format!("{v}"));
        }
        s.push_str(&pl);
        s.push('\n');
        s
    }

    /// FNV-1a hash of the canonical rendering, as a fixed-width hex tag.
    pub fn hash(&self) -> String {
        let mut acc: u64 = 0xcbf2_9ce4_8422_2325;
        for byte in self.canonical().bytes() {
            acc ^= byte as u64;
            acc = acc.wrapping_mul(0x0000_0100_0000_01b3);
        }
        format!("{acc:016x}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "\
# stability run
family = ellipse
a = 1.2
b = 0.8333333333333334
p = 2.0
f = affine 1.0 0.5
h = 0.05
t_levels = 48
output_dir = out/ellipse
seed = 7
";

    #[test]
    fn full_config_parses() {
        let cfg = RunConfig::parse(BASE).unwrap();
        assert_eq!(
            cfg.domain.shape,
            Shape::Ellipse {
                a: 1.2,
                b: 0.8333333333333334
            }
        );
        assert_eq!(cfg.p, 2.0);
        assert_eq!(cfg.f, Nonlinearity::affine(1.0, 0.5));
        assert_eq!(cfg.h, 0.05);
        assert_eq!(cfg.t_levels, 48);
        assert_eq!(cfg.output_dir, PathBuf::from("out/ellipse"));
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.p_list, vec![2.0]);
        assert_eq!(cfg.domain.n_boundary, 256);
    }

    #[test]
    fn defaults_fill_in() {
        let cfg = RunConfig::parse("family=disk\nr=1\np=2\nh=0.1").unwrap();
        assert_eq!(cfg.t_levels, 64);
        assert_eq!(cfg.f, Nonlinearity::constant(1.0));
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.workers, 0);
    }

    #[test]
    fn errors_name_the_problem() {
        let e = RunConfig::parse("family=disk\nr=1\nh=0.1").unwrap_err();
        assert!(e.to_string().contains("\"p\""));
        let e = RunConfig::parse("family=disk\nr=abc\np=2\nh=0.1").unwrap_err();
        assert!(e.to_string().contains("abc"));
        let e = RunConfig::parse("family=hexagon\np=2\nh=0.1").unwrap_err();
        assert!(e.to_string().contains("hexagon"));
        let e = RunConfig::parse("famly=disk").unwrap_err();
        assert!(matches!(e, ConfigError::UnknownKey(_)));
        let e = RunConfig::parse("just some words").unwrap_err();
        assert!(e.to_string().contains("line 1"));
    }

    #[test]
    fn source_forms_parse() {
        let cfg = RunConfig::parse("family=disk\nr=1\np=2\nh=0.1\nf=table 0:1 0.5:2 1:3").unwrap();
        assert_eq!(
            cfg.f,
            Nonlinearity::Table {
                s: vec![0.0, 0.5, 1.0],
                f: vec![1.0, 2.0, 3.0]
            }
        );
        let e = RunConfig::parse("family=disk\nr=1\np=2\nh=0.1\nf=cubic 3").unwrap_err();
        assert!(e.to_string().contains("cubic"));
    }

    #[test]
    fn axis_blocks_overlay_the_base() {
        let base = parse_pairs(BASE).unwrap();
        let axis = parse_axis("a = 1.05\nb = 0.9523809523809523\n\na=1.1\nb=0.909090909090909\n\n\n# last\na=1.2\nb=0.8333333333333334\n").unwrap();
        assert_eq!(axis.len(), 3);
        let runs: Vec<RunConfig> = axis
            .iter()
            .map(|b| RunConfig::with_overrides(&base, b).unwrap())
            .collect();
        assert_eq!(runs[0].domain.shape, Shape::Ellipse { a: 1.05, b: 0.9523809523809523 });
        // untouched keys persist
        assert_eq!(runs[0].t_levels, 48);
        assert_eq!(runs[2].domain.shape, Shape::Ellipse { a: 1.2, b: 0.8333333333333334 });
    }

    #[test]
    fn hash_ignores_formatting_but_not_content() {
        let one = RunConfig::parse(BASE).unwrap();
        let two = RunConfig::parse(&BASE.replace(" = ", "=").replace("# stability run\n", ""))
            .unwrap();
        assert_eq!(one.hash(), two.hash());
        let three = RunConfig::parse(&BASE.replace("a = 1.2", "a = 1.25")).unwrap();
        assert_ne!(one.hash(), three.hash());
        assert_eq!(one.hash().len(), 16);
    }

    #[test]
    fn p_list_accepts_commas_and_spaces() {
        let cfg = RunConfig::parse("family=disk\nr=1\np=2\nh=0.1\np_list=1.5, 2 3").unwrap();
        assert_eq!(cfg.p_list, vec![1.5, 2.0, 3.0]);
    }
}
