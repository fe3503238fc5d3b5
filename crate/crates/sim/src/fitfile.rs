//! Versioned text format for trained fit models.
//!
//! ```text
//! khoploc-fit 1
//! model rayleigh 1 2
//! region square 10
//! density 3
//! max_hops 20
//! iterations 100
//! seed 7
//! degree 4
//! a_floor 0.000001
//! fit_range 17
//! poly_a <degree + 1 coefficients, constant term first>
//! poly_b ...
//! poly_c ...
//! hop <k> <A_k> <B_k> <C_k>      (one line per fitted hop count)
//! ```
//!
//! Floats are written in shortest round-trip form, so reading a file back
//! reproduces the model bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use khoploc_core::training::{FitModel, HopGaussian, Polynomial};
use khoploc_core::{ConnectionModel, Region};
use thiserror::Error;

pub const MAGIC: &str = "khoploc-fit";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FitFileError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("unsupported fit file version {0}")]
    Version(u32),
    #[error("missing `{0}` line")]
    Missing(&'static str),
    #[error(transparent)]
    Core(#[from] khoploc_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A trained model together with the training setup that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct FitFile {
    pub model: ConnectionModel,
    pub region: Region,
    pub density: f64,
    pub max_hops: u32,
    pub iterations: usize,
    pub seed: u64,
    pub fit: FitModel,
}

impl FitFile {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{MAGIC} {VERSION}");
        let _ = match self.model {
            ConnectionModel::Rayleigh { beta, eta } => writeln!(s, "model rayleigh {beta} {eta}"),
            ConnectionModel::Qudg { d_max, doi } => writeln!(s, "model qudg {d_max} {doi}"),
        };
        let _ = match self.region {
            Region::Square { side } => writeln!(s, "region square {side}"),
            Region::CShape { outer_side, arm_width } => {
                writeln!(s, "region c_shape {outer_side} {arm_width}")
            }
        };
        let _ = writeln!(s, "density {}", self.density);
        let _ = writeln!(s, "max_hops {}", self.max_hops);
        let _ = writeln!(s, "iterations {}", self.iterations);
        let _ = writeln!(s, "seed {}", self.seed);
        let _ = writeln!(s, "degree {}", self.fit.degree());
        let _ = writeln!(s, "a_floor {}", self.fit.a_floor());
        let _ = writeln!(s, "fit_range {}", self.fit.max_hops());
        for (name, poly) in ["poly_a", "poly_b", "poly_c"].iter().zip(self.fit.polynomials()) {
            s.push_str(name);
            for c in &poly.coeffs {
                let _ = write!(s, " {c}");
            }
            s.push('\n');
        }
        for (k, g) in self.fit.per_hop() {
            let _ = writeln!(s, "hop {k} {} {} {}", g.a, g.b, g.c);
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, FitFileError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());

        let (line, header) = lines.next().ok_or(FitFileError::Missing(MAGIC))?;
        match header.split_whitespace().collect::<Vec<_>>().as_slice() {
            [MAGIC, v] => {
                let v: u32 = num(line, v)?;
                if v != VERSION {
                    return Err(FitFileError::Version(v));
                }
            }
            _ => return Err(parse_err(line, format!("expected `{MAGIC} {VERSION}` header"))),
        }

        let mut h = Header::default();
        let mut per_hop = Vec::new();
        for (line, text) in lines {
            let mut words = text.split_whitespace();
            let key = words.next().unwrap_or_default();
            let args: Vec<&str> = words.collect();
            let want = |n: usize| -> Result<(), FitFileError> {
                if args.len() == n {
                    Ok(())
                } else {
                    Err(parse_err(line, format!("`{key}` takes {n} values, got {}", args.len())))
                }
            };
            match key {
                "model" => {
                    want(3)?;
                    let (p, q) = (num(line, args[1])?, num(line, args[2])?);
                    h.model = Some(match args[0] {
                        "rayleigh" => ConnectionModel::rayleigh(p, q)?,
                        "qudg" => ConnectionModel::qudg(p, q)?,
                        other => return Err(parse_err(line, format!("unknown model `{other}`"))),
                    });
                }
                "region" => {
                    h.region = Some(match args.as_slice() {
                        ["square", s] => Region::square(num(line, s)?)?,
                        ["c_shape", s, w] => Region::c_shape(num(line, s)?, num(line, w)?)?,
                        _ => return Err(parse_err(line, "expected `region square <side>` or `region c_shape <side> <arm>`")),
                    });
                }
                "density" => {
                    want(1)?;
                    h.density = Some(num(line, args[0])?);
                }
                "max_hops" => {
                    want(1)?;
                    h.max_hops = Some(num(line, args[0])?);
                }
                "iterations" => {
                    want(1)?;
                    h.iterations = Some(num(line, args[0])?);
                }
                "seed" => {
                    want(1)?;
                    h.seed = Some(num(line, args[0])?);
                }
                "degree" => {
                    want(1)?;
                    h.degree = Some(num(line, args[0])?);
                }
                "a_floor" => {
                    want(1)?;
                    h.a_floor = Some(num(line, args[0])?);
                }
                "fit_range" => {
                    want(1)?;
                    h.fit_range = Some(num(line, args[0])?);
                }
                "poly_a" | "poly_b" | "poly_c" => {
                    let coeffs = args.iter().map(|a| num(line, a)).collect::<Result<Vec<f64>, _>>()?;
                    let slot = match key {
                        "poly_a" => &mut h.polys[0],
                        "poly_b" => &mut h.polys[1],
                        _ => &mut h.polys[2],
                    };
                    *slot = Some(Polynomial::new(coeffs));
                }
                "hop" => {
                    want(4)?;
                    let k: u32 = num(line, args[0])?;
                    let g = HopGaussian {
                        a: num(line, args[1])?,
                        b: num(line, args[2])?,
                        c: num(line, args[3])?,
                    };
                    per_hop.push((k, g));
                }
                other => return Err(parse_err(line, format!("unknown key `{other}`"))),
            }
        }

        let [pa, pb, pc] = h.polys;
        let fit = FitModel::from_parts(
            h.fit_range.ok_or(FitFileError::Missing("fit_range"))?,
            h.degree.ok_or(FitFileError::Missing("degree"))?,
            per_hop,
            [
                pa.ok_or(FitFileError::Missing("poly_a"))?,
                pb.ok_or(FitFileError::Missing("poly_b"))?,
                pc.ok_or(FitFileError::Missing("poly_c"))?,
            ],
            h.a_floor.ok_or(FitFileError::Missing("a_floor"))?,
        )?;
        Ok(FitFile {
            model: h.model.ok_or(FitFileError::Missing("model"))?,
            region: h.region.ok_or(FitFileError::Missing("region"))?,
            density: h.density.ok_or(FitFileError::Missing("density"))?,
            max_hops: h.max_hops.ok_or(FitFileError::Missing("max_hops"))?,
            iterations: h.iterations.ok_or(FitFileError::Missing("iterations"))?,
            seed: h.seed.ok_or(FitFileError::Missing("seed"))?,
            fit,
        })
    }

    pub fn read(path: &Path) -> Result<Self, FitFileError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<(), FitFileError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

#[derive(Default)]
struct Header {
    model: Option<ConnectionModel>,
    region: Option<Region>,
    density: Option<f64>,
    max_hops: Option<u32>,
    iterations: Option<usize>,
    seed: Option<u64>,
    degree: Option<usize>,
    a_floor: Option<f64>,
    fit_range: Option<u32>,
    polys: [Option<Polynomial>; 3],
}

fn parse_err(line: usize, reason: impl Into<String>) -> FitFileError {
    FitFileError::Parse { line, reason: reason.into() }
}

fn num<T: std::str::FromStr>(line: usize, s: &str) -> Result<T, FitFileError>
where
    T::Err: std::fmt::Display,
{
    s.parse().map_err(|e: T::Err| parse_err(line, format!("`{s}`: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> FitFile {
        let per_hop: Vec<(u32, HopGaussian)> = (1..=6)
            .map(|k| {
                let k = k as f64;
                (k as u32, HopGaussian { a: 1.0 / (k + 0.1), b: 0.8 * k - 0.1 / 3.0, c: -0.7 * k })
            })
            .collect();
        let fit = khoploc_core::training::fit_hop_polynomials(&per_hop, 4, 1e-6).unwrap();
        FitFile {
            model: ConnectionModel::qudg(1.0, 1.5).unwrap(),
            region: Region::c_shape(10.0, 2.0).unwrap(),
            density: 300.0 / 52.0,
            max_hops: 20,
            iterations: 100,
            seed: u64::MAX,
            fit,
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let f = sample();
        let text = f.to_text();
        let back = FitFile::parse(&text).unwrap();
        assert_eq!(back, f);
        assert_eq!(back.to_text(), text);
        for k in 1..=6 {
            assert_eq!(back.fit.a(k).unwrap().to_bits(), f.fit.a(k).unwrap().to_bits());
            assert_eq!(back.fit.b(k).unwrap().to_bits(), f.fit.b(k).unwrap().to_bits());
        }
    }

    #[test]
    fn rejects_malformed_files() {
        let good = sample().to_text();
        assert!(matches!(
            FitFile::parse(&good.replace("khoploc-fit 1", "khoploc-fit 2")),
            Err(FitFileError::Version(2))
        ));
        assert!(FitFile::parse("").is_err());
        assert!(FitFile::parse(&good.replace("density", "densty")).is_err());
        let no_poly: String = good.lines().filter(|l| !l.starts_with("poly_b")).map(|l| format!("{l}\n")).collect();
        assert!(matches!(FitFile::parse(&no_poly), Err(FitFileError::Missing("poly_b"))));
        assert!(FitFile::parse(&good.replace("hop 1 ", "hop 1 x ")).is_err());
    }
}
