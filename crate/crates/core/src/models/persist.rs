//! Line-oriented model file.
//!
//! ```text
//! prospect-explain-model v1 <logreg|svm|mlp>
//! weights: ...        (logreg, svm)
//! bias: ...           (logreg, svm)
//! platt: A B          (svm)
//! hidden_w: ...       (mlp, row-major hidden × 6)
//! hidden_b: ...       (mlp)
//! out_w: ...          (mlp)
//! out_b: ...          (mlp)
//! scaler: means(6) stds(6)
//! split: <seed> <test_fraction>      (optional, with test_ids)
//! test_ids: <id> ...
//! ```
//!
//! Reals are written with 17 significant digits so loading reproduces
//! every parameter bit-exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::dataset::{Features, Scaler, NUM_FEATURES};
use crate::numfmt::{format_sig, join_exact};

use super::{LogRegModel, MlpModel, Model, ModelError, ModelKind, SvmModel};

pub const FORMAT_HEADER: &str = "prospect-explain-model";
const VERSION: &str = "v1";

/// The test-set membership a model was evaluated against.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitRecord {
    pub seed: u64,
    pub test_fraction: f64,
    pub test_ids: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelFile {
    pub model: Model,
    pub scaler: Scaler,
    pub split: Option<SplitRecord>,
}

impl ModelFile {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{FORMAT_HEADER} {VERSION} {}", self.model.kind()).unwrap();
        let mut section = |name: &str, values: &[f64]| {
            writeln!(out, "{name}: {}", join_exact(values)).unwrap();
        };
        match &self.model {
            Model::LogReg(m) => {
                section("weights", &m.weights);
                section("bias", &[m.bias]);
            }
            Model::Svm(m) => {
                section("weights", &m.weights);
                section("bias", &[m.bias]);
                section("platt", &[m.platt_a, m.platt_b]);
            }
            Model::Mlp(m) => {
                let flat: Vec<f64> = m.hidden_w.iter().flatten().copied().collect();
                section("hidden_w", &flat);
                section("hidden_b", &m.hidden_b);
                section("out_w", &m.out_w);
                section("out_b", &[m.out_b]);
            }
        }
        let scaler: Vec<f64> = self
            .scaler
            .means
            .iter()
            .chain(&self.scaler.stds)
            .copied()
            .collect();
        section("scaler", &scaler);
        if let Some(split) = &self.split {
            writeln!(
                out,
                "split: {} {}",
                split.seed,
                format_sig(split.test_fraction, 17)
            )
            .unwrap();
            let ids: Vec<String> = split.test_ids.iter().map(u64::to_string).collect();
            writeln!(out, "test_ids: {}", ids.join(" ")).unwrap();
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, ModelError> {
        let mut reader = SectionReader::new(text);
        let kind = reader.header()?;
        let model = match kind {
            ModelKind::LogReg => Model::LogReg(LogRegModel {
                weights: reader.features("weights")?,
                bias: reader.exact("bias", 1)?[0],
            }),
            ModelKind::Svm => {
                let weights = reader.features("weights")?;
                let bias = reader.exact("bias", 1)?[0];
                let platt = reader.exact("platt", 2)?;
                if !(platt[0] > 0.0) {
                    return Err(ModelError::InvalidSection {
                        section: "platt".into(),
                        reason: format!("slope {} must be positive", platt[0]),
                    });
                }
                Model::Svm(SvmModel {
                    weights,
                    bias,
                    platt_a: platt[0],
                    platt_b: platt[1],
                })
            }
            ModelKind::Mlp => {
                let flat = reader.reals("hidden_w")?;
                let hidden_b = reader.reals("hidden_b")?;
                let hidden = hidden_b.len();
                if hidden == 0 {
                    return Err(ModelError::InvalidSection {
                        section: "hidden_b".into(),
                        reason: "no hidden units".into(),
                    });
                }
                if flat.len() != hidden * NUM_FEATURES {
                    return Err(ModelError::CountMismatch {
                        section: "hidden_w".into(),
                        expected: hidden * NUM_FEATURES,
                        found: flat.len(),
                    });
                }
                let hidden_w = flat
                    .chunks_exact(NUM_FEATURES)
                    .map(|c| c.try_into().unwrap())
                    .collect();
                let out_w = reader.exact("out_w", hidden)?;
                let out_b = reader.exact("out_b", 1)?[0];
                Model::Mlp(MlpModel {
                    hidden_w,
                    hidden_b,
                    out_w,
                    out_b,
                })
            }
        };
        let s = reader.exact("scaler", 2 * NUM_FEATURES)?;
        let scaler = Scaler::new(
            s[..NUM_FEATURES].try_into().unwrap(),
            s[NUM_FEATURES..].try_into().unwrap(),
        )
        .map_err(|e| ModelError::InvalidSection {
            section: "scaler".into(),
            reason: e.to_string(),
        })?;
        let split = if reader.at_end() {
            None
        } else {
            Some(reader.split()?)
        };
        reader.finish()?;
        Ok(Self {
            model,
            scaler,
            split,
        })
    }
}

struct SectionReader<'a> {
    lines: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> SectionReader<'a> {
    fn new(text: &'a str) -> Self {
        let lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
            .filter(|(_, l)| !l.trim().is_empty())
            .collect();
        Self { lines, pos: 0 }
    }

    fn header(&mut self) -> Result<ModelKind, ModelError> {
        let (_, line) = *self
            .lines
            .first()
            .ok_or_else(|| ModelError::BadHeader(String::new()))?;
        self.pos = 1;
        let parts: Vec<&str> = line.split_whitespace().collect();
        match parts.as_slice() {
            [FORMAT_HEADER, VERSION, kind] => kind.parse(),
            [FORMAT_HEADER, version, _] => Err(ModelError::Version(version.to_string())),
            _ => Err(ModelError::BadHeader(line.to_string())),
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.lines.len()
    }

    fn raw(&mut self, name: &str) -> Result<Vec<&'a str>, ModelError> {
        let (line_no, line) = *self
            .lines
            .get(self.pos)
            .ok_or_else(|| ModelError::MissingSection(name.to_string()))?;
        let (found, rest) = line.split_once(':').unwrap_or((line, ""));
        if found.trim() != name {
            return Err(ModelError::UnexpectedSection {
                line: line_no,
                expected: name.to_string(),
                found: found.trim().to_string(),
            });
        }
        self.pos += 1;
        Ok(rest.split_whitespace().collect())
    }

    fn reals(&mut self, name: &str) -> Result<Vec<f64>, ModelError> {
        self.raw(name)?
            .into_iter()
            .map(|tok| {
                tok.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| ModelError::NotNumeric {
                        section: name.to_string(),
                        value: tok.to_string(),
                    })
            })
            .collect()
    }

    fn exact(&mut self, name: &str, count: usize) -> Result<Vec<f64>, ModelError> {
        let values = self.reals(name)?;
        if values.len() != count {
            return Err(ModelError::CountMismatch {
                section: name.to_string(),
                expected: count,
                found: values.len(),
            });
        }
        Ok(values)
    }

    fn features(&mut self, name: &str) -> Result<Features, ModelError> {
        Ok(self.exact(name, NUM_FEATURES)?.try_into().unwrap())
    }

    fn split(&mut self) -> Result<SplitRecord, ModelError> {
        let head = self.raw("split")?;
        if head.len() != 2 {
            return Err(ModelError::CountMismatch {
                section: "split".into(),
                expected: 2,
                found: head.len(),
            });
        }
        let not_numeric = |section: &str, tok: &str| ModelError::NotNumeric {
            section: section.to_string(),
            value: tok.to_string(),
        };
        let seed = head[0].parse().map_err(|_| not_numeric("split", head[0]))?;
        let test_fraction = head[1].parse().map_err(|_| not_numeric("split", head[1]))?;
        let test_ids = self
            .raw("test_ids")?
            .into_iter()
            .map(|tok| tok.parse().map_err(|_| not_numeric("test_ids", tok)))
            .collect::<Result<_, _>>()?;
        Ok(SplitRecord {
            seed,
            test_fraction,
            test_ids,
        })
    }

    fn finish(&self) -> Result<(), ModelError> {
        match self.lines.get(self.pos) {
            Some((line_no, _)) => Err(ModelError::TrailingContent(*line_no)),
            None => Ok(()),
        }
    }
}

pub fn save_model(file: &ModelFile, path: &Path) -> Result<(), ModelError> {
    fs::write(path, file.to_text()).map_err(|e| ModelError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    })
}

pub fn load_model(path: &Path) -> Result<ModelFile, ModelError> {
    let text = fs::read_to_string(path).map_err(|e| ModelError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    ModelFile::parse(&text)
}
