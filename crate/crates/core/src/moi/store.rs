use std::collections::BTreeMap;
use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identifies an empirically estimated constant `c_{α,k}` by the order and
/// the Hölder exponents of the instance family.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ConstantKey {
    pub k: usize,
    pub alpha: String,
    pub alphas: String,
}

fn exponent(x: f64) -> String {
    if x.is_infinite() {
        "inf".into()
    } else {
        format!("{x}")
    }
}

impl ConstantKey {
    pub fn norm(k: usize, alpha: f64, alphas: &[f64]) -> Self {
        ConstantKey {
            k,
            alpha: exponent(alpha),
            alphas: alphas
                .iter()
                .map(|&a| exponent(a))
                .collect::<Vec<_>>()
                .join(";"),
        }
    }

    /// The constant entering the explicit trace bound: `α = 2`, all
    /// `α_ℓ = 2k`.
    pub fn c2(k: usize) -> Self {
        Self::norm(k, 2.0, &vec![2.0 * k as f64; k])
    }
}

impl fmt::Display for ConstantKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "c[k={};alpha={};alphas={}]",
            self.k, self.alpha, self.alphas
        )
    }
}

/// Running supremum of one constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantRecord {
    pub key: ConstantKey,
    pub sup: f64,
    pub count: usize,
}

/// Empirical constants as running suprema over observed ratios.
///
/// When backed by a file the store is an append-only CSV log
/// (`k,alpha,alphas,seed,ratio`); opening it folds every line into the
/// suprema, so logs written concurrently merge by concatenation.
#[derive(Debug, Clone, Default)]
pub struct ConstantStore {
    path: Option<PathBuf>,
    sups: BTreeMap<ConstantKey, (f64, usize)>,
}

const HEADER: &str = "k,alpha,alphas,seed,ratio";

impl ConstantStore {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens (or prepares to create) a log file.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut store = ConstantStore {
            path: Some(path.clone()),
            sups: BTreeMap::new(),
        };
        if path.exists() {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            store.merge_log(&text)?;
        }
        Ok(store)
    }

    /// Folds the lines of a log into the suprema.
    pub fn merge_log(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line == HEADER || line.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            let bad = |m: &str| Error::Parse {
                line: i + 1,
                message: m.to_string(),
            };
            if f.len() != 5 {
                return Err(bad("expected 5 fields"));
            }
            let k = f[0].parse().map_err(|_| bad("bad order"))?;
            let ratio: f64 = f[4].parse().map_err(|_| bad("bad ratio"))?;
            let key = ConstantKey {
                k,
                alpha: f[1].to_string(),
                alphas: f[2].to_string(),
            };
            self.absorb(key, ratio);
        }
        Ok(())
    }

    fn absorb(&mut self, key: ConstantKey, ratio: f64) {
        let e = self.sups.entry(key).or_insert((0.0, 0));
        if ratio.is_finite() {
            e.0 = e.0.max(ratio);
        }
        e.1 += 1;
    }

    /// Records one observed ratio, appending it to the log when file-backed.
    pub fn record(&mut self, key: &ConstantKey, seed: u64, ratio: f64) -> Result<()> {
        if let Some(path) = &self.path {
            let fresh = !path.exists();
            let mut file: File = OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            let mut line = String::new();
            if fresh {
                line.push_str(HEADER);
                line.push('\n');
            }
            line.push_str(&format!(
                "{},{},{},{},{:.16e}\n",
                key.k, key.alpha, key.alphas, seed, ratio
            ));
            file.write_all(line.as_bytes())
                .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        }
        self.absorb(key.clone(), ratio);
        Ok(())
    }

    pub fn sup(&self, key: &ConstantKey) -> Option<f64> {
        self.sups.get(key).map(|v| v.0)
    }

    pub fn records(&self) -> Vec<ConstantRecord> {
        self.sups
            .iter()
            .map(|(key, &(sup, count))| ConstantRecord {
                key: key.clone(),
                sup,
                count,
            })
            .collect()
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn running_sup_and_log_merge() {
        let dir = std::env::temp_dir().join(format!("specact-store-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("constants.csv");
        let _ = std::fs::remove_file(&path);
        let key = ConstantKey::c2(2);
        {
            let mut s = ConstantStore::open(&path).unwrap();
            s.record(&key, 1, 0.5).unwrap();
            s.record(&key, 2, 0.25).unwrap();
            assert_eq!(s.sup(&key), Some(0.5));
        }
        {
            let mut s = ConstantStore::open(&path).unwrap();
            assert_eq!(s.sup(&key), Some(0.5));
            s.record(&key, 3, 0.75).unwrap();
        }
        let s = ConstantStore::open(&path).unwrap();
        assert_eq!(
            s.records(),
            vec![ConstantRecord {
                key: key.clone(),
                sup: 0.75,
                count: 3
            }]
        );
        assert_eq!(key.to_string(), "c[k=2;alpha=2;alphas=4;4]");
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn malformed_log() {
        let mut s = ConstantStore::in_memory();
        assert!(matches!(
            s.merge_log("k,alpha,alphas,seed,ratio\n1,2,2\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }
}
